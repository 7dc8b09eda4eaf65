#include "welfarecast/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "welfarecast/csv.hpp"
#include "welfarecast/error.hpp"

namespace welfarecast {

namespace {

std::string where(const csv::Document& doc, std::size_t row) {
  // Row numbers are 1-based and count the header line.
  return doc.source.string() + " row " + std::to_string(row + 2);
}

const std::string& required(const csv::Document& doc, const std::vector<std::string>& row,
                            std::size_t row_index, std::size_t column) {
  const std::string& field = row[column];
  if (field.empty())
    fail(ErrorKind::Value, where(doc, row_index) + ": missing required field '" + doc.header[column] + "'");
  return field;
}

void check_width(const csv::Document& doc, const std::vector<std::string>& row, std::size_t row_index,
                 ErrorKind kind = ErrorKind::Schema) {
  if (row.size() != doc.header.size())
    fail(kind, where(doc, row_index) + ": has " + std::to_string(row.size()) + " fields, header has " +
                   std::to_string(doc.header.size()));
}

int parse_wave(const std::string& field, const std::string& ctx) {
  const long long wave = csv::parse_int(field, ctx);
  if (wave < 1 || wave > 4) fail(ErrorKind::Value, ctx + ": wave " + field + " outside 1..4");
  return static_cast<int>(wave);
}

double parse_finite(const std::string& field, const std::string& ctx) {
  const double v = csv::parse_real(field, ctx);
  if (!std::isfinite(v)) fail(ErrorKind::NonFinite, ctx + ": non-finite value '" + field + "'");
  return v;
}

}  // namespace

std::string_view visit_code(Visit visit) {
  return visit == Visit::PostPlanting ? "PP" : "PH";
}

Visit parse_visit(std::string_view code) {
  if (code == "PP") return Visit::PostPlanting;
  if (code == "PH") return Visit::PostHarvest;
  fail(ErrorKind::Value, "visit must be PP or PH, got '" + std::string(code) + "'");
}

std::string to_string(const VisitKey& key) {
  return key.ea_id + "/w" + std::to_string(key.wave) + "/" + std::string(visit_code(key.visit));
}

std::string_view source_code(SurveySource source) {
  return source == SurveySource::GHS ? "GHS" : "DHS";
}

const EnumerationAreaVisit* SurveyBundle::find_visit(const VisitKey& key) const {
  for (const auto& v : visits)
    if (v.key == key) return &v;
  return nullptr;
}

bool same_contents(const SurveyBundle& a, const SurveyBundle& b) {
  auto sorted = [](auto items, auto key) {
    std::sort(items.begin(), items.end(), [&](const auto& x, const auto& y) { return key(x) < key(y); });
    return items;
  };
  auto visit_key = [](const EnumerationAreaVisit& v) { return v.key; };
  auto hh_key = [](const HouseholdConsumptionRecord& h) { return std::tie(h.hh_id, h.key); };
  auto asset_key = [](const AssetInventory& i) {
    return std::make_tuple(i.hh_id, i.source, i.survey_year, i.ea_id);
  };
  return sorted(a.visits, visit_key) == sorted(b.visits, visit_key) &&
         sorted(a.households, hh_key) == sorted(b.households, hh_key) &&
         sorted(a.assets, asset_key) == sorted(b.assets, asset_key);
}

SurveyBundle load_survey_bundle(const std::filesystem::path& visits_file,
                                const std::filesystem::path& households_file,
                                const std::filesystem::path& assets_file) {
  SurveyBundle bundle;

  const auto visits = csv::read(visits_file);
  visits.require_prefix({"ea_id", "wave", "visit", "end_date", "lat", "lon"});
  std::set<VisitKey> visit_keys;
  for (std::size_t r = 0; r < visits.rows.size(); ++r) {
    const auto& row = visits.rows[r];
    check_width(visits, row, r);
    const std::string ctx = where(visits, r);
    EnumerationAreaVisit v;
    v.key.ea_id = required(visits, row, r, 0);
    v.key.wave = parse_wave(required(visits, row, r, 1), ctx);
    v.key.visit = parse_visit(required(visits, row, r, 2));
    v.end_date = parse_date(required(visits, row, r, 3));
    v.lat = parse_finite(required(visits, row, r, 4), ctx);
    v.lon = parse_finite(required(visits, row, r, 5), ctx);
    if (v.lat < -90.0 || v.lat > 90.0) fail(ErrorKind::Value, ctx + ": latitude outside [-90, 90]");
    if (v.lon < -180.0 || v.lon > 180.0) fail(ErrorKind::Value, ctx + ": longitude outside [-180, 180]");
    if (!visit_keys.insert(v.key).second)
      fail(ErrorKind::Value, ctx + ": duplicate visit " + to_string(v.key));
    bundle.visits.push_back(std::move(v));
  }

  const auto households = csv::read(households_file);
  households.require_prefix({"hh_id", "ea_id", "wave", "visit", "total_expenditure", "household_size"});
  std::set<std::pair<std::string, VisitKey>> hh_keys;
  for (std::size_t r = 0; r < households.rows.size(); ++r) {
    const auto& row = households.rows[r];
    check_width(households, row, r);
    const std::string ctx = where(households, r);
    HouseholdConsumptionRecord h;
    h.hh_id = required(households, row, r, 0);
    h.key.ea_id = required(households, row, r, 1);
    h.key.wave = parse_wave(required(households, row, r, 2), ctx);
    h.key.visit = parse_visit(required(households, row, r, 3));
    h.total_expenditure = parse_finite(required(households, row, r, 4), ctx);
    const long long size = csv::parse_int(required(households, row, r, 5), ctx);
    if (h.total_expenditure < 0.0) fail(ErrorKind::Value, ctx + ": negative total_expenditure");
    if (size < 1) fail(ErrorKind::Value, ctx + ": household_size must be >= 1 (hh_id " + h.hh_id + ")");
    h.household_size = static_cast<int>(size);
    if (!visit_keys.contains(h.key))
      fail(ErrorKind::Referential,
           ctx + ": household " + h.hh_id + " references unknown visit " + to_string(h.key));
    if (!hh_keys.emplace(h.hh_id, h.key).second)
      fail(ErrorKind::Value, ctx + ": duplicate household " + h.hh_id + " for " + to_string(h.key));
    bundle.households.push_back(std::move(h));
  }

  const auto assets = csv::read(assets_file);
  assets.require_prefix({"hh_id", "source", "survey_year", "ea_id"});
  std::set<std::string> asset_names;
  for (std::size_t c = 4; c < assets.header.size(); ++c) {
    if (assets.header[c].empty() || !asset_names.insert(assets.header[c]).second)
      fail(ErrorKind::Schema, assets.source.string() + ": empty or duplicate asset column '" +
                                  assets.header[c] + "'");
  }
  for (std::size_t r = 0; r < assets.rows.size(); ++r) {
    const auto& row = assets.rows[r];
    check_width(assets, row, r);
    const std::string ctx = where(assets, r);
    AssetInventory inv;
    inv.hh_id = required(assets, row, r, 0);
    const std::string& src = required(assets, row, r, 1);
    if (src == "GHS")
      inv.source = SurveySource::GHS;
    else if (src == "DHS")
      inv.source = SurveySource::DHS;
    else
      fail(ErrorKind::Value, ctx + ": source must be GHS or DHS, got '" + src + "'");
    inv.survey_year = static_cast<int>(csv::parse_int(required(assets, row, r, 2), ctx));
    inv.ea_id = required(assets, row, r, 3);
    for (std::size_t c = 4; c < row.size(); ++c) {
      if (row[c].empty()) continue;
      if (row[c] == "0")
        inv.ownership[assets.header[c]] = 0;
      else if (row[c] == "1")
        inv.ownership[assets.header[c]] = 1;
      else
        fail(ErrorKind::Value, ctx + ": asset '" + assets.header[c] + "' is not binary: '" + row[c] + "'");
    }
    bundle.assets.push_back(std::move(inv));
  }
  return bundle;
}

void write_visits(const std::vector<EnumerationAreaVisit>& visits, const std::filesystem::path& file) {
  csv::Writer out(file);
  out.row({"ea_id", "wave", "visit", "end_date", "lat", "lon"});
  for (const auto& v : visits)
    out.row({v.key.ea_id, std::to_string(v.key.wave), std::string(visit_code(v.key.visit)),
             format_date(v.end_date), csv::format_real(v.lat), csv::format_real(v.lon)});
  out.close();
}

void write_households(const std::vector<HouseholdConsumptionRecord>& households,
                      const std::filesystem::path& file) {
  csv::Writer out(file);
  out.row({"hh_id", "ea_id", "wave", "visit", "total_expenditure", "household_size"});
  for (const auto& h : households)
    out.row({h.hh_id, h.key.ea_id, std::to_string(h.key.wave), std::string(visit_code(h.key.visit)),
             csv::format_real(h.total_expenditure), std::to_string(h.household_size)});
  out.close();
}

void write_assets(const std::vector<AssetInventory>& assets, const std::filesystem::path& file) {
  std::set<std::string> names;
  for (const auto& inv : assets)
    for (const auto& [name, owned] : inv.ownership) names.insert(name);
  csv::Writer out(file);
  std::vector<std::string> fields{"hh_id", "source", "survey_year", "ea_id"};
  fields.insert(fields.end(), names.begin(), names.end());
  out.row(fields);
  for (const auto& inv : assets) {
    fields = {inv.hh_id, std::string(source_code(inv.source)), std::to_string(inv.survey_year), inv.ea_id};
    for (const auto& name : names) {
      auto it = inv.ownership.find(name);
      fields.push_back(it == inv.ownership.end() ? std::string{} : std::to_string(it->second));
    }
    out.row(fields);
  }
  out.close();
}

const std::vector<DailyWeatherRecord>* WeatherTable::find(std::string_view cell_id) const {
  auto it = series.find(cell_id);
  return it == series.end() ? nullptr : &it->second;
}

WeatherTable load_weather(const std::filesystem::path& file) {
  const auto doc = csv::read(file);
  doc.require_prefix({"cell_id", "date", "precip_total_mm", "temp_mean_c"});
  WeatherTable table;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    check_width(doc, row, r);
    const std::string ctx = where(doc, r);
    DailyWeatherRecord rec;
    const std::string& cell = required(doc, row, r, 0);
    rec.date = parse_date(required(doc, row, r, 1));
    rec.precip_total = parse_finite(required(doc, row, r, 2), ctx);
    rec.temp_mean = parse_finite(required(doc, row, r, 3), ctx);
    if (rec.precip_total < 0.0) fail(ErrorKind::Value, ctx + ": negative precipitation");
    table.series[cell].push_back(rec);
  }
  for (auto& [cell, series] : table.series) {
    std::stable_sort(series.begin(), series.end(),
                     [](const auto& a, const auto& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < series.size(); ++i) {
      if (series[i].date == series[i - 1].date)
        fail(ErrorKind::DuplicateDate, file.string() + ": cell " + cell + " has two records for " +
                                           format_date(series[i].date));
    }
  }
  return table;
}

void write_weather(const WeatherTable& table, const std::filesystem::path& file) {
  csv::Writer out(file);
  out.row({"cell_id", "date", "precip_total_mm", "temp_mean_c"});
  for (const auto& [cell, series] : table.series) {
    for (const auto& rec : series)
      out.row({cell, format_date(rec.date), csv::format_real(rec.precip_total), csv::format_real(rec.temp_mean)});
  }
  out.close();
}

std::string image_feature_name(std::size_t index0) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "f%04zu", index0 + 1);
  return buf;
}

std::vector<ImageFeatureRecord> load_image_features(const std::filesystem::path& file) {
  const auto doc = csv::read(file);
  doc.require_prefix({"ea_id", "wave", "visit"});
  const std::size_t n_features = doc.header.size() - 3;
  if (n_features != 2 * kImageFeatureDim)
    fail(ErrorKind::Dimension, file.string() + ": expected " + std::to_string(2 * kImageFeatureDim) +
                                   " feature columns, found " + std::to_string(n_features));
  for (std::size_t j = 0; j < n_features; ++j) {
    if (doc.header[3 + j] != image_feature_name(j))
      fail(ErrorKind::Schema, file.string() + ": feature column " + std::to_string(j + 1) + " is '" +
                                  doc.header[3 + j] + "', expected '" + image_feature_name(j) + "'");
  }

  std::vector<ImageFeatureRecord> records;
  records.reserve(doc.rows.size());
  std::set<VisitKey> seen;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    check_width(doc, row, r, ErrorKind::Dimension);
    const std::string ctx = where(doc, r);
    ImageFeatureRecord rec;
    rec.key.ea_id = required(doc, row, r, 0);
    rec.key.wave = parse_wave(required(doc, row, r, 1), ctx);
    rec.key.visit = parse_visit(required(doc, row, r, 2));
    rec.ms.resize(kImageFeatureDim);
    rec.nl.resize(kImageFeatureDim);
    for (std::size_t j = 0; j < n_features; ++j) {
      const double v = parse_finite(required(doc, row, r, 3 + j), ctx);
      (j < kImageFeatureDim ? rec.ms[j] : rec.nl[j - kImageFeatureDim]) = v;
    }
    if (!seen.insert(rec.key).second)
      fail(ErrorKind::Value, ctx + ": duplicate feature row for " + to_string(rec.key));
    records.push_back(std::move(rec));
  }
  return records;
}

void write_image_features(const std::vector<ImageFeatureRecord>& records,
                          const std::filesystem::path& file) {
  csv::Writer out(file);
  std::vector<std::string> fields{"ea_id", "wave", "visit"};
  for (std::size_t j = 0; j < 2 * kImageFeatureDim; ++j) fields.push_back(image_feature_name(j));
  out.row(fields);
  for (const auto& rec : records) {
    if (rec.ms.size() != kImageFeatureDim || rec.nl.size() != kImageFeatureDim)
      fail(ErrorKind::Dimension, "feature record " + to_string(rec.key) + " is not 512+512 wide");
    fields.clear();
    fields.push_back(rec.key.ea_id);
    fields.push_back(std::to_string(rec.key.wave));
    fields.emplace_back(visit_code(rec.key.visit));
    for (double v : rec.ms) fields.push_back(csv::format_real(v));
    for (double v : rec.nl) fields.push_back(csv::format_real(v));
    out.row(fields);
  }
  out.close();
}

}  // namespace welfarecast
