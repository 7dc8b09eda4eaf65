#include "welfarecast/weather.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "welfarecast/csv.hpp"
#include "welfarecast/error.hpp"

namespace welfarecast {

DateRange window_days(Date end_date, int window) {
  if (window < 1 || window > kWeatherWindows)
    fail(ErrorKind::Value, "weather window " + std::to_string(window) + " outside 1..6");
  return {days_before(end_date, kWindowDays * window), days_before(end_date, kWindowDays * (window - 1))};
}

std::array<double, kQuantileCount> empirical_quintiles(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::EmptySeries, "cannot take quantiles of an empty series");
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted)
    if (!std::isfinite(v)) fail(ErrorKind::NonFinite, "non-finite value in quantile input");
  std::sort(sorted.begin(), sorted.end());

  const std::size_t n = sorted.size();
  std::array<double, kQuantileCount> out{};
  for (std::size_t q = 0; q < kQuantileCount; ++q) {
    const double h = static_cast<double>(n - 1) * kQuintileLevels[q] + 1.0;
    const double floor_h = std::floor(h);
    const auto lo = static_cast<std::size_t>(floor_h);  // 1-based order statistic
    if (lo >= n) {
      out[q] = sorted[n - 1];
    } else {
      out[q] = sorted[lo - 1] + (h - floor_h) * (sorted[lo] - sorted[lo - 1]);
    }
  }
  return out;
}

WeatherFeatureVector build_weather_features(const WeatherTable& table, std::string_view cell_id,
                                            Date end_date, const WeatherOptions& options) {
  static constexpr std::array<std::string_view, 2> kNames{"precip", "temp"};
  const auto* series = table.find(cell_id);
  WeatherFeatureVector out;
  std::vector<double> precip;
  std::vector<double> temp;
  for (int w = 1; w <= kWeatherWindows; ++w) {
    const DateRange range = window_days(end_date, w);
    precip.clear();
    temp.clear();
    if (series) {
      auto first = std::lower_bound(series->begin(), series->end(), range.begin,
                                    [](const DailyWeatherRecord& r, Date d) { return r.date < d; });
      for (auto it = first; it != series->end() && it->date < range.end; ++it) {
        precip.push_back(it->precip_total);
        temp.push_back(it->temp_mean);
      }
    }
    const std::array<const std::vector<double>*, 2> blocks{&precip, &temp};
    for (int v = 0; v < kWeatherVariables; ++v) {
      const auto& block = *blocks[static_cast<std::size_t>(v)];
      if (static_cast<int>(block.size()) < options.min_days_per_window)
        fail(ErrorKind::InsufficientCoverage,
             "cell " + std::string(cell_id) + " window=" + std::to_string(w) + " variable=" +
                 std::string(kNames[static_cast<std::size_t>(v)]) + " has " + std::to_string(block.size()) +
                 " days (< " + std::to_string(options.min_days_per_window) + ") before " +
                 format_date(end_date));
      const auto q = empirical_quintiles(block);
      for (int k = 0; k < kQuantileCount; ++k)
        out.values[WeatherFeatureVector::index(static_cast<WeatherVariable>(v), w, k + 1)] =
            q[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

std::string weather_cell_id(double lat, double lon) {
  const long long lat_idx = std::llround(lat * 4.0);
  const long long lon_idx = std::llround(lon * 4.0);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f_%.2f", static_cast<double>(lat_idx) * 0.25,
                static_cast<double>(lon_idx) * 0.25);
  return buf;
}

std::string weather_feature_name(std::size_t index0) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "w%02zu", index0 + 1);
  return buf;
}

void write_weather_features(const std::vector<KeyedWeatherFeatures>& rows, const std::filesystem::path& file) {
  csv::Writer out(file);
  std::vector<std::string> fields{"ea_id", "wave", "visit"};
  for (std::size_t j = 0; j < kWeatherFeatureDim; ++j) fields.push_back(weather_feature_name(j));
  out.row(fields);
  for (const auto& row : rows) {
    fields = {row.key.ea_id, std::to_string(row.key.wave), std::string(visit_code(row.key.visit))};
    for (double v : row.features.values) fields.push_back(csv::format_real(v));
    out.row(fields);
  }
  out.close();
}

std::vector<KeyedWeatherFeatures> read_weather_features(const std::filesystem::path& file) {
  const auto doc = csv::read(file);
  std::vector<std::string_view> expected{"ea_id", "wave", "visit"};
  std::vector<std::string> names;
  for (std::size_t j = 0; j < kWeatherFeatureDim; ++j) names.push_back(weather_feature_name(j));
  for (const auto& n : names) expected.push_back(n);
  doc.require_prefix(expected);
  if (doc.header.size() != expected.size())
    fail(ErrorKind::Dimension, file.string() + ": expected 48 weather feature columns");

  std::vector<KeyedWeatherFeatures> rows;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    const std::string ctx = file.string() + " row " + std::to_string(r + 2);
    if (row.size() != doc.header.size()) fail(ErrorKind::Dimension, ctx + ": wrong field count");
    KeyedWeatherFeatures k;
    k.key.ea_id = row[0];
    k.key.wave = static_cast<int>(csv::parse_int(row[1], ctx));
    k.key.visit = parse_visit(row[2]);
    for (std::size_t j = 0; j < kWeatherFeatureDim; ++j) {
      k.features.values[j] = csv::parse_real(row[3 + j], ctx);
      if (!std::isfinite(k.features.values[j])) fail(ErrorKind::NonFinite, ctx + ": non-finite feature");
    }
    rows.push_back(std::move(k));
  }
  return rows;
}

}  // namespace welfarecast
