#include "welfarecast/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "welfarecast/csv.hpp"
#include "welfarecast/error.hpp"
#include "welfarecast/gridmap.hpp"
#include "welfarecast/ingest.hpp"
#include "welfarecast/rng.hpp"
#include "welfarecast/weather.hpp"

namespace welfarecast {

namespace {

// Nigeria-like placement box.
constexpr double kLatLo = 4.5, kLatHi = 13.5;
constexpr double kLonLo = 3.0, kLonHi = 14.5;
constexpr std::array<int, 4> kWaveYears{2010, 2012, 2015, 2018};
constexpr std::array<int, 3> kDhsYears{2008, 2013, 2018};
constexpr double kLogConsumptionMean = 6.2;  // ~ ln(500)
constexpr double kLogConsumptionScale = 0.5;

struct AssetSpec {
  const char* name;
  double intercept;
  double slope;
  bool ghs;
  bool dhs;
};

constexpr std::array<AssetSpec, 12> kAssets{{
    {"bicycle", -0.8, 0.9, true, true},
    {"car", -2.6, 1.6, true, true},
    {"computer", -2.2, 1.5, false, true},
    {"electricity", 0.2, 1.3, false, true},
    {"fan", -0.2, 1.4, true, false},
    {"generator", -1.2, 1.5, true, false},
    {"mobile_phone", 1.2, 1.2, true, true},
    {"motorcycle", -0.9, 0.8, true, true},
    {"radio", 0.6, 0.9, true, true},
    {"refrigerator", -1.6, 1.7, true, true},
    {"sewing_machine", -1.5, 0.7, true, false},
    {"television", -0.3, 1.6, true, true},
}};

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Rng stream(std::uint64_t seed, std::uint64_t id) {
  return Rng(splitmix(seed ^ splitmix(id)));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string padded(const char* prefix, int value, int width) {
  std::ostringstream out;
  out << prefix;
  const std::string digits = std::to_string(value);
  for (int i = static_cast<int>(digits.size()); i < width; ++i) out << '0';
  out << digits;
  return out.str();
}

Date make_date(int y, unsigned m, unsigned d) {
  return std::chrono::sys_days{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

// Daily series for one 0.25 degree node between [first, last).
std::vector<DailyWeatherRecord> simulate_cell(std::uint64_t seed, const std::string& cell_id, double lat, Date first,
                                              Date last) {
  Rng r = stream(seed, 0x5EA7E000ULL ^ fnv1a(cell_id));
  const double temp_base = 26.5 - 0.25 * (lat - 9.0) + 1.0 * r.normal();
  const double wetness = std::clamp(1.0 + 0.25 * (9.0 - lat) / 4.5 + 0.2 * r.normal(), 0.3, 2.0);
  double month_precip = 0.0;
  double month_temp = 0.0;
  double daily_temp = 0.0;
  std::vector<DailyWeatherRecord> out;
  const auto epoch = make_date(2000, 1, 1);
  long long current_block = -1;
  for (Date d = first; d < last; d += std::chrono::days{1}) {
    const long long block = (d - epoch).count() / 30;
    if (block != current_block) {
      // Monthly anomalies persist across blocks.
      month_precip = 0.6 * month_precip + 0.8 * r.normal();
      month_temp = 0.6 * month_temp + 0.8 * r.normal();
      current_block = block;
    }
    const std::chrono::year_month_day ymd{d};
    const double doy = static_cast<double>((d - std::chrono::sys_days{ymd.year() / 1 / 1}).count());
    const double season = std::sin(2.0 * std::numbers::pi * (doy - 105.0) / 365.25);
    const double p_wet =
        std::clamp((0.05 + 0.45 * (season + 1.0) / 2.0) * wetness * std::exp(0.35 * month_precip), 0.0, 0.95);
    const double u = r.uniform();
    const double amount = -6.0 * std::exp(0.25 * month_precip) * std::log(1.0 - r.uniform());
    daily_temp = 0.7 * daily_temp + 0.8 * r.normal();
    DailyWeatherRecord rec;
    rec.date = d;
    rec.precip_total = u < p_wet ? amount : 0.0;
    rec.temp_mean = temp_base - 2.5 * season + 1.2 * month_temp + daily_temp;
    out.push_back(rec);
  }
  return out;
}

// Parses the "lat_lon" node id written by weather_cell_id.
double node_lat(const std::string& cell_id) { return std::stod(cell_id.substr(0, cell_id.find('_'))); }

struct EaState {
  std::string id;
  double true_lat = 0.0;
  double true_lon = 0.0;
  double lat = 0.0;  // recorded (possibly displaced)
  double lon = 0.0;
  double latent = 0.0;
  std::string weather_cell;  // from true coordinates
};

struct VisitState {
  EnumerationAreaVisit visit;
  std::size_t ea = 0;
  WeatherFeatureVector weather;
  double weather_effect = 0.0;
  double noise = 0.0;
  double log_consumption = 0.0;
};

void standardize(std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / n);
  for (double& x : v) x = sd > 0.0 ? (x - mean) / sd : 0.0;
}

struct ImageModel {
  std::vector<double> loadings;  // 1024
};

ImageFeatureRecord image_features(const ImageModel& model, double latent, const std::vector<double>& persistent,
                                  double visit_noise_sd, Rng& r) {
  ImageFeatureRecord rec;
  rec.ms.resize(kImageFeatureDim);
  rec.nl.resize(kImageFeatureDim);
  for (std::size_t j = 0; j < 2 * kImageFeatureDim; ++j) {
    const double v = model.loadings[j] * latent + persistent[j] + visit_noise_sd * r.normal();
    (j < kImageFeatureDim ? rec.ms[j] : rec.nl[j - kImageFeatureDim]) = v;
  }
  return rec;
}

}  // namespace

void ScenarioConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::Config, "scenario: " + what); };
  if (n_eas < 1 || households_per_ea < 1 || n_dhs_eas < 1) bad("counts must be >= 1");
  if (waves < 1 || waves > 4) bad("waves must be in 1..4");
  if (visits_per_wave < 1 || visits_per_wave > 2) bad("visits_per_wave must be 1 or 2");
  for (double s : {asset_share, weather_share, noise_share})
    if (!(s >= 0.0) || !std::isfinite(s)) bad("variance shares must be >= 0");
  if (asset_share + weather_share + noise_share > 1.0 + 1e-12) bad("variance shares must sum to <= 1");
  if (!(image_noise >= 0.0) || !(image_ea_noise >= 0.0)) bad("image noise levels must be >= 0");
  if (!(jitter_km >= 0.0) || jitter_km > 50.0) bad("jitter_km must be in [0, 50]");
  if (!std::isfinite(weather_nonlinearity)) bad("weather_nonlinearity must be finite");
}

ScenarioConfig parse_scenario_config(const std::string& text) {
  ScenarioConfig c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::Config, "scenario line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string ctx = "scenario key '" + key + "'";
    auto as_int = [&] { return static_cast<int>(csv::parse_int(value, ctx)); };
    auto as_real = [&] { return csv::parse_real(value, ctx); };
    try {
      if (key == "n_eas") c.n_eas = as_int();
      else if (key == "households_per_ea") c.households_per_ea = as_int();
      else if (key == "waves") c.waves = as_int();
      else if (key == "visits_per_wave") c.visits_per_wave = as_int();
      else if (key == "n_dhs_eas") c.n_dhs_eas = as_int();
      else if (key == "asset_share") c.asset_share = as_real();
      else if (key == "weather_share") c.weather_share = as_real();
      else if (key == "noise_share") c.noise_share = as_real();
      else if (key == "image_noise") c.image_noise = as_real();
      else if (key == "image_ea_noise") c.image_ea_noise = as_real();
      else if (key == "weather_nonlinearity") c.weather_nonlinearity = as_real();
      else if (key == "jitter_km") c.jitter_km = as_real();
      else if (key == "seed") c.seed = static_cast<std::uint64_t>(csv::parse_int(value, ctx));
      else fail(ErrorKind::Config, "unknown scenario key '" + key + "'");
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Config) throw;
      fail(ErrorKind::Config, e.what());
    }
  }
  return c;
}

ScenarioConfig read_scenario_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + file.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario_config(text.str());
}

void write_scenario_config(const ScenarioConfig& c, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + file.string() + "'");
  out << "n_eas=" << c.n_eas << '\n'
      << "households_per_ea=" << c.households_per_ea << '\n'
      << "waves=" << c.waves << '\n'
      << "visits_per_wave=" << c.visits_per_wave << '\n'
      << "n_dhs_eas=" << c.n_dhs_eas << '\n'
      << "asset_share=" << csv::format_real(c.asset_share) << '\n'
      << "weather_share=" << csv::format_real(c.weather_share) << '\n'
      << "noise_share=" << csv::format_real(c.noise_share) << '\n'
      << "image_noise=" << csv::format_real(c.image_noise) << '\n'
      << "image_ea_noise=" << csv::format_real(c.image_ea_noise) << '\n'
      << "weather_nonlinearity=" << csv::format_real(c.weather_nonlinearity) << '\n'
      << "jitter_km=" << csv::format_real(c.jitter_km) << '\n'
      << "seed=" << c.seed << '\n';
  if (!out) fail(ErrorKind::Io, "write failed on '" + file.string() + "'");
}

ScenarioTruth scenario_truth(const ScenarioConfig& config) {
  config.validate();
  ScenarioTruth t;
  t.consumption_full = config.asset_share + config.weather_share;
  t.consumption_image_only = config.asset_share;
  t.consumption_weather_only = config.weather_share;
  t.noise = 1.0 - t.consumption_full;
  return t;
}

void generate_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  const std::uint64_t seed = config.seed;
  std::filesystem::create_directories(out_dir / "grid");

  // Enumeration areas.
  Rng ea_rng = stream(seed, 1);
  std::vector<EaState> eas(static_cast<std::size_t>(config.n_eas));
  std::vector<double> latents;
  for (std::size_t g = 0; g < eas.size(); ++g) {
    auto& ea = eas[g];
    ea.id = padded("ea", static_cast<int>(g + 1), 4);
    ea.true_lat = ea_rng.uniform(kLatLo, kLatHi);
    ea.true_lon = ea_rng.uniform(kLonLo, kLonHi);
    latents.push_back(ea_rng.normal());
    const double radius = config.jitter_km * std::sqrt(ea_rng.uniform()) / 111.32;
    const double angle = 2.0 * std::numbers::pi * ea_rng.uniform();
    ea.lat = ea.true_lat + radius * std::sin(angle);
    ea.lon = ea.true_lon + radius * std::cos(angle) / std::cos(ea.true_lat * std::numbers::pi / 180.0);
    ea.weather_cell = weather_cell_id(ea.true_lat, ea.true_lon);
  }
  standardize(latents);
  for (std::size_t g = 0; g < eas.size(); ++g) eas[g].latent = latents[g];

  // Visits.
  Rng visit_rng = stream(seed, 2);
  std::vector<VisitState> visits;
  for (std::size_t g = 0; g < eas.size(); ++g) {
    for (int w = 1; w <= config.waves; ++w) {
      const int year = kWaveYears[static_cast<std::size_t>(w - 1)];
      for (int v = 0; v < config.visits_per_wave; ++v) {
        VisitState s;
        s.ea = g;
        s.visit.key = {eas[g].id, w, v == 0 ? Visit::PostPlanting : Visit::PostHarvest};
        const Date base = v == 0 ? make_date(year, 9, 15) : make_date(year + 1, 2, 15);
        s.visit.end_date = base + std::chrono::days{static_cast<int>(visit_rng.below(40))};
        s.visit.lat = eas[g].lat;
        s.visit.lon = eas[g].lon;
        visits.push_back(std::move(s));
      }
    }
  }

  // Weather: simulate each needed node over the whole span, emit the days
  // inside some visit's 180-day window.
  Date first_day = visits.front().visit.end_date;
  Date last_day = first_day;
  for (const auto& s : visits) {
    first_day = std::min(first_day, s.visit.end_date);
    last_day = std::max(last_day, s.visit.end_date);
  }
  first_day = days_before(first_day, kWeatherWindows * kWindowDays + 30);
  last_day += std::chrono::days{1};

  WeatherTable full;
  for (const auto& ea : eas) {
    if (full.series.contains(ea.weather_cell)) continue;
    full.series.emplace(ea.weather_cell,
                        simulate_cell(seed, ea.weather_cell, node_lat(ea.weather_cell), first_day, last_day));
  }
  WeatherTable emitted;
  {
    std::map<std::string, std::set<Date>> needed;
    for (const auto& s : visits) {
      auto& days = needed[eas[s.ea].weather_cell];
      for (Date d = days_before(s.visit.end_date, kWeatherWindows * kWindowDays); d < s.visit.end_date;
           d += std::chrono::days{1})
        days.insert(d);
    }
    for (const auto& [cell, days] : needed) {
      auto& out = emitted.series[cell];
      for (const auto& rec : full.series.at(cell))
        if (days.contains(rec.date)) out.push_back(rec);
    }
  }

  // Weather effect: a fixed linear functional of the standardized quintile
  // features, optionally with a quadratic term, standardized over visits.
  for (auto& s : visits) s.weather = build_weather_features(full, eas[s.ea].weather_cell, s.visit.end_date);
  Rng coef_rng = stream(seed, 3);
  std::array<double, kWeatherFeatureDim> coef{};
  for (double& c : coef) c = coef_rng.normal();
  std::vector<double> effect(visits.size(), 0.0);
  for (std::size_t k = 0; k < kWeatherFeatureDim; ++k) {
    std::vector<double> column(visits.size());
    for (std::size_t i = 0; i < visits.size(); ++i) column[i] = visits[i].weather.values[k];
    standardize(column);
    for (std::size_t i = 0; i < visits.size(); ++i) effect[i] += coef[k] * column[i];
  }
  standardize(effect);
  if (config.weather_nonlinearity != 0.0) {
    for (double& e : effect) e += config.weather_nonlinearity * e * e;
    standardize(effect);
  }

  // Consumption and households.
  Rng hh_rng = stream(seed, 4);
  const double noise_sd = std::sqrt(std::max(0.0, 1.0 - config.asset_share - config.weather_share));
  std::vector<int> hh_size(eas.size() * static_cast<std::size_t>(config.households_per_ea));
  for (int& size : hh_size) size = 1 + static_cast<int>(hh_rng.below(9));
  std::vector<HouseholdConsumptionRecord> households;
  std::vector<double> share(static_cast<std::size_t>(config.households_per_ea));
  for (std::size_t i = 0; i < visits.size(); ++i) {
    auto& s = visits[i];
    s.weather_effect = effect[i];
    s.noise = hh_rng.normal();
    const double standardized = std::sqrt(config.asset_share) * eas[s.ea].latent +
                                std::sqrt(config.weather_share) * s.weather_effect + noise_sd * s.noise;
    s.log_consumption = kLogConsumptionMean + kLogConsumptionScale * standardized;
    double share_sum = 0.0;
    for (double& u : share) {
      u = std::exp(0.3 * hh_rng.normal());
      share_sum += u;
    }
    const double level = std::exp(s.log_consumption);
    for (int h = 0; h < config.households_per_ea; ++h) {
      const double per_capita = level * share[static_cast<std::size_t>(h)] * config.households_per_ea / share_sum;
      const int size = hh_size[s.ea * static_cast<std::size_t>(config.households_per_ea) + static_cast<std::size_t>(h)];
      households.push_back({eas[s.ea].id + "_h" + padded("", h + 1, 2), s.visit.key, per_capita * size, size});
    }
  }

  // Assets. GHS households keep persistent thresholds so ownership changes
  // slowly across waves.
  Rng asset_rng = stream(seed, 5);
  std::vector<AssetInventory> inventories;
  for (std::size_t g = 0; g < eas.size(); ++g) {
    for (int h = 0; h < config.households_per_ea; ++h) {
      const double person = 0.35 * asset_rng.normal();
      std::array<double, kAssets.size()> threshold{};
      for (double& t : threshold) t = asset_rng.uniform();
      for (int w = 1; w <= config.waves; ++w) {
        AssetInventory inv;
        inv.hh_id = eas[g].id + "_h" + padded("", h + 1, 2);
        inv.source = SurveySource::GHS;
        inv.ea_id = eas[g].id;
        // The year of this wave's post-planting visit.
        for (const auto& s : visits)
          if (s.ea == g && s.visit.key.wave == w && s.visit.key.visit == Visit::PostPlanting)
            inv.survey_year = year_of(s.visit.end_date);
        const double wealth = eas[g].latent + person + 0.15 * asset_rng.normal();
        for (std::size_t a = 0; a < kAssets.size(); ++a) {
          if (!kAssets[a].ghs) continue;
          inv.ownership[kAssets[a].name] =
              threshold[a] < sigmoid(kAssets[a].intercept + kAssets[a].slope * wealth) ? 1 : 0;
        }
        inventories.push_back(std::move(inv));
      }
    }
  }
  Rng dhs_rng = stream(seed, 6);
  for (int d = 0; d < config.n_dhs_eas; ++d) {
    const std::string ea_id = padded("dhs", d + 1, 4);
    const double latent = dhs_rng.normal();
    const int year = kDhsYears[static_cast<std::size_t>(d) % kDhsYears.size()];
    for (int h = 0; h < config.households_per_ea; ++h) {
      AssetInventory inv;
      inv.hh_id = ea_id + "_h" + padded("", h + 1, 2);
      inv.source = SurveySource::DHS;
      inv.survey_year = year;
      inv.ea_id = ea_id;
      const double wealth = latent + 0.35 * dhs_rng.normal();
      for (const auto& spec : kAssets) {
        if (!spec.dhs) continue;
        inv.ownership[spec.name] = dhs_rng.uniform() < sigmoid(spec.intercept + spec.slope * wealth) ? 1 : 0;
      }
      inventories.push_back(std::move(inv));
    }
  }

  // Image features: loadings shared by all EAs, persistent EA content, small
  // per-visit noise.
  Rng img_rng = stream(seed, 7);
  ImageModel image_model;
  image_model.loadings.resize(2 * kImageFeatureDim);
  for (double& l : image_model.loadings) l = img_rng.uniform(0.2, 1.0) * (img_rng.bernoulli(0.5) ? 1.0 : -1.0);
  std::vector<std::vector<double>> persistent(eas.size(), std::vector<double>(2 * kImageFeatureDim));
  for (auto& p : persistent)
    for (double& v : p) v = config.image_ea_noise * img_rng.normal();
  std::vector<ImageFeatureRecord> features;
  for (const auto& s : visits) {
    auto rec = image_features(image_model, eas[s.ea].latent, persistent[s.ea], config.image_noise, img_rng);
    rec.key = s.visit.key;
    features.push_back(std::move(rec));
  }

  // Files.
  std::vector<EnumerationAreaVisit> visit_rows;
  for (const auto& s : visits) visit_rows.push_back(s.visit);
  write_visits(visit_rows, out_dir / "visits.csv");
  write_households(households, out_dir / "households.csv");
  write_assets(inventories, out_dir / "assets.csv");
  write_weather(emitted, out_dir / "weather.csv");
  write_image_features(features, out_dir / "features.csv");
  {
    csv::Writer truth(out_dir / "truth.csv");
    truth.row({"ea_id", "wave", "visit", "asset_latent", "weather_effect", "noise", "log_consumption"});
    for (const auto& s : visits)
      truth.row({s.visit.key.ea_id, std::to_string(s.visit.key.wave), std::string(visit_code(s.visit.key.visit)),
                 csv::format_real(eas[s.ea].latent), csv::format_real(s.weather_effect), csv::format_real(s.noise),
                 csv::format_real(s.log_consumption)});
    truth.close();
  }
  write_scenario_config(config, out_dir / "scenario.cfg");

  // Prediction grid: 1x1 degree at 0.1 degree around (9.5, 7.5). Wealth is a
  // smooth field; about one cell in ten has no imagery.
  Rng grid_rng = stream(seed, 8);
  GridSpec spec{9.0, 10.0, 7.0, 8.0, 0.1, {"2010", "2012"}};
  std::vector<std::tuple<std::string, double, double, ImageFeatureRecord>> grid_images;
  std::vector<std::tuple<std::string, double, double, WeatherFeatureVector>> grid_weather;
  WeatherTable grid_table;
  const auto cells = make_grid(spec);
  std::vector<std::vector<double>> cell_persistent(cells.size(), std::vector<double>(2 * kImageFeatureDim));
  for (auto& p : cell_persistent)
    for (double& v : p) v = config.image_ea_noise * grid_rng.normal();
  for (const auto& period : spec.periods) {
    const Date end = make_date(std::stoi(period), 10, 1);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double lat = cells[c].centroid_lat();
      const double lon = cells[c].centroid_lon();
      const double field = std::sin(3.0 * lat) + std::cos(2.0 * lon) + 0.3 * grid_rng.normal();
      auto rec = image_features(image_model, field, cell_persistent[c], config.image_noise, grid_rng);
      if (!grid_rng.bernoulli(0.1)) grid_images.emplace_back(period, lat, lon, std::move(rec));
      const std::string node = weather_cell_id(lat, lon);
      if (!grid_table.series.contains(node))
        grid_table.series.emplace(node, simulate_cell(seed, node, node_lat(node), make_date(2009, 1, 1),
                                                      make_date(2013, 1, 1)));
      grid_weather.emplace_back(period, lat, lon, build_weather_features(grid_table, node, end));
    }
  }
  write_cell_image_features(grid_images, out_dir / "grid" / "image_features.csv");
  write_cell_weather_features(grid_weather, out_dir / "grid" / "weather_features.csv");
}

}  // namespace welfarecast
