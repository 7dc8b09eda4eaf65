#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace welfarecast {

// Synthetic survey + imagery + weather world. Each EA has a time-invariant
// wealth latent that drives asset ownership and image features; log
// consumption per EA-visit is
//   mu + scale * (sqrt(asset_share) a_g + sqrt(weather_share) W_ev + sqrt(1 - asset - weather) e_ev)
// where W_ev is a fixed linear functional of the 48 monthly-quintile weather
// features of the visit (plus an optional quadratic term) and e_ev is noise.
struct ScenarioConfig {
  int n_eas = 150;
  int households_per_ea = 10;
  int waves = 4;
  int visits_per_wave = 2;
  int n_dhs_eas = 100;
  double asset_share = 0.45;
  double weather_share = 0.30;
  double noise_share = 0.25;
  double image_noise = 0.3;           // sd of per-visit noise on each image feature
  double image_ea_noise = 0.5;        // sd of persistent EA-specific image content
  double weather_nonlinearity = 0.0;  // weight of the quadratic term in W
  double jitter_km = 0.0;             // displacement applied to recorded EA coordinates
  std::uint64_t seed = 42;

  // Throws ConfigError.
  void validate() const;
};

// Flat key=value text; '#' starts a comment. Unknown keys are errors.
ScenarioConfig read_scenario_config(const std::filesystem::path& file);
ScenarioConfig parse_scenario_config(const std::string& text);
void write_scenario_config(const ScenarioConfig& config, const std::filesystem::path& file);

// Population R^2 ceilings for consumption implied by the variance shares.
struct ScenarioTruth {
  double consumption_full = 0.0;        // asset + weather share
  double consumption_image_only = 0.0;  // asset share
  double consumption_weather_only = 0.0;
  double noise = 0.0;                   // 1 - asset - weather
};

ScenarioTruth scenario_truth(const ScenarioConfig& config);

// Writes visits.csv, households.csv, assets.csv, weather.csv, features.csv,
// truth.csv (latent components per EA-visit), scenario.cfg, and a grid/
// directory with per-cell image_features.csv and weather_features.csv for a
// 1x1 degree box (lat 9..10, lon 7..8) at periods 2010 and 2012.
// Output is byte-identical for identical configs.
void generate_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir);

}  // namespace welfarecast
