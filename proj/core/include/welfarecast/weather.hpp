#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "welfarecast/date.hpp"
#include "welfarecast/ingest.hpp"

namespace welfarecast {

inline constexpr int kWeatherWindows = 6;
inline constexpr int kWindowDays = 30;
inline constexpr int kQuantileCount = 4;
inline constexpr int kWeatherVariables = 2;
inline constexpr std::size_t kWeatherFeatureDim = kWeatherVariables * kWeatherWindows * kQuantileCount;
inline constexpr std::array<double, kQuantileCount> kQuintileLevels{0.2, 0.4, 0.6, 0.8};

// Half-open day range [begin, end).
struct DateRange {
  Date begin;
  Date end;

  int days() const { return static_cast<int>((end - begin).count()); }
  bool contains(Date d) const { return begin <= d && d < end; }
};

// Window w (1 = most recent) covers [end - 30w, end - 30(w-1)). Windows 1..6
// tile the 180 days before the end date.
DateRange window_days(Date end_date, int window);

// Cut points at p = 0.2, 0.4, 0.6, 0.8 by linear interpolation between order
// statistics (R type 7): h = (n-1)p + 1, Q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
std::array<double, kQuantileCount> empirical_quintiles(std::span<const double> values);

enum class WeatherVariable { Precipitation = 0, Temperature = 1 };

// 48 values, variable-major: index = v*24 + (w-1)*4 + (q-1).
struct WeatherFeatureVector {
  std::array<double, kWeatherFeatureDim> values{};

  static constexpr std::size_t index(WeatherVariable variable, int window, int quantile) {
    return static_cast<std::size_t>(static_cast<int>(variable) * kWeatherWindows * kQuantileCount +
                                    (window - 1) * kQuantileCount + (quantile - 1));
  }
  double at(WeatherVariable variable, int window, int quantile) const {
    return values[index(variable, window, quantile)];
  }

  bool operator==(const WeatherFeatureVector&) const = default;
};

struct WeatherOptions {
  int min_days_per_window = 25;
};

// Throws InsufficientCoverageError naming the first window (and variable)
// holding fewer than min_days_per_window daily records.
WeatherFeatureVector build_weather_features(const WeatherTable& table, std::string_view cell_id,
                                            Date end_date, const WeatherOptions& options = {});

// Nearest 0.25 degree grid node, formatted "lat_lon" with two decimals, e.g. "9.25_-7.50".
std::string weather_cell_id(double lat, double lon);

// w01..w48
std::string weather_feature_name(std::size_t index0);

struct KeyedWeatherFeatures {
  VisitKey key;
  WeatherFeatureVector features;

  bool operator==(const KeyedWeatherFeatures&) const = default;
};

void write_weather_features(const std::vector<KeyedWeatherFeatures>& rows, const std::filesystem::path& file);
std::vector<KeyedWeatherFeatures> read_weather_features(const std::filesystem::path& file);

}  // namespace welfarecast
