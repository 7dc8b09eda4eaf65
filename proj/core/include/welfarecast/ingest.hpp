#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "welfarecast/date.hpp"

namespace welfarecast {

enum class Visit { PostPlanting, PostHarvest };

// "PP" / "PH" as used in every CSV.
std::string_view visit_code(Visit visit);
Visit parse_visit(std::string_view code);

// Observation key shared by targets, weather features and image features.
struct VisitKey {
  std::string ea_id;
  int wave = 1;
  Visit visit = Visit::PostPlanting;

  auto operator<=>(const VisitKey&) const = default;
};

std::string to_string(const VisitKey& key);

// Coordinates are kept exactly as supplied. Survey coordinates are displaced
// by up to 10 km for respondent privacy; nothing here tries to undo that.
struct EnumerationAreaVisit {
  VisitKey key;
  Date end_date;
  double lat = 0.0;
  double lon = 0.0;

  bool operator==(const EnumerationAreaVisit&) const = default;
};

struct HouseholdConsumptionRecord {
  std::string hh_id;
  VisitKey key;
  double total_expenditure = 0.0;
  int household_size = 1;

  bool operator==(const HouseholdConsumptionRecord&) const = default;
};

enum class SurveySource { GHS, DHS };

std::string_view source_code(SurveySource source);

// An asset absent from `ownership` was not asked about (empty CSV field).
struct AssetInventory {
  std::string hh_id;
  SurveySource source = SurveySource::GHS;
  int survey_year = 0;
  std::string ea_id;
  std::map<std::string, int> ownership;

  bool operator==(const AssetInventory&) const = default;
};

struct SurveyBundle {
  std::vector<EnumerationAreaVisit> visits;
  std::vector<HouseholdConsumptionRecord> households;
  std::vector<AssetInventory> assets;

  const EnumerationAreaVisit* find_visit(const VisitKey& key) const;
};

// Equality that ignores row order of each keyed collection.
bool same_contents(const SurveyBundle& a, const SurveyBundle& b);

SurveyBundle load_survey_bundle(const std::filesystem::path& visits_file,
                                const std::filesystem::path& households_file,
                                const std::filesystem::path& assets_file);

void write_visits(const std::vector<EnumerationAreaVisit>& visits, const std::filesystem::path& file);
void write_households(const std::vector<HouseholdConsumptionRecord>& households,
                      const std::filesystem::path& file);
// Asset columns are the sorted union of all ownership keys; an asset missing
// from an inventory is written as an empty field.
void write_assets(const std::vector<AssetInventory>& assets, const std::filesystem::path& file);

struct DailyWeatherRecord {
  Date date;
  double precip_total = 0.0;
  double temp_mean = 0.0;

  bool operator==(const DailyWeatherRecord&) const = default;
};

// Per-cell daily series, each sorted by date with unique dates.
struct WeatherTable {
  std::map<std::string, std::vector<DailyWeatherRecord>, std::less<>> series;

  const std::vector<DailyWeatherRecord>* find(std::string_view cell_id) const;
};

WeatherTable load_weather(const std::filesystem::path& file);
void write_weather(const WeatherTable& table, const std::filesystem::path& file);

inline constexpr std::size_t kImageFeatureDim = 512;

struct ImageFeatureRecord {
  VisitKey key;
  std::vector<double> ms;  // multispectral CNN penultimate features
  std::vector<double> nl;  // night-lights CNN penultimate features

  bool operator==(const ImageFeatureRecord&) const = default;
};

// Header f0001..f1024, 1-based, zero-padded to four digits.
std::string image_feature_name(std::size_t index0);

std::vector<ImageFeatureRecord> load_image_features(const std::filesystem::path& file);
void write_image_features(const std::vector<ImageFeatureRecord>& records,
                          const std::filesystem::path& file);

}  // namespace welfarecast
