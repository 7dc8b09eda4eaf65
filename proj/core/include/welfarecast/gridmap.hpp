#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "welfarecast/ingest.hpp"
#include "welfarecast/regress.hpp"
#include "welfarecast/weather.hpp"

namespace welfarecast {

// Plate carree box in decimal degrees, tiled by half-open cells anchored at
// (lon_min, lat_min). The last row/column is clipped to the box.
struct GridSpec {
  double lat_min = 0.0;
  double lat_max = 0.0;
  double lon_min = 0.0;
  double lon_max = 0.0;
  double cell_size = 0.1;
  std::vector<std::string> periods;

  // Throws InvalidSpecError.
  void validate() const;
  int n_rows() const;
  int n_cols() const;
  std::size_t cell_count() const { return static_cast<std::size_t>(n_rows()) * static_cast<std::size_t>(n_cols()); }

  double row_lat_min(int row) const;
  double row_lat_max(int row) const;
  double col_lon_min(int col) const;
  double col_lon_max(int col) const;
};

struct GridCell {
  int row = 0;
  int col = 0;
  double lat_min = 0.0;
  double lat_max = 0.0;
  double lon_min = 0.0;
  double lon_max = 0.0;

  double centroid_lat() const { return 0.5 * (lat_min + lat_max); }
  double centroid_lon() const { return 0.5 * (lon_min + lon_max); }
  bool contains(double lat, double lon) const {
    return lat_min <= lat && lat < lat_max && lon_min <= lon && lon < lon_max;
  }
};

// Row-major from (lat_min, lon_min).
std::vector<GridCell> make_grid(const GridSpec& spec);

// Cell holding the point, or nullopt outside the box.
std::optional<std::pair<int, int>> locate_cell(const GridSpec& spec, double lat, double lon);

struct CellFeatures {
  std::optional<ImageFeatureRecord> image;
  std::optional<WeatherFeatureVector> weather;
};

using CellFeatureMap = std::map<std::pair<int, int>, CellFeatures>;  // keyed by (row, col)

struct RasterLayer {
  GridSpec spec;
  std::string period;
  std::string target;
  std::vector<std::optional<double>> values;  // row-major, n_rows * n_cols

  const std::optional<double>& at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(spec.n_cols()) +
                  static_cast<std::size_t>(col)];
  }
};

// Feature set whose names equal the model's, else ConfigMismatchError.
FeatureSet infer_feature_set(const RidgeModel& model);

// Cells with every enabled block get a prediction; the rest stay missing.
RasterLayer predict_grid(const RidgeModel& model, FeatureSet set, const CellFeatureMap& cells,
                         const GridSpec& spec, const std::string& period);

// Header lon_min,lat_min,period,value; layers in order, each row-major from
// (lat_min, lon_min); missing cells keep their row with an empty value.
void export_raster(const std::vector<RasterLayer>& layers, const std::filesystem::path& file);

struct RasterRow {
  double lon_min = 0.0;
  double lat_min = 0.0;
  std::string period;
  std::optional<double> value;

  bool operator==(const RasterRow&) const = default;
};

std::vector<RasterRow> import_raster(const std::filesystem::path& file);

// Per-period point features from a directory holding either or both of
//   image_features.csv    period,lat,lon,f0001..f1024
//   weather_features.csv  period,lat,lon,w01..w48
// Each point is assigned to the cell containing it; points outside the box are
// ignored and two points in one cell are an error. Empty feature fields leave
// that block missing for the cell.
CellFeatureMap load_cell_features(const std::filesystem::path& dir, const GridSpec& spec, const std::string& period);

void write_cell_image_features(const std::vector<std::tuple<std::string, double, double, ImageFeatureRecord>>& rows,
                               const std::filesystem::path& file);
void write_cell_weather_features(
    const std::vector<std::tuple<std::string, double, double, WeatherFeatureVector>>& rows,
    const std::filesystem::path& file);

}  // namespace welfarecast
