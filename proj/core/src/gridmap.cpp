#include "welfarecast/gridmap.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "welfarecast/csv.hpp"
#include "welfarecast/error.hpp"

namespace welfarecast {

namespace {

// Slack so that a box spanning an exact multiple of the cell size does not
// gain a sliver row from rounding (e.g. 1.0000000000000004 / 0.1).
constexpr double kCellCountSlack = 1e-9;

int cell_count_along(double extent, double cell) {
  return std::max(1, static_cast<int>(std::ceil(extent / cell - kCellCountSlack)));
}

int find_index(double value, double origin, double cell, int count, auto lower_edge) {
  int idx = static_cast<int>(std::floor((value - origin) / cell));
  idx = std::clamp(idx, 0, count - 1);
  while (idx > 0 && value < lower_edge(idx)) --idx;
  while (idx + 1 < count && value >= lower_edge(idx + 1)) ++idx;
  return idx;
}

}  // namespace

void GridSpec::validate() const {
  if (!std::isfinite(lat_min) || !std::isfinite(lat_max) || !std::isfinite(lon_min) || !std::isfinite(lon_max))
    fail(ErrorKind::InvalidSpec, "grid bounds must be finite");
  if (!(lat_min < lat_max)) fail(ErrorKind::InvalidSpec, "lat_min must be < lat_max");
  if (!(lon_min < lon_max)) fail(ErrorKind::InvalidSpec, "lon_min must be < lon_max");
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) fail(ErrorKind::InvalidSpec, "cell size must be > 0");
  if (lat_min < -90.0 || lat_max > 90.0 || lon_min < -180.0 || lon_max > 180.0)
    fail(ErrorKind::InvalidSpec, "grid bounds outside the globe");
}

int GridSpec::n_rows() const { return cell_count_along(lat_max - lat_min, cell_size); }
int GridSpec::n_cols() const { return cell_count_along(lon_max - lon_min, cell_size); }

double GridSpec::row_lat_min(int row) const { return lat_min + row * cell_size; }
double GridSpec::row_lat_max(int row) const {
  return row + 1 >= n_rows() ? lat_max : lat_min + (row + 1) * cell_size;
}
double GridSpec::col_lon_min(int col) const { return lon_min + col * cell_size; }
double GridSpec::col_lon_max(int col) const {
  return col + 1 >= n_cols() ? lon_max : lon_min + (col + 1) * cell_size;
}

std::vector<GridCell> make_grid(const GridSpec& spec) {
  spec.validate();
  std::vector<GridCell> cells;
  cells.reserve(spec.cell_count());
  for (int r = 0; r < spec.n_rows(); ++r)
    for (int c = 0; c < spec.n_cols(); ++c)
      cells.push_back({r, c, spec.row_lat_min(r), spec.row_lat_max(r), spec.col_lon_min(c), spec.col_lon_max(c)});
  return cells;
}

std::optional<std::pair<int, int>> locate_cell(const GridSpec& spec, double lat, double lon) {
  if (!(spec.lat_min <= lat && lat < spec.lat_max && spec.lon_min <= lon && lon < spec.lon_max)) return std::nullopt;
  const int row = find_index(lat, spec.lat_min, spec.cell_size, spec.n_rows(),
                             [&](int r) { return spec.row_lat_min(r); });
  const int col = find_index(lon, spec.lon_min, spec.cell_size, spec.n_cols(),
                             [&](int c) { return spec.col_lon_min(c); });
  return std::make_pair(row, col);
}

FeatureSet infer_feature_set(const RidgeModel& model) {
  for (int mask = 1; mask < 8; ++mask) {
    const FeatureSet set{(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0};
    if (feature_names(set) == model.feature_names) return set;
  }
  fail(ErrorKind::ConfigMismatch, "model features match no ms/nl/weather combination");
}

RasterLayer predict_grid(const RidgeModel& model, FeatureSet set, const CellFeatureMap& cells,
                         const GridSpec& spec, const std::string& period) {
  spec.validate();
  if (feature_names(set) != model.feature_names)
    fail(ErrorKind::ConfigMismatch, "model was trained on different features than '" + to_string(set) + "'");
  RasterLayer layer;
  layer.spec = spec;
  layer.period = period;
  auto target = model.train_metadata.find("target");
  if (target != model.train_metadata.end()) layer.target = target->second;
  layer.values.assign(spec.cell_count(), std::nullopt);

  for (const auto& [rc, features] : cells) {
    const auto [row, col] = rc;
    if (row < 0 || row >= spec.n_rows() || col < 0 || col >= spec.n_cols()) continue;
    if (set.needs_image() && !features.image) continue;
    if (set.weather && !features.weather) continue;
    const auto x = fuse_features(features.image ? &*features.image : nullptr,
                                 features.weather ? &*features.weather : nullptr, set);
    layer.values[static_cast<std::size_t>(row) * static_cast<std::size_t>(spec.n_cols()) +
                 static_cast<std::size_t>(col)] = predict_row(model, x);
  }
  return layer;
}

void export_raster(const std::vector<RasterLayer>& layers, const std::filesystem::path& file) {
  csv::Writer out(file);
  out.row({"lon_min", "lat_min", "period", "value"});
  for (const auto& layer : layers) {
    const auto& spec = layer.spec;
    if (layer.values.size() != spec.cell_count())
      fail(ErrorKind::InvalidSpec, "raster layer size disagrees with its grid");
    for (int r = 0; r < spec.n_rows(); ++r)
      for (int c = 0; c < spec.n_cols(); ++c)
        out.row({csv::format_real(spec.col_lon_min(c)), csv::format_real(spec.row_lat_min(r)), layer.period,
                 csv::format_optional(layer.at(r, c))});
  }
  out.close();
}

std::vector<RasterRow> import_raster(const std::filesystem::path& file) {
  const auto doc = csv::read(file);
  doc.require_prefix({"lon_min", "lat_min", "period", "value"});
  std::vector<RasterRow> rows;
  rows.reserve(doc.rows.size());
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    const std::string ctx = file.string() + " row " + std::to_string(r + 2);
    if (row.size() != 4) fail(ErrorKind::Schema, ctx + ": wrong field count");
    RasterRow out{csv::parse_real(row[0], ctx), csv::parse_real(row[1], ctx), row[2], std::nullopt};
    if (!row[3].empty()) out.value = csv::parse_real(row[3], ctx);
    rows.push_back(std::move(out));
  }
  return rows;
}

namespace {

template <typename Fill>
void load_point_file(const std::filesystem::path& file, const std::vector<std::string>& feature_cols,
                     const GridSpec& spec, const std::string& period, CellFeatureMap& cells, Fill fill) {
  const auto doc = csv::read(file);
  std::vector<std::string_view> expected{"period", "lat", "lon"};
  for (const auto& c : feature_cols) expected.push_back(c);
  doc.require_prefix(expected);
  if (doc.header.size() != expected.size())
    fail(ErrorKind::Dimension, file.string() + ": unexpected number of feature columns");
  std::set<std::pair<int, int>> seen;
  std::vector<double> values(feature_cols.size());
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    const std::string ctx = file.string() + " row " + std::to_string(r + 2);
    if (row.size() != doc.header.size()) fail(ErrorKind::Dimension, ctx + ": wrong field count");
    if (row[0] != period) continue;
    const double lat = csv::parse_real(row[1], ctx);
    const double lon = csv::parse_real(row[2], ctx);
    const auto rc = locate_cell(spec, lat, lon);
    if (!rc) continue;
    if (!seen.insert(*rc).second) fail(ErrorKind::Value, ctx + ": second point in one grid cell");
    bool complete = true;
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      if (row[3 + j].empty()) {
        complete = false;
        break;
      }
      values[j] = csv::parse_real(row[3 + j], ctx);
      if (!std::isfinite(values[j])) fail(ErrorKind::NonFinite, ctx + ": non-finite feature");
    }
    if (complete) fill(cells[*rc], values);
  }
}

}  // namespace

CellFeatureMap load_cell_features(const std::filesystem::path& dir, const GridSpec& spec, const std::string& period) {
  spec.validate();
  CellFeatureMap cells;
  const auto image_file = dir / "image_features.csv";
  if (std::filesystem::exists(image_file)) {
    std::vector<std::string> cols;
    for (std::size_t j = 0; j < 2 * kImageFeatureDim; ++j) cols.push_back(image_feature_name(j));
    load_point_file(image_file, cols, spec, period, cells, [](CellFeatures& cell, const std::vector<double>& v) {
      ImageFeatureRecord rec;
      rec.ms.assign(v.begin(), v.begin() + kImageFeatureDim);
      rec.nl.assign(v.begin() + kImageFeatureDim, v.end());
      cell.image = std::move(rec);
    });
  }
  const auto weather_file = dir / "weather_features.csv";
  if (std::filesystem::exists(weather_file)) {
    std::vector<std::string> cols;
    for (std::size_t j = 0; j < kWeatherFeatureDim; ++j) cols.push_back(weather_feature_name(j));
    load_point_file(weather_file, cols, spec, period, cells, [](CellFeatures& cell, const std::vector<double>& v) {
      WeatherFeatureVector w;
      std::copy(v.begin(), v.end(), w.values.begin());
      cell.weather = w;
    });
  }
  return cells;
}

void write_cell_image_features(const std::vector<std::tuple<std::string, double, double, ImageFeatureRecord>>& rows,
                               const std::filesystem::path& file) {
  csv::Writer out(file);
  std::vector<std::string> fields{"period", "lat", "lon"};
  for (std::size_t j = 0; j < 2 * kImageFeatureDim; ++j) fields.push_back(image_feature_name(j));
  out.row(fields);
  for (const auto& [period, lat, lon, rec] : rows) {
    fields = {period, csv::format_real(lat), csv::format_real(lon)};
    for (double v : rec.ms) fields.push_back(csv::format_real(v));
    for (double v : rec.nl) fields.push_back(csv::format_real(v));
    out.row(fields);
  }
  out.close();
}

void write_cell_weather_features(
    const std::vector<std::tuple<std::string, double, double, WeatherFeatureVector>>& rows,
    const std::filesystem::path& file) {
  csv::Writer out(file);
  std::vector<std::string> fields{"period", "lat", "lon"};
  for (std::size_t j = 0; j < kWeatherFeatureDim; ++j) fields.push_back(weather_feature_name(j));
  out.row(fields);
  for (const auto& [period, lat, lon, w] : rows) {
    fields = {period, csv::format_real(lat), csv::format_real(lon)};
    for (double v : w.values) fields.push_back(csv::format_real(v));
    out.row(fields);
  }
  out.close();
}

}  // namespace welfarecast
