#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "welfarecast/date.hpp"

namespace welfarecast {

enum class Band { RED, GREEN, BLUE, NIR, SWIR1, SWIR2, TEMP1 };

std::string_view band_name(Band band);
Band parse_band(std::string_view name);

inline constexpr int kCompositeDays = 365;
inline constexpr int kExportTileSide = 255;
inline constexpr int kCropSide = 224;
inline constexpr int kCropOffset = (kExportTileSide - kCropSide) / 2;  // 15

// One acquisition. Band planes are row-major width*height; cloudy[i] != 0
// marks pixel i as unusable in this acquisition.
struct TileObservation {
  Date date;
  std::vector<std::vector<float>> bands;
  std::vector<std::uint8_t> cloudy;
};

struct TileStack {
  int width = 0;
  int height = 0;
  std::vector<Band> bands;
  std::vector<TileObservation> observations;
};

// Invalid pixels (no clear acquisition in the window) hold NaN in every band
// and valid = 0.
struct CompositeTile {
  int width = 0;
  int height = 0;
  std::vector<Band> bands;
  std::vector<std::vector<float>> pixels;
  std::vector<std::uint8_t> valid;

  float at(std::size_t band, int row, int col) const {
    return pixels[band][static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                        static_cast<std::size_t>(col)];
  }
  bool is_valid(int row, int col) const {
    return valid[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)] != 0;
  }
};

// Per pixel and band: median of the clear acquisitions dated in
// [end_date - 365, end_date). Even counts average the two middle values.
CompositeTile median_composite(const TileStack& stack, Date end_date);

// 255x255 -> 224x224, keeping rows and columns 15..238.
CompositeTile center_crop(const CompositeTile& tile);

// Binary tile layout (little-endian throughout):
//   <stem>.json          {"width":W,"height":H,"bands":["RED",...],"date":"YYYY-MM-DD","mask_file":"<stem>.mask"}
//   <stem>.<BAND>.f32    W*H IEEE-754 float32, row-major, one file per band
//   <stem>.mask          W*H bytes; 1 = cloudy (acquisition) or invalid (composite), 0 = usable
struct TileHeader {
  int width = 0;
  int height = 0;
  std::vector<Band> bands;
  Date date;
  std::string mask_file;
};

void write_observation(const std::filesystem::path& dir, std::string_view stem, const TileStack& shape,
                       const TileObservation& observation);
// Reads every *.json sidecar in dir (sorted by file name) into one stack.
TileStack read_tile_stack(const std::filesystem::path& dir);

void write_composite(const std::filesystem::path& dir, std::string_view stem, const CompositeTile& tile,
                     Date date);
CompositeTile read_composite(const std::filesystem::path& sidecar);

// row,col,<band>... with empty fields for invalid pixels.
void write_composite_csv(const CompositeTile& tile, const std::filesystem::path& file);

}  // namespace welfarecast
