#include "welfarecast/composite.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "welfarecast/csv.hpp"
#include "welfarecast/error.hpp"

namespace welfarecast {

namespace {

constexpr std::array<std::string_view, 7> kBandNames{"RED", "GREEN", "BLUE", "NIR", "SWIR1", "SWIR2", "TEMP1"};

std::size_t pixel_count(int width, int height) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

void check_observation(const TileStack& stack, const TileObservation& obs) {
  const std::size_t n = pixel_count(stack.width, stack.height);
  if (obs.bands.size() != stack.bands.size())
    fail(ErrorKind::ShapeMismatch, "acquisition " + format_date(obs.date) + " has " +
                                       std::to_string(obs.bands.size()) + " bands, stack declares " +
                                       std::to_string(stack.bands.size()));
  for (const auto& plane : obs.bands)
    if (plane.size() != n)
      fail(ErrorKind::ShapeMismatch, "acquisition " + format_date(obs.date) + " band plane has " +
                                         std::to_string(plane.size()) + " pixels, expected " + std::to_string(n));
  if (obs.cloudy.size() != n)
    fail(ErrorKind::ShapeMismatch, "acquisition " + format_date(obs.date) + " mask has wrong size");
}

void write_floats(const std::filesystem::path& path, const std::vector<float>& plane) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(plane.data()),
              static_cast<std::streamsize>(plane.size() * sizeof(float)));
  } else {
    for (float v : plane) {
      auto bits = std::bit_cast<std::uint32_t>(v);
      char bytes[4] = {static_cast<char>(bits), static_cast<char>(bits >> 8), static_cast<char>(bits >> 16),
                       static_cast<char>(bits >> 24)};
      out.write(bytes, 4);
    }
  }
  if (!out) fail(ErrorKind::Io, "write failed on '" + path.string() + "'");
}

std::vector<float> read_floats(const std::filesystem::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::vector<unsigned char> raw(count * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()) || in.peek() != std::char_traits<char>::eof())
    fail(ErrorKind::ShapeMismatch, "'" + path.string() + "' does not hold exactly " + std::to_string(count) +
                                       " float32 values");
  std::vector<float> plane(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = std::uint32_t{raw[4 * i]} | (std::uint32_t{raw[4 * i + 1]} << 8) |
                               (std::uint32_t{raw[4 * i + 2]} << 16) | (std::uint32_t{raw[4 * i + 3]} << 24);
    plane[i] = std::bit_cast<float>(bits);
  }
  return plane;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed on '" + path.string() + "'");
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes(count);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
  if (in.gcount() != static_cast<std::streamsize>(count) || in.peek() != std::char_traits<char>::eof())
    fail(ErrorKind::ShapeMismatch, "mask '" + path.string() + "' does not hold exactly " +
                                       std::to_string(count) + " bytes");
  return bytes;
}

void write_sidecar(const std::filesystem::path& dir, std::string_view stem, const TileHeader& header) {
  nlohmann::ordered_json j;
  j["width"] = header.width;
  j["height"] = header.height;
  j["bands"] = nlohmann::json::array();
  for (Band b : header.bands) j["bands"].push_back(std::string(band_name(b)));
  j["date"] = format_date(header.date);
  j["mask_file"] = header.mask_file;
  const auto path = dir / (std::string(stem) + ".json");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

TileHeader read_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  TileHeader header;
  try {
    const auto j = nlohmann::json::parse(in);
    header.width = j.at("width").get<int>();
    header.height = j.at("height").get<int>();
    for (const auto& b : j.at("bands")) header.bands.push_back(parse_band(b.get<std::string>()));
    header.date = parse_date(j.at("date").get<std::string>());
    header.mask_file = j.at("mask_file").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Schema, path.string() + ": " + e.what());
  }
  if (header.width <= 0 || header.height <= 0) fail(ErrorKind::ShapeMismatch, path.string() + ": bad tile size");
  return header;
}

std::string band_file(std::string_view stem, Band band) {
  return std::string(stem) + "." + std::string(band_name(band)) + ".f32";
}

}  // namespace

std::string_view band_name(Band band) {
  return kBandNames[static_cast<std::size_t>(band)];
}

Band parse_band(std::string_view name) {
  for (std::size_t i = 0; i < kBandNames.size(); ++i)
    if (kBandNames[i] == name) return static_cast<Band>(i);
  fail(ErrorKind::Value, "unknown band '" + std::string(name) + "'");
}

CompositeTile median_composite(const TileStack& stack, Date end_date) {
  if (stack.observations.empty()) fail(ErrorKind::Empty, "tile stack has no acquisitions");
  if (stack.width <= 0 || stack.height <= 0) fail(ErrorKind::ShapeMismatch, "tile stack has no pixels");
  for (const auto& obs : stack.observations) check_observation(stack, obs);

  const Date window_begin = days_before(end_date, kCompositeDays);
  std::vector<const TileObservation*> in_window;
  for (const auto& obs : stack.observations)
    if (window_begin <= obs.date && obs.date < end_date) in_window.push_back(&obs);

  const std::size_t n = pixel_count(stack.width, stack.height);
  CompositeTile out;
  out.width = stack.width;
  out.height = stack.height;
  out.bands = stack.bands;
  out.pixels.assign(stack.bands.size(), std::vector<float>(n, std::numeric_limits<float>::quiet_NaN()));
  out.valid.assign(n, 0);

  std::vector<float> clear;
  clear.reserve(in_window.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < stack.bands.size(); ++b) {
      clear.clear();
      for (const auto* obs : in_window)
        if (obs->cloudy[i] == 0) clear.push_back(obs->bands[b][i]);
      if (clear.empty()) break;
      for (float v : clear)
        if (!std::isfinite(v))
          fail(ErrorKind::NonFinite, "clear acquisition carries a non-finite pixel value");
      std::sort(clear.begin(), clear.end());
      const std::size_t m = clear.size();
      out.pixels[b][i] = m % 2 == 1 ? clear[m / 2]
                                    : static_cast<float>((static_cast<double>(clear[m / 2 - 1]) +
                                                          static_cast<double>(clear[m / 2])) / 2.0);
      out.valid[i] = 1;
    }
  }
  return out;
}

CompositeTile center_crop(const CompositeTile& tile) {
  if (tile.width != kExportTileSide || tile.height != kExportTileSide)
    fail(ErrorKind::Size, "center crop expects a 255x255 tile, got " + std::to_string(tile.width) + "x" +
                              std::to_string(tile.height));
  CompositeTile out;
  out.width = kCropSide;
  out.height = kCropSide;
  out.bands = tile.bands;
  out.pixels.assign(tile.bands.size(), std::vector<float>(pixel_count(kCropSide, kCropSide)));
  out.valid.assign(pixel_count(kCropSide, kCropSide), 0);
  for (int r = 0; r < kCropSide; ++r) {
    for (int c = 0; c < kCropSide; ++c) {
      const auto src = static_cast<std::size_t>(r + kCropOffset) * kExportTileSide + static_cast<std::size_t>(c + kCropOffset);
      const auto dst = static_cast<std::size_t>(r) * kCropSide + static_cast<std::size_t>(c);
      for (std::size_t b = 0; b < tile.bands.size(); ++b) out.pixels[b][dst] = tile.pixels[b][src];
      out.valid[dst] = tile.valid[src];
    }
  }
  return out;
}

void write_observation(const std::filesystem::path& dir, std::string_view stem, const TileStack& shape,
                       const TileObservation& observation) {
  check_observation(shape, observation);
  TileHeader header{shape.width, shape.height, shape.bands, observation.date, std::string(stem) + ".mask"};
  for (std::size_t b = 0; b < shape.bands.size(); ++b)
    write_floats(dir / band_file(stem, shape.bands[b]), observation.bands[b]);
  write_bytes(dir / header.mask_file, observation.cloudy);
  write_sidecar(dir, stem, header);
}

TileStack read_tile_stack(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> sidecars;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") sidecars.push_back(entry.path());
  std::sort(sidecars.begin(), sidecars.end());
  if (sidecars.empty()) fail(ErrorKind::Empty, "no tile sidecars in '" + dir.string() + "'");

  TileStack stack;
  for (std::size_t k = 0; k < sidecars.size(); ++k) {
    const auto header = read_sidecar(sidecars[k]);
    if (k == 0) {
      stack.width = header.width;
      stack.height = header.height;
      stack.bands = header.bands;
    } else if (header.width != stack.width || header.height != stack.height || header.bands != stack.bands) {
      fail(ErrorKind::ShapeMismatch, sidecars[k].string() + " does not match the stack's shape or bands");
    }
    const std::string stem = sidecars[k].stem().string();
    const std::size_t n = pixel_count(header.width, header.height);
    TileObservation obs;
    obs.date = header.date;
    for (Band b : header.bands) obs.bands.push_back(read_floats(dir / band_file(stem, b), n));
    obs.cloudy = read_bytes(dir / header.mask_file, n);
    stack.observations.push_back(std::move(obs));
  }
  return stack;
}

void write_composite(const std::filesystem::path& dir, std::string_view stem, const CompositeTile& tile,
                     Date date) {
  TileHeader header{tile.width, tile.height, tile.bands, date, std::string(stem) + ".mask"};
  for (std::size_t b = 0; b < tile.bands.size(); ++b)
    write_floats(dir / band_file(stem, tile.bands[b]), tile.pixels[b]);
  std::vector<std::uint8_t> mask(tile.valid.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = tile.valid[i] ? 0 : 1;
  write_bytes(dir / header.mask_file, mask);
  write_sidecar(dir, stem, header);
}

CompositeTile read_composite(const std::filesystem::path& sidecar) {
  const auto header = read_sidecar(sidecar);
  const auto dir = sidecar.parent_path();
  const std::string stem = sidecar.stem().string();
  const std::size_t n = pixel_count(header.width, header.height);
  CompositeTile tile;
  tile.width = header.width;
  tile.height = header.height;
  tile.bands = header.bands;
  for (Band b : header.bands) tile.pixels.push_back(read_floats(dir / band_file(stem, b), n));
  const auto mask = read_bytes(dir / header.mask_file, n);
  tile.valid.resize(n);
  for (std::size_t i = 0; i < n; ++i) tile.valid[i] = mask[i] ? 0 : 1;
  return tile;
}

void write_composite_csv(const CompositeTile& tile, const std::filesystem::path& file) {
  csv::Writer out(file);
  std::vector<std::string> fields{"row", "col"};
  for (Band b : tile.bands) fields.emplace_back(band_name(b));
  out.row(fields);
  for (int r = 0; r < tile.height; ++r) {
    for (int c = 0; c < tile.width; ++c) {
      fields = {std::to_string(r), std::to_string(c)};
      for (std::size_t b = 0; b < tile.bands.size(); ++b)
        fields.push_back(tile.is_valid(r, c) ? csv::format_real(tile.at(b, r, c)) : std::string{});
      out.row(fields);
    }
  }
  out.close();
}

}  // namespace welfarecast
