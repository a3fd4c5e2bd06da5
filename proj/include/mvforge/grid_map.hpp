#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mvforge/errors.hpp"
#include "mvforge/geometry.hpp"

namespace mvforge {

enum class MapKind : std::uint16_t {
  Generic = 0,
  Density = 1,
  Occupancy = 2,
  GroundDensity = 3,
  Fused = 4,
  Attention = 5,
};
inline constexpr std::uint16_t kMaxMapKind = 5;

struct PixelSpace {
  int camera_id = 0;
  friend bool operator==(const PixelSpace&, const PixelSpace&) = default;
};
struct GroundSpace {
  GroundGrid grid;
  friend bool operator==(const GroundSpace&, const GroundSpace&) = default;
};
using MapSpace = std::variant<std::monostate, PixelSpace, GroundSpace>;

/// Row-major 2-D scalar field.
struct GridMap {
  int rows = 0;
  int cols = 0;
  std::vector<float> values;
  MapKind kind = MapKind::Generic;
  MapSpace space;

  static GridMap zeros(int rows, int cols, MapKind kind = MapKind::Generic,
                       MapSpace space = {}) {
    GridMap map;
    map.rows = rows;
    map.cols = cols;
    map.values.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0f);
    map.kind = kind;
    map.space = space;
    return map;
  }

  std::size_t size() const { return values.size(); }
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
           static_cast<std::size_t>(c);
  }
  float& at(int r, int c) { return values[index(r, c)]; }
  float at(int r, int c) const { return values[index(r, c)]; }
  bool same_shape(const GridMap& other) const {
    return rows == other.rows && cols == other.cols;
  }

  double sum() const {
    double total = 0.0;
    for (float v : values) total += v;
    return total;
  }

  friend bool operator==(const GridMap&, const GridMap&) = default;
};

// ---------------------------------------------------------------------------
// Binary map format
//
//   offset size
//        0    4  magic "MVFG"
//        4    2  format version (u16, currently 1)
//        6    2  map kind (u16)
//        8    4  rows (u32)
//       12    4  cols (u32)
//       16    8  reserved, zero
//       24  4rc  values, IEEE-754 binary32, row-major
//
// All integers and reals are little-endian.

inline constexpr std::string_view kMapMagic = "MVFG";
inline constexpr std::uint16_t kMapFormatVersion = 1;
inline constexpr std::size_t kMapHeaderSize = 24;

namespace detail {

inline void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_le(std::string_view in, std::size_t offset,
                            int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(
             static_cast<unsigned char>(in[offset + static_cast<std::size_t>(i)]))
         << (8 * i);
  return v;
}

}  // namespace detail

inline std::string encode_map(const GridMap& map) {
  std::string out;
  out.reserve(kMapHeaderSize + 4 * map.values.size());
  out.append(kMapMagic);
  detail::put_le(out, kMapFormatVersion, 2);
  detail::put_le(out, static_cast<std::uint16_t>(map.kind), 2);
  detail::put_le(out, static_cast<std::uint32_t>(map.rows), 4);
  detail::put_le(out, static_cast<std::uint32_t>(map.cols), 4);
  detail::put_le(out, 0, 8);
  for (float v : map.values) detail::put_le(out, std::bit_cast<std::uint32_t>(v), 4);
  return out;
}

/// Parses a map from its binary encoding; `file` only labels errors.
inline GridMap decode_map(std::string_view bytes, const std::string& file) {
  if (bytes.size() < kMapHeaderSize)
    throw FormatError(file, bytes.size(),
                      "truncated header: expected 24 header bytes");
  if (bytes.substr(0, 4) != kMapMagic)
    throw FormatError(file, 0, "bad magic: expected \"MVFG\"");
  if (detail::get_le(bytes, 4, 2) != kMapFormatVersion)
    throw FormatError(file, 4, "unsupported format version: expected 1");
  const auto kind = detail::get_le(bytes, 6, 2);
  if (kind > kMaxMapKind)
    throw FormatError(file, 6, "unknown map kind");
  const auto rows = detail::get_le(bytes, 8, 4);
  const auto cols = detail::get_le(bytes, 12, 4);
  if (rows > 0x7fffffff || cols > 0x7fffffff)
    throw FormatError(file, 8, "map dimensions out of range");
  const std::uint64_t count = rows * cols;
  const std::uint64_t expected = kMapHeaderSize + 4 * count;
  if (bytes.size() < expected)
    throw FormatError(file, bytes.size(),
                      "truncated map data: expected " + std::to_string(4 * count) +
                          " value bytes");
  if (bytes.size() > expected)
    throw FormatError(file, expected, "end of file after map data");

  GridMap map;
  map.rows = static_cast<int>(rows);
  map.cols = static_cast<int>(cols);
  map.kind = static_cast<MapKind>(kind);
  map.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t offset = kMapHeaderSize + 4 * i;
    const float v = std::bit_cast<float>(
        static_cast<std::uint32_t>(detail::get_le(bytes, offset, 4)));
    if (!std::isfinite(v)) throw FormatError(file, offset, "finite value");
    map.values[i] = v;
  }
  return map;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string(), 0, "readable file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path,
                             std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

inline void write_map(const std::filesystem::path& path, const GridMap& map) {
  write_file_bytes(path, encode_map(map));
}

inline GridMap read_map(const std::filesystem::path& path) {
  return decode_map(read_file_bytes(path), path.string());
}

}  // namespace mvforge
