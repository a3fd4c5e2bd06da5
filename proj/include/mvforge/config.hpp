#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mvforge/errors.hpp"
#include "mvforge/geometry.hpp"
#include "mvforge/polygon.hpp"
#include "mvforge/scene_synth.hpp"

namespace mvforge {

/// Hand-authored replacement for parts of a generated scene.
struct SceneOverride {
  std::optional<std::string> type;
  std::optional<Polygon> roi;
  std::vector<Polygon> exclusion_zones;
  std::optional<int> count_min;
  std::optional<int> count_max;
  std::optional<bool> thunder;

  friend bool operator==(const SceneOverride&, const SceneOverride&) = default;
};

/// Everything that determines a generated dataset, together with the seed.
struct GeneratorConfig {
  int scenes = 50;
  int frames_per_scene = 200;
  int views = 50;
  int count_min = 200;
  int count_max = 1000;
  int capacity = kDefaultAreaCapacity;
  double separation = kDefaultSeparation;
  double scene_size_min = 40.0;
  double scene_size_max = 120.0;

  double ring_height = 6.0;
  /// Camera pitch in degrees; nullopt aims every optical axis at the scene
  /// center.
  std::optional<double> ring_pitch_deg;
  double ring_radius_factor = 0.75;
  double fov_deg = 40.0;
  int image_width = 1920;
  int image_height = 1080;

  WeatherConfig weather;
  double thunder_scene_fraction = 0.1;

  double cell_size = 0.2;
  double density_sigma = 3.0;
  double ground_sigma_cells = 3.0;
  bool occlusion = false;
  double occlusion_radius = 0.25;
  bool ground_maps = true;
  bool view_maps = false;
  double view_map_scale = 0.25;

  std::uint64_t seed = 0;

  std::map<int, SceneOverride> scene_overrides;

  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

inline void validate(const GeneratorConfig& c) {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (c.scenes < 1) fail("scenes must be >= 1");
  if (c.frames_per_scene < 1) fail("frames_per_scene must be >= 1");
  if (c.views < 1) fail("views must be >= 1");
  if (c.count_min < 1 || c.count_max > 10000 || c.count_min > c.count_max)
    fail("count range must satisfy 1 <= count_min <= count_max <= 10000");
  if (c.capacity < 1) fail("capacity must be >= 1");
  if (!(c.separation >= 0.0)) fail("separation must be >= 0");
  if (!(c.scene_size_min > 0.0) || !(c.scene_size_max >= c.scene_size_min))
    fail("scene size range must be positive and ordered");
  if (!(c.ring_radius_factor > 0.0)) fail("ring_radius_factor must be > 0");
  if (c.ring_pitch_deg && !(std::abs(*c.ring_pitch_deg) < 90.0))
    fail("ring_pitch_deg must lie in (-90, 90)");
  if (!(c.fov_deg > 0.0 && c.fov_deg < 180.0)) fail("fov_deg must lie in (0, 180)");
  if (c.image_width < 1 || c.image_height < 1) fail("image size must be positive");
  if (!(c.weather.clear_share >= 0.0 && c.weather.clear_share <= 1.0))
    fail("weather_clear_share must lie in [0, 1]");
  double total = 0.0;
  for (double w : c.weather.mixture_weights) {
    if (!(w >= 0.0)) fail("weather weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) fail("weather weights must not all be zero");
  if (!(c.weather.thunder_share >= 0.0 && c.weather.thunder_share < 1.0))
    fail("thunder_share must lie in [0, 1)");
  if (!(c.thunder_scene_fraction >= 0.0 && c.thunder_scene_fraction <= 1.0))
    fail("thunder_scene_fraction must lie in [0, 1]");
  if (!(c.cell_size > 0.0)) fail("cell_size must be > 0");
  if (!(c.density_sigma > 0.0)) fail("density_sigma must be > 0");
  if (!(c.ground_sigma_cells > 0.0)) fail("ground_sigma_cells must be > 0");
  if (!(c.occlusion_radius > 0.0)) fail("occlusion_radius must be > 0");
  if (!(c.view_map_scale > 0.0 && c.view_map_scale <= 1.0))
    fail("view_map_scale must lie in (0, 1]");
}

// ---------------------------------------------------------------------------
// Text format
//
// One `key = value` pair per line; `#` starts a comment. Keys:
//
//   scenes, frames_per_scene, views, count_min, count_max, capacity,
//   separation, scene_size_min, scene_size_max, ring_height, ring_pitch_deg
//   (a number or "auto"), ring_radius_factor, fov_deg, image_width,
//   image_height, weather_clear_share, weather_weights (six comma separated
//   weights for ExtraSunny, Clear, Overcast, Clouds, Rain, Foggy),
//   thunder_share, thunder_scene_fraction, cell_size, density_sigma,
//   ground_sigma_cells, occlusion, occlusion_radius, ground_maps, view_maps,
//   view_map_scale, seed
//
// Per-scene overrides use `scene.<id>.<field>`:
//
//   scene.3.type = beach
//   scene.3.roi = 0 0; 40 0; 40 30; 0 30          (x y pairs, ';' separated)
//   scene.3.exclude = 5 5; 8 5; 8 8; 5 8           (repeatable)
//   scene.3.count_min = 300
//   scene.3.count_max = 600
//   scene.3.thunder = true

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view text, const std::string& where) {
  text = trim(text);
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError(where + ": cannot parse number '" + std::string(text) + "'");
  return value;
}

inline bool parse_bool(std::string_view text, const std::string& where) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(where + ": expected true or false, got '" + std::string(text) + "'");
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline Polygon parse_polygon(std::string_view text, const std::string& where) {
  Polygon poly;
  for (auto vertex : split(text, ';')) {
    if (vertex.empty()) continue;
    std::istringstream in{std::string(vertex)};
    std::string xs, ys, extra;
    if (!(in >> xs >> ys) || (in >> extra))
      throw ConfigError(where + ": polygon vertex '" + std::string(vertex) +
                        "' must be 'x y'");
    poly.push_back({parse_number<double>(xs, where), parse_number<double>(ys, where)});
  }
  return poly;
}

inline std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string format_polygon(const Polygon& poly) {
  std::string out;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (i) out += "; ";
    out += format_real(poly[i].x) + " " + format_real(poly[i].y);
  }
  return out;
}

}  // namespace detail

/// Applies one `key = value` setting.
inline void apply_setting(GeneratorConfig& c, std::string_view key,
                          std::string_view value, const std::string& where) {
  using detail::parse_bool;
  using detail::parse_number;
  const std::string k(detail::trim(key));
  if (k.rfind("scene.", 0) == 0) {
    const auto rest = std::string_view(k).substr(6);
    const auto dot = rest.find('.');
    if (dot == std::string_view::npos)
      throw ConfigError(where + ": expected scene.<id>.<field>");
    const int id = parse_number<int>(rest.substr(0, dot), where);
    const auto field = rest.substr(dot + 1);
    auto& o = c.scene_overrides[id];
    if (field == "type") o.type = std::string(detail::trim(value));
    else if (field == "roi") o.roi = detail::parse_polygon(value, where);
    else if (field == "exclude") o.exclusion_zones.push_back(detail::parse_polygon(value, where));
    else if (field == "count_min") o.count_min = parse_number<int>(value, where);
    else if (field == "count_max") o.count_max = parse_number<int>(value, where);
    else if (field == "thunder") o.thunder = parse_bool(value, where);
    else throw ConfigError(where + ": unknown scene field '" + std::string(field) + "'");
    return;
  }
  if (k == "scenes") c.scenes = parse_number<int>(value, where);
  else if (k == "frames_per_scene") c.frames_per_scene = parse_number<int>(value, where);
  else if (k == "views") c.views = parse_number<int>(value, where);
  else if (k == "count_min") c.count_min = parse_number<int>(value, where);
  else if (k == "count_max") c.count_max = parse_number<int>(value, where);
  else if (k == "capacity") c.capacity = parse_number<int>(value, where);
  else if (k == "separation") c.separation = parse_number<double>(value, where);
  else if (k == "scene_size_min") c.scene_size_min = parse_number<double>(value, where);
  else if (k == "scene_size_max") c.scene_size_max = parse_number<double>(value, where);
  else if (k == "ring_height") c.ring_height = parse_number<double>(value, where);
  else if (k == "ring_pitch_deg") {
    if (detail::trim(value) == "auto") c.ring_pitch_deg.reset();
    else c.ring_pitch_deg = parse_number<double>(value, where);
  }
  else if (k == "ring_radius_factor") c.ring_radius_factor = parse_number<double>(value, where);
  else if (k == "fov_deg") c.fov_deg = parse_number<double>(value, where);
  else if (k == "image_width") c.image_width = parse_number<int>(value, where);
  else if (k == "image_height") c.image_height = parse_number<int>(value, where);
  else if (k == "weather_clear_share") c.weather.clear_share = parse_number<double>(value, where);
  else if (k == "weather_weights") {
    const auto parts = detail::split(value, ',');
    if (parts.size() != c.weather.mixture_weights.size())
      throw ConfigError(where + ": weather_weights needs 6 comma separated values");
    for (std::size_t i = 0; i < parts.size(); ++i)
      c.weather.mixture_weights[i] = parse_number<double>(parts[i], where);
  }
  else if (k == "thunder_share") c.weather.thunder_share = parse_number<double>(value, where);
  else if (k == "thunder_scene_fraction") c.thunder_scene_fraction = parse_number<double>(value, where);
  else if (k == "cell_size") c.cell_size = parse_number<double>(value, where);
  else if (k == "density_sigma") c.density_sigma = parse_number<double>(value, where);
  else if (k == "ground_sigma_cells") c.ground_sigma_cells = parse_number<double>(value, where);
  else if (k == "occlusion") c.occlusion = parse_bool(value, where);
  else if (k == "occlusion_radius") c.occlusion_radius = parse_number<double>(value, where);
  else if (k == "ground_maps") c.ground_maps = parse_bool(value, where);
  else if (k == "view_maps") c.view_maps = parse_bool(value, where);
  else if (k == "view_map_scale") c.view_map_scale = parse_number<double>(value, where);
  else if (k == "seed") c.seed = parse_number<std::uint64_t>(value, where);
  else throw ConfigError(where + ": unknown key '" + k + "'");
}

inline GeneratorConfig parse_config(std::string_view text,
                                    const std::string& name = "config",
                                    GeneratorConfig base = {}) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(where + ": expected 'key = value'");
    apply_setting(base, line.substr(0, eq), line.substr(eq + 1), where);
  }
  return base;
}

inline GeneratorConfig load_config(const std::filesystem::path& path,
                                   GeneratorConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string(), std::move(base));
}

/// Canonical text rendering; parse_config(to_text(c)) == c.
inline std::string to_text(const GeneratorConfig& c) {
  using detail::format_real;
  std::ostringstream out;
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "scenes = " << c.scenes << '\n'
      << "frames_per_scene = " << c.frames_per_scene << '\n'
      << "views = " << c.views << '\n'
      << "count_min = " << c.count_min << '\n'
      << "count_max = " << c.count_max << '\n'
      << "capacity = " << c.capacity << '\n'
      << "separation = " << format_real(c.separation) << '\n'
      << "scene_size_min = " << format_real(c.scene_size_min) << '\n'
      << "scene_size_max = " << format_real(c.scene_size_max) << '\n'
      << "ring_height = " << format_real(c.ring_height) << '\n'
      << "ring_pitch_deg = "
      << (c.ring_pitch_deg ? format_real(*c.ring_pitch_deg) : std::string("auto")) << '\n'
      << "ring_radius_factor = " << format_real(c.ring_radius_factor) << '\n'
      << "fov_deg = " << format_real(c.fov_deg) << '\n'
      << "image_width = " << c.image_width << '\n'
      << "image_height = " << c.image_height << '\n'
      << "weather_clear_share = " << format_real(c.weather.clear_share) << '\n'
      << "weather_weights = ";
  for (std::size_t i = 0; i < c.weather.mixture_weights.size(); ++i)
    out << (i ? ", " : "") << format_real(c.weather.mixture_weights[i]);
  out << '\n'
      << "thunder_share = " << format_real(c.weather.thunder_share) << '\n'
      << "thunder_scene_fraction = " << format_real(c.thunder_scene_fraction) << '\n'
      << "cell_size = " << format_real(c.cell_size) << '\n'
      << "density_sigma = " << format_real(c.density_sigma) << '\n'
      << "ground_sigma_cells = " << format_real(c.ground_sigma_cells) << '\n'
      << "occlusion = " << b(c.occlusion) << '\n'
      << "occlusion_radius = " << format_real(c.occlusion_radius) << '\n'
      << "ground_maps = " << b(c.ground_maps) << '\n'
      << "view_maps = " << b(c.view_maps) << '\n'
      << "view_map_scale = " << format_real(c.view_map_scale) << '\n'
      << "seed = " << c.seed << '\n';
  for (const auto& [id, o] : c.scene_overrides) {
    const std::string p = "scene." + std::to_string(id) + ".";
    if (o.type) out << p << "type = " << *o.type << '\n';
    if (o.roi) out << p << "roi = " << detail::format_polygon(*o.roi) << '\n';
    for (const auto& zone : o.exclusion_zones)
      out << p << "exclude = " << detail::format_polygon(zone) << '\n';
    if (o.count_min) out << p << "count_min = " << *o.count_min << '\n';
    if (o.count_max) out << p << "count_max = " << *o.count_max << '\n';
    if (o.thunder) out << p << "thunder = " << b(*o.thunder) << '\n';
  }
  return out.str();
}

/// Seed from MVFORGE_SEED when set, otherwise `fallback`.
inline std::uint64_t seed_from_environment(std::uint64_t fallback) {
  const char* env = std::getenv("MVFORGE_SEED");
  if (!env || !*env) return fallback;
  return detail::parse_number<std::uint64_t>(env, "MVFORGE_SEED");
}

}  // namespace mvforge
