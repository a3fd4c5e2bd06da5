#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "mvforge/annotate.hpp"
#include "mvforge/config.hpp"
#include "mvforge/generator.hpp"
#include "mvforge/grid_map.hpp"
#include "mvforge/json_positions.hpp"
#include "mvforge/rng.hpp"

namespace mvforge {

namespace fs = std::filesystem;

inline constexpr std::string_view kManifestFormat = "mvforge-dataset";
inline constexpr int kManifestVersion = 1;
inline constexpr std::string_view kManifestName = "manifest.json";

/// Files written for one frame, relative to the dataset root.
struct FrameFiles {
  std::vector<std::string> views;  // one .dots per camera, camera order
  std::string ground_dots;
  std::string ground_occ;
  std::string ground_den;
  std::vector<std::string> view_maps;

  friend bool operator==(const FrameFiles&, const FrameFiles&) = default;
};

struct FrameEntry {
  int scene_id = 0;
  FrameRecord frame;
  std::size_t areas = 0;
  FrameFiles files;

  friend bool operator==(const FrameEntry&, const FrameEntry&) = default;
};

struct DatasetManifest {
  std::string generator = std::string(CounterRng::kName);
  std::uint64_t seed = 0;
  GeneratorConfig config;
  std::vector<ScenePlan> scenes;  // ordered by id
  std::vector<FrameEntry> frames;  // ordered by (scene, frame)

  const ScenePlan& scene(int id) const {
    for (const auto& s : scenes)
      if (s.scene.id == id) return s;
    throw Error("no scene " + std::to_string(id) + " in manifest");
  }

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

// ---------------------------------------------------------------------------
// .dots files: one line per person, "person_id u v visible", reals in
// shortest round-trip decimal form, visible as 0 or 1.

inline std::string format_dots(const std::vector<ViewEntry>& entries) {
  std::string out;
  out.reserve(entries.size() * 40);
  char buf[64];
  for (const auto& e : entries) {
    out += std::to_string(e.person_id);
    out += ' ';
    out.append(buf, std::to_chars(buf, buf + sizeof(buf), e.u).ptr);
    out += ' ';
    out.append(buf, std::to_chars(buf, buf + sizeof(buf), e.v).ptr);
    out += e.visible ? " 1\n" : " 0\n";
  }
  return out;
}

namespace detail {

/// Whitespace-separated tokenizer that knows its byte offset.
class TextCursor {
 public:
  TextCursor(std::string_view text, const std::string& file)
      : text_(text), file_(file) {}

  void skip_blank() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                   text_[pos_] == '\r'))
      ++pos_;
  }
  bool at_end() {
    for (;;) {
      skip_blank();
      if (pos_ < text_.size() && text_[pos_] == '\n') {
        ++pos_;
        continue;
      }
      if (pos_ < text_.size() && text_[pos_] == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
        continue;
      }
      return pos_ >= text_.size();
    }
  }
  bool at_line_end() {
    skip_blank();
    return pos_ >= text_.size() || text_[pos_] == '\n';
  }
  void end_line(const char* what) {
    skip_blank();
    if (pos_ < text_.size() && text_[pos_] != '\n')
      throw FormatError(file_, pos_, std::string("end of line after ") + what);
    if (pos_ < text_.size()) ++pos_;
  }
  template <typename T>
  T number(const char* what) {
    skip_blank();
    std::size_t end = pos_;
    while (end < text_.size() && text_[end] != ' ' && text_[end] != '\t' &&
           text_[end] != '\n' && text_[end] != '\r')
      ++end;
    T value{};
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + end;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (first == last || ec != std::errc() || ptr != last)
      throw FormatError(file_, pos_, what);
    if constexpr (std::is_floating_point_v<T>)
      if (!std::isfinite(value)) throw FormatError(file_, pos_, what);
    pos_ = end;
    return value;
  }
  std::size_t offset() const { return pos_; }

 private:
  std::string_view text_;
  const std::string& file_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<ViewEntry> parse_dots(std::string_view text,
                                         const std::string& file) {
  std::vector<ViewEntry> entries;
  detail::TextCursor cur(text, file);
  while (!cur.at_end()) {
    ViewEntry e;
    e.person_id = cur.number<int>("integer person id");
    e.u = cur.number<double>("real u coordinate");
    e.v = cur.number<double>("real v coordinate");
    const auto at = cur.offset();
    const int visible = cur.number<int>("visibility flag 0 or 1");
    if (visible != 0 && visible != 1) throw FormatError(file, at, "visibility flag 0 or 1");
    e.visible = visible == 1;
    cur.end_line("visibility flag");
    entries.push_back(e);
  }
  return entries;
}

inline std::vector<ViewEntry> read_dots(const fs::path& path) {
  return parse_dots(read_file_bytes(path), path.string());
}

/// Ground-plane dots: u and v are the continuous grid column and row, the
/// flag marks people inside the grid.
inline std::vector<ViewEntry> ground_dots(const FrameRecord& frame,
                                          const GroundGrid& grid) {
  std::vector<ViewEntry> entries;
  entries.reserve(frame.persons.size());
  for (const auto& p : frame.persons) {
    const auto [row, col] = grid_coordinates(grid, p.position.x, p.position.y);
    entries.push_back({p.id, col, row,
                       grid_index(grid, p.position.x, p.position.y).has_value()});
  }
  return entries;
}

// ---------------------------------------------------------------------------
// Manifest JSON

namespace detail {

inline Json matrix_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  return a;
}

inline Json polygon_json(const Polygon& poly) {
  Json a = Json::array();
  for (const auto& p : poly) a.push_back(Json::array({p.x, p.y}));
  return a;
}

inline Json camera_json(const Camera& c) {
  Json j;
  j["id"] = c.id;
  j["image_size"] = Json::array({c.image_width, c.image_height});
  j["fov_deg"] = c.fov_deg;
  j["intrinsics"] = matrix_json(c.intrinsics);
  j["rotation"] = matrix_json(c.rotation);
  j["translation"] = matrix_json(c.translation);
  return j;
}

inline Json grid_json(const GroundGrid& g) {
  Json j;
  j["origin"] = Json::array({g.origin_x, g.origin_y});
  j["cell_size"] = g.cell_size;
  j["rows"] = g.rows;
  j["cols"] = g.cols;
  return j;
}

inline Json config_json(const GeneratorConfig& config) {
  Json j = Json::object();
  const std::string text = to_text(config);
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    const std::string_view line(text.data() + start, end - start);
    const auto eq = line.find(" = ");
    const std::string key(line.substr(0, eq));
    const std::string value(line.substr(eq + 3));
    // repeated keys (scene exclusion zones) collect into arrays
    if (j.contains(key)) {
      if (!j[key].is_array()) j[key] = Json::array({j[key]});
      j[key].push_back(value);
    } else {
      j[key] = value;
    }
    start = end + 1;
  }
  return j;
}

}  // namespace detail

inline Json manifest_json(const DatasetManifest& m) {
  Json root;
  root["format"] = kManifestFormat;
  root["version"] = kManifestVersion;
  root["generator"] = {{"rng", m.generator}, {"seed", std::to_string(m.seed)}};
  root["config"] = detail::config_json(m.config);

  Json splits = Json::object();
  for (auto name : kSplitNames) splits[std::string(name)] = Json::array();
  for (const auto& plan : m.scenes)
    splits[std::string(to_string(plan.split))].push_back(plan.scene.id);
  root["splits"] = splits;

  Json scenes = Json::array();
  for (const auto& plan : m.scenes) {
    const Scene& s = plan.scene;
    Json j;
    j["id"] = s.id;
    j["type"] = s.scene_type;
    j["split"] = to_string(plan.split);
    j["key"] = std::to_string(plan.key);
    j["size"] = Json::array({s.size_x, s.size_y});
    j["count_range"] = Json::array({s.count_min, s.count_max});
    j["thunder_probability"] = s.thunder_probability;
    j["roi"] = detail::polygon_json(s.roi);
    Json zones = Json::array();
    for (const auto& z : s.exclusion_zones) zones.push_back(detail::polygon_json(z));
    j["exclusion_zones"] = zones;
    j["grid"] = detail::grid_json(plan.grid);
    Json cams = Json::array();
    for (const auto& c : plan.cameras) cams.push_back(detail::camera_json(c));
    j["cameras"] = cams;
    scenes.push_back(std::move(j));
  }
  root["scenes"] = scenes;

  root["person_columns"] =
      Json::array({"id", "x", "y", "z", "action", "character_model"});
  Json frames = Json::array();
  for (const auto& f : m.frames) {
    Json j;
    j["scene"] = f.scene_id;
    j["frame"] = f.frame.frame_id;
    j["seed"] = std::to_string(f.frame.seed);
    j["environment"] = {{"weather", to_string(f.frame.environment.weather)},
                        {"hour", f.frame.environment.hour},
                        {"time_part", to_string(f.frame.environment.time_part)}};
    j["areas"] = f.areas;
    j["count"] = f.frame.persons.size();
    Json persons = Json::array();
    for (const auto& p : f.frame.persons)
      persons.push_back(Json::array({p.id, p.position.x, p.position.y, p.position.z,
                                     to_string(p.action), p.character_model}));
    j["persons"] = persons;
    Json files;
    files["views"] = f.files.views;
    files["ground_dots"] = f.files.ground_dots;
    files["ground_occ"] = f.files.ground_occ;
    files["ground_den"] = f.files.ground_den;
    files["view_maps"] = f.files.view_maps;
    j["files"] = files;
    frames.push_back(std::move(j));
  }
  root["frames"] = frames;
  return root;
}

inline std::string manifest_text(const DatasetManifest& m) {
  return manifest_json(m).dump(1) + "\n";
}

namespace detail {

/// Typed access into a positioned JSON document; every failure is a
/// FormatError pointing at the offending value.
class ManifestReader {
 public:
  ManifestReader(const PositionedJson& doc, std::string file)
      : doc_(doc), file_(std::move(file)) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& expected) const {
    throw FormatError(file_, doc_.offset_of(pointer), expected + " at " +
                                                          (pointer.empty() ? "/" : pointer));
  }

  const Json& get(const Json& obj, const std::string& pointer,
                  const std::string& key) const {
    if (!obj.is_object()) fail(pointer, "object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(pointer, "key \"" + key + "\"");
    return *it;
  }
  const Json& array(const Json& v, const std::string& pointer,
                    std::size_t size = static_cast<std::size_t>(-1)) const {
    if (!v.is_array()) fail(pointer, "array");
    if (size != static_cast<std::size_t>(-1) && v.size() != size)
      fail(pointer, "array of " + std::to_string(size) + " elements");
    return v;
  }
  double real(const Json& v, const std::string& pointer) const {
    if (!v.is_number()) fail(pointer, "number");
    return v.get<double>();
  }
  std::int64_t integer(const Json& v, const std::string& pointer) const {
    if (!v.is_number_integer()) fail(pointer, "integer");
    return v.get<std::int64_t>();
  }
  int int32(const Json& v, const std::string& pointer) const {
    const auto i = integer(v, pointer);
    if (i < INT32_MIN || i > INT32_MAX) fail(pointer, "32-bit integer");
    return static_cast<int>(i);
  }
  std::string string(const Json& v, const std::string& pointer) const {
    if (!v.is_string()) fail(pointer, "string");
    return v.get<std::string>();
  }
  std::uint64_t u64_string(const Json& v, const std::string& pointer) const {
    const std::string s = string(v, pointer);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
      fail(pointer, "decimal 64-bit unsigned integer string");
    return out;
  }
  template <typename Enum, std::size_t N>
  Enum enumeration(const Json& v, const std::string& pointer,
                   const std::array<std::string_view, N>& names) const {
    const auto s = string(v, pointer);
    const auto e = enum_from_string<Enum>(names, s);
    if (!e) fail(pointer, "known label");
    return *e;
  }
  Polygon polygon(const Json& v, const std::string& pointer) const {
    Polygon poly;
    array(v, pointer);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto p = pointer + "/" + std::to_string(i);
      array(v[i], p, 2);
      poly.push_back({real(v[i][0], p + "/0"), real(v[i][1], p + "/1")});
    }
    return poly;
  }
  template <int R, int C>
  Eigen::Matrix<double, R, C> matrix(const Json& v, const std::string& pointer) const {
    array(v, pointer, static_cast<std::size_t>(R * C));
    Eigen::Matrix<double, R, C> m;
    for (int r = 0; r < R; ++r)
      for (int c = 0; c < C; ++c) {
        const auto i = static_cast<std::size_t>(r * C + c);
        m(r, c) = real(v[i], pointer + "/" + std::to_string(i));
      }
    return m;
  }
  std::vector<std::string> strings(const Json& v, const std::string& pointer) const {
    array(v, pointer);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(string(v[i], pointer + "/" + std::to_string(i)));
    return out;
  }

 private:
  const PositionedJson& doc_;
  std::string file_;
};

}  // namespace detail

inline DatasetManifest parse_manifest(std::string_view text,
                                      const std::string& file) {
  const PositionedJson doc = parse_positioned_json(text, file);
  const detail::ManifestReader rd(doc, file);
  const Json& root = doc.root;
  DatasetManifest m;

  if (rd.string(rd.get(root, "", "format"), "/format") != kManifestFormat)
    rd.fail("/format", "format \"mvforge-dataset\"");
  if (rd.integer(rd.get(root, "", "version"), "/version") != kManifestVersion)
    rd.fail("/version", "version 1");
  const Json& gen = rd.get(root, "", "generator");
  m.generator = rd.string(rd.get(gen, "/generator", "rng"), "/generator/rng");
  m.seed = rd.u64_string(rd.get(gen, "/generator", "seed"), "/generator/seed");

  const Json& cfg = rd.get(root, "", "config");
  if (!cfg.is_object()) rd.fail("/config", "object");
  std::string text_cfg;
  for (const auto& [key, value] : cfg.items()) {
    const std::string p = "/config/" + detail::escape_pointer_token(key);
    if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i)
        text_cfg += key + " = " + rd.string(value[i], p + "/" + std::to_string(i)) + "\n";
    } else {
      text_cfg += key + " = " + rd.string(value, p) + "\n";
    }
  }
  try {
    m.config = parse_config(text_cfg, file + "#/config");
  } catch (const ConfigError& e) {
    rd.fail("/config", std::string("valid generator config (") + e.what() + ")");
  }

  const Json& scenes = rd.array(rd.get(root, "", "scenes"), "/scenes");
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const std::string p = "/scenes/" + std::to_string(i);
    const Json& j = scenes[i];
    ScenePlan plan;
    Scene& s = plan.scene;
    s.id = rd.int32(rd.get(j, p, "id"), p + "/id");
    s.scene_type = rd.string(rd.get(j, p, "type"), p + "/type");
    plan.split = rd.enumeration<Split>(rd.get(j, p, "split"), p + "/split", kSplitNames);
    plan.key = rd.u64_string(rd.get(j, p, "key"), p + "/key");
    const Json& size = rd.array(rd.get(j, p, "size"), p + "/size", 2);
    s.size_x = rd.real(size[0], p + "/size/0");
    s.size_y = rd.real(size[1], p + "/size/1");
    const Json& range = rd.array(rd.get(j, p, "count_range"), p + "/count_range", 2);
    s.count_min = rd.int32(range[0], p + "/count_range/0");
    s.count_max = rd.int32(range[1], p + "/count_range/1");
    s.thunder_probability =
        rd.real(rd.get(j, p, "thunder_probability"), p + "/thunder_probability");
    s.roi = rd.polygon(rd.get(j, p, "roi"), p + "/roi");
    const Json& zones = rd.array(rd.get(j, p, "exclusion_zones"), p + "/exclusion_zones");
    for (std::size_t z = 0; z < zones.size(); ++z)
      s.exclusion_zones.push_back(
          rd.polygon(zones[z], p + "/exclusion_zones/" + std::to_string(z)));
    try {
      validate(s);
    } catch (const InvalidScene& e) {
      rd.fail(p, std::string("valid scene (") + e.what() + ")");
    }

    const Json& g = rd.get(j, p, "grid");
    const std::string gp = p + "/grid";
    const Json& origin = rd.array(rd.get(g, gp, "origin"), gp + "/origin", 2);
    plan.grid.origin_x = rd.real(origin[0], gp + "/origin/0");
    plan.grid.origin_y = rd.real(origin[1], gp + "/origin/1");
    plan.grid.cell_size = rd.real(rd.get(g, gp, "cell_size"), gp + "/cell_size");
    plan.grid.rows = rd.int32(rd.get(g, gp, "rows"), gp + "/rows");
    plan.grid.cols = rd.int32(rd.get(g, gp, "cols"), gp + "/cols");
    if (!(plan.grid.cell_size > 0.0) || plan.grid.rows <= 0 || plan.grid.cols <= 0)
      rd.fail(gp, "grid with positive cell size and dimensions");

    const Json& cams = rd.array(rd.get(j, p, "cameras"), p + "/cameras");
    for (std::size_t c = 0; c < cams.size(); ++c) {
      const std::string cp = p + "/cameras/" + std::to_string(c);
      Camera cam;
      cam.id = rd.int32(rd.get(cams[c], cp, "id"), cp + "/id");
      const Json& isz = rd.array(rd.get(cams[c], cp, "image_size"), cp + "/image_size", 2);
      cam.image_width = rd.int32(isz[0], cp + "/image_size/0");
      cam.image_height = rd.int32(isz[1], cp + "/image_size/1");
      cam.fov_deg = rd.real(rd.get(cams[c], cp, "fov_deg"), cp + "/fov_deg");
      cam.intrinsics = rd.matrix<3, 3>(rd.get(cams[c], cp, "intrinsics"), cp + "/intrinsics");
      cam.rotation = rd.matrix<3, 3>(rd.get(cams[c], cp, "rotation"), cp + "/rotation");
      cam.translation = rd.matrix<3, 1>(rd.get(cams[c], cp, "translation"), cp + "/translation");
      try {
        validate(cam);
      } catch (const InvalidCamera& e) {
        rd.fail(cp, std::string("valid camera (") + e.what() + ")");
      }
      plan.cameras.push_back(cam);
    }
    m.scenes.push_back(std::move(plan));
  }

  const Json& splits = rd.get(root, "", "splits");
  for (const auto& plan : m.scenes) {
    const std::string name(to_string(plan.split));
    const Json& ids = rd.array(rd.get(splits, "/splits", name), "/splits/" + name);
    if (std::find(ids.begin(), ids.end(), Json(plan.scene.id)) == ids.end())
      rd.fail("/splits/" + name,
              "scene " + std::to_string(plan.scene.id) + " listed in its split");
  }

  const Json& frames = rd.array(rd.get(root, "", "frames"), "/frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string p = "/frames/" + std::to_string(i);
    const Json& j = frames[i];
    FrameEntry f;
    f.scene_id = rd.int32(rd.get(j, p, "scene"), p + "/scene");
    f.frame.frame_id = rd.int32(rd.get(j, p, "frame"), p + "/frame");
    f.frame.seed = rd.u64_string(rd.get(j, p, "seed"), p + "/seed");
    const Json& env = rd.get(j, p, "environment");
    const std::string ep = p + "/environment";
    f.frame.environment.weather =
        rd.enumeration<Weather>(rd.get(env, ep, "weather"), ep + "/weather", kWeatherNames);
    f.frame.environment.hour = rd.int32(rd.get(env, ep, "hour"), ep + "/hour");
    f.frame.environment.time_part = rd.enumeration<TimePart>(
        rd.get(env, ep, "time_part"), ep + "/time_part", kTimePartNames);
    if (f.frame.environment.hour < 0 || f.frame.environment.hour >= 24 ||
        time_part_for_hour(f.frame.environment.hour) != f.frame.environment.time_part)
      rd.fail(ep, "hour in [0, 24) consistent with time_part");
    const auto areas = rd.integer(rd.get(j, p, "areas"), p + "/areas");
    if (areas < 0) rd.fail(p + "/areas", "non-negative integer");
    f.areas = static_cast<std::size_t>(areas);
    const Json& persons = rd.array(rd.get(j, p, "persons"), p + "/persons");
    for (std::size_t k = 0; k < persons.size(); ++k) {
      const std::string pp = p + "/persons/" + std::to_string(k);
      const Json& row = rd.array(persons[k], pp, 6);
      PersonRecord person;
      person.id = rd.int32(row[0], pp + "/0");
      person.position = {rd.real(row[1], pp + "/1"), rd.real(row[2], pp + "/2"),
                         rd.real(row[3], pp + "/3")};
      person.action = rd.enumeration<Action>(row[4], pp + "/4", kActionNames);
      person.character_model = rd.int32(row[5], pp + "/5");
      if (person.character_model < 0 || person.character_model >= kCharacterModels)
        rd.fail(pp + "/5", "character model in [0, 265)");
      f.frame.persons.push_back(person);
    }
    const auto count = rd.integer(rd.get(j, p, "count"), p + "/count");
    if (count != static_cast<std::int64_t>(f.frame.persons.size()))
      rd.fail(p + "/count", "count equal to the number of persons");
    const Json& files = rd.get(j, p, "files");
    const std::string fp = p + "/files";
    f.files.views = rd.strings(rd.get(files, fp, "views"), fp + "/views");
    f.files.ground_dots = rd.string(rd.get(files, fp, "ground_dots"), fp + "/ground_dots");
    f.files.ground_occ = rd.string(rd.get(files, fp, "ground_occ"), fp + "/ground_occ");
    f.files.ground_den = rd.string(rd.get(files, fp, "ground_den"), fp + "/ground_den");
    f.files.view_maps = rd.strings(rd.get(files, fp, "view_maps"), fp + "/view_maps");
    bool known_scene = false;
    for (const auto& plan : m.scenes) known_scene |= plan.scene.id == f.scene_id;
    if (!known_scene) rd.fail(p + "/scene", "id of a listed scene");
    m.frames.push_back(std::move(f));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Dataset directory

inline std::string frame_dir(int scene_id, int frame_id) {
  return "scene_" + std::to_string(scene_id) + "/frame_" + std::to_string(frame_id);
}

/// Writes frame files as they arrive, from any thread and in any order, and
/// the manifest once at the end in canonical order.
class DatasetWriter {
 public:
  DatasetWriter(fs::path root, GeneratorConfig config, std::vector<ScenePlan> plans)
      : root_(std::move(root)) {
    manifest_.seed = config.seed;
    manifest_.config = std::move(config);
    manifest_.scenes = std::move(plans);
    std::sort(manifest_.scenes.begin(), manifest_.scenes.end(),
              [](const ScenePlan& a, const ScenePlan& b) { return a.scene.id < b.scene.id; });
    fs::create_directories(root_);
  }

  const fs::path& root() const { return root_; }

  void add(const FrameProduct& product) {
    FrameEntry entry;
    entry.scene_id = product.scene_id;
    entry.frame = product.frame;
    entry.areas = product.areas;
    const std::string dir = frame_dir(product.scene_id, product.frame.frame_id);
    fs::create_directories(root_ / dir);
    for (const auto& view : product.views) {
      const std::string rel = dir + "/view_" + std::to_string(view.camera_id) + ".dots";
      write_file_bytes(root_ / rel, format_dots(view.entries));
      entry.files.views.push_back(rel);
    }
    const ScenePlan& plan = manifest_.scene(product.scene_id);
    entry.files.ground_dots = dir + "/ground.dots";
    write_file_bytes(root_ / entry.files.ground_dots,
                     format_dots(ground_dots(product.frame, plan.grid)));
    if (product.ground) {
      entry.files.ground_occ = dir + "/ground.occ";
      entry.files.ground_den = dir + "/ground.den";
      write_map(root_ / entry.files.ground_occ, product.ground->dots);
      write_map(root_ / entry.files.ground_den, product.ground->density);
    }
    for (std::size_t v = 0; v < product.view_maps.size(); ++v) {
      const std::string rel =
          dir + "/view_" + std::to_string(plan.cameras[v].id) + ".den";
      write_map(root_ / rel, product.view_maps[v]);
      entry.files.view_maps.push_back(rel);
    }
    std::lock_guard lock(mutex_);
    pending_[{product.scene_id, product.frame.frame_id}] = std::move(entry);
  }

  /// Writes manifest.json and returns the manifest.
  DatasetManifest finish() {
    std::lock_guard lock(mutex_);
    manifest_.frames.clear();
    for (auto& [key, entry] : pending_) manifest_.frames.push_back(entry);
    write_file_bytes(root_ / kManifestName, manifest_text(manifest_));
    return manifest_;
  }

 private:
  fs::path root_;
  DatasetManifest manifest_;
  std::map<std::pair<int, int>, FrameEntry> pending_;
  std::mutex mutex_;
};

inline void write_dataset(const fs::path& root, const DatasetManifest& manifest) {
  fs::create_directories(root);
  write_file_bytes(root / kManifestName, manifest_text(manifest));
}

struct ReadOptions {
  /// Parse every referenced file and cross-check it against the manifest.
  bool verify_files = true;
};

/// Loads manifest.json from `root` (or a manifest path) and checks that every
/// referenced file exists; with verify_files, also parses them and checks
/// person ids and map shapes against the manifest.
inline DatasetManifest read_dataset(const fs::path& path, ReadOptions options = {}) {
  const fs::path manifest_path =
      fs::is_directory(path) ? path / kManifestName : path;
  const fs::path root = manifest_path.parent_path();
  DatasetManifest m =
      parse_manifest(read_file_bytes(manifest_path), manifest_path.string());

  for (const auto& f : m.frames) {
    const ScenePlan& plan = m.scene(f.scene_id);
    auto require = [&](const std::string& rel) {
      if (rel.empty()) return;
      if (!fs::is_regular_file(root / rel))
        throw FormatError((root / rel).string(), 0, "existing file referenced by manifest");
    };
    for (const auto& v : f.files.views) require(v);
    require(f.files.ground_dots);
    require(f.files.ground_occ);
    require(f.files.ground_den);
    for (const auto& v : f.files.view_maps) require(v);
    if (!options.verify_files) continue;

    if (f.files.views.size() != plan.cameras.size())
      throw FormatError(manifest_path.string(), 0,
                        "one view file per camera for scene " + std::to_string(f.scene_id));
    auto check_ids = [&](const fs::path& file, const std::vector<ViewEntry>& entries) {
      if (entries.size() != f.frame.persons.size())
        throw FormatError(file.string(), 0, "one entry per person of the frame");
      for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].person_id != f.frame.persons[i].id)
          throw FormatError(file.string(), 0, "person ids in manifest order");
    };
    for (const auto& v : f.files.views) check_ids(root / v, read_dots(root / v));
    if (!f.files.ground_dots.empty())
      check_ids(root / f.files.ground_dots, read_dots(root / f.files.ground_dots));
    for (const auto& rel : {f.files.ground_occ, f.files.ground_den}) {
      if (rel.empty()) continue;
      const GridMap map = read_map(root / rel);
      if (map.rows != plan.grid.rows || map.cols != plan.grid.cols)
        throw FormatError((root / rel).string(), 8, "map dimensions matching the scene grid");
    }
    for (const auto& rel : f.files.view_maps) read_map(root / rel);
  }
  return m;
}

/// Per-view annotations of a frame, in camera order.
inline std::vector<ViewAnnotation> load_views(const fs::path& root,
                                              const DatasetManifest& m,
                                              const FrameEntry& f) {
  const ScenePlan& plan = m.scene(f.scene_id);
  std::vector<ViewAnnotation> views;
  for (std::size_t v = 0; v < f.files.views.size(); ++v)
    views.push_back({plan.cameras.at(v).id, read_dots(root / f.files.views[v])});
  return views;
}

}  // namespace mvforge
