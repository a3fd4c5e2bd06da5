#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mvforge/errors.hpp"
#include "mvforge/geometry.hpp"
#include "mvforge/polygon.hpp"
#include "mvforge/rng.hpp"

namespace mvforge {

// ---------------------------------------------------------------------------
// Environment

enum class Weather { Clear, ExtraSunny, Overcast, Clouds, Rain, Foggy, Thunder };
inline constexpr std::size_t kWeatherCount = 7;

enum class TimePart { Morning, Noon, Afternoon, Sunset, Evening };
inline constexpr std::size_t kTimePartCount = 5;

/// Sub-periods of the evening part, each three hours long.
enum class EveningPeriod { Night, Nightfall, Midnight, EarlyMorning };
inline constexpr std::size_t kEveningPeriodCount = 4;

inline constexpr std::array<std::string_view, kWeatherCount> kWeatherNames = {
    "Clear", "ExtraSunny", "Overcast", "Clouds", "Rain", "Foggy", "Thunder"};
inline constexpr std::array<std::string_view, kTimePartCount> kTimePartNames = {
    "Morning", "Noon", "Afternoon", "Sunset", "Evening"};
inline constexpr std::array<std::string_view, kEveningPeriodCount>
    kEveningPeriodNames = {"Night", "Nightfall", "Midnight", "EarlyMorning"};

inline std::string_view to_string(Weather w) {
  return kWeatherNames[static_cast<std::size_t>(w)];
}
inline std::string_view to_string(TimePart t) {
  return kTimePartNames[static_cast<std::size_t>(t)];
}

template <typename Enum, std::size_t N>
std::optional<Enum> enum_from_string(
    const std::array<std::string_view, N>& names, std::string_view text) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == text) return static_cast<Enum>(i);
  return std::nullopt;
}

/// Morning 6-9, Noon 9-12, Afternoon 12-15, Sunset 15-18, Evening 18-6.
inline TimePart time_part_for_hour(int hour) {
  if (hour >= 6 && hour < 9) return TimePart::Morning;
  if (hour >= 9 && hour < 12) return TimePart::Noon;
  if (hour >= 12 && hour < 15) return TimePart::Afternoon;
  if (hour >= 15 && hour < 18) return TimePart::Sunset;
  return TimePart::Evening;
}

/// Night 18-21, Nightfall 21-24, Midnight 0-3, EarlyMorning 3-6.
inline std::optional<EveningPeriod> evening_period_for_hour(int hour) {
  if (hour >= 18 && hour < 21) return EveningPeriod::Night;
  if (hour >= 21 && hour < 24) return EveningPeriod::Nightfall;
  if (hour >= 0 && hour < 3) return EveningPeriod::Midnight;
  if (hour >= 3 && hour < 6) return EveningPeriod::EarlyMorning;
  return std::nullopt;
}

struct EnvironmentSample {
  Weather weather = Weather::Clear;
  int hour = 12;
  TimePart time_part = TimePart::Afternoon;

  friend bool operator==(const EnvironmentSample&,
                         const EnvironmentSample&) = default;
};

/// Two-stage weather rule: a forced share of Clear, the remainder drawn with
/// the mixture weights over {ExtraSunny, Clear, Overcast, Clouds, Rain, Foggy}.
struct WeatherConfig {
  double clear_share = 0.5;
  std::array<double, 6> mixture_weights = {2, 1, 1, 1, 1, 1};
  /// Dataset-level Thunder share, realised only in scenes that opt in.
  double thunder_share = 0.0077;

  friend bool operator==(const WeatherConfig&, const WeatherConfig&) = default;
};

inline constexpr std::array<Weather, 6> kMixtureWeathers = {
    Weather::ExtraSunny, Weather::Clear, Weather::Overcast,
    Weather::Clouds,     Weather::Rain,  Weather::Foggy};

/// Probability of each weather under the two-stage rule, with Thunder drawn
/// first at `thunder_probability`.
inline std::array<double, kWeatherCount> weather_probabilities(
    const WeatherConfig& config, double thunder_probability = 0.0) {
  std::array<double, kWeatherCount> p{};
  double total = 0.0;
  for (double w : config.mixture_weights) total += w;
  const double rest = 1.0 - thunder_probability;
  p[static_cast<std::size_t>(Weather::Thunder)] = thunder_probability;
  p[static_cast<std::size_t>(Weather::Clear)] += rest * config.clear_share;
  for (std::size_t i = 0; i < kMixtureWeathers.size(); ++i)
    p[static_cast<std::size_t>(kMixtureWeathers[i])] +=
        rest * (1.0 - config.clear_share) * config.mixture_weights[i] / total;
  return p;
}

inline EnvironmentSample sample_environment(CounterRng& rng,
                                            const WeatherConfig& config = {},
                                            double thunder_probability = 0.0) {
  EnvironmentSample env;
  if (thunder_probability > 0.0 && rng.uniform() < thunder_probability) {
    env.weather = Weather::Thunder;
  } else if (rng.uniform() < config.clear_share) {
    env.weather = Weather::Clear;
  } else {
    env.weather = kMixtureWeathers[rng.weighted_index(config.mixture_weights)];
  }

  static constexpr std::array<int, kTimePartCount> kPartStart = {6, 9, 12, 15,
                                                                 18};
  static constexpr std::array<int, kEveningPeriodCount> kEveningStart = {18, 21,
                                                                         0, 3};
  const auto part = static_cast<std::size_t>(rng.uniform_int(kTimePartCount));
  int start = kPartStart[part];
  if (static_cast<TimePart>(part) == TimePart::Evening)
    start = kEveningStart[rng.uniform_int(kEveningPeriodCount)];
  env.hour = start + static_cast<int>(rng.uniform_int(3));
  env.time_part = time_part_for_hour(env.hour);
  return env;
}

inline EnvironmentSample sample_environment(std::uint64_t seed,
                                            const WeatherConfig& config = {},
                                            double thunder_probability = 0.0) {
  CounterRng rng(seed);
  return sample_environment(rng, config, thunder_probability);
}

// ---------------------------------------------------------------------------
// Scenes and people

inline const std::vector<std::string>& default_scene_types() {
  static const std::vector<std::string> types = {
      "park",           "curbside",    "beach",   "walking_street",
      "shopping_center", "church",     "square",  "campus",
      "stadium",        "station",     "parking_lot", "harbor",
      "market",         "bridge",      "garden"};
  return types;
}

/// Upper-body actions; cosmetic labels carried into the annotations.
enum class Action {
  Standing,
  Smoking,
  Drinking,
  Music,
  PhoneCall,
  Texting,
  Waving,
  Clapping,
  Stretching,
  Chatting
};
inline constexpr std::size_t kActionCount = 10;
inline constexpr std::array<std::string_view, kActionCount> kActionNames = {
    "Standing", "Smoking", "Drinking",  "Music",      "PhoneCall",
    "Texting",  "Waving",  "Clapping",  "Stretching", "Chatting"};
inline std::string_view to_string(Action a) {
  return kActionNames[static_cast<std::size_t>(a)];
}

inline constexpr int kCharacterModels = 265;

struct Scene {
  int id = 0;
  std::string scene_type = "park";
  Polygon roi;
  double size_x = 0.0;
  double size_y = 0.0;
  int count_min = 1;
  int count_max = 1;
  std::vector<Polygon> exclusion_zones;
  /// Per-frame Thunder probability; zero for scenes that do not opt in.
  double thunder_probability = 0.0;

  friend bool operator==(const Scene&, const Scene&) = default;
};

inline void validate(const Scene& scene) {
  const std::string who = "scene " + std::to_string(scene.id) + ": ";
  if (!is_simple(scene.roi))
    throw InvalidScene(who + "roi must be a simple polygon with >= 3 vertices");
  if (scene.count_min < 1 || scene.count_max > 10000 ||
      scene.count_min > scene.count_max)
    throw InvalidScene(who + "count range must satisfy 1 <= min <= max <= 10000");
  const Box2 box = bounding_box(scene.roi);
  for (const auto& zone : scene.exclusion_zones) {
    if (!is_simple(zone))
      throw InvalidScene(who + "exclusion zone is not a simple polygon");
    for (const auto& p : zone)
      if (!box.contains(p))
        throw InvalidScene(who + "exclusion zone leaves the roi bounding box");
  }
  if (!(scene.thunder_probability >= 0.0 && scene.thunder_probability <= 1.0))
    throw InvalidScene(who + "thunder probability outside [0, 1]");
}

struct PersonRecord {
  int id = 0;
  WorldPoint position;  // foot point, z = 0
  Action action = Action::Standing;
  int character_model = 0;

  WorldPoint head(double height = kHeadHeight) const {
    return {position.x, position.y, position.z + height};
  }

  friend bool operator==(const PersonRecord&, const PersonRecord&) = default;
};

struct FrameRecord {
  int frame_id = 0;
  EnvironmentSample environment;
  std::vector<PersonRecord> persons;
  std::uint64_t seed = 0;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

inline bool in_placement_region(const Scene& scene, const Point2& p) {
  if (!contains(scene.roi, p)) return false;
  for (const auto& zone : scene.exclusion_zones)
    if (contains(zone, p)) return false;
  return true;
}

/// Disks of radius s/2 around people separated by s are disjoint and lie in
/// the roi dilated by s/2, which bounds how many people can fit at all.
inline double packing_bound(const Polygon& roi, double min_separation) {
  if (!(min_separation > 0.0)) return std::numeric_limits<double>::infinity();
  const double r = min_separation / 2.0;
  const double disk = std::numbers::pi * r * r;
  return (area(roi) + perimeter(roi) * r + disk) / disk;
}

inline constexpr double kDefaultSeparation = 0.25;

/// Uniform rejection sampling inside roi minus exclusion zones with a
/// minimum pairwise horizontal separation. Gives up after 1000 * count
/// rejected candidates.
inline std::vector<PersonRecord> place_people(const Scene& scene, int count,
                                              double min_separation,
                                              CounterRng& rng) {
  if (count < 0) throw PlacementInfeasible("negative person count");
  if (!(min_separation >= 0.0))
    throw PlacementInfeasible("min separation must be non-negative");
  const std::string who = "scene " + std::to_string(scene.id) + ": ";
  if (count > packing_bound(scene.roi, min_separation))
    throw PlacementInfeasible(who + std::to_string(count) +
                              " people cannot be packed at separation " +
                              std::to_string(min_separation) + " m");

  const Box2 box = bounding_box(scene.roi);
  const double cell = min_separation;
  const double sep2 = min_separation * min_separation;
  auto key = [&](long long ix, long long iy) {
    return (static_cast<std::uint64_t>(ix) << 32) ^
           static_cast<std::uint64_t>(iy & 0xffffffffLL);
  };
  std::unordered_map<std::uint64_t, std::vector<int>> buckets;

  std::vector<PersonRecord> people;
  people.reserve(static_cast<std::size_t>(count));
  const std::uint64_t budget = 1000ULL * static_cast<std::uint64_t>(count);
  std::uint64_t rejections = 0;
  while (static_cast<int>(people.size()) < count) {
    const Point2 p{rng.uniform(box.min_x, box.max_x),
                   rng.uniform(box.min_y, box.max_y)};
    bool ok = in_placement_region(scene, p);
    long long ix = 0, iy = 0;
    if (ok && cell > 0.0) {
      ix = static_cast<long long>(std::floor((p.x - box.min_x) / cell));
      iy = static_cast<long long>(std::floor((p.y - box.min_y) / cell));
      for (long long dx = -1; dx <= 1 && ok; ++dx) {
        for (long long dy = -1; dy <= 1 && ok; ++dy) {
          auto it = buckets.find(key(ix + dx, iy + dy));
          if (it == buckets.end()) continue;
          for (int other : it->second) {
            const auto& q = people[static_cast<std::size_t>(other)].position;
            const double ddx = q.x - p.x, ddy = q.y - p.y;
            if (ddx * ddx + ddy * ddy < sep2) {
              ok = false;
              break;
            }
          }
        }
      }
    }
    if (!ok) {
      if (++rejections > budget)
        throw PlacementInfeasible(
            who + "placed " + std::to_string(people.size()) + " of " +
            std::to_string(count) + " people before exhausting the retry budget");
      continue;
    }
    PersonRecord person;
    person.id = static_cast<int>(people.size());
    person.position = {p.x, p.y, 0.0};
    person.action = static_cast<Action>(rng.uniform_int(kActionCount));
    person.character_model =
        static_cast<int>(rng.uniform_int(kCharacterModels));
    if (cell > 0.0) buckets[key(ix, iy)].push_back(person.id);
    people.push_back(person);
  }
  return people;
}

inline std::vector<PersonRecord> place_people(const Scene& scene, int count,
                                              double min_separation,
                                              std::uint64_t seed) {
  CounterRng rng(seed);
  return place_people(scene, count, min_separation, rng);
}

// ---------------------------------------------------------------------------
// Divide and merge

inline constexpr int kDefaultAreaCapacity = 256;

struct Area {
  Polygon bounds;
  std::vector<PersonRecord> persons;

  std::vector<int> person_ids() const {
    std::vector<int> ids;
    ids.reserve(persons.size());
    for (const auto& p : persons) ids.push_back(p.id);
    return ids;
  }
};

struct AreaPartition {
  std::vector<Area> areas;
  int capacity = kDefaultAreaCapacity;
};

namespace detail {

inline void bisect(const Box2& box, std::vector<PersonRecord> persons,
                   int capacity, int depth, std::vector<Area>& out) {
  if (persons.empty()) return;
  if (static_cast<int>(persons.size()) <= capacity) {
    out.push_back({rectangle(box), std::move(persons)});
    return;
  }
  constexpr int kMaxDepth = 64;
  if (depth >= kMaxDepth) {
    // Coincident positions: the box cannot separate them, chunk by order.
    const auto cap = static_cast<std::size_t>(capacity);
    for (std::size_t i = 0; i < persons.size(); i += cap) {
      const auto first = persons.begin() + static_cast<std::ptrdiff_t>(i);
      const auto last =
          persons.begin() +
          static_cast<std::ptrdiff_t>(std::min(persons.size(), i + cap));
      out.push_back({rectangle(box), {first, last}});
    }
    return;
  }
  const bool along_x = box.width() >= box.height();
  const double mid = along_x ? (box.min_x + box.max_x) / 2.0
                             : (box.min_y + box.max_y) / 2.0;
  Box2 lo = box, hi = box;
  (along_x ? lo.max_x : lo.max_y) = mid;
  (along_x ? hi.min_x : hi.min_y) = mid;
  std::vector<PersonRecord> left, right;
  for (auto& p : persons)
    ((along_x ? p.position.x : p.position.y) < mid ? left : right)
        .push_back(std::move(p));
  bisect(lo, std::move(left), capacity, depth + 1, out);
  bisect(hi, std::move(right), capacity, depth + 1, out);
}

}  // namespace detail

/// Recursive bisection of the roi bounding box along its longer side, stopping
/// as soon as an area holds at most `capacity` people. Empty areas are dropped.
inline AreaPartition partition_frame(const FrameRecord& frame,
                                     const Scene& scene,
                                     int capacity = kDefaultAreaCapacity) {
  if (capacity < 1) throw InvalidScene("area capacity must be at least 1");
  Box2 box = bounding_box(scene.roi);
  for (const auto& p : frame.persons) box.extend({p.position.x, p.position.y});
  AreaPartition partition;
  partition.capacity = capacity;
  detail::bisect(box, frame.persons, capacity, 0, partition.areas);
  return partition;
}

/// Union of the per-area person sets, ordered by id.
inline std::vector<PersonRecord> merge_areas(const AreaPartition& partition) {
  std::vector<PersonRecord> merged;
  std::unordered_set<int> seen;
  for (const auto& area : partition.areas) {
    for (const auto& p : area.persons) {
      if (!seen.insert(p.id).second)
        throw DuplicateId("person id " + std::to_string(p.id) +
                          " appears in more than one area");
      merged.push_back(p);
    }
  }
  std::sort(merged.begin(), merged.end(),
            [](const PersonRecord& a, const PersonRecord& b) { return a.id < b.id; });
  return merged;
}

}  // namespace mvforge
