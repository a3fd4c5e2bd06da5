#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvforge/annotate.hpp"
#include "mvforge/config.hpp"
#include "mvforge/geometry.hpp"
#include "mvforge/rng.hpp"
#include "mvforge/scene_synth.hpp"

namespace mvforge {

enum class Split { Train, Val, Test };
inline constexpr std::array<std::string_view, 3> kSplitNames = {"train", "val",
                                                                 "test"};
inline std::string_view to_string(Split s) {
  return kSplitNames[static_cast<std::size_t>(s)];
}

/// Scene-level output of the generator: the scene, its cameras and ground
/// grid, and the split it belongs to.
struct ScenePlan {
  Scene scene;
  std::vector<Camera> cameras;
  GroundGrid grid;
  Split split = Split::Train;
  std::uint64_t key = 0;

  friend bool operator==(const ScenePlan&, const ScenePlan&) = default;
};

// Stream layout. Scene s draws from derive(seed, s); inside it, the layout
// stream is tag kLayoutTag, frame f is tag f, and the thunder opt-in draw uses
// derive(seed, kThunderTag). Within a frame: the count comes first from the
// frame stream, then split(1) samples the environment and split(2) places
// the people.
inline constexpr std::uint64_t kLayoutTag = 0xFFFFFFFFULL;
inline constexpr std::uint64_t kThunderTag = 0xFFFFFFFF00000001ULL;

inline std::uint64_t scene_key(std::uint64_t seed, int scene_id) {
  return CounterRng::derive(seed, static_cast<std::uint64_t>(scene_id));
}
inline std::uint64_t frame_key(std::uint64_t scene, int frame_id) {
  return CounterRng::derive(scene, static_cast<std::uint64_t>(frame_id));
}

/// Split sizes for an n-scene dataset at ratio 3:1:1.
inline std::array<int, 3> split_quotas(int n) {
  const int train = static_cast<int>(std::floor(3.0 * n / 5.0 + 0.5));
  const int val = static_cast<int>(std::floor(n / 5.0 + 0.5));
  return {train, val, n - train - val};
}

/// Assigns splits 3:1:1, stratified by scene type: scenes are ordered by type
/// (most frequent type first) and dealt to whichever split lags furthest
/// behind its quota, so every type spreads proportionally over the splits.
inline std::vector<Split> assign_splits(const std::vector<std::string>& types) {
  const int n = static_cast<int>(types.size());
  std::map<std::string, int> freq;
  for (const auto& t : types) ++freq[t];
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ta = types[static_cast<std::size_t>(a)];
    const auto& tb = types[static_cast<std::size_t>(b)];
    if (freq[ta] != freq[tb]) return freq[ta] > freq[tb];
    return ta < tb;
  });
  const auto quota = split_quotas(n);
  std::array<int, 3> assigned{};
  std::vector<Split> splits(static_cast<std::size_t>(n), Split::Train);
  for (int k = 0; k < n; ++k) {
    int best = -1;
    double best_lag = 0.0;
    for (int s = 0; s < 3; ++s) {
      if (assigned[static_cast<std::size_t>(s)] >= quota[static_cast<std::size_t>(s)]) continue;
      const double lag = static_cast<double>(quota[static_cast<std::size_t>(s)]) * (k + 1) / n -
                         assigned[static_cast<std::size_t>(s)];
      if (best < 0 || lag > best_lag) {
        best = s;
        best_lag = lag;
      }
    }
    ++assigned[static_cast<std::size_t>(best)];
    splits[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] =
        static_cast<Split>(best);
  }
  return splits;
}

namespace detail {

/// Star-shaped polygon around the center of [0, sx] x [0, sy]. Vertex angles
/// increase strictly, so the polygon is simple.
inline Polygon random_roi(CounterRng& rng, double sx, double sy) {
  const int k = 8 + static_cast<int>(rng.uniform_int(9));
  const double cx = sx / 2.0, cy = sy / 2.0;
  Polygon poly;
  for (int i = 0; i < k; ++i) {
    const double theta = 2.0 * std::numbers::pi * (i + 0.8 * rng.uniform()) / k;
    const double c = std::cos(theta), s = std::sin(theta);
    const double reach = std::min(std::abs(c) > 1e-12 ? cx / std::abs(c) : 1e300,
                                  std::abs(s) > 1e-12 ? cy / std::abs(s) : 1e300);
    const double r = reach * rng.uniform(0.7, 0.98);
    poly.push_back({cx + r * c, cy + r * s});
  }
  return poly;
}

inline std::vector<Polygon> random_exclusions(CounterRng& rng, double sx,
                                              double sy) {
  std::vector<Polygon> zones;
  const int count = static_cast<int>(rng.uniform_int(3));
  for (int i = 0; i < count; ++i) {
    const double w = rng.uniform(2.0, 6.0), h = rng.uniform(2.0, 6.0);
    const double x = rng.uniform(0.25 * sx, 0.75 * sx - w);
    const double y = rng.uniform(0.25 * sy, 0.75 * sy - h);
    zones.push_back(rectangle({x, y, x + w, y + h}));
  }
  return zones;
}

}  // namespace detail

inline CameraLayout camera_layout(const GeneratorConfig& config,
                                  double max_dimension) {
  CameraLayout layout;
  layout.cardinal_count = std::min(4, config.views);
  layout.ring_count = config.views - layout.cardinal_count;
  layout.height = config.ring_height;
  layout.radius_factor = config.ring_radius_factor;
  layout.pitch_deg =
      config.ring_pitch_deg
          ? *config.ring_pitch_deg
          : -rad_to_deg(std::atan2(config.ring_height,
                                   config.ring_radius_factor * max_dimension));
  layout.fov_deg = config.fov_deg;
  layout.image_width = config.image_width;
  layout.image_height = config.image_height;
  return layout;
}

inline ScenePlan plan_scene(const GeneratorConfig& config, int scene_id) {
  ScenePlan plan;
  plan.key = scene_key(config.seed, scene_id);
  CounterRng rng(CounterRng::derive(plan.key, kLayoutTag));
  Scene& scene = plan.scene;
  scene.id = scene_id;

  // Everyday scene types (park, curbside, beach) are three times as common.
  const auto& types = default_scene_types();
  std::vector<double> weights(types.size(), 1.0);
  weights[0] = weights[1] = weights[2] = 3.0;
  scene.scene_type = types[rng.weighted_index(weights)];
  scene.size_x = rng.uniform(config.scene_size_min, config.scene_size_max);
  scene.size_y = rng.uniform(config.scene_size_min, config.scene_size_max);
  scene.roi = detail::random_roi(rng, scene.size_x, scene.size_y);
  scene.exclusion_zones = detail::random_exclusions(rng, scene.size_x, scene.size_y);
  scene.count_min = config.count_min;
  scene.count_max = config.count_max;

  if (auto it = config.scene_overrides.find(scene_id);
      it != config.scene_overrides.end()) {
    const auto& o = it->second;
    if (o.type) scene.scene_type = *o.type;
    if (o.roi) {
      scene.roi = *o.roi;
      const Box2 box = bounding_box(scene.roi);
      scene.size_x = box.max_x;
      scene.size_y = box.max_y;
      if (o.exclusion_zones.empty()) scene.exclusion_zones.clear();
    }
    if (!o.exclusion_zones.empty()) scene.exclusion_zones = o.exclusion_zones;
    if (o.count_min) scene.count_min = *o.count_min;
    if (o.count_max) scene.count_max = *o.count_max;
  }
  validate(scene);
  const Box2 box = bounding_box(scene.roi);
  if (box.min_x < 0.0 || box.min_y < 0.0)
    throw InvalidScene("scene " + std::to_string(scene_id) +
                       ": roi must lie in the positive quadrant");

  plan.grid.origin_x = 0.0;
  plan.grid.origin_y = 0.0;
  plan.grid.cell_size = config.cell_size;
  plan.grid.cols = std::max(1, static_cast<int>(std::ceil(scene.size_x / config.cell_size)));
  plan.grid.rows = std::max(1, static_cast<int>(std::ceil(scene.size_y / config.cell_size)));

  const double max_dim = std::max(scene.size_x, scene.size_y);
  plan.cameras = place_default_cameras({scene.size_x / 2.0, scene.size_y / 2.0, 0.0},
                                       max_dim, camera_layout(config, max_dim));
  return plan;
}

/// All scenes of the dataset with cameras, grids, thunder opt-in and splits.
inline std::vector<ScenePlan> plan_scenes(const GeneratorConfig& config) {
  validate(config);
  std::vector<ScenePlan> plans;
  plans.reserve(static_cast<std::size_t>(config.scenes));
  for (int s = 0; s < config.scenes; ++s) plans.push_back(plan_scene(config, s));

  // Thunder: a fixed number of opt-in scenes carries the whole target share.
  std::vector<int> ids(plans.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
  CounterRng thunder_rng(CounterRng::derive(config.seed, kThunderTag));
  thunder_rng.shuffle(std::span<int>(ids));
  int opt_in = 0;
  if (config.weather.thunder_share > 0.0 && config.thunder_scene_fraction > 0.0)
    opt_in = std::max(1, static_cast<int>(std::lround(config.thunder_scene_fraction * config.scenes)));
  std::vector<bool> thunder(plans.size(), false);
  for (int i = 0; i < opt_in; ++i) thunder[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])] = true;
  for (const auto& [id, o] : config.scene_overrides)
    if (o.thunder && id >= 0 && id < config.scenes)
      thunder[static_cast<std::size_t>(id)] = *o.thunder;
  const auto enabled = std::count(thunder.begin(), thunder.end(), true);
  if (enabled > 0) {
    const double p = std::min(1.0, config.weather.thunder_share * config.scenes /
                                       static_cast<double>(enabled));
    for (std::size_t i = 0; i < plans.size(); ++i)
      if (thunder[i]) plans[i].scene.thunder_probability = p;
  }

  std::vector<std::string> types;
  for (const auto& p : plans) types.push_back(p.scene.scene_type);
  const auto splits = assign_splits(types);
  for (std::size_t i = 0; i < plans.size(); ++i) plans[i].split = splits[i];
  return plans;
}

/// Frame `frame_id` of a scene: its own sub-seed, an environment draw, and a
/// crowd placed over the roi, divided into capacity-limited areas and merged
/// back.
struct FrameProduct {
  int scene_id = 0;
  FrameRecord frame;
  std::size_t areas = 0;
  std::vector<ViewAnnotation> views;
  std::optional<GroundOccupancy> ground;
  std::vector<GridMap> view_maps;
};

inline FrameRecord generate_frame(const ScenePlan& plan, int frame_id,
                                  const GeneratorConfig& config,
                                  std::size_t* area_count = nullptr) {
  FrameRecord frame;
  frame.frame_id = frame_id;
  frame.seed = frame_key(plan.key, frame_id);
  CounterRng rng(frame.seed);
  const Scene& scene = plan.scene;
  const auto span = static_cast<std::uint64_t>(scene.count_max - scene.count_min + 1);
  const int count = scene.count_min + static_cast<int>(rng.uniform_int(span));
  CounterRng env_rng = rng.split(1);
  frame.environment = sample_environment(env_rng, config.weather,
                                         scene.thunder_probability);
  CounterRng people_rng = rng.split(2);
  try {
    frame.persons = place_people(scene, count, config.separation, people_rng);
  } catch (const PlacementInfeasible& e) {
    throw PlacementInfeasible("frame " + std::to_string(frame_id) + ": " + e.what());
  }
  const AreaPartition partition = partition_frame(frame, scene, config.capacity);
  if (area_count) *area_count = partition.areas.size();
  frame.persons = merge_areas(partition);
  return frame;
}

inline FrameProduct build_frame(const ScenePlan& plan, int frame_id,
                                const GeneratorConfig& config) {
  FrameProduct product;
  product.scene_id = plan.scene.id;
  product.frame = generate_frame(plan, frame_id, config, &product.areas);
  OcclusionModel occlusion;
  occlusion.enabled = config.occlusion;
  occlusion.radius = config.occlusion_radius;
  product.views = annotate_views(product.frame, plan.cameras, occlusion);
  if (config.ground_maps)
    product.ground = render_ground_occupancy(product.frame, plan.grid,
                                             config.ground_sigma_cells);
  if (config.view_maps) {
    for (std::size_t v = 0; v < plan.cameras.size(); ++v) {
      const auto& cam = plan.cameras[v];
      const int rows = std::max(1, static_cast<int>(std::lround(cam.image_height * config.view_map_scale)));
      const int cols = std::max(1, static_cast<int>(std::lround(cam.image_width * config.view_map_scale)));
      const auto points = visible_points(product.views[v], config.view_map_scale);
      GridMap map = render_density_map(points, rows, cols, config.density_sigma);
      map.space = PixelSpace{cam.id};
      product.view_maps.push_back(std::move(map));
    }
  }
  return product;
}

}  // namespace mvforge
