#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

#include "mvforge/errors.hpp"
#include "mvforge/geometry.hpp"
#include "mvforge/grid_map.hpp"

namespace mvforge {

namespace detail {

inline void require_same_shapes(std::span<const GridMap> maps, const char* what) {
  if (maps.empty()) throw ShapeMismatch(std::string(what) + ": no maps");
  for (const auto& m : maps)
    if (!m.same_shape(maps.front()) || m.values.size() != maps.front().values.size())
      throw ShapeMismatch(std::string(what) + ": maps differ in shape");
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
}

}  // namespace detail

/// Per-pixel softmax of the attention logits across views.
inline std::vector<GridMap> view_weights(std::span<const GridMap> attention) {
  detail::require_same_shapes(attention, "view_weights");
  const std::size_t views = attention.size();
  std::vector<GridMap> weights(attention.begin(), attention.end());
  for (auto& w : weights) w.kind = MapKind::Attention;
  std::vector<double> logits(views);
  for (std::size_t p = 0; p < attention.front().values.size(); ++p) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < views; ++v) {
      logits[v] = attention[v].values[p];
      if (!std::isfinite(logits[v])) throw ShapeMismatch("attention logits must be finite");
      top = std::max(top, logits[v]);
    }
    double total = 0.0;
    for (auto& l : logits) total += (l = std::exp(l - top));
    for (std::size_t v = 0; v < views; ++v)
      weights[v].values[p] = static_cast<float>(logits[v] / total);
  }
  return weights;
}

/// Reweights each view's map by the cross-view softmax of `attention`.
inline std::vector<GridMap> spatial_select(std::span<const GridMap> stack,
                                           std::span<const GridMap> attention) {
  detail::require_same_shapes(stack, "spatial_select");
  if (attention.size() != stack.size())
    throw ShapeMismatch("spatial_select: attention has a different number of views");
  detail::require_same_shapes(attention, "spatial_select");
  if (!attention.front().same_shape(stack.front()))
    throw ShapeMismatch("spatial_select: attention and maps differ in shape");
  const std::vector<GridMap> weights = view_weights(attention);
  std::vector<GridMap> out(stack.begin(), stack.end());
  for (std::size_t v = 0; v < out.size(); ++v)
    for (std::size_t p = 0; p < out[v].values.size(); ++p)
      out[v].values[p] = static_cast<float>(static_cast<double>(stack[v].values[p]) *
                                            weights[v].values[p]);
  return out;
}

/// Bilinear sample of `map` at continuous cell coordinates (x along columns,
/// y along rows, cell centers at integers). Coordinates are clamped to the
/// range of cell centers.
inline double bilinear_sample(const GridMap& map, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(map.cols - 1));
  y = std::clamp(y, 0.0, static_cast<double>(map.rows - 1));
  const int x0 = std::min(static_cast<int>(std::floor(x)), map.cols - 1);
  const int y0 = std::min(static_cast<int>(std::floor(y)), map.rows - 1);
  const int x1 = std::min(x0 + 1, map.cols - 1);
  const int y1 = std::min(y0 + 1, map.rows - 1);
  const double fx = x - x0, fy = y - y0;
  return (1.0 - fy) * ((1.0 - fx) * map.at(y0, x0) + fx * map.at(y0, x1)) +
         fy * ((1.0 - fx) * map.at(y1, x0) + fx * map.at(y1, x1));
}

/// Samples a view map (covering the whole image at any resolution) onto the
/// ground grid: each cell center, lifted to z = height, is projected into the
/// view. Cells that land behind the camera or outside the image get 0.
inline GridMap project_to_ground(const GridMap& map, const Camera& camera,
                                 const GroundGrid& grid, double height) {
  validate(camera);
  validate(grid);
  if (map.rows <= 0 || map.cols <= 0) throw ShapeMismatch("project_to_ground: empty map");
  GridMap out = GridMap::zeros(grid.rows, grid.cols, map.kind, GroundSpace{grid});
  const Eigen::Matrix<double, 3, 4> proj = camera.projection_matrix();
  const double sx = static_cast<double>(map.cols) / camera.image_width;
  const double sy = static_cast<double>(map.rows) / camera.image_height;
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) {
      const WorldPoint w = cell_center(grid, {r, c}, height);
      const Eigen::Vector3d h = proj * Eigen::Vector4d(w.x, w.y, w.z, 1.0);
      if (!(h.z() > 1e-12)) continue;
      const double u = h.x() / h.z(), v = h.y() / h.z();
      if (!(u >= 0.0 && u < camera.image_width && v >= 0.0 && v < camera.image_height))
        continue;
      out.at(r, c) = static_cast<float>(bilinear_sample(map, u * sx - 0.5, v * sy - 0.5));
    }
  return out;
}

/// Elementwise maximum across views.
inline GridMap fuse_max(std::span<const GridMap> maps) {
  detail::require_same_shapes(maps, "fuse_max");
  GridMap out = maps.front();
  out.kind = MapKind::Fused;
  for (const auto& m : maps.subspan(1))
    for (std::size_t p = 0; p < out.values.size(); ++p)
      out.values[p] = std::max(out.values[p], m.values[p]);
  return out;
}

/// spatial_select, then project_to_ground per view, then fuse_max.
inline GridMap ground_pipeline(std::span<const GridMap> stack,
                               std::span<const GridMap> attention,
                               std::span<const Camera> cameras, const GroundGrid& grid,
                               double height = kHeadHeight, unsigned threads = 1) {
  if (cameras.size() != stack.size())
    throw ShapeMismatch("ground_pipeline: " + std::to_string(stack.size()) + " maps for " +
                        std::to_string(cameras.size()) + " cameras");
  const std::vector<GridMap> selected = spatial_select(stack, attention);
  std::vector<GridMap> ground(selected.size());
  detail::parallel_for(selected.size(), threads, [&](std::size_t v) {
    ground[v] = project_to_ground(selected[v], cameras[v], grid, height);
  });
  return fuse_max(ground);
}

/// Uniform attention: every view gets the same logits.
inline std::vector<GridMap> uniform_attention(std::span<const GridMap> stack) {
  detail::require_same_shapes(stack, "uniform_attention");
  std::vector<GridMap> out;
  for (std::size_t v = 0; v < stack.size(); ++v)
    out.push_back(GridMap::zeros(stack.front().rows, stack.front().cols, MapKind::Attention));
  return out;
}

struct Peak {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Local maxima over a (2 radius + 1)^2 window with value >= min_value,
/// strongest first, at most max_peaks. Plateaus keep their first cell in
/// row-major order.
inline std::vector<Peak> extract_peaks(const GridMap& map, std::size_t max_peaks,
                                       double min_value = 0.0, int radius = 1) {
  std::vector<Peak> peaks;
  for (int r = 0; r < map.rows; ++r)
    for (int c = 0; c < map.cols; ++c) {
      const double v = map.at(r, c);
      if (!(v >= min_value) || v <= 0.0) continue;
      bool is_peak = true;
      for (int dr = -radius; dr <= radius && is_peak; ++dr)
        for (int dc = -radius; dc <= radius; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if ((dr == 0 && dc == 0) || rr < 0 || cc < 0 || rr >= map.rows || cc >= map.cols)
            continue;
          const double w = map.at(rr, cc);
          const bool before = dr < 0 || (dr == 0 && dc < 0);
          if (w > v || (before && w == v)) {
            is_peak = false;
            break;
          }
        }
      if (is_peak) peaks.push_back({r, c, v});
    }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.value > b.value; });
  if (peaks.size() > max_peaks) peaks.resize(max_peaks);
  return peaks;
}

}  // namespace mvforge
