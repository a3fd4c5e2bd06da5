#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "mvforge/geometry.hpp"
#include "mvforge/grid_map.hpp"
#include "mvforge/scene_synth.hpp"

namespace mvforge {

/// Continuous map coordinates; cell (r, c) covers [r, r+1) x [c, c+1), so its
/// center sits at (r + 0.5, c + 0.5).
struct MapPoint {
  double row = 0.0;
  double col = 0.0;
};

inline constexpr double kDefaultDensitySigma = 3.0;
inline constexpr double kKernelTruncation = 4.0;

/// Adds one unit of mass spread by a Gaussian around `p` into `acc`.
/// The kernel is truncated at `truncation * sigma` and clipped at the map
/// border, then renormalised so the point keeps exactly unit mass. Points
/// outside the map contribute nothing; returns false for them.
inline bool splat_gaussian(std::vector<double>& acc, int rows, int cols,
                           const MapPoint& p, double sigma,
                           double truncation = kKernelTruncation) {
  if (!(p.row >= 0.0 && p.row < rows && p.col >= 0.0 && p.col < cols))
    return false;
  const double radius = truncation * sigma;
  const int r0 = std::max(0, static_cast<int>(std::floor(p.row - radius - 0.5)));
  const int r1 = std::min(rows - 1, static_cast<int>(std::ceil(p.row + radius - 0.5)));
  const int c0 = std::max(0, static_cast<int>(std::floor(p.col - radius - 0.5)));
  const int c1 = std::min(cols - 1, static_cast<int>(std::ceil(p.col + radius - 0.5)));
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  const double radius2 = radius * radius;

  thread_local std::vector<double> kernel;
  kernel.assign(static_cast<std::size_t>(r1 - r0 + 1) *
                    static_cast<std::size_t>(c1 - c0 + 1),
                0.0);
  double total = 0.0;
  std::size_t k = 0;
  for (int r = r0; r <= r1; ++r) {
    const double dr = r + 0.5 - p.row;
    for (int c = c0; c <= c1; ++c, ++k) {
      const double dc = c + 0.5 - p.col;
      const double d2 = dr * dr + dc * dc;
      if (d2 > radius2) continue;
      kernel[k] = std::exp(-d2 * inv2s2);
      total += kernel[k];
    }
  }
  const auto width = static_cast<std::size_t>(cols);
  if (!(total > 0.0) || !std::isfinite(total)) {
    // Kernel underflowed (tiny sigma): all mass goes to the containing cell.
    acc[static_cast<std::size_t>(p.row) * width + static_cast<std::size_t>(p.col)] += 1.0;
    return true;
  }
  k = 0;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c, ++k)
      if (kernel[k] != 0.0)
        acc[static_cast<std::size_t>(r) * width + static_cast<std::size_t>(c)] +=
            kernel[k] / total;
  return true;
}

inline GridMap to_grid_map(const std::vector<double>& acc, int rows, int cols,
                           MapKind kind, MapSpace space = {}) {
  GridMap map = GridMap::zeros(rows, cols, kind, space);
  for (std::size_t i = 0; i < acc.size(); ++i)
    map.values[i] = static_cast<float>(acc[i]);
  return map;
}

/// Sum of per-point renormalised Gaussian kernels; the map sums to the number
/// of in-bounds points.
inline GridMap render_density_map(std::span<const MapPoint> points, int rows,
                                  int cols, double sigma = kDefaultDensitySigma) {
  if (!(sigma > 0.0)) throw ConfigError("density sigma must be positive");
  if (rows <= 0 || cols <= 0) throw ShapeMismatch("map must be non-empty");
  std::vector<double> acc(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
  for (const auto& p : points) splat_gaussian(acc, rows, cols, p, sigma);
  return to_grid_map(acc, rows, cols, MapKind::Density);
}

/// Ground-truth sigma for the ground-plane Gaussian map, in cells.
inline constexpr double kDefaultGroundSigmaCells = 3.0;

struct GroundOccupancy {
  GridMap dots;
  GridMap density;
  std::size_t out_of_grid = 0;
};

/// Dot map (k in a cell holding k people) and Gaussian map of the people's
/// foot positions over the ground grid.
inline GroundOccupancy render_ground_occupancy(
    const FrameRecord& frame, const GroundGrid& grid,
    double sigma_cells = kDefaultGroundSigmaCells) {
  validate(grid);
  if (!(sigma_cells > 0.0)) throw ConfigError("ground sigma must be positive");
  GroundOccupancy out;
  std::vector<double> dots(static_cast<std::size_t>(grid.rows) *
                               static_cast<std::size_t>(grid.cols),
                           0.0);
  std::vector<double> density(dots.size(), 0.0);
  for (const auto& person : frame.persons) {
    const auto cell = grid_index(grid, person.position.x, person.position.y);
    if (!cell) {
      ++out.out_of_grid;
      continue;
    }
    dots[static_cast<std::size_t>(cell->row) * static_cast<std::size_t>(grid.cols) +
         static_cast<std::size_t>(cell->col)] += 1.0;
    const auto [row, col] =
        grid_coordinates(grid, person.position.x, person.position.y);
    splat_gaussian(density, grid.rows, grid.cols, {row, col}, sigma_cells);
  }
  out.dots = to_grid_map(dots, grid.rows, grid.cols, MapKind::Occupancy,
                         GroundSpace{grid});
  out.density = to_grid_map(density, grid.rows, grid.cols,
                            MapKind::GroundDensity, GroundSpace{grid});
  return out;
}

struct ViewEntry {
  int person_id = 0;
  double u = 0.0;
  double v = 0.0;
  bool visible = false;

  friend bool operator==(const ViewEntry&, const ViewEntry&) = default;
};

struct ViewAnnotation {
  int camera_id = 0;
  std::vector<ViewEntry> entries;

  friend bool operator==(const ViewAnnotation&, const ViewAnnotation&) = default;
};

/// People as vertical disks at head height, each facing the camera. Disabled
/// unless asked for.
struct OcclusionModel {
  bool enabled = false;
  double radius = 0.25;
};

namespace detail {

/// True when the disk of `occluder` (centered on its head, vertical, normal
/// to the horizontal bearing from the camera) hides the head of `target`.
inline bool disk_covers(const Eigen::Vector3d& camera_center,
                        const Eigen::Vector3d& target,
                        const Eigen::Vector3d& occluder, double radius) {
  Eigen::Vector3d normal = occluder - camera_center;
  normal.z() = 0.0;
  const double len = normal.norm();
  if (!(len > 0.0)) return false;
  normal /= len;
  const Eigen::Vector3d ray = target - camera_center;
  const double denom = normal.dot(ray);
  if (!(std::abs(denom) > 0.0)) return false;
  const double lambda = normal.dot(occluder - camera_center) / denom;
  if (!(lambda > 0.0 && lambda < 1.0)) return false;
  return (camera_center + lambda * ray - occluder).norm() < radius;
}

}  // namespace detail

/// Projects every person's head into every camera.
inline std::vector<ViewAnnotation> annotate_views(
    const FrameRecord& frame, std::span<const Camera> cameras,
    const OcclusionModel& occlusion = {}) {
  if (cameras.empty()) throw ConfigError("annotate_views needs at least one camera");
  std::vector<ViewAnnotation> views;
  views.reserve(cameras.size());
  for (const auto& camera : cameras) {
    ViewAnnotation view;
    view.camera_id = camera.id;
    view.entries.reserve(frame.persons.size());
    std::vector<double> depth(frame.persons.size(), 0.0);
    for (std::size_t i = 0; i < frame.persons.size(); ++i) {
      const auto& person = frame.persons[i];
      ViewEntry entry;
      entry.person_id = person.id;
      try {
        const ImagePoint q = project(camera, person.head());
        entry.u = q.u;
        entry.v = q.v;
        depth[i] = q.depth;
        entry.visible = q.depth > 0.0 && q.u >= 0.0 && q.u < camera.image_width &&
                        q.v >= 0.0 && q.v < camera.image_height;
      } catch (const DegenerateProjection&) {
        // Head on the principal plane: no finite pixel, recorded at the origin.
        entry.visible = false;
      }
      view.entries.push_back(entry);
    }
    if (occlusion.enabled) {
      const Eigen::Vector3d c = camera.center();
      std::vector<bool> hidden(frame.persons.size(), false);
      for (std::size_t i = 0; i < frame.persons.size(); ++i) {
        if (!view.entries[i].visible) continue;
        const auto hi = frame.persons[i].head();
        const Eigen::Vector3d target(hi.x, hi.y, hi.z);
        for (std::size_t j = 0; j < frame.persons.size(); ++j) {
          if (j == i || !(depth[j] > 0.0) || !(depth[j] < depth[i])) continue;
          const auto hj = frame.persons[j].head();
          if (detail::disk_covers(c, target, {hj.x, hj.y, hj.z}, occlusion.radius)) {
            hidden[i] = true;
            break;
          }
        }
      }
      for (std::size_t i = 0; i < hidden.size(); ++i)
        if (hidden[i]) view.entries[i].visible = false;
    }
    views.push_back(std::move(view));
  }
  return views;
}

/// Visible head positions of a view as map points, scaled from image pixels
/// to a map that is `scale` times the image resolution.
inline std::vector<MapPoint> visible_points(const ViewAnnotation& view,
                                            double scale = 1.0) {
  std::vector<MapPoint> points;
  for (const auto& e : view.entries)
    if (e.visible) points.push_back({e.v * scale, e.u * scale});
  return points;
}

}  // namespace mvforge
