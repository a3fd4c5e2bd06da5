#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mvforge/errors.hpp"

namespace mvforge {

/// Head height of an annotated person, meters.
inline constexpr double kHeadHeight = 1.75;

/// Scene coordinates in meters; right handed with z up.
struct WorldPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const WorldPoint&, const WorldPoint&) = default;
};

/// Pixel coordinates plus the homogeneous scale s, which equals the depth
/// along the optical axis for a camera with A(2,2) = 1.
struct ImagePoint {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

/// Pinhole camera, s (u, v, 1)^T = A [R | t] (x, y, z, 1)^T.
///
/// R and t map world to camera coordinates (x right, y down, z forward), so
/// the camera center is c = -R^T t.
struct Camera {
  int id = 0;
  Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  int image_width = 0;
  int image_height = 0;
  double fov_deg = 0.0;

  Eigen::Matrix<double, 3, 4> projection_matrix() const {
    Eigen::Matrix<double, 3, 4> Rt;
    Rt.leftCols<3>() = rotation;
    Rt.col(3) = translation;
    return intrinsics * Rt;
  }

  Eigen::Vector3d center() const { return -rotation.transpose() * translation; }

  friend bool operator==(const Camera& a, const Camera& b) {
    return a.id == b.id && a.intrinsics == b.intrinsics &&
           a.rotation == b.rotation && a.translation == b.translation &&
           a.image_width == b.image_width && a.image_height == b.image_height &&
           a.fov_deg == b.fov_deg;
  }
};

inline constexpr double kOrthonormalTolerance = 1e-9;
inline constexpr double kProjectionEpsilon = 1e-12;

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Throws InvalidCamera when any Camera invariant is violated.
inline void validate(const Camera& camera) {
  const std::string who = "camera " + std::to_string(camera.id) + ": ";
  const Eigen::Matrix3d& R = camera.rotation;
  const double ortho =
      (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho < kOrthonormalTolerance))
    throw InvalidCamera(who + "rotation is not orthonormal");
  if (!(std::abs(R.determinant() - 1.0) <= kOrthonormalTolerance))
    throw InvalidCamera(who + "rotation determinant is not +1");
  const Eigen::Matrix3d& A = camera.intrinsics;
  if (!(A(0, 0) > 0.0) || !(A(1, 1) > 0.0))
    throw InvalidCamera(who + "focal entries must be positive");
  if (A(1, 0) != 0.0 || A(2, 0) != 0.0 || A(2, 1) != 0.0)
    throw InvalidCamera(who + "intrinsics must be upper triangular");
  if (!A.allFinite() || !camera.translation.allFinite())
    throw InvalidCamera(who + "non-finite parameters");
  if (!(camera.fov_deg > 0.0 && camera.fov_deg < 180.0))
    throw InvalidCamera(who + "fov must lie in (0, 180) degrees");
  if (camera.image_width <= 0 || camera.image_height <= 0)
    throw InvalidCamera(who + "image size must be positive");
}

/// Zero-skew intrinsics with the principal point at the image center and the
/// focal length fixed by the horizontal field of view.
inline Eigen::Matrix3d intrinsics_from_fov(double fov_deg, int width,
                                           int height) {
  const double focal = (width / 2.0) / std::tan(deg_to_rad(fov_deg) / 2.0);
  Eigen::Matrix3d A;
  A << focal, 0.0, width / 2.0,  //
      0.0, focal, height / 2.0,  //
      0.0, 0.0, 1.0;
  return A;
}

inline ImagePoint project(const Camera& camera, const WorldPoint& p) {
  const Eigen::Vector3d cam =
      camera.rotation * Eigen::Vector3d(p.x, p.y, p.z) + camera.translation;
  const Eigen::Vector3d h = camera.intrinsics * cam;
  const double s = h.z();
  if (!(std::abs(s) >= kProjectionEpsilon))
    throw DegenerateProjection("point lies on the principal plane of camera " +
                               std::to_string(camera.id));
  return {h.x() / s, h.y() / s, s};
}

/// World point at height z whose projection is (u, v).
inline WorldPoint backproject_at_height(const Camera& camera, double u,
                                        double v, double z) {
  const Eigen::Vector3d ray_cam =
      camera.intrinsics.triangularView<Eigen::Upper>().solve(
          Eigen::Vector3d(u, v, 1.0));
  const Eigen::Vector3d dir = (camera.rotation.transpose() * ray_cam).normalized();
  if (!(std::abs(dir.z()) >= kProjectionEpsilon))
    throw RayParallelToPlane("viewing ray of camera " +
                             std::to_string(camera.id) +
                             " is parallel to the plane z = " +
                             std::to_string(z));
  const Eigen::Vector3d c = camera.center();
  const double lambda = (z - c.z()) / dir.z();
  const Eigen::Vector3d w = c + lambda * dir;
  return {w.x(), w.y(), z};
}

inline WorldPoint backproject_at_height(const Camera& camera,
                                        const ImagePoint& q, double z) {
  return backproject_at_height(camera, q.u, q.v, z);
}

/// True iff the point is in front of the camera and projects inside the image.
inline bool is_visible(const Camera& camera, const WorldPoint& p) {
  ImagePoint q;
  try {
    q = project(camera, p);
  } catch (const DegenerateProjection&) {
    return false;
  }
  return q.depth > 0.0 && q.u >= 0.0 && q.u < camera.image_width &&
         q.v >= 0.0 && q.v < camera.image_height;
}

/// Camera at `position` looking along the horizontal bearing `yaw_rad`
/// (measured from +x towards +y) tilted by `pitch_rad` (negative looks down).
inline Camera look_camera(int id, const Eigen::Vector3d& position,
                          double yaw_rad, double pitch_rad, double fov_deg,
                          int width, int height) {
  const Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d forward(std::cos(pitch_rad) * std::cos(yaw_rad),
                                std::cos(pitch_rad) * std::sin(yaw_rad),
                                std::sin(pitch_rad));
  const Eigen::Vector3d right = forward.cross(up).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  Camera cam;
  cam.id = id;
  cam.rotation.row(0) = right;
  cam.rotation.row(1) = down;
  cam.rotation.row(2) = forward;
  cam.translation = -cam.rotation * position;
  cam.intrinsics = intrinsics_from_fov(fov_deg, width, height);
  cam.image_width = width;
  cam.image_height = height;
  cam.fov_deg = fov_deg;
  return cam;
}

struct RingGeometry {
  WorldPoint center;
  double radius = 10.0;
  double height = 6.0;
  double pitch_deg = -25.0;
  int count = 4;
  double fov_deg = 40.0;
  int image_width = 1920;
  int image_height = 1080;
  double start_azimuth_deg = 0.0;
  int first_id = 0;
};

/// `count` cameras evenly spaced on a horizontal circle around the center,
/// each with its optical axis bearing towards the center at the given pitch.
/// Camera k sits at azimuth start + k * 360 / count.
inline std::vector<Camera> place_camera_ring(const RingGeometry& ring) {
  if (!(ring.radius > 0.0))
    throw InvalidRing("ring radius must be positive");
  if (ring.count < 1) throw InvalidRing("ring needs at least one camera");
  if (!(std::abs(ring.pitch_deg) < 90.0))
    throw InvalidRing("ring pitch must lie in (-90, 90) degrees");
  std::vector<Camera> cameras;
  cameras.reserve(static_cast<std::size_t>(ring.count));
  const double step = 2.0 * std::numbers::pi / ring.count;
  const double start = deg_to_rad(ring.start_azimuth_deg);
  for (int k = 0; k < ring.count; ++k) {
    const double azimuth = start + k * step;
    const Eigen::Vector3d position(
        ring.center.x + ring.radius * std::cos(azimuth),
        ring.center.y + ring.radius * std::sin(azimuth),
        ring.center.z + ring.height);
    cameras.push_back(look_camera(ring.first_id + k, position,
                                  azimuth + std::numbers::pi,
                                  deg_to_rad(ring.pitch_deg), ring.fov_deg,
                                  ring.image_width, ring.image_height));
  }
  return cameras;
}

inline std::vector<Camera> place_camera_ring(const WorldPoint& center,
                                             double radius, double height,
                                             double pitch_deg, int count,
                                             double fov_deg) {
  RingGeometry ring;
  ring.center = center;
  ring.radius = radius;
  ring.height = height;
  ring.pitch_deg = pitch_deg;
  ring.count = count;
  ring.fov_deg = fov_deg;
  return place_camera_ring(ring);
}

struct CameraLayout {
  int cardinal_count = 4;
  int ring_count = 46;
  double height = 6.0;
  double pitch_deg = -25.0;
  double radius_factor = 0.75;
  double fov_deg = 40.0;
  int image_width = 1920;
  int image_height = 1080;
};

/// Four cardinal views followed by a ring of the remaining views, the ring
/// rotated by half a step so no ring camera duplicates a cardinal one.
/// `max_dimension` is the larger scene side; it fixes the ring radius.
inline std::vector<Camera> place_default_cameras(const WorldPoint& center,
                                                 double max_dimension,
                                                 const CameraLayout& layout) {
  RingGeometry ring;
  ring.center = center;
  ring.radius = layout.radius_factor * max_dimension;
  ring.height = layout.height;
  ring.pitch_deg = layout.pitch_deg;
  ring.fov_deg = layout.fov_deg;
  ring.image_width = layout.image_width;
  ring.image_height = layout.image_height;

  std::vector<Camera> cameras;
  if (layout.cardinal_count > 0) {
    ring.count = layout.cardinal_count;
    cameras = place_camera_ring(ring);
  }
  if (layout.ring_count > 0) {
    ring.count = layout.ring_count;
    ring.first_id = layout.cardinal_count;
    ring.start_azimuth_deg = 180.0 / layout.ring_count;
    auto more = place_camera_ring(ring);
    cameras.insert(cameras.end(), more.begin(), more.end());
  }
  if (cameras.empty()) throw InvalidRing("camera layout has no cameras");
  return cameras;
}

/// Horizontal grid over the ground plane; cell (row, col) covers
/// [origin_x + col * size, +size) x [origin_y + row * size, +size).
struct GroundGrid {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_size = 0.2;
  int rows = 1;
  int cols = 1;

  friend bool operator==(const GroundGrid&, const GroundGrid&) = default;
};

struct GridCell {
  int row = 0;
  int col = 0;

  friend bool operator==(const GridCell&, const GridCell&) = default;
  friend auto operator<=>(const GridCell&, const GridCell&) = default;
};

inline void validate(const GroundGrid& grid) {
  if (!(grid.cell_size > 0.0) || grid.rows <= 0 || grid.cols <= 0)
    throw ConfigError("ground grid needs positive cell size and dimensions");
}

/// Cell containing (x, y), or nullopt when the point is outside the grid.
inline std::optional<GridCell> grid_index(const GroundGrid& grid, double x,
                                          double y) {
  const double r = std::floor((y - grid.origin_y) / grid.cell_size);
  const double c = std::floor((x - grid.origin_x) / grid.cell_size);
  if (!(r >= 0.0 && r < grid.rows && c >= 0.0 && c < grid.cols))
    return std::nullopt;
  return GridCell{static_cast<int>(r), static_cast<int>(c)};
}

inline WorldPoint cell_center(const GroundGrid& grid, const GridCell& cell,
                              double z = 0.0) {
  return {grid.origin_x + (cell.col + 0.5) * grid.cell_size,
          grid.origin_y + (cell.row + 0.5) * grid.cell_size, z};
}

/// Continuous (row, col) grid coordinates of a ground position.
inline std::pair<double, double> grid_coordinates(const GroundGrid& grid,
                                                  double x, double y) {
  return {(y - grid.origin_y) / grid.cell_size,
          (x - grid.origin_x) / grid.cell_size};
}

}  // namespace mvforge
