#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "oracles.hpp"

using namespace mvforge;

namespace {

Camera simple_camera() {
  Camera cam;
  cam.intrinsics << 100, 0, 320, 0, 100, 240, 0, 0, 1;
  cam.image_width = 640;
  cam.image_height = 480;
  cam.fov_deg = 2.0 * rad_to_deg(std::atan(3.2));
  return cam;
}

}  // namespace

TEST(Rng, SameKeySameStream) {
  CounterRng a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
  EXPECT_EQ(CounterRng::kName, "splitmix64-ctr/1");
}

TEST(Rng, SplitStreamsDiffer) {
  CounterRng root(7);
  auto x = root.split(1), y = root.split(2);
  int equal = 0;
  for (int i = 0; i < 1000; ++i) equal += x.next() == y.next();
  EXPECT_EQ(equal, 0);
}

TEST(Rng, UniformIntInRangeAndRoughlyFlat) {
  CounterRng rng(3);
  std::array<int, 7> hist{};
  for (int i = 0; i < 70000; ++i) {
    const auto k = rng.uniform_int(7);
    ASSERT_LT(k, 7u);
    ++hist[k];
  }
  for (int h : hist) EXPECT_NEAR(h, 10000, 500);
}

TEST(Rng, UniformInUnitInterval) {
  CounterRng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Polygon, AreaPerimeterContains) {
  const Polygon sq = {{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  EXPECT_DOUBLE_EQ(area(sq), 4.0);
  EXPECT_DOUBLE_EQ(perimeter(sq), 8.0);
  EXPECT_TRUE(contains(sq, {1, 1}));
  EXPECT_FALSE(contains(sq, {3, 1}));
  EXPECT_TRUE(is_simple(sq));
  const Polygon bowtie = {{0, 0}, {2, 2}, {2, 0}, {0, 2}};
  EXPECT_FALSE(is_simple(bowtie));
  EXPECT_FALSE(is_simple({{0, 0}, {1, 1}}));
}

TEST(Project, PrincipalPointOnAxis) {
  const auto q = project(simple_camera(), {0, 0, 5});
  EXPECT_DOUBLE_EQ(q.u, 320.0);
  EXPECT_DOUBLE_EQ(q.v, 240.0);
  EXPECT_DOUBLE_EQ(q.depth, 5.0);
}

TEST(Project, OffsetPoint) {
  const auto q = project(simple_camera(), {1, 0, 5});
  EXPECT_DOUBLE_EQ(q.u, 340.0);
  EXPECT_DOUBLE_EQ(q.v, 240.0);
}

TEST(Project, AgreesWithMatrixProduct) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> U(-20.0, 20.0);
  for (int k = 0; k < 1000; ++k) {
    const Camera cam = oracle::random_camera(gen);
    const WorldPoint p{U(gen), U(gen), std::abs(U(gen)) / 4.0};
    Eigen::Vector4d X(p.x, p.y, p.z, 1.0);
    Eigen::Matrix<double, 3, 4> M;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) {
        double s = 0.0;
        for (int j = 0; j < 3; ++j)
          s += cam.intrinsics(r, j) * (c < 3 ? cam.rotation(j, c) : cam.translation[j]);
        M(r, c) = s;
      }
    const Eigen::Vector3d h = M * X;
    if (std::abs(h.z()) < 1e-6) continue;
    const auto q = project(cam, p);
    ASSERT_NEAR(q.u, h.x() / h.z(), 1e-9 * std::max(1.0, std::abs(q.u)));
    ASSERT_NEAR(q.v, h.y() / h.z(), 1e-9 * std::max(1.0, std::abs(q.v)));
  }
}

TEST(Project, PrincipalPlaneThrows) {
  EXPECT_THROW(project(simple_camera(), {1, 1, 0}), DegenerateProjection);
}

TEST(Backproject, DownLookingCamera) {
  Camera cam = simple_camera();
  cam.rotation = Eigen::Vector3d(1, -1, -1).asDiagonal();
  cam.translation = -cam.rotation * Eigen::Vector3d(0, 0, 10);
  validate(cam);
  const auto w = backproject_at_height(cam, 320, 240, 0.0);
  EXPECT_NEAR(w.x, 0.0, 1e-9);
  EXPECT_NEAR(w.y, 0.0, 1e-9);
  EXPECT_EQ(w.z, 0.0);
}

TEST(Backproject, RoundTrip) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> U(-10.0, 10.0);
  for (int k = 0; k < 500; ++k) {
    const Camera cam = oracle::random_camera(gen);
    const WorldPoint p{U(gen), U(gen), 0.0};
    const auto q = project(cam, p);
    if (q.depth <= 0.0) continue;
    const auto w = backproject_at_height(cam, q, 0.0);
    ASSERT_LT(std::hypot(w.x - p.x, w.y - p.y), 1e-6);
  }
}

TEST(Backproject, RayParallelToGround) {
  const Camera cam = look_camera(0, {0, 0, 5}, 0.0, 0.0, 60, 640, 480);
  EXPECT_THROW(backproject_at_height(cam, 320, 240, 0.0), RayParallelToPlane);
}

TEST(Visibility, AxisAndBehind) {
  const Camera cam = simple_camera();
  EXPECT_TRUE(is_visible(cam, {0, 0, 5}));
  EXPECT_FALSE(is_visible(cam, {0, 0, -5}));
  EXPECT_FALSE(is_visible(cam, {100, 0, 5}));
}

TEST(Camera, ValidateRejectsNonOrthonormal) {
  Camera cam = simple_camera();
  cam.rotation(0, 0) = 2.0;
  EXPECT_THROW(validate(cam), InvalidCamera);
}

TEST(Ring, CardinalPlacement) {
  const auto cams = place_camera_ring({0, 0, 0}, 10, 6, -25, 4, 40);
  ASSERT_EQ(cams.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    const Eigen::Vector3d c = cams[k].center();
    const double az = std::atan2(c.y(), c.x());
    const double expected = k * std::numbers::pi / 2;
    EXPECT_NEAR(std::remainder(az - expected, 2 * std::numbers::pi), 0.0, 1e-9);
    const Eigen::Vector3d axis = cams[k].rotation.row(2).transpose();
    const double bearing = std::atan2(axis.y(), axis.x());
    const double to_center = std::atan2(-c.y(), -c.x());
    EXPECT_NEAR(std::remainder(bearing - to_center, 2 * std::numbers::pi), 0.0, 1e-9);
    EXPECT_NEAR(c.z(), 6.0, 1e-9);
  }
}

TEST(Ring, DefaultLayoutHasFiftyCameras) {
  const auto cams = place_default_cameras({50, 50, 0}, 100, CameraLayout{});
  ASSERT_EQ(cams.size(), 50u);
  std::set<int> ids;
  for (const auto& c : cams) {
    validate(c);
    ids.insert(c.id);
  }
  EXPECT_EQ(ids.size(), 50u);
}

TEST(Ring, InvalidArguments) {
  EXPECT_THROW(place_camera_ring({0, 0, 0}, 0, 6, -25, 4, 40), InvalidRing);
  EXPECT_THROW(place_camera_ring({0, 0, 0}, 10, 6, -25, 0, 40), InvalidRing);
  EXPECT_THROW(place_camera_ring({0, 0, 0}, 10, 6, -90, 4, 40), InvalidRing);
}

TEST(Grid, IndexExamples) {
  GroundGrid g;
  g.cell_size = 0.2;
  g.rows = 100;
  g.cols = 100;
  EXPECT_EQ(grid_index(g, 0.0, 0.0), (GridCell{0, 0}));
  EXPECT_EQ(grid_index(g, 1.0, 0.5), (GridCell{2, 5}));
  EXPECT_FALSE(grid_index(g, -0.01, 0.5).has_value());
  EXPECT_FALSE(grid_index(g, 20.0, 0.5).has_value());
}

TEST(Grid, CellCenterRoundTrip) {
  GroundGrid g{1.0, -2.0, 0.25, 40, 30};
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c) {
      const auto w = cell_center(g, {r, c});
      ASSERT_EQ(grid_index(g, w.x, w.y), (GridCell{r, c}));
      const auto [rr, cc] = grid_coordinates(g, w.x, w.y);
      ASSERT_NEAR(rr, r + 0.5, 1e-12);
      ASSERT_NEAR(cc, c + 0.5, 1e-12);
    }
}
