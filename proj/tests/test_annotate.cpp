#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace mvforge;

namespace {

std::pair<int, int> argmax(const GridMap& m) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < m.values.size(); ++i)
    if (m.values[i] > m.values[best]) best = i;
  return {static_cast<int>(best) / m.cols, static_cast<int>(best) % m.cols};
}

}  // namespace

TEST(Density, SingleCenterPoint) {
  const std::vector<MapPoint> pts = {{32.5, 40.5}};
  for (double sigma : {0.3, 1.0, 3.0, 8.0}) {
    const auto m = render_density_map(pts, 64, 80, sigma);
    EXPECT_NEAR(m.sum(), 1.0, 1e-6);
    EXPECT_EQ(argmax(m), (std::pair<int, int>{32, 40}));
  }
}

TEST(Density, CornerPointKeepsUnitMass) {
  const std::vector<MapPoint> pts = {{0.0, 0.0}};
  EXPECT_NEAR(render_density_map(pts, 30, 30, 4.0).sum(), 1.0, 1e-6);
}

TEST(Density, ManyPointsCountOracle) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> R(0.0, 50.0), C(0.0, 70.0);
  std::vector<MapPoint> pts;
  for (int i = 0; i < 57; ++i) pts.push_back({R(gen), C(gen)});
  EXPECT_NEAR(render_density_map(pts, 50, 70, 2.5).sum(), 57.0, 1e-3);
}

TEST(Density, EmptyAndOutside) {
  const auto m = render_density_map({}, 10, 10);
  EXPECT_EQ(m.sum(), 0.0);
  const std::vector<MapPoint> outside = {{-1.0, 3.0}, {3.0, 10.0}};
  EXPECT_EQ(render_density_map(outside, 10, 10).sum(), 0.0);
  EXPECT_THROW(render_density_map({}, 10, 10, 0.0), ConfigError);
}

TEST(Density, TinySigmaFallsIntoContainingCell) {
  const std::vector<MapPoint> pts = {{2.2, 3.7}};
  const auto m = render_density_map(pts, 5, 5, 1e-4);
  EXPECT_NEAR(m.at(2, 3), 1.0, 1e-6);
}

TEST(GroundOccupancy, SinglePersonAtCellCenter) {
  GroundGrid g{0, 0, 0.2, 20, 20};
  FrameRecord f;
  const auto w = cell_center(g, {4, 7});
  f.persons.push_back({0, w, Action::Standing, 0});
  const auto occ = render_ground_occupancy(f, g);
  EXPECT_EQ(occ.dots.at(4, 7), 1.0f);
  EXPECT_EQ(occ.dots.sum(), 1.0);
  EXPECT_NEAR(occ.density.sum(), 1.0, 1e-6);
}

TEST(GroundOccupancy, SameCellAdds) {
  GroundGrid g{0, 0, 0.2, 20, 20};
  FrameRecord f;
  f.persons.push_back({0, {1.01, 1.01, 0}, Action::Standing, 0});
  f.persons.push_back({1, {1.15, 1.12, 0}, Action::Standing, 0});
  EXPECT_EQ(render_ground_occupancy(f, g).dots.at(5, 5), 2.0f);
}

TEST(GroundOccupancy, RandomFrameCountsInGridPeople) {
  GroundGrid g{0, 0, 0.2, 100, 150};
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> X(-5.0, 35.0), Y(-5.0, 25.0);
  FrameRecord f;
  for (int i = 0; i < 500; ++i) f.persons.push_back({i, {X(gen), Y(gen), 0}, Action::Standing, 0});
  std::size_t inside = 0;
  for (const auto& p : f.persons) inside += grid_index(g, p.position.x, p.position.y).has_value();
  const auto occ = render_ground_occupancy(f, g);
  EXPECT_EQ(occ.dots.sum(), static_cast<double>(inside));
  EXPECT_EQ(occ.out_of_grid, 500 - inside);
  EXPECT_NEAR(occ.density.sum(), static_cast<double>(inside), 1e-3);
}

TEST(Views, OnAxisAndBehind) {
  const Camera cam = look_camera(3, {0, 0, kHeadHeight}, 0.0, 0.0, 60, 640, 480);
  FrameRecord f;
  f.persons.push_back({0, {10, 0, 0}, Action::Standing, 0});   // ahead, on the axis
  f.persons.push_back({1, {-10, 0, 0}, Action::Standing, 0});  // behind
  const std::vector<Camera> cams = {cam};
  const auto views = annotate_views(f, cams);
  ASSERT_EQ(views.size(), 1u);
  EXPECT_EQ(views[0].camera_id, 3);
  const auto& a = views[0].entries[0];
  EXPECT_TRUE(a.visible);
  EXPECT_NEAR(a.u, 320.0, 1e-9);
  EXPECT_NEAR(a.v, 240.0, 1e-9);
  const auto& b = views[0].entries[1];
  EXPECT_FALSE(b.visible);
  EXPECT_NEAR(b.u, 320.0, 1e-9);  // still recorded
}

TEST(Views, OcclusionHidesPersonBehind) {
  const Camera cam = look_camera(0, {0, 0, kHeadHeight}, 0.0, 0.0, 60, 640, 480);
  FrameRecord f;
  f.persons.push_back({0, {5, 0, 0}, Action::Standing, 0});
  f.persons.push_back({1, {10, 0.05, 0}, Action::Standing, 0});
  const std::vector<Camera> cams = {cam};
  const auto plain = annotate_views(f, cams);
  EXPECT_TRUE(plain[0].entries[1].visible);
  const auto occluded = annotate_views(f, cams, OcclusionModel{true, 0.25});
  EXPECT_TRUE(occluded[0].entries[0].visible);
  EXPECT_FALSE(occluded[0].entries[1].visible);
}

TEST(Views, VisiblePointsScale) {
  ViewAnnotation v;
  v.entries = {{0, 100, 50, true}, {1, 10, 10, false}};
  const auto pts = visible_points(v, 0.5);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].row, 25.0);
  EXPECT_EQ(pts[0].col, 50.0);
}
