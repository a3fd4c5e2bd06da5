#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace mvforge;

namespace {

struct Instance {
  Eigen::MatrixXd C;
  Eigen::VectorXd a, b;
};

Instance random_instance(std::mt19937_64& gen, int n, int m) {
  std::uniform_real_distribution<double> P(0.0, 3.0), M(0.0, 1.5);
  std::vector<Point2d> src, dst;
  for (int i = 0; i < n; ++i) src.push_back({P(gen), P(gen)});
  for (int j = 0; j < m; ++j) dst.push_back({P(gen), P(gen)});
  Instance inst;
  inst.C = build_cost(src, dst, CostKind::ExpEuclidean);
  inst.a.resize(n);
  for (auto& v : inst.a) v = M(gen);
  inst.b = Eigen::VectorXd::Ones(m);
  return inst;
}

}  // namespace

TEST(Cost, Examples) {
  EXPECT_DOUBLE_EQ(pair_cost({1, 1}, {1, 1}, CostKind::ExpEuclidean), 1.0);
  EXPECT_NEAR(pair_cost({0, 0}, {0, 1}, CostKind::ExpEuclidean), 2.718281828459045, 1e-12);
  EXPECT_DOUBLE_EQ(pair_cost({0, 0}, {3, 4}, CostKind::Euclidean), 5.0);
  EXPECT_DOUBLE_EQ(pair_cost({0, 0}, {3, 4}, CostKind::SquaredEuclidean), 25.0);
  bool clamped = false;
  EXPECT_DOUBLE_EQ(pair_cost({0, 0}, {0, 100}, CostKind::ExpEuclidean, &clamped),
                   std::exp(kExpDistanceClamp));
  EXPECT_TRUE(clamped);
}

TEST(Cost, MatchesDoubleLoop) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> U(-5, 5);
  std::vector<Point2d> s(7), d(5);
  for (auto& p : s) p = {U(gen), U(gen)};
  for (auto& p : d) p = {U(gen), U(gen)};
  const auto C = build_cost(s, d, CostKind::ExpEuclidean);
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < d.size(); ++j)
      ASSERT_NEAR(C(i, j), std::exp(std::sqrt((s[i].x - d[j].x) * (s[i].x - d[j].x) +
                                              (s[i].y - d[j].y) * (s[i].y - d[j].y))),
                  1e-12 * C(i, j));
}

TEST(Objective, ZeroPlan) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Constant(3, 2, 2.0);
  Eigen::VectorXd a(3), b(2);
  a << 0.5, 1.0, 2.0;
  b << 1.0, 3.0;
  const OtParams p = OtParams::with_tau(0.1, 10.0);
  EXPECT_NEAR(evaluate_objective(C, Eigen::MatrixXd::Zero(3, 2), a, b, p),
              10.0 * a.squaredNorm() + 10.0 * b.lpNorm<1>(), 1e-12);
}

TEST(Objective, UnitAtom) {
  Eigen::MatrixXd C(1, 1), P(1, 1);
  C << 1.0;
  P << 1.0;
  Eigen::VectorXd a(1), b(1);
  a << 1.0;
  b << 1.0;
  EXPECT_DOUBLE_EQ(evaluate_objective(C, P, a, b, OtParams{}), 1.0);
}

TEST(Objective, ScalarOracleAndPermutation) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    Instance inst = random_instance(gen, 4, 5);
    Eigen::MatrixXd P(4, 5);
    for (auto& v : P.reshaped()) v = U(gen) < 0.2 ? 0.0 : U(gen);
    OtParams p;
    p.epsilon = 0.3;
    p.tau_a = 4.0;
    p.tau_b = 7.0;
    const double v = evaluate_objective(inst.C, P, inst.a, inst.b, p);
    ASSERT_NEAR(v, oracle::scalar_objective(inst.C, P, inst.a, inst.b, 0.3, 4.0, 7.0),
                1e-10 * std::max(1.0, std::abs(v)));
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(4);
    perm.indices() << 2, 0, 3, 1;
    const Eigen::MatrixXd C2 = perm * inst.C, P2 = perm * P;
    const Eigen::VectorXd a2 = perm * inst.a;
    ASSERT_NEAR(evaluate_objective(C2, P2, a2, inst.b, p), v, 1e-10 * std::max(1.0, std::abs(v)));
  }
}

TEST(Solve, OneByOne) {
  Eigen::MatrixXd C(1, 1);
  C << 1.0;
  Eigen::VectorXd a(1), b(1);
  a << 1.0;
  b << 1.0;
  double prev_res = 1e300;
  for (double tau : {1.0, 10.0, 100.0, 1000.0}) {
    const auto s = solve_ot(C, a, b, OtParams::with_tau(0.1, tau), true);
    ASSERT_TRUE(s.converged);
    const double res = s.marginal_residual_a + s.marginal_residual_b;
    EXPECT_LE(res, prev_res + 1e-12);
    prev_res = res;
    if (tau >= 100.0) {
      EXPECT_NEAR(s.plan(0, 0), 1.0, 5e-3);
    }
  }
}

TEST(Solve, EmptySides) {
  Eigen::VectorXd a(2), b(0);
  a << 1.0, 2.0;
  const auto s = solve_ot(Eigen::MatrixXd(2, 0), a, b, OtParams::with_tau(0.1, 10));
  EXPECT_DOUBLE_EQ(s.objective, 10.0 * 5.0);
}

TEST(Solve, AgreesWithDualOracle) {
  std::mt19937_64 gen(3);
  for (int k = 0; k < 20; ++k) {
    const int n = 1 + static_cast<int>(gen() % 6), m = 1 + static_cast<int>(gen() % 6);
    const Instance inst = random_instance(gen, n, m);
    const OtParams p = OtParams::with_tau(0.1, 10.0);
    const auto s = solve_ot(inst.C, inst.a, inst.b, p, true);
    const auto o = oracle::projected_gradient_dual(inst.C, inst.a, inst.b, 0.1, 10.0, 10.0);
    // weak duality brackets the optimum
    ASSERT_GE(s.objective, o.dual - 1e-9);
    ASSERT_LE(s.objective, o.dual + 1e-3);
    ASSERT_LE(s.objective, o.primal + 1e-9);
    ASSERT_NEAR(evaluate_objective(inst.C, s.plan, inst.a, inst.b, p), s.objective, 1e-9);
    ASSERT_TRUE(s.plan.allFinite());
    ASSERT_GE(s.plan.minCoeff(), 0.0);
  }
}

TEST(Solve, TraceNonIncreasing) {
  std::mt19937_64 gen(4);
  for (int k = 0; k < 50; ++k) {
    const Instance inst = random_instance(gen, 6, 6);
    OtParams p;
    p.keep_trace = true;
    const auto s = solve_ot(inst.C, inst.a, inst.b, p);
    ASSERT_EQ(s.trace.size(), s.raw_trace.size());
    for (std::size_t i = 1; i < s.trace.size(); ++i) ASSERT_LE(s.trace[i], s.trace[i - 1] + 1e-9);
    for (std::size_t i = 0; i < s.trace.size(); ++i) ASSERT_LE(s.trace[i], s.raw_trace[i] + 1e-12);
    EXPECT_DOUBLE_EQ(s.trace.back(), s.objective);
  }
}

TEST(Solve, RejectsBadInput) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Ones(1, 1);
  Eigen::VectorXd a(1), b(1);
  a << -1.0;
  b << 1.0;
  EXPECT_THROW(solve_ot(C, a, b, OtParams{}), InvalidProblem);
  a << 1.0;
  EXPECT_THROW(solve_ot(C, a, b, OtParams::with_tau(0.0, 1.0)), InvalidProblem);
  EXPECT_THROW(solve_ot(Eigen::MatrixXd::Ones(2, 1), a, b, OtParams{}), ShapeMismatch);
}

TEST(Solve, MovingMassTowardTargetLowersObjective) {
  // 5 source pixels in a row, 3 targets; shift a unit bump toward target 0.
  const std::vector<Point2d> src = {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}};
  const std::vector<Point2d> dst = {{0, 0}, {5, 2}, {5, 4}};
  const auto C = build_cost(src, dst, CostKind::ExpEuclidean);
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(3);
  double prev = -1e300;
  for (int at = 0; at < 5; ++at) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(5);
    a[at] = 1.0;
    const double v = solve_ot(C, a, b, OtParams{}).objective;
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(LocalizationLoss, ZeroPrediction) {
  const GridMap pred = GridMap::zeros(8, 8);
  const std::vector<MapPoint> gt = {{1.5, 1.5}, {4.5, 6.5}, {7.5, 0.5}};
  const auto l = localization_loss(pred, gt, OtParams::with_tau(0.1, 10.0));
  EXPECT_NEAR(l.loss, 10.0 * 3, 1e-12);
  EXPECT_EQ(l.support, 0u);
}

TEST(LocalizationLoss, DotMapNearIdentityPlan) {
  GridMap pred = GridMap::zeros(10, 10);
  const std::vector<MapPoint> gt = {{1.5, 1.5}, {4.5, 6.5}, {8.5, 2.5}, {6.5, 8.5}};
  for (const auto& g : gt) pred.at(static_cast<int>(g.row), static_cast<int>(g.col)) = 1.0f;
  const OtParams p;
  const auto l = localization_loss(pred, gt, p);
  ASSERT_EQ(l.support, gt.size());
  // identity plan: every C_ii = e^0 = 1, no entropy, exact marginals
  const double identity = static_cast<double>(gt.size());
  EXPECT_LE(l.loss, identity + 1e-9);
  EXPECT_GE(l.loss, identity - 0.1);
}

TEST(LocalizationLoss, ShiftingBlobAwayNeverHelps) {
  const std::vector<MapPoint> gt = {{5.5, 2.5}};
  double prev = -1e300;
  for (int shift = 0; shift < 6; ++shift) {
    std::vector<MapPoint> blob = {{5.5, 2.5 + shift}};
    const GridMap pred = render_density_map(blob, 11, 11, 0.8);
    const double v = localization_loss(pred, gt).loss;
    EXPECT_GE(v, prev - 1e-9);
    prev = v;
  }
}

TEST(LocalizationLoss, PrunedMassAccounted) {
  GridMap pred = GridMap::zeros(3, 3);
  pred.at(0, 0) = 1.0f;
  pred.at(2, 2) = 1e-9f;
  const std::vector<MapPoint> gt = {{0.5, 0.5}};
  const auto l = localization_loss(pred, gt);
  EXPECT_EQ(l.support, 1u);
  EXPECT_NEAR(l.pruned_mass, 1e-9, 1e-12);
}
