#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "mvforge/annotate.hpp"
#include "mvforge/errors.hpp"
#include "mvforge/grid_map.hpp"

namespace mvforge {

enum class CostKind { ExpEuclidean, Euclidean, SquaredEuclidean };

inline std::string_view to_string(CostKind k) {
  switch (k) {
    case CostKind::ExpEuclidean: return "exp";
    case CostKind::Euclidean: return "l2";
    case CostKind::SquaredEuclidean: return "l2sq";
  }
  return "exp";
}

/// Distances beyond this are clamped before exponentiation.
inline constexpr double kExpDistanceClamp = 60.0;

struct Point2d {
  double x = 0.0;
  double y = 0.0;
};

/// Cost of a single pair; sets *clamped when the exp cost hit the clamp.
inline double pair_cost(const Point2d& p, const Point2d& q, CostKind kind,
                        bool* clamped = nullptr) {
  const double dx = p.x - q.x, dy = p.y - q.y;
  const double d2 = dx * dx + dy * dy;
  switch (kind) {
    case CostKind::SquaredEuclidean: return d2;
    case CostKind::Euclidean: return std::sqrt(d2);
    case CostKind::ExpEuclidean: {
      double d = std::sqrt(d2);
      if (d > kExpDistanceClamp) {
        d = kExpDistanceClamp;
        if (clamped) *clamped = true;
      }
      return std::exp(d);
    }
  }
  return d2;
}

/// Dense n x m cost matrix; `clamp_count` receives the number of clamped pairs.
inline Eigen::MatrixXd build_cost(std::span<const Point2d> src,
                                  std::span<const Point2d> dst, CostKind kind,
                                  std::size_t* clamp_count = nullptr) {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(src.size()),
                    static_cast<Eigen::Index>(dst.size()));
  std::size_t clamps = 0;
  for (std::size_t i = 0; i < src.size(); ++i)
    for (std::size_t j = 0; j < dst.size(); ++j) {
      bool clamped = false;
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          pair_cost(src[i], dst[j], kind, &clamped);
      clamps += clamped;
    }
  if (clamp_count) *clamp_count = clamps;
  return c;
}

struct OtParams {
  double epsilon = 0.1;
  double tau_a = 10.0;  // squared-L2 penalty on the source marginal
  double tau_b = 10.0;  // L1 penalty on the target marginal
  int max_iters = 500;
  double tol = 1e-6;
  bool keep_trace = false;

  static OtParams with_tau(double eps, double tau) {
    OtParams p;
    p.epsilon = eps;
    p.tau_a = tau;
    p.tau_b = tau;
    return p;
  }
};

/// <C,P> + eps * sum P log P + tau_a |P1 - a|_2^2 + tau_b |P^T 1 - b|_1,
/// with 0 log 0 = 0.
inline double evaluate_objective(const Eigen::MatrixXd& cost, const Eigen::MatrixXd& plan,
                                 const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                 const OtParams& params) {
  if (cost.rows() != plan.rows() || cost.cols() != plan.cols() ||
      a.size() != plan.rows() || b.size() != plan.cols())
    throw ShapeMismatch("objective: plan, cost and marginals disagree in shape");
  double transport = 0.0, neg_entropy = 0.0;
  for (Eigen::Index j = 0; j < plan.cols(); ++j)
    for (Eigen::Index i = 0; i < plan.rows(); ++i) {
      const double p = plan(i, j);
      if (p < 0.0) throw InvalidProblem("objective: plan has a negative entry");
      if (p == 0.0) continue;
      transport += cost(i, j) * p;
      neg_entropy += p * std::log(p);
    }
  const double ra = (plan.rowwise().sum() - a).squaredNorm();
  const double rb = (plan.colwise().sum().transpose() - b).lpNorm<1>();
  return transport + params.epsilon * neg_entropy + params.tau_a * ra + params.tau_b * rb;
}

struct OtSolution {
  Eigen::VectorXd alpha;  // dual potentials; the plan is
  Eigen::VectorXd beta;   // exp((alpha_i + beta_j - C_ij) / eps - 1)
  Eigen::MatrixXd plan;   // filled only when requested
  double objective = 0.0;
  double dual_objective = 0.0;
  double marginal_residual_a = 0.0;  // |P1 - a|_2^2
  double marginal_residual_b = 0.0;  // |P^T 1 - b|_1
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;      // objective of the returned plan after each sweep
  std::vector<double> raw_trace;  // objective of each sweep's own plan
};

namespace detail {

inline double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// Solves y + log y = L for y > 0.
inline double solve_y_plus_log_y(double L) {
  double y = L > 1.0 ? L - std::log(L) : std::exp(L);
  if (y <= 0.0) y = std::numeric_limits<double>::min();
  for (int it = 0; it < 100; ++it) {
    const double f = y + std::log(y) - L;
    const double step = f / (1.0 + 1.0 / y);
    double next = y - step;
    if (next <= 0.0) next = y / 10.0;
    if (std::abs(next - y) <= 1e-15 * std::max(1.0, y)) return next;
    y = next;
  }
  return y;
}

}  // namespace detail

/// Unbalanced entropic OT by exact block-coordinate ascent on the dual, in the
/// log domain. `cost(i, j)` may be any callable returning C_ij; it is
/// evaluated once per pair.
template <typename CostFn>
  requires(!std::is_base_of_v<Eigen::EigenBase<std::decay_t<CostFn>>, std::decay_t<CostFn>>)
OtSolution solve_ot(CostFn&& cost, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                    const OtParams& params, bool keep_plan = false) {
  const Eigen::Index n = a.size(), m = b.size();
  if (!(params.epsilon > 0.0) || !std::isfinite(params.epsilon))
    throw InvalidProblem("epsilon must be positive and finite");
  if (!(params.tau_a > 0.0) || !(params.tau_b >= 0.0) || !std::isfinite(params.tau_a) ||
      !std::isfinite(params.tau_b))
    throw InvalidProblem("tau_a must be positive and tau_b non-negative");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(a[i] >= 0.0) || !std::isfinite(a[i]))
      throw InvalidProblem("source mass must be finite and non-negative");
  for (Eigen::Index j = 0; j < m; ++j)
    if (!(b[j] >= 0.0) || !std::isfinite(b[j]))
      throw InvalidProblem("target mass must be finite and non-negative");

  const double eps = params.epsilon;
  OtSolution sol;
  sol.alpha = Eigen::VectorXd::Zero(n);
  sol.beta = Eigen::VectorXd::Zero(m);
  if (n == 0 || m == 0) {
    sol.objective = params.tau_a * a.squaredNorm() + params.tau_b * b.lpNorm<1>();
    sol.dual_objective = sol.objective;
    sol.marginal_residual_a = a.squaredNorm();
    sol.marginal_residual_b = b.lpNorm<1>();
    sol.converged = true;
    if (keep_plan) sol.plan = Eigen::MatrixXd::Zero(n, m);
    return sol;
  }

  Eigen::MatrixXd c(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      c(i, j) = cost(i, j);
      if (!std::isfinite(c(i, j))) throw InvalidProblem("cost must be finite");
    }
  const double k = eps / (2.0 * params.tau_a);
  const double log_k = std::log(k);
  std::vector<double> buf(static_cast<std::size_t>(std::max(n, m)));
  Eigen::VectorXd row_mass(n), col_mass(m);
  double residual_a = 0.0, residual_b = 0.0;

  // One exact pass over the alpha block, the beta block, and the common
  // shift (alpha - t, beta + t), which leaves the plan unchanged.
  auto sweep = [&](Eigen::VectorXd& alpha, Eigen::VectorXd& beta) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m; ++j)
        buf[static_cast<std::size_t>(j)] = (beta[j] - c(i, j)) / eps;
      const double log_k_i =
          detail::log_sum_exp({buf.data(), static_cast<std::size_t>(m)}) - 1.0;
      const double y = detail::solve_y_plus_log_y(log_k_i - log_k + a[i] / k);
      alpha[i] = eps * (a[i] / k - y);
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      if (b[j] == 0.0) {
        beta[j] = -params.tau_b;
        continue;
      }
      for (Eigen::Index i = 0; i < n; ++i)
        buf[static_cast<std::size_t>(i)] = (alpha[i] - c(i, j)) / eps;
      const double log_m_j =
          detail::log_sum_exp({buf.data(), static_cast<std::size_t>(n)}) - 1.0;
      beta[j] = std::clamp(eps * (std::log(b[j]) - log_m_j), -params.tau_b, params.tau_b);
    }
    const double t_free =
        (alpha.sum() / (2.0 * params.tau_a) + b.sum() - a.sum()) * 2.0 * params.tau_a /
        static_cast<double>(n);
    const double t = std::clamp(t_free, -params.tau_b - beta.minCoeff(),
                                params.tau_b - beta.maxCoeff());
    alpha.array() -= t;
    beta.array() += t;
  };

  auto dual_value = [&](const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) {
    double mass = 0.0;
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        mass += std::exp((alpha[i] + beta[j] - c(i, j)) / eps - 1.0);
    return alpha.dot(a) - alpha.squaredNorm() / (4.0 * params.tau_a) + beta.dot(b) -
           eps * mass;
  };

  // Primal objective of the plan induced by the potentials.
  auto primal_value = [&](const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) {
    row_mass.setZero();
    col_mass.setZero();
    double transport = 0.0, neg_entropy = 0.0;
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < n; ++i) {
        const double lp = (alpha[i] + beta[j] - c(i, j)) / eps - 1.0;
        const double p = std::exp(lp);
        if (p == 0.0) continue;
        row_mass[i] += p;
        col_mass[j] += p;
        transport += c(i, j) * p;
        neg_entropy += p * lp;
      }
    residual_a = (row_mass - a).squaredNorm();
    residual_b = (col_mass - b).lpNorm<1>();
    return transport + eps * neg_entropy + params.tau_a * residual_a +
           params.tau_b * residual_b;
  };

  // Anderson acceleration of the sweep map, safeguarded so that the dual
  // never decreases.
  const Eigen::Index dim = n + m;
  constexpr int kMemory = 5;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd gx(dim), fx(dim), prev_gx(dim), prev_fx(dim);
  Eigen::MatrixXd dg(dim, kMemory), df(dim, kMemory);
  int stored = 0, head = 0;
  Eigen::VectorXd alpha(n), beta(m), cand_alpha(n), cand_beta(m);
  double dual = -std::numeric_limits<double>::infinity();
  double prev_primal = std::numeric_limits<double>::infinity();
  double best_primal = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= params.max_iters; ++it) {
    alpha = x.head(n);
    beta = x.tail(m);
    sweep(alpha, beta);
    gx << alpha, beta;
    fx = gx - x;
    if (it > 1) {
      dg.col(head) = gx - prev_gx;
      df.col(head) = fx - prev_fx;
      head = (head + 1) % kMemory;
      stored = std::min(stored + 1, kMemory);
    }
    prev_gx = gx;
    prev_fx = fx;

    double next_dual = dual_value(alpha, beta);
    if (stored > 0) {
      const Eigen::MatrixXd f_hist = df.leftCols(stored);
      const Eigen::VectorXd gamma = f_hist.colPivHouseholderQr().solve(fx);
      Eigen::VectorXd cand = gx - dg.leftCols(stored) * gamma;
      if (cand.allFinite()) {
        cand_alpha = cand.head(n);
        cand_beta = cand.tail(m).cwiseMax(-params.tau_b).cwiseMin(params.tau_b);
        const double cand_dual = dual_value(cand_alpha, cand_beta);
        if (std::isfinite(cand_dual) && cand_dual > next_dual) {
          alpha = cand_alpha;
          beta = cand_beta;
          next_dual = cand_dual;
        }
      }
    }
    x << alpha, beta;
    dual = next_dual;

    const double primal = primal_value(alpha, beta);
    if (!std::isfinite(primal)) throw InvalidProblem("objective became non-finite");
    if (params.keep_trace) sol.raw_trace.push_back(primal);
    // the returned plan is the best one seen so far
    if (primal < best_primal) {
      best_primal = primal;
      sol.alpha = alpha;
      sol.beta = beta;
      sol.objective = primal;
      sol.marginal_residual_a = residual_a;
      sol.marginal_residual_b = residual_b;
    }
    if (params.keep_trace) sol.trace.push_back(best_primal);
    sol.iterations = it;
    sol.dual_objective = dual;
    if (std::abs(prev_primal - primal) < params.tol &&
        best_primal - dual < params.tol * std::max(1.0, std::abs(best_primal))) {
      sol.converged = true;
      break;
    }
    prev_primal = primal;
  }

  if (keep_plan) {
    sol.plan.resize(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j)
        sol.plan(i, j) = std::exp((sol.alpha[i] + sol.beta[j] - c(i, j)) / eps - 1.0);
  }
  return sol;
}

inline OtSolution solve_ot(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a,
                           const Eigen::VectorXd& b, const OtParams& params,
                           bool keep_plan = false) {
  if (cost.rows() != a.size() || cost.cols() != b.size())
    throw ShapeMismatch("cost matrix does not match the marginals");
  return solve_ot([&](Eigen::Index i, Eigen::Index j) { return cost(i, j); }, a, b,
                  params, keep_plan);
}

/// Density values below this are dropped from the source support.
inline constexpr double kPruneThreshold = 1e-8;

struct LocalizationLoss {
  double loss = 0.0;
  OtSolution solution;
  std::size_t support = 0;       // source pixels kept
  double pruned_mass = 0.0;      // mass of dropped pixels
  std::size_t clamped_pairs = 0; // exp-cost pairs whose distance was clamped
};

/// OT loss between a predicted density map and ground-truth points given in
/// continuous map coordinates (row, col). Source points are pixel centers.
/// Pruned pixels stay unmatched; their squared mass is added to the source
/// penalty exactly.
inline LocalizationLoss localization_loss(const GridMap& pred,
                                          std::span<const MapPoint> gt,
                                          const OtParams& params = {},
                                          CostKind kind = CostKind::ExpEuclidean,
                                          double coord_scale = 1.0) {
  LocalizationLoss out;
  std::vector<Point2d> src;
  std::vector<double> mass;
  double pruned_sq = 0.0;
  for (int r = 0; r < pred.rows; ++r)
    for (int c = 0; c < pred.cols; ++c) {
      const double v = pred.at(r, c);
      if (!(v >= 0.0) || !std::isfinite(v))
        throw InvalidProblem("prediction must be finite and non-negative");
      if (v < kPruneThreshold) {
        out.pruned_mass += v;
        pruned_sq += v * v;
        continue;
      }
      src.push_back({(r + 0.5) * coord_scale, (c + 0.5) * coord_scale});
      mass.push_back(v);
    }
  std::vector<Point2d> dst;
  for (const auto& p : gt) {
    if (!std::isfinite(p.row) || !std::isfinite(p.col))
      throw InvalidProblem("ground-truth point must be finite");
    dst.push_back({p.row * coord_scale, p.col * coord_scale});
  }
  out.support = src.size();
  const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(
      mass.data(), static_cast<Eigen::Index>(mass.size()));
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dst.size()));
  std::size_t clamps = 0;
  auto cost = [&](Eigen::Index i, Eigen::Index j) {
    bool clamped = false;
    const double v = pair_cost(src[static_cast<std::size_t>(i)],
                               dst[static_cast<std::size_t>(j)], kind, &clamped);
    clamps += clamped;
    return v;
  };
  out.solution = solve_ot(cost, a, b, params);
  out.clamped_pairs = clamps;
  out.solution.marginal_residual_a += pruned_sq;
  out.solution.objective += params.tau_a * pruned_sq;
  out.solution.dual_objective += params.tau_a * pruned_sq;
  out.loss = out.solution.objective;
  return out;
}

}  // namespace mvforge
