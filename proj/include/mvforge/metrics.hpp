#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <tuple>
#include <vector>

#include "mvforge/errors.hpp"
#include "mvforge/hungarian.hpp"
#include "mvforge/ot.hpp"

namespace mvforge {

/// Image-space match threshold in pixels.
inline constexpr double kImageThreshold = 3.0;
/// Ground-plane match threshold in meters.
inline constexpr double kGroundThreshold = 0.5;

struct MatchPair {
  std::size_t gt = 0;
  std::size_t pred = 0;
  double distance = 0.0;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct MatchReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<double> matched_distances;  // in gt order
  std::vector<MatchPair> pairs;           // sorted by gt index
  double threshold = 0.0;

  double total_distance() const {
    double s = 0.0;
    for (double d : matched_distances) s += d;
    return s;
  }
};

enum class MatchMode { Optimal, Greedy };

inline double distance(const Point2d& p, const Point2d& q) {
  return std::hypot(p.x - q.x, p.y - q.y);
}

namespace detail {

inline MatchReport make_report(std::vector<MatchPair> pairs, std::size_t n_pred,
                               std::size_t n_gt, double threshold) {
  std::sort(pairs.begin(), pairs.end(),
            [](const MatchPair& a, const MatchPair& b) { return a.gt < b.gt; });
  MatchReport r;
  r.threshold = threshold;
  r.tp = pairs.size();
  r.fp = n_pred - r.tp;
  r.fn = n_gt - r.tp;
  for (const auto& p : pairs) r.matched_distances.push_back(p.distance);
  r.pairs = std::move(pairs);
  return r;
}

}  // namespace detail

/// Matches predictions to ground truth among pairs closer than `threshold`.
/// Optimal mode finds the most matches, then the smallest total distance;
/// greedy mode takes pairs nearest first.
inline MatchReport match_points(std::span<const Point2d> pred, std::span<const Point2d> gt,
                                double threshold, MatchMode mode = MatchMode::Optimal) {
  if (!(threshold > 0.0) || !std::isfinite(threshold))
    throw ConfigError("match threshold must be positive");
  std::vector<MatchPair> pairs;
  if (mode == MatchMode::Greedy) {
    std::vector<MatchPair> cand;
    for (std::size_t g = 0; g < gt.size(); ++g)
      for (std::size_t p = 0; p < pred.size(); ++p) {
        const double d = distance(pred[p], gt[g]);
        if (d < threshold) cand.push_back({g, p, d});
      }
    std::sort(cand.begin(), cand.end(), [](const MatchPair& a, const MatchPair& b) {
      return std::tie(a.distance, a.gt, a.pred) < std::tie(b.distance, b.gt, b.pred);
    });
    std::vector<char> gt_used(gt.size(), 0), pred_used(pred.size(), 0);
    for (const auto& c : cand) {
      if (gt_used[c.gt] || pred_used[c.pred]) continue;
      gt_used[c.gt] = pred_used[c.pred] = 1;
      pairs.push_back(c);
    }
    return detail::make_report(std::move(pairs), pred.size(), gt.size(), threshold);
  }

  // Only points with at least one partner within the threshold can match.
  std::vector<std::size_t> gi, pi;
  {
    std::vector<char> pred_near(pred.size(), 0);
    for (std::size_t g = 0; g < gt.size(); ++g) {
      bool near = false;
      for (std::size_t p = 0; p < pred.size(); ++p)
        if (distance(pred[p], gt[g]) < threshold) {
          near = true;
          pred_near[p] = 1;
        }
      if (near) gi.push_back(g);
    }
    for (std::size_t p = 0; p < pred.size(); ++p)
      if (pred_near[p]) pi.push_back(p);
  }
  auto cost = [&](std::size_t i, std::size_t j) {
    const double d = distance(pred[pi[j]], gt[gi[i]]);
    return d < threshold ? LexCost{-1, d} : LexCost{0, 0.0};
  };
  const auto col = hungarian_rectangular<LexCost>(gi.size(), pi.size(), cost);
  for (std::size_t i = 0; i < gi.size(); ++i) {
    if (col[i] == static_cast<std::size_t>(-1)) continue;
    const double d = distance(pred[pi[col[i]]], gt[gi[i]]);
    if (d < threshold) pairs.push_back({gi[i], pi[col[i]], d});
  }
  return detail::make_report(std::move(pairs), pred.size(), gt.size(), threshold);
}

/// Raw counts that aggregate across frames by summation.
struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double score_sum = 0.0;  // sum of (1 - d / t) over matches

  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    score_sum += o.score_sum;
    return *this;
  }
  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

inline MatchCounts counts_of(const MatchReport& r) {
  MatchCounts c{r.tp, r.fp, r.fn, 0.0};
  for (double d : r.matched_distances) c.score_sum += 1.0 - d / r.threshold;
  return c;
}

inline double moda(const MatchCounts& c) {
  if (c.tp + c.fn == 0) throw UndefinedMetric("MODA needs at least one ground-truth point");
  return 1.0 - static_cast<double>(c.fp + c.fn) / static_cast<double>(c.tp + c.fn);
}
inline double moda(const MatchReport& r) { return moda(counts_of(r)); }

inline double modp(const MatchCounts& c) {
  if (c.tp == 0) throw UndefinedMetric("MODP needs at least one match");
  return c.score_sum / static_cast<double>(c.tp);
}
inline double modp(const MatchReport& r) { return modp(counts_of(r)); }

inline double precision(const MatchCounts& c) {
  if (c.tp + c.fp == 0) throw UndefinedMetric("precision needs at least one prediction");
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}
inline double recall(const MatchCounts& c) {
  if (c.tp + c.fn == 0) throw UndefinedMetric("recall needs at least one ground-truth point");
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline PrecisionRecall precision_recall_f1(const MatchCounts& c) {
  PrecisionRecall out;
  out.precision = precision(c);
  out.recall = recall(c);
  const double s = out.precision + out.recall;
  out.f1 = s == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / s;
  return out;
}
inline PrecisionRecall precision_recall_f1(const MatchReport& r) {
  return precision_recall_f1(counts_of(r));
}

/// All localization metrics of some counts; undefined ones are empty.
struct LocalizationMetrics {
  std::optional<double> moda, modp, precision, recall, f1;
};

inline LocalizationMetrics localization_metrics(const MatchCounts& c) {
  LocalizationMetrics m;
  auto attempt = [](auto fn) -> std::optional<double> {
    try {
      return fn();
    } catch (const UndefinedMetric&) {
      return std::nullopt;
    }
  };
  m.moda = attempt([&] { return moda(c); });
  m.modp = attempt([&] { return modp(c); });
  m.precision = attempt([&] { return precision(c); });
  m.recall = attempt([&] { return recall(c); });
  if (m.precision && m.recall) m.f1 = precision_recall_f1(c).f1;
  return m;
}

// ---------------------------------------------------------------------------
// Counting

enum class Density { Sparse, Medium, Congested };
inline constexpr std::array<std::string_view, 3> kDensityNames = {"sparse", "medium",
                                                                  "congested"};
inline std::string_view to_string(Density d) {
  return kDensityNames[static_cast<std::size_t>(d)];
}

/// Sparse below 400 people, Medium 400 to 699, Congested 700 and above.
inline Density density_bucket(double gt_count) {
  if (gt_count < 400.0) return Density::Sparse;
  if (gt_count < 700.0) return Density::Medium;
  return Density::Congested;
}

struct CountingErrors {
  double mae = 0.0;
  double mse = 0.0;  // root of the mean squared error
  std::optional<double> nae;  // over frames with a non-zero ground truth
  bool nae_complete = true;   // false when some frames had zero ground truth
  std::size_t n_frames = 0;
};

struct CountingStats : CountingErrors {
  std::array<std::optional<CountingErrors>, 3> buckets;

  const std::optional<CountingErrors>& bucket(Density d) const {
    return buckets[static_cast<std::size_t>(d)];
  }
};

namespace detail {

inline CountingErrors counting_errors(std::span<const double> pred,
                                      std::span<const double> gt) {
  CountingErrors e;
  e.n_frames = gt.size();
  const double n = static_cast<double>(gt.size());
  double abs_sum = 0.0, sq_sum = 0.0, nae_sum = 0.0;
  std::size_t nae_n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double err = gt[i] - pred[i];
    abs_sum += std::abs(err);
    sq_sum += err * err;
    if (gt[i] > 0.0) {
      nae_sum += std::abs(err) / gt[i];
      ++nae_n;
    }
  }
  e.mae = abs_sum / n;
  e.mse = std::sqrt(sq_sum / n);
  e.nae_complete = nae_n == gt.size();
  if (nae_n > 0) e.nae = nae_sum / static_cast<double>(nae_n);
  return e;
}

}  // namespace detail

/// MAE, root-form MSE and NAE of predicted against ground-truth counts, overall
/// and per density bucket of the ground truth.
inline CountingStats counting_stats(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size())
    throw ShapeMismatch("counting_stats: " + std::to_string(pred.size()) + " predictions for " +
                        std::to_string(gt.size()) + " frames");
  if (gt.empty()) throw UndefinedMetric("counting_stats needs at least one frame");
  for (std::size_t i = 0; i < gt.size(); ++i)
    if (!std::isfinite(pred[i]) || !std::isfinite(gt[i]) || gt[i] < 0.0)
      throw ConfigError("counts must be finite and ground truth non-negative");
  CountingStats s;
  static_cast<CountingErrors&>(s) = detail::counting_errors(pred, gt);
  for (std::size_t b = 0; b < 3; ++b) {
    std::vector<double> bp, bg;
    for (std::size_t i = 0; i < gt.size(); ++i)
      if (static_cast<std::size_t>(density_bucket(gt[i])) == b) {
        bp.push_back(pred[i]);
        bg.push_back(gt[i]);
      }
    if (!bg.empty()) s.buckets[b] = detail::counting_errors(bp, bg);
  }
  return s;
}

/// Mean of squared differences between two maps of the same shape.
inline double mean_squared_difference(const GridMap& a, const GridMap& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("maps differ in shape");
  if (a.values.empty()) throw UndefinedMetric("empty maps");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = static_cast<double>(a.values[i]) - b.values[i];
    s += d * d;
  }
  return s / static_cast<double>(a.values.size());
}

}  // namespace mvforge
