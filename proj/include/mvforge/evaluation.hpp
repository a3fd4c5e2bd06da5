#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvforge/dataset_io.hpp"
#include "mvforge/fusion.hpp"
#include "mvforge/metrics.hpp"

namespace mvforge {

enum class EvalSpace { Image, Ground };

inline std::string_view to_string(EvalSpace s) {
  return s == EvalSpace::Image ? "image" : "ground";
}

struct ScoredPoint {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> score;
};

/// One point per line: "x y" or "x y score"; blank lines and '#' comments
/// are skipped.
inline std::vector<ScoredPoint> parse_points(std::string_view text, const std::string& file) {
  std::vector<ScoredPoint> points;
  detail::TextCursor cur(text, file);
  while (!cur.at_end()) {
    ScoredPoint p;
    p.x = cur.number<double>("real coordinate");
    p.y = cur.number<double>("real coordinate");
    if (!cur.at_line_end()) p.score = cur.number<double>("real score");
    cur.end_line("point");
    points.push_back(p);
  }
  return points;
}

inline std::vector<ScoredPoint> read_points(const fs::path& path) {
  return parse_points(read_file_bytes(path), path.string());
}

inline std::string format_points(const std::vector<ScoredPoint>& points) {
  std::string out;
  char buf[64];
  for (const auto& p : points) {
    out.append(buf, std::to_chars(buf, buf + sizeof(buf), p.x).ptr);
    out += ' ';
    out.append(buf, std::to_chars(buf, buf + sizeof(buf), p.y).ptr);
    if (p.score) {
      out += ' ';
      out.append(buf, std::to_chars(buf, buf + sizeof(buf), *p.score).ptr);
    }
    out += '\n';
  }
  return out;
}

/// Prediction file of one evaluation unit, relative to the prediction root:
/// scene_<s>/frame_<f>/view_<camera>.txt in image space, .../ground.txt on
/// the ground plane (meters).
inline std::string prediction_path(int scene_id, int frame_id, std::optional<int> camera_id) {
  return frame_dir(scene_id, frame_id) +
         (camera_id ? "/view_" + std::to_string(*camera_id) + ".txt" : "/ground.txt");
}

struct EvalOptions {
  EvalSpace space = EvalSpace::Image;
  std::optional<double> threshold;  // defaults per space
  std::optional<double> score_threshold;
  MatchMode mode = MatchMode::Optimal;
  unsigned threads = 1;

  double resolved_threshold() const {
    return threshold.value_or(space == EvalSpace::Image ? kImageThreshold : kGroundThreshold);
  }
};

/// Evaluation of one image (image space) or one frame (ground space).
struct UnitResult {
  int scene_id = 0;
  int frame_id = 0;
  std::optional<int> camera_id;
  MatchCounts counts;
  std::size_t gt_count = 0;
  std::size_t pred_count = 0;
};

struct EvalSummaryRow {
  std::string scope;
  std::size_t units = 0;
  MatchCounts counts;
  LocalizationMetrics metrics;
  std::optional<CountingErrors> counting;
};

struct EvaluationResult {
  std::vector<UnitResult> units;
  std::vector<EvalSummaryRow> summary;  // micro, macro, then density buckets
  double threshold = 0.0;
};

/// Ground-truth points of the dataset in the evaluation space.
inline std::vector<Point2d> gt_points(const fs::path& root, const DatasetManifest& m,
                                      const FrameEntry& f, std::optional<std::size_t> view) {
  std::vector<Point2d> pts;
  if (view) {
    for (const auto& e : read_dots(root / f.files.views.at(*view)))
      if (e.visible) pts.push_back({e.u, e.v});
  } else {
    (void)m;
    for (const auto& p : f.frame.persons) pts.push_back({p.position.x, p.position.y});
  }
  return pts;
}

/// Writes the ground truth itself in prediction layout (useful as a
/// reference submission).
inline void write_gt_predictions(const fs::path& dataset_root, const DatasetManifest& m,
                                 const fs::path& out, EvalSpace space) {
  for (const auto& f : m.frames) {
    const ScenePlan& plan = m.scene(f.scene_id);
    const std::size_t units = space == EvalSpace::Image ? f.files.views.size() : 1;
    for (std::size_t v = 0; v < units; ++v) {
      std::optional<std::size_t> view;
      std::optional<int> cam;
      if (space == EvalSpace::Image) {
        view = v;
        cam = plan.cameras.at(v).id;
      }
      std::vector<ScoredPoint> pts;
      for (const auto& p : gt_points(dataset_root, m, f, view)) pts.push_back({p.x, p.y, {}});
      const fs::path path = out / prediction_path(f.scene_id, f.frame.frame_id, cam);
      fs::create_directories(path.parent_path());
      write_file_bytes(path, format_points(pts));
    }
  }
}

namespace detail {

inline EvalSummaryRow summarize(std::string scope, const std::vector<const UnitResult*>& units,
                                bool macro) {
  EvalSummaryRow row;
  row.scope = std::move(scope);
  row.units = units.size();
  std::vector<double> pred, gt;
  for (const auto* u : units) {
    row.counts += u->counts;
    pred.push_back(static_cast<double>(u->pred_count));
    gt.push_back(static_cast<double>(u->gt_count));
  }
  if (!gt.empty()) row.counting = counting_stats(pred, gt);
  if (!macro) {
    row.metrics = localization_metrics(row.counts);
    return row;
  }
  // mean over units where each metric is defined
  std::array<double, 5> sum{};
  std::array<std::size_t, 5> n{};
  for (const auto* u : units) {
    const auto m = localization_metrics(u->counts);
    const std::array<std::optional<double>, 5> vals = {m.moda, m.modp, m.precision, m.recall,
                                                       m.f1};
    for (std::size_t k = 0; k < 5; ++k)
      if (vals[k]) {
        sum[k] += *vals[k];
        ++n[k];
      }
  }
  std::array<std::optional<double>*, 5> out = {&row.metrics.moda, &row.metrics.modp,
                                               &row.metrics.precision, &row.metrics.recall,
                                               &row.metrics.f1};
  for (std::size_t k = 0; k < 5; ++k)
    if (n[k] > 0) *out[k] = sum[k] / static_cast<double>(n[k]);
  return row;
}

}  // namespace detail

/// Matches prediction files under `pred_root` against the dataset's ground
/// truth. Every evaluation unit must have a prediction file.
inline EvaluationResult evaluate_dataset(const fs::path& dataset_root, const DatasetManifest& m,
                                         const fs::path& pred_root, const EvalOptions& options) {
  struct Job {
    const FrameEntry* frame;
    std::optional<std::size_t> view;
    std::optional<int> camera;
  };
  std::vector<Job> jobs;
  for (const auto& f : m.frames) {
    const ScenePlan& plan = m.scene(f.scene_id);
    if (options.space == EvalSpace::Image) {
      for (std::size_t v = 0; v < f.files.views.size(); ++v)
        jobs.push_back({&f, v, plan.cameras.at(v).id});
    } else {
      jobs.push_back({&f, std::nullopt, std::nullopt});
    }
  }
  for (const auto& job : jobs) {
    const fs::path path =
        pred_root / prediction_path(job.frame->scene_id, job.frame->frame.frame_id, job.camera);
    if (!fs::is_regular_file(path)) throw FormatError(path.string(), 0, "prediction file");
  }

  EvaluationResult result;
  result.threshold = options.resolved_threshold();
  result.units.resize(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  detail::parallel_for(jobs.size(), options.threads, [&](std::size_t k) {
    try {
      const Job& job = jobs[k];
      const auto preds = read_points(
          pred_root / prediction_path(job.frame->scene_id, job.frame->frame.frame_id, job.camera));
      std::vector<Point2d> pts;
      for (const auto& p : preds)
        if (!options.score_threshold || !p.score || *p.score >= *options.score_threshold)
          pts.push_back({p.x, p.y});
      const auto gt = gt_points(dataset_root, m, *job.frame, job.view);
      const MatchReport report = match_points(pts, gt, result.threshold, options.mode);
      UnitResult& u = result.units[k];
      u.scene_id = job.frame->scene_id;
      u.frame_id = job.frame->frame.frame_id;
      u.camera_id = job.camera;
      u.counts = counts_of(report);
      u.gt_count = gt.size();
      u.pred_count = pts.size();
    } catch (...) {
      errors[k] = std::current_exception();
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<const UnitResult*> all;
  for (const auto& u : result.units) all.push_back(&u);
  result.summary.push_back(detail::summarize("micro", all, false));
  result.summary.push_back(detail::summarize("macro", all, true));
  for (std::size_t b = 0; b < 3; ++b) {
    std::vector<const UnitResult*> in;
    for (const auto& u : result.units)
      if (static_cast<std::size_t>(density_bucket(static_cast<double>(u.gt_count))) == b)
        in.push_back(&u);
    result.summary.push_back(
        detail::summarize(std::string(kDensityNames[b]), in, false));
  }
  return result;
}

namespace detail {

inline Json optional_json(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline std::string csv_real(const std::optional<double>& v) {
  if (!v) return "";
  char buf[64];
  return std::string(buf, std::to_chars(buf, buf + sizeof(buf), *v).ptr);
}

}  // namespace detail

/// One JSON object per evaluation unit.
inline std::string evaluation_jsonl(const EvaluationResult& r) {
  std::string out;
  for (const auto& u : r.units) {
    Json j;
    j["scene"] = u.scene_id;
    j["frame"] = u.frame_id;
    j["view"] = u.camera_id ? Json(*u.camera_id) : Json(nullptr);
    j["threshold"] = r.threshold;
    j["tp"] = u.counts.tp;
    j["fp"] = u.counts.fp;
    j["fn"] = u.counts.fn;
    const auto m = localization_metrics(u.counts);
    j["moda"] = detail::optional_json(m.moda);
    j["modp"] = detail::optional_json(m.modp);
    j["precision"] = detail::optional_json(m.precision);
    j["recall"] = detail::optional_json(m.recall);
    j["f1"] = detail::optional_json(m.f1);
    j["gt_count"] = u.gt_count;
    j["pred_count"] = u.pred_count;
    out += j.dump() + "\n";
  }
  return out;
}

/// Summary table: one row per scope, empty cells for undefined metrics.
inline std::string evaluation_csv(const EvaluationResult& r) {
  std::string out = "scope,units,tp,fp,fn,moda,modp,precision,recall,f1,mae,nae,mse\n";
  for (const auto& row : r.summary) {
    out += row.scope + "," + std::to_string(row.units) + "," + std::to_string(row.counts.tp) +
           "," + std::to_string(row.counts.fp) + "," + std::to_string(row.counts.fn) + "," +
           detail::csv_real(row.metrics.moda) + "," + detail::csv_real(row.metrics.modp) + "," +
           detail::csv_real(row.metrics.precision) + "," + detail::csv_real(row.metrics.recall) +
           "," + detail::csv_real(row.metrics.f1) + ",";
    if (row.counting)
      out += detail::csv_real(row.counting->mae) + "," + detail::csv_real(row.counting->nae) +
             "," + detail::csv_real(row.counting->mse);
    else
      out += ",,";
    out += "\n";
  }
  return out;
}

}  // namespace mvforge
