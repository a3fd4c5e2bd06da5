// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

#include "oracles.hpp"

using namespace mvforge;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kRoundTripTol = 1e-6;      // meters
constexpr double kRoundTripBudget = 1.0;    // seconds for 1000 cases
constexpr double kRingTol = 1e-9;           // radians
constexpr double kGenerateBudget = 30.0;    // seconds
constexpr double kMassTol = 1e-3;
constexpr double kMetricTol = 1e-12;
constexpr double kOtTol = 1e-3;
constexpr double kOtBudget = 10.0;          // seconds for 50 instances
constexpr double kSoftmaxTol = 1e-6;
constexpr double kChiSquareAlpha = 0.01;
constexpr double kShareTol = 0.01;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << n << ": " << detail << std::endl;
  if (!ok) ++failures;
}

template <typename F>
void run(int n, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(n, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

std::string tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file())
      files[fs::relative(e.path(), root).string()] = read_file_bytes(e.path());
  std::string all;
  for (const auto& [k, v] : files) all += k + "\n" + std::to_string(v.size()) + "\n" + v;
  return all;
}

void criterion_projection() {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> U(-1.0, 1.0), H(0.0, 3.0);
  double worst = 0.0;
  int checked = 0;
  const auto t0 = Clock::now();
  while (checked < 1000) {
    const Camera cam = oracle::random_camera(gen, checked);
    const WorldPoint w{cam.center().x() * 0.1 + 5.0 * U(gen), cam.center().y() * 0.1 + 5.0 * U(gen),
                       H(gen)};
    if (!is_visible(cam, w)) continue;
    const ImagePoint q = project(cam, w);
    const WorldPoint back = backproject_at_height(cam, q, w.z);
    worst = std::max({worst, std::abs(back.x - w.x), std::abs(back.y - w.y), std::abs(back.z - w.z)});
    ++checked;
  }
  const double t = seconds_since(t0);
  report(1, worst < kRoundTripTol && t < kRoundTripBudget,
         "1000 project/back-project round trips, max error " + fmt(worst) + " m in " + fmt(t) + " s");
}

void criterion_cameras() {
  const auto cams = place_default_cameras({60, 60, 0}, 120, CameraLayout{});
  bool ok = cams.size() == 50;
  double worst_orth = 0.0;
  std::set<int> ids;
  for (const auto& c : cams) {
    validate(c);
    worst_orth = std::max(worst_orth,
                          (c.rotation * c.rotation.transpose() - Eigen::Matrix3d::Identity()).norm());
    ids.insert(c.id);
  }
  ok = ok && ids.size() == cams.size() && worst_orth < kRingTol;
  // Equal azimuth gaps within the cardinal group and within the ring.
  auto azimuth = [](const Camera& c) {
    const Eigen::Vector3d p = c.center();
    return std::atan2(p.y() - 60.0, p.x() - 60.0);
  };
  double worst_gap = 0.0;
  auto check_group = [&](std::size_t from, std::size_t count) {
    const double step = 2.0 * std::numbers::pi / static_cast<double>(count);
    for (std::size_t k = 0; k < count; ++k) {
      double gap = azimuth(cams[from + (k + 1) % count]) - azimuth(cams[from + k]);
      gap = std::remainder(gap, 2.0 * std::numbers::pi);
      if (gap < 0) gap += 2.0 * std::numbers::pi;
      worst_gap = std::max(worst_gap, std::abs(gap - step));
    }
  };
  if (cams.size() == 50) {
    check_group(0, 4);
    check_group(4, 46);
  }
  ok = ok && worst_gap < kRingTol;
  report(2, ok,
         std::to_string(cams.size()) + " cameras, orthonormality error " + fmt(worst_orth) +
             ", azimuth gap error " + fmt(worst_gap));
}

struct Fixture {
  fs::path root;
  GeneratorConfig config;
  DatasetManifest manifest;
};

void criterion_generate(Fixture& fx) {
  fx.config = GeneratorConfig{};
  fx.config.scenes = 5;
  fx.config.frames_per_scene = 10;
  fx.config.views = 8;
  fx.config.seed = 20240611;
  const auto t0 = Clock::now();
  fx.manifest = generate_dataset(fx.config, fx.root / "a", 1);
  const double t = seconds_since(t0);

  std::array<int, 3> splits{};
  for (const auto& s : fx.manifest.scenes) ++splits[static_cast<std::size_t>(s.split)];
  bool counts_ok = fx.manifest.frames.size() == 50;
  bool identity_ok = true;
  std::size_t max_area = 0;
  for (const auto& f : fx.manifest.frames) {
    const int n = static_cast<int>(f.frame.persons.size());
    counts_ok = counts_ok && n >= 200 && n <= 1000 && f.files.views.size() == 8;
    const auto& plan = fx.manifest.scene(f.scene_id);
    const AreaPartition part = partition_frame(f.frame, plan.scene, fx.config.capacity);
    for (const auto& a : part.areas) max_area = std::max(max_area, a.persons.size());
    identity_ok = identity_ok && merge_areas(part) == f.frame.persons;
  }
  identity_ok = identity_ok && max_area <= static_cast<std::size_t>(fx.config.capacity);

  generate_dataset(fx.config, fx.root / "b", 1);
  const bool same = tree_bytes(fx.root / "a") == tree_bytes(fx.root / "b");

  const bool ok = t < kGenerateBudget && splits == std::array<int, 3>{3, 1, 1} && counts_ok &&
                  identity_ok && same;
  report(3, ok,
         "5x10x8 dataset in " + fmt(t) + " s, splits " + std::to_string(splits[0]) + "/" +
             std::to_string(splits[1]) + "/" + std::to_string(splits[2]) + ", counts " +
             (counts_ok ? "in range" : "OUT OF RANGE") + ", split-merge " +
             (identity_ok ? "identity" : "MISMATCH") + " (largest area " +
             std::to_string(max_area) + "), rerun " + (same ? "byte-identical" : "DIFFERS"));
}

void criterion_density_mass() {
  std::mt19937_64 gen(404);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int rows = 20 + static_cast<int>(gen() % 200), cols = 20 + static_cast<int>(gen() % 200);
    const std::size_t n = gen() % 1001;
    std::uniform_real_distribution<double> R(0.0, rows), C(0.0, cols), U(0.0, 1.0);
    std::vector<MapPoint> pts;
    for (std::size_t i = 0; i < n; ++i) {
      // a quarter of the points hug the border
      if (U(gen) < 0.25)
        pts.push_back({U(gen) < 0.5 ? 0.01 : rows - 0.01, C(gen)});
      else
        pts.push_back({R(gen), C(gen)});
    }
    const double sigma = 0.5 + 4.0 * U(gen);
    const GridMap m = render_density_map(pts, rows, cols, sigma);
    worst = std::max(worst, std::abs(m.sum() - static_cast<double>(n)));
  }
  report(4, worst < kMassTol, "100 density maps, max |sum - count| " + fmt(worst));
}

void criterion_matching() {
  std::mt19937_64 gen(505);
  std::uniform_real_distribution<double> P(0.0, 20.0);
  int mismatches = 0;
  double worst_formula = 0.0;
  for (int k = 0; k < 200; ++k) {
    std::vector<Point2d> pred(gen() % 13), gt(1 + gen() % 12);
    for (auto& p : pred) p = {P(gen), P(gen)};
    for (auto& p : gt) p = {P(gen), P(gen)};
    const double t = 2.0 + 4.0 * (gen() % 1000) / 1000.0;
    const auto r = match_points(pred, gt, t);
    const auto o = oracle::brute_force_match(pred, gt, t);
    if (r.tp != o.tp || r.fp != pred.size() - o.tp || r.fn != gt.size() - o.tp ||
        std::abs(r.total_distance() - o.total) > 1e-12 * std::max(1.0, o.total))
      ++mismatches;
    const double tp = r.tp, fp = r.fp, fn = r.fn;
    worst_formula = std::max(worst_formula, std::abs(moda(r) - (1.0 - (fp + fn) / (tp + fn))));
    if (!pred.empty()) {
      const auto pr = precision_recall_f1(r);
      worst_formula = std::max(worst_formula, std::abs(pr.precision - tp / (tp + fp)));
      worst_formula = std::max(worst_formula, std::abs(pr.recall - tp / (tp + fn)));
      if (pr.precision + pr.recall > 0)
        worst_formula = std::max(worst_formula,
                                 std::abs(pr.f1 - 2 * pr.precision * pr.recall /
                                                      (pr.precision + pr.recall)));
    }
    if (r.tp > 0) {
      double s = 0.0;
      for (double d : r.matched_distances) s += 1.0 - d / t;
      worst_formula = std::max(worst_formula, std::abs(modp(r) - s / tp));
    }
  }
  report(5, mismatches == 0 && worst_formula < kMetricTol,
         "200 matching instances vs exhaustive search, " + std::to_string(mismatches) +
             " mismatches, max formula error " + fmt(worst_formula));
}

void criterion_counting() {
  const std::vector<double> gt = {100, 200}, pred = {110, 190};
  const auto s = counting_stats(pred, gt);
  bool ok = std::abs(s.mae - 10.0) < kMetricTol && std::abs(s.mse - 10.0) < kMetricTol &&
            s.nae && std::abs(*s.nae - 0.075) < kMetricTol;
  ok = ok && density_bucket(399) == Density::Sparse && density_bucket(400) == Density::Medium &&
       density_bucket(699) == Density::Medium && density_bucket(700) == Density::Congested;
  const std::vector<double> bg = {399, 400, 699, 700}, bp = {399, 401, 699, 703};
  const auto b = counting_stats(bp, bg);
  ok = ok && b.bucket(Density::Sparse) && b.bucket(Density::Sparse)->n_frames == 1 &&
       b.bucket(Density::Medium) && b.bucket(Density::Medium)->n_frames == 2 &&
       std::abs(b.bucket(Density::Medium)->mae - 0.5) < kMetricTol &&
       b.bucket(Density::Congested) && std::abs(b.bucket(Density::Congested)->mae - 3.0) < kMetricTol;
  report(6, ok,
         "counting hand case MAE " + fmt(s.mae) + ", MSE " + fmt(s.mse) + ", NAE " +
             fmt(s.nae.value_or(-1)) + ", bucket edges 399/400/699/700");
}

void criterion_ot() {
  std::mt19937_64 gen(707);
  std::uniform_real_distribution<double> P(0.0, 3.0), M(0.0, 1.5);
  double worst = 0.0;
  std::size_t trace_violations = 0, raw_violations = 0;
  double solve_time = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int n = 1 + static_cast<int>(gen() % 6), m = 1 + static_cast<int>(gen() % 6);
    std::vector<Point2d> src(n), dst(m);
    for (auto& p : src) p = {P(gen), P(gen)};
    for (auto& p : dst) p = {P(gen), P(gen)};
    const Eigen::MatrixXd C = build_cost(src, dst, CostKind::ExpEuclidean);
    Eigen::VectorXd a(n), b = Eigen::VectorXd::Ones(m);
    for (auto& v : a) v = M(gen);
    OtParams params;
    params.keep_trace = true;
    const auto t0 = Clock::now();
    const auto s = solve_ot(C, a, b, params);
    solve_time += seconds_since(t0);
    const auto o = oracle::projected_gradient_dual(C, a, b, params.epsilon, params.tau_a,
                                                   params.tau_b);
    worst = std::max(worst, std::abs(s.objective - o.dual));
    for (std::size_t i = 1; i < s.trace.size(); ++i) {
      if (s.trace[i] > s.trace[i - 1] + 1e-12) ++trace_violations;
      if (s.raw_trace[i] > s.raw_trace[i - 1] + 1e-12) ++raw_violations;
    }
  }
  Eigen::MatrixXd C = Eigen::MatrixXd::Constant(2, 3, 1.0);
  Eigen::VectorXd a(2), b(3);
  a << 0.5, 2.0;
  b << 1.0, 1.0, 3.0;
  const OtParams p;
  const double zero = evaluate_objective(C, Eigen::MatrixXd::Zero(2, 3), a, b, p);
  const double analytic = p.tau_a * a.squaredNorm() + p.tau_b * b.lpNorm<1>();
  const bool ok = worst < kOtTol && trace_violations == 0 && std::abs(zero - analytic) < 1e-12 &&
                  solve_time < kOtBudget;
  report(7, ok,
         "50 OT instances, max |objective - dual optimum| " + fmt(worst) +
             ", incumbent trace increases " + std::to_string(trace_violations) +
             " (raw iterate increases " + std::to_string(raw_violations) + "), zero plan " +
             fmt(zero) + " vs " + fmt(analytic) + ", solve time " + fmt(solve_time) + " s");
}

void criterion_fusion() {
  std::mt19937_64 gen(808);
  std::uniform_real_distribution<float> U(0.0f, 1.0f), L(-6.0f, 6.0f);
  std::vector<GridMap> att, stack;
  for (int v = 0; v < 5; ++v) {
    GridMap a = GridMap::zeros(30, 40), s = GridMap::zeros(30, 40);
    for (auto& x : a.values) x = L(gen);
    for (auto& x : s.values) x = U(gen);
    att.push_back(a);
    stack.push_back(s);
  }
  const auto w = view_weights(att);
  double worst_sum = 0.0;
  for (std::size_t p = 0; p < w[0].values.size(); ++p) {
    double sum = 0.0;
    for (const auto& m : w) sum += m.values[p];
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  const std::vector<GridMap> twice = {stack[0], stack[0]};
  const bool idempotent = fuse_max(twice).values == stack[0].values;
  std::vector<GridMap> shuffled = {stack[3], stack[1], stack[4], stack[0], stack[2]};
  const bool invariant = fuse_max(shuffled).values == fuse_max(stack).values;

  // Toy scene: 20 people on distinct cell centers, 5 cameras, head-height
  // density maps projected at head height and max-fused.
  const GroundGrid grid{0.0, 0.0, 0.5, 24, 24};
  const auto cams = place_camera_ring({6, 6, 0}, 14, 6, -20, 5, 60);
  std::set<std::pair<int, int>> occupied;
  std::vector<WorldPoint> heads;
  while (heads.size() < 20) {
    const int r = 2 + 3 * static_cast<int>(gen() % 7), c = 2 + 3 * static_cast<int>(gen() % 7);
    if (!occupied.insert({r, c}).second) continue;
    heads.push_back(cell_center(grid, {r, c}, kHeadHeight));
  }
  const int map_rows = 270, map_cols = 480;
  std::vector<GridMap> views;
  for (const auto& cam : cams) {
    std::vector<MapPoint> pts;
    for (const auto& h : heads) {
      if (!is_visible(cam, h)) continue;
      const auto q = project(cam, h);
      pts.push_back({q.v * map_rows / cam.image_height, q.u * map_cols / cam.image_width});
    }
    views.push_back(render_density_map(pts, map_rows, map_cols, 1.0));
  }
  const GridMap fused = ground_pipeline(views, uniform_attention(views), cams, grid, kHeadHeight);
  const auto peaks = extract_peaks(fused, 20);
  std::size_t wrong = 0;
  for (const auto& pk : peaks)
    if (!occupied.count({pk.row, pk.col})) ++wrong;

  const bool ok = worst_sum < kSoftmaxTol && idempotent && invariant && peaks.size() == 20 &&
                  wrong == 0;
  report(8, ok,
         "softmax sum error " + fmt(worst_sum) + ", max-fusion " +
             (idempotent ? "idempotent" : "NOT idempotent") + " and " +
             (invariant ? "order-invariant" : "ORDER-DEPENDENT") + ", toy scene " +
             std::to_string(peaks.size()) + " peaks with " + std::to_string(wrong) +
             " off the occupied cells");
}

void criterion_environment() {
  constexpr std::size_t kDraws = 1'000'000;
  CounterRng rng(909);
  const WeatherConfig cfg;
  std::array<std::size_t, kWeatherCount> weather{};
  std::array<std::size_t, kTimePartCount> parts{};
  std::array<std::size_t, kEveningPeriodCount> evening{};
  for (std::size_t i = 0; i < kDraws; ++i) {
    const auto env = sample_environment(rng, cfg, 0.0);
    ++weather[static_cast<std::size_t>(env.weather)];
    ++parts[static_cast<std::size_t>(env.time_part)];
    if (const auto e = evening_period_for_hour(env.hour)) ++evening[static_cast<std::size_t>(*e)];
  }
  const auto probs = weather_probabilities(cfg, 0.0);
  double chi2 = 0.0, worst_weather = 0.0;
  int dof = -1;
  for (std::size_t k = 0; k < kWeatherCount; ++k) {
    const double share = static_cast<double>(weather[k]) / kDraws;
    worst_weather = std::max(worst_weather, std::abs(share - probs[k]));
    if (probs[k] <= 0.0) continue;
    const double expected = probs[k] * kDraws;
    chi2 += (weather[k] - expected) * (weather[k] - expected) / expected;
    ++dof;
  }
  const double p_value =
      boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), chi2));
  double worst_part = 0.0, worst_evening = 0.0;
  for (auto c : parts)
    worst_part = std::max(worst_part, std::abs(static_cast<double>(c) / kDraws - 0.2));
  for (auto c : evening)
    worst_evening = std::max(worst_evening, std::abs(static_cast<double>(c) / kDraws - 0.05));
  const bool ok = p_value > kChiSquareAlpha && worst_weather < kShareTol &&
                  worst_part < kShareTol && worst_evening < kShareTol;
  report(9, ok,
         "1e6 environment draws, weather chi-square p " + fmt(p_value) + ", max share errors " +
             "weather " + fmt(worst_weather) + " time parts " + fmt(worst_part) +
             " evening periods " + fmt(worst_evening));
}

template <typename F>
bool expect_format_error(F&& f, const std::string& file, std::size_t lo, std::size_t hi,
                         std::string& detail) {
  try {
    f();
  } catch (const FormatError& e) {
    const bool ok =
        fs::path(e.file()).filename() == fs::path(file).filename() && e.offset() >= lo &&
        e.offset() <= hi;
    detail += fs::path(file).filename().string() + "@" + std::to_string(e.offset()) +
              (ok ? "" : "(unexpected)") + " ";
    return ok;
  }
  detail += fs::path(file).filename().string() + " NOT REJECTED ";
  return false;
}

void criterion_io(const Fixture& fx) {
  const fs::path root = fx.root / "a";
  bool ok = read_dataset(root) == fx.manifest;
  std::string detail = ok ? "round trip equal, " : "round trip DIFFERS, ";

  const fs::path bad = fx.root / "corrupt";
  fs::remove_all(bad);
  fs::copy(root, bad, fs::copy_options::recursive);

  // Manifest: a value of the wrong form.
  const fs::path mpath = bad / kManifestName;
  std::string text = read_file_bytes(mpath);
  const std::string needle = "\"mvforge-dataset\"";
  const std::size_t at = text.find(needle);
  text.replace(at, needle.size(), "\"not-a-dataset\"");
  write_file_bytes(mpath, text);
  ok = expect_format_error([&] { read_dataset(bad); }, mpath.string(), at, at + needle.size() + 1,
                           detail) &&
       ok;
  write_file_bytes(mpath, read_file_bytes(root / kManifestName));

  // Dots: first character of the second line.
  const auto& frame = fx.manifest.frames.front();
  const fs::path dpath = bad / frame.files.views[0];
  std::string dots = read_file_bytes(dpath);
  const std::size_t line2 = dots.find('\n') + 1;
  dots[line2] = 'q';
  write_file_bytes(dpath, dots);
  ok = expect_format_error([&] { read_dataset(bad); }, dpath.string(), line2, line2, detail) && ok;
  write_file_bytes(dpath, read_file_bytes(root / frame.files.views[0]));

  // Map: truncated payload.
  const fs::path gpath = bad / frame.files.ground_den;
  std::string bytes = read_file_bytes(gpath);
  bytes.resize(bytes.size() - 3);
  write_file_bytes(gpath, bytes);
  ok = expect_format_error([&] { read_dataset(bad); }, gpath.string(), 24, bytes.size(), detail) &&
       ok;
  report(10, ok, detail + "rejected with file and offset");
}

}  // namespace

int main() {
  Fixture fx;
  fx.root = oracle::temp_dir("acceptance");
  run(1, criterion_projection);
  run(2, criterion_cameras);
  bool have_fixture = false;
  run(3, [&] {
    criterion_generate(fx);
    have_fixture = true;
  });
  run(4, criterion_density_mass);
  run(5, criterion_matching);
  run(6, criterion_counting);
  run(7, criterion_ot);
  run(8, criterion_fusion);
  run(9, criterion_environment);
  if (have_fixture)
    run(10, [&] { criterion_io(fx); });
  else
    report(10, false, "no dataset fixture");
  std::error_code ec;
  fs::remove_all(fx.root, ec);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
