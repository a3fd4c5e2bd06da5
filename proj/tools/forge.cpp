// forge: generate, evaluate, and inspect multi-view crowd datasets.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvforge/mvforge.hpp"

namespace fs = std::filesystem;
using namespace mvforge;

namespace {

constexpr int kUserError = 1;
constexpr int kInternalError = 2;

unsigned resolve_threads(std::optional<unsigned> flag) {
  if (flag) return std::max(1u, *flag);
  if (const char* env = std::getenv("MVFORGE_THREADS"); env && *env) {
    unsigned v = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v == 0)
      throw ConfigError("MVFORGE_THREADS must be a positive integer");
    return v;
  }
  return 1;
}

std::string json_real(double v) {
  return Json(v).dump();
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::optional<fs::path> config;
  fs::path out;
  std::optional<int> scenes, frames, views, count_min, count_max;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::vector<std::string> settings;
  bool plan_only = false;
};

int cmd_generate(const GenerateArgs& args) {
  GeneratorConfig config;
  if (args.config) config = load_config(*args.config, config);
  config.seed = seed_from_environment(config.seed);
  for (const auto& s : args.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    apply_setting(config, std::string_view(s).substr(0, eq), std::string_view(s).substr(eq + 1),
                  "--set");
  }
  if (args.scenes) config.scenes = *args.scenes;
  if (args.frames) config.frames_per_scene = *args.frames;
  if (args.views) config.views = *args.views;
  if (args.count_min) config.count_min = *args.count_min;
  if (args.count_max) config.count_max = *args.count_max;
  if (args.seed) config.seed = *args.seed;
  validate(config);
  const unsigned threads = resolve_threads(args.threads);

  fs::create_directories(args.out);
  const fs::path marker = args.out / "INCOMPLETE";
  write_file_bytes(marker, "generation did not finish\n");
  write_file_bytes(args.out / "resolved_config.txt", to_text(config));
  try {
    if (args.plan_only) {
      DatasetManifest m;
      m.seed = config.seed;
      m.config = config;
      m.scenes = plan_scenes(config);
      write_dataset(args.out, m);
      fs::remove(marker);
      std::cout << "planned " << m.scenes.size() << " scenes\n";
      return 0;
    }
    const DatasetManifest m = generate_dataset(config, args.out, threads);
    fs::remove(marker);
    const GenerationSummary s = summarize(m);
    std::cout << "scenes " << s.scenes << "\nframes " << s.frames << "\nview_annotations "
              << s.view_annotations << "\npersons " << s.persons << "\nsplits train "
              << s.split_scenes[0] << " val " << s.split_scenes[1] << " test "
              << s.split_scenes[2] << "\n";
  } catch (const std::exception& e) {
    write_file_bytes(marker, std::string(e.what()) + "\n");
    throw;
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  fs::path dataset, pred, out;
  std::string space = "image";
  std::optional<double> threshold, score_threshold;
  bool greedy = false;
  std::optional<unsigned> threads;
};

int cmd_evaluate(const EvaluateArgs& args) {
  EvalOptions options;
  options.space = args.space == "ground" ? EvalSpace::Ground : EvalSpace::Image;
  options.threshold = args.threshold;
  options.score_threshold = args.score_threshold;
  options.mode = args.greedy ? MatchMode::Greedy : MatchMode::Optimal;
  options.threads = resolve_threads(args.threads);
  if (!fs::is_directory(args.pred)) throw FormatError(args.pred.string(), 0, "prediction directory");
  const DatasetManifest m = read_dataset(args.dataset, {.verify_files = false});
  const fs::path root = fs::is_directory(args.dataset) ? args.dataset : args.dataset.parent_path();
  const EvaluationResult r = evaluate_dataset(root, m, args.pred, options);

  fs::create_directories(args.out);
  write_file_bytes(args.out / "per_frame.jsonl", evaluation_jsonl(r));
  write_file_bytes(args.out / "summary.csv", evaluation_csv(r));
  Json run;
  run["dataset"] = args.dataset.string();
  run["pred"] = args.pred.string();
  run["space"] = to_string(options.space);
  run["threshold"] = r.threshold;
  run["score_threshold"] = args.score_threshold ? Json(*args.score_threshold) : Json(nullptr);
  run["matching"] = args.greedy ? "greedy" : "optimal";
  write_file_bytes(args.out / "run_config.json", run.dump(1) + "\n");
  std::cout << evaluation_csv(r);
  return 0;
}

// ---------------------------------------------------------------------------

struct StatsArgs {
  fs::path dataset, out;
  int bin = kDefaultHistogramBin;
};

int cmd_stats(const StatsArgs& args) {
  const DatasetManifest m = read_dataset(args.dataset, {.verify_files = false});
  const DatasetStats s = compute_stats(m, args.bin);
  fs::create_directories(args.out);
  for (const auto& f : stats_files(s)) write_file_bytes(args.out / f.name, f.content);
  Json run;
  run["dataset"] = args.dataset.string();
  run["bin"] = args.bin;
  write_file_bytes(args.out / "run_config.json", run.dump(1) + "\n");
  std::cout << dataset_card_csv(s);
  return 0;
}

// ---------------------------------------------------------------------------

struct FuseArgs {
  fs::path dataset, out;
  int scene = 0;
  std::optional<int> frame;
  std::vector<fs::path> maps, attention;
  std::vector<int> views;
  double height = kHeadHeight;
  std::optional<unsigned> threads;
};

int cmd_fuse(const FuseArgs& args) {
  const DatasetManifest m = read_dataset(args.dataset, {.verify_files = false});
  const fs::path root = fs::is_directory(args.dataset) ? args.dataset : args.dataset.parent_path();
  const ScenePlan& plan = m.scene(args.scene);

  std::vector<fs::path> map_paths = args.maps;
  if (args.frame) {
    const FrameEntry* entry = nullptr;
    for (const auto& f : m.frames)
      if (f.scene_id == args.scene && f.frame.frame_id == *args.frame) entry = &f;
    if (!entry)
      throw ConfigError("no frame " + std::to_string(*args.frame) + " in scene " +
                        std::to_string(args.scene));
    if (entry->files.view_maps.empty())
      throw ConfigError("frame has no view density maps (generate with view_maps=true)");
    for (const auto& rel : entry->files.view_maps) map_paths.push_back(root / rel);
  }
  std::vector<Camera> cameras;
  if (args.views.empty()) {
    cameras = plan.cameras;
  } else {
    for (int id : args.views) {
      auto it = std::find_if(plan.cameras.begin(), plan.cameras.end(),
                             [&](const Camera& c) { return c.id == id; });
      if (it == plan.cameras.end())
        throw ConfigError("scene " + std::to_string(args.scene) + " has no camera " +
                          std::to_string(id));
      cameras.push_back(*it);
    }
  }
  if (map_paths.size() != cameras.size())
    throw ShapeMismatch(std::to_string(map_paths.size()) + " maps for " +
                        std::to_string(cameras.size()) + " cameras");
  if (!args.attention.empty() && args.attention.size() != map_paths.size())
    throw ShapeMismatch(std::to_string(args.attention.size()) + " attention maps for " +
                        std::to_string(map_paths.size()) + " view maps");

  std::vector<GridMap> stack, attention;
  for (const auto& p : map_paths) stack.push_back(read_map(p));
  for (const auto& p : args.attention) attention.push_back(read_map(p));
  if (attention.empty()) attention = uniform_attention(stack);
  const GridMap fused =
      ground_pipeline(stack, attention, cameras, plan.grid, args.height, resolve_threads(args.threads));

  fs::create_directories(args.out);
  write_map(args.out / "fused.map", fused);
  Json run;
  run["dataset"] = args.dataset.string();
  run["scene"] = args.scene;
  run["frame"] = args.frame ? Json(*args.frame) : Json(nullptr);
  Json maps = Json::array();
  for (const auto& p : map_paths) maps.push_back(p.string());
  run["maps"] = maps;
  Json att = Json::array();
  for (const auto& p : args.attention) att.push_back(p.string());
  run["attention"] = att;
  Json ids = Json::array();
  for (const auto& c : cameras) ids.push_back(c.id);
  run["views"] = ids;
  run["height"] = args.height;
  write_file_bytes(args.out / "run_config.json", run.dump(1) + "\n");
  std::cout << "fused " << stack.size() << " views onto a " << fused.rows << "x" << fused.cols
            << " grid, mass " << json_real(fused.sum()) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct OtArgs {
  fs::path pred, gt;
  double epsilon = 0.1;
  double tau = 10.0;
  std::optional<double> tau_a, tau_b;
  std::string cost = "exp";
  double scale = 1.0;
  int max_iters = 500;
  double tol = 1e-6;
};

int cmd_ot_loss(const OtArgs& args) {
  const GridMap pred = read_map(args.pred);
  std::vector<MapPoint> gt;
  for (const auto& e : read_dots(args.gt))
    if (e.visible) gt.push_back({e.v * args.scale, e.u * args.scale});
  OtParams params = OtParams::with_tau(args.epsilon, args.tau);
  if (args.tau_a) params.tau_a = *args.tau_a;
  if (args.tau_b) params.tau_b = *args.tau_b;
  params.max_iters = args.max_iters;
  params.tol = args.tol;
  const CostKind kind = args.cost == "l2"     ? CostKind::Euclidean
                        : args.cost == "l2sq" ? CostKind::SquaredEuclidean
                                              : CostKind::ExpEuclidean;
  const LocalizationLoss r = localization_loss(pred, gt, params, kind);
  Json j;
  j["objective"] = r.loss;
  j["marginal_residual_a"] = r.solution.marginal_residual_a;
  j["marginal_residual_b"] = r.solution.marginal_residual_b;
  j["iterations"] = r.solution.iterations;
  j["converged"] = r.solution.converged;
  j["support"] = r.support;
  j["gt_points"] = gt.size();
  j["pruned_mass"] = r.pruned_mass;
  j["clamped_pairs"] = r.clamped_pairs;
  j["epsilon"] = params.epsilon;
  j["tau_a"] = params.tau_a;
  j["tau_b"] = params.tau_b;
  j["cost"] = to_string(kind);
  std::cout << j.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic multi-view crowd dataset generator and evaluator"};
  app.name("forge");
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a dataset (manifest and per-frame files)");
  g->add_option("--config", gen.config, "Config file of 'key = value' lines")->check(CLI::ExistingFile);
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--scenes", gen.scenes, "Number of scenes");
  g->add_option("--frames", gen.frames, "Frames per scene");
  g->add_option("--views", gen.views, "Cameras per scene");
  g->add_option("--count-min", gen.count_min, "Smallest crowd per frame");
  g->add_option("--count-max", gen.count_max, "Largest crowd per frame");
  g->add_option("--seed", gen.seed, "Master seed (overrides MVFORGE_SEED and the config)");
  g->add_option("--set", gen.settings, "Extra config setting key=value (repeatable)");
  g->add_option("--threads", gen.threads, "Worker threads (default MVFORGE_THREADS or 1)");
  g->add_flag("--plan-only", gen.plan_only, "Write the scene plan manifest without frames");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score predictions against a dataset");
  e->add_option("--dataset", ev.dataset, "Dataset directory or manifest.json")->required();
  e->add_option("--pred", ev.pred, "Prediction directory")->required();
  e->add_option("--space", ev.space, "image (pixels) or ground (meters)")
      ->check(CLI::IsMember({"image", "ground"}));
  e->add_option("--threshold", ev.threshold, "Match distance threshold (default 3 px or 0.5 m)")
      ->check(CLI::PositiveNumber);
  e->add_option("--score-threshold", ev.score_threshold, "Drop predictions scoring below this");
  e->add_flag("--greedy", ev.greedy, "Greedy nearest-first matching instead of optimal");
  e->add_option("--threads", ev.threads, "Worker threads (default MVFORGE_THREADS or 1)");
  e->add_option("--out", ev.out, "Output directory")->required();

  StatsArgs st;
  auto* s = app.add_subcommand("stats", "Count, weather and time-of-day statistics");
  s->add_option("--dataset", st.dataset, "Dataset directory or manifest.json")->required();
  s->add_option("--bin", st.bin, "Histogram bin width in persons")->check(CLI::PositiveNumber);
  s->add_option("--out", st.out, "Output directory")->required();

  FuseArgs fu;
  auto* f = app.add_subcommand("fuse", "Project view maps to the ground plane and max-fuse them");
  f->add_option("--dataset", fu.dataset, "Dataset directory or manifest.json")->required();
  f->add_option("--scene", fu.scene, "Scene id")->required();
  auto* maps_opt = f->add_option("--maps", fu.maps, "View maps, one per camera");
  auto* frame_opt = f->add_option("--frame", fu.frame, "Use the view density maps of this frame");
  maps_opt->excludes(frame_opt);
  f->add_option("--attention", fu.attention, "Attention logit maps, one per view map");
  f->add_option("--views", fu.views, "Camera ids of the maps (default: all cameras in order)");
  f->add_option("--height", fu.height, "Height of the projection plane in meters");
  f->add_option("--threads", fu.threads, "Worker threads (default MVFORGE_THREADS or 1)");
  f->add_option("--out", fu.out, "Output directory")->required();

  OtArgs ot;
  auto* o = app.add_subcommand("ot-loss", "Unbalanced OT loss of a density map against dots");
  o->add_option("--pred", ot.pred, "Predicted density map")->required();
  o->add_option("--gt", ot.gt, "Ground-truth .dots file (visible entries are used)")->required();
  o->add_option("--epsilon", ot.epsilon, "Entropic weight")->check(CLI::PositiveNumber);
  o->add_option("--tau", ot.tau, "Marginal penalty weight for both marginals");
  o->add_option("--tau-a", ot.tau_a, "Source marginal weight (overrides --tau)");
  o->add_option("--tau-b", ot.tau_b, "Target marginal weight (overrides --tau)");
  o->add_option("--cost", ot.cost, "exp, l2 or l2sq")->check(CLI::IsMember({"exp", "l2", "l2sq"}));
  o->add_option("--scale", ot.scale, "Map cells per dots unit (e.g. 0.25 for quarter-size maps)")
      ->check(CLI::PositiveNumber);
  o->add_option("--max-iters", ot.max_iters, "Solver iteration limit")->check(CLI::PositiveNumber);
  o->add_option("--tol", ot.tol, "Solver tolerance")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kUserError;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*e) return cmd_evaluate(ev);
    if (*s) return cmd_stats(st);
    if (*f) return cmd_fuse(fu);
    if (*o) return cmd_ot_loss(ot);
  } catch (const Error& err) {
    std::cerr << "forge: " << err.what() << "\n";
    return kUserError;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "forge: " << err.what() << "\n";
    return kUserError;
  } catch (const std::exception& err) {
    std::cerr << "forge: internal error: " << err.what() << "\n";
    return kInternalError;
  }
  return kInternalError;
}
