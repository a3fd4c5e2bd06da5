// Generates one frame, renders head-point density maps for each camera,
// projects them to the ground, max-fuses, picks peaks and scores them.
#include <cstdio>
#include <cstdlib>

#include "mvforge/mvforge.hpp"

using namespace mvforge;

int main(int argc, char** argv) {
  GeneratorConfig config;
  config.scenes = 1;
  config.frames_per_scene = 1;
  config.views = 6;
  config.count_min = 40;
  config.count_max = 80;
  config.scene_size_min = 30;
  config.scene_size_max = 40;
  config.seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
  validate(config);

  const ScenePlan plan = plan_scenes(config).front();
  const FrameRecord frame = generate_frame(plan, 0, config, nullptr);
  const GroundGrid grid{plan.grid.origin_x, plan.grid.origin_y, 0.5,
                        static_cast<int>(plan.scene.size_y / 0.5),
                        static_cast<int>(plan.scene.size_x / 0.5)};

  const double scale = 0.25;
  const int rows = static_cast<int>(config.image_height * scale);
  const int cols = static_cast<int>(config.image_width * scale);
  std::vector<GridMap> maps;
  for (const auto& view : annotate_views(frame, plan.cameras, {}))
    maps.push_back(render_density_map(visible_points(view, scale), rows, cols, 1.5));

  const GridMap fused = ground_pipeline(maps, uniform_attention(maps), plan.cameras, grid,
                                        kHeadHeight);
  std::vector<Point2d> pred, gt;
  for (const auto& p : extract_peaks(fused, frame.persons.size(), 1e-3)) {
    const WorldPoint w = cell_center(grid, {p.row, p.col}, 0.0);
    pred.push_back({w.x, w.y});
  }
  for (const auto& p : frame.persons) gt.push_back({p.position.x, p.position.y});

  const MatchReport r = match_points(pred, gt, 0.5);
  const auto pr = precision_recall_f1(r);
  std::printf("persons %zu peaks %zu\n", gt.size(), pred.size());
  std::printf("tp %zu fp %zu fn %zu\n", r.tp, r.fp, r.fn);
  std::printf("moda %.3f precision %.3f recall %.3f f1 %.3f\n", moda(r), pr.precision,
              pr.recall, pr.f1);
  return 0;
}
