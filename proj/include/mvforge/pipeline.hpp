#pragma once

#include <array>
#include <atomic>
#include <exception>
#include <filesystem>
#include <thread>
#include <vector>

#include "mvforge/dataset_io.hpp"
#include "mvforge/generator.hpp"

namespace mvforge {

struct GenerationSummary {
  std::size_t scenes = 0;
  std::size_t frames = 0;
  std::size_t view_annotations = 0;
  std::size_t persons = 0;
  std::array<std::size_t, 3> split_scenes{};  // train, val, test
};

inline GenerationSummary summarize(const DatasetManifest& m) {
  GenerationSummary s;
  s.scenes = m.scenes.size();
  s.frames = m.frames.size();
  for (const auto& plan : m.scenes) ++s.split_scenes[static_cast<std::size_t>(plan.split)];
  for (const auto& f : m.frames) {
    s.view_annotations += f.files.views.size();
    s.persons += f.frame.persons.size();
  }
  return s;
}

/// Generates every frame of every scene into `out` on `threads` workers and
/// writes the manifest last. Output does not depend on the thread count.
inline DatasetManifest generate_dataset(const GeneratorConfig& config, const fs::path& out,
                                        unsigned threads = 1) {
  validate(config);
  std::vector<ScenePlan> plans = plan_scenes(config);
  DatasetWriter writer(out, config, plans);
  struct Job {
    std::size_t plan;
    int frame;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < plans.size(); ++p)
    for (int f = 0; f < config.frames_per_scene; ++f) jobs.push_back({p, f});

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::vector<std::exception_ptr> errors(jobs.size());
  auto work = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size() || failed.load()) return;
      try {
        writer.add(build_frame(plans[jobs[k].plan], jobs[k].frame, config));
      } catch (...) {
        errors[k] = std::current_exception();
        failed = true;
      }
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return writer.finish();
}

}  // namespace mvforge
