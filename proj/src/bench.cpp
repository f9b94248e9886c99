#include "headgs/bench.hpp"

#include "headgs/animation.hpp"
#include "headgs/avatar.hpp"
#include "headgs/errors.hpp"
#include "headgs/renderer.hpp"

#include <fmt/format.h>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <functional>

namespace headgs {

namespace {

StageTiming time_stage(int runs, int n_frames, const std::function<void()>& body) {
  StageTiming t;
  for (int r = 0; r < runs; ++r) {
    const auto start = std::chrono::steady_clock::now();
    body();
    t.run_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  auto sorted = t.run_seconds;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  t.median_seconds = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  t.seconds_per_frame = t.median_seconds / n_frames;
  t.fps = t.seconds_per_frame > 0.0 ? 1.0 / t.seconds_per_frame : 0.0;
  return t;
}

nlohmann::json stage_json(const StageTiming& t) {
  return {{"run_seconds", t.run_seconds},
          {"median_seconds", t.median_seconds},
          {"seconds_per_frame", t.seconds_per_frame},
          {"fps", t.fps}};
}

}  // namespace

BenchReport bench(const HeadModel& model, const BoundCloud& cloud, const BenchOptions& options) {
  if (options.n_frames < 0) throw ConfigError("n_frames must not be negative");
  if (options.runs <= 0) throw ConfigError("runs must be positive");
  BenchReport report;
  report.n_frames = options.n_frames;
  report.points = cloud.size();
  report.threads = omp_get_max_threads();
  report.camera = options.camera;
  if (options.n_frames == 0) return report;

  const auto seq = synthetic_sequence(model, options.n_frames, options.seed);
  std::vector<WorldGaussians> posed;
  for (const auto& f : seq.frames) posed.push_back(pose_avatar(model, cloud, f).world);

  for (int res : options.resolutions) {
    if (res <= 0) throw ConfigError("bench resolutions must be positive");
    CameraSample cs = options.camera;
    cs.width = cs.height = res;
    const Camera cam = Camera::from_sample(cs);
    BenchResolution r;
    r.resolution = res;
    r.deform_only = time_stage(options.runs, options.n_frames, [&] {
      for (const auto& f : seq.frames) pose_avatar(model, cloud, f);
    });
    r.render_only = time_stage(options.runs, options.n_frames, [&] {
      for (const auto& w : posed) render(w, cam);
    });
    r.end_to_end = time_stage(options.runs, options.n_frames, [&] {
      for (const auto& f : seq.frames) render(pose_avatar(model, cloud, f).world, cam);
    });
    report.results.push_back(std::move(r));
  }
  return report;
}

nlohmann::json to_json(const BenchReport& report) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& r : report.results)
    results.push_back({{"resolution", r.resolution},
                       {"deform_only", stage_json(r.deform_only)},
                       {"render_only", stage_json(r.render_only)},
                       {"end_to_end", stage_json(r.end_to_end)}});
  const auto& c = report.camera;
  return {{"schema_version", kBenchSchemaVersion},
          {"n_frames", report.n_frames},
          {"points", report.points},
          {"threads", report.threads},
          {"camera",
           {{"distance", c.distance}, {"fovy", c.fovy}, {"elevation", c.elevation}, {"azimuth", c.azimuth}}},
          {"results", results}};
}

std::string format_table(const BenchReport& report) {
  std::string out = fmt::format("{} frames, {} points, {} threads\n", report.n_frames, report.points, report.threads);
  if (report.results.empty()) return out + "no frames timed\n";
  out += fmt::format("{:>10} {:>14} {:>14} {:>14}\n", "resolution", "deform fps", "render fps", "end-to-end fps");
  for (const auto& r : report.results)
    out += fmt::format("{:>10} {:>14.2f} {:>14.2f} {:>14.2f}\n", r.resolution, r.deform_only.fps, r.render_only.fps,
                       r.end_to_end.fps);
  return out;
}

}  // namespace headgs
