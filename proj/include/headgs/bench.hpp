#pragma once

#include "headgs/camera.hpp"
#include "headgs/gaussians.hpp"
#include "headgs/head_model.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace headgs {

inline constexpr int kBenchSchemaVersion = 1;

struct BenchOptions {
  CameraSample camera;
  int n_frames = 30;
  std::vector<int> resolutions{256, 512, 1024};
  int runs = 3;
  std::uint64_t seed = 0;
};

struct StageTiming {
  std::vector<double> run_seconds;  // total over all frames, one per run
  double median_seconds = 0.0;
  double seconds_per_frame = 0.0;
  double fps = 0.0;
};

struct BenchResolution {
  int resolution = 0;
  StageTiming deform_only, render_only, end_to_end;
};

struct BenchReport {
  int n_frames = 0;
  std::size_t points = 0;
  int threads = 1;
  CameraSample camera;
  std::vector<BenchResolution> results;  // empty when n_frames is 0
};

/// Times posing/deformation, rasterization and both together over a
/// synthetic animation. Each stage reports the median of `runs` timings.
BenchReport bench(const HeadModel& model, const BoundCloud& cloud, const BenchOptions& options);

nlohmann::json to_json(const BenchReport& report);
std::string format_table(const BenchReport& report);

}  // namespace headgs
