#pragma once

#include "headgs/animation.hpp"
#include "headgs/config.hpp"
#include "headgs/gaussians.hpp"
#include "headgs/guidance.hpp"
#include "headgs/head_model.hpp"
#include "headgs/reference.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace headgs {

struct FitLogRow {
  int iter = 0;
  double guidance_loss = 0.0;  // NaN when the provider reports none
  double guidance_grad_norm = 0.0;
  double reg_loss = 0.0;
  std::size_t points = 0;
  double shape_norm = 0.0;
  double shape_grad_norm = 0.0;
  bool failed = false;
};

/// Called after every optimizer step with the iteration, the updated cloud
/// and the batch-mean shape gradient that was applied (or withheld).
using FitCallback = std::function<void(int iter, const BoundCloud& cloud, const Eigen::VectorXd& shape_grad)>;

struct FitInputs {
  const HeadModel* model = nullptr;
  GuidanceProvider* provider = nullptr;
  /// Required in photometric mode; supplies the per-item (camera, animation).
  const PhotometricTargets* targets = nullptr;
  /// Frames to sample expressions and poses from outside photometric mode.
  const AnimationSequence* animation = nullptr;
  /// Starting cloud; initialized from the model when absent.
  std::optional<BoundCloud> initial;
  /// Where a diagnostic dump is written when a non-finite value appears.
  std::filesystem::path diagnostics_dir = ".";
  FitCallback on_step;
};

struct FitResult {
  BoundCloud cloud;
  std::vector<FitLogRow> log;
  int failed_iterations = 0;
  int densify_events = 0;
};

/// Runs the optimization loop. Provider failures skip the iteration and are
/// counted; more than `max_failure_fraction * iterations` of them abort with
/// an Error. A non-finite loss or gradient writes a diagnostic dump and aborts.
/// The returned cloud is quantized to checkpoint precision.
FitResult fit(const FitConfig& cfg, FitInputs inputs);

/// Builds the provider named by the config. Photometric mode needs targets.
std::unique_ptr<GuidanceProvider> make_provider(const FitConfig& cfg, const PhotometricTargets* targets);

/// Reference cloud and rendered targets for the photometric closed loop.
PhotometricTargets make_default_targets(const HeadModel& model, const FitConfig& cfg);

void write_fit_log(const std::vector<FitLogRow>& rows, const std::filesystem::path& path);

}  // namespace headgs
