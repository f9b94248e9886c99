#pragma once

#include "headgs/camera.hpp"
#include "headgs/gaussians.hpp"
#include "headgs/guidance.hpp"
#include "headgs/regularize.hpp"
#include "headgs/remote.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace headgs {

enum class ProviderKind { Photometric, EchoStub, FixtureReplay, Remote };

std::string to_string(ProviderKind kind);
ProviderKind provider_from_string(const std::string& name);

struct LearningRates {
  double position = 5e-5;
  double scale = 1e-3;
  double rotation = 1e-2;
  double color = 1.25e-2;
  double opacity = 1e-2;
  double shape = 1e-3;
};

/// Closed-loop photometric target set.
struct PhotometricSetup {
  int training_views = 16;
  int held_out_views = 4;
  std::uint64_t reference_seed = 11;
  double camera_distance = 1.6;
  double fovy = 45.0;
};

struct FitConfig {
  std::string profile = "full";
  int iterations = 10000;
  int batch_size = 8;
  int resolution = 1024;
  int shape_freeze_iter = 8000;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double adam_eps = 1e-15;
  LearningRates lr;
  CameraRanges cameras;
  RegConfig reg;
  DensifyConfig densify;
  SdsConfig sds;
  ViewPromptConfig view_prompts;
  InitOptions init;
  std::string prompt = "a DSLR portrait of a person";
  double cfg_scale = 7.5;
  double cfg_neg_scale = 1.0;
  std::optional<int> timestep;
  Vec3 background = Vec3::Ones();
  ProviderKind provider = ProviderKind::Photometric;
  RemoteConfig remote;
  std::filesystem::path fixture_response;
  double max_failure_fraction = 0.05;
  PhotometricSetup photometric;
  std::filesystem::path animation_source;  // empty: synthetic sequence
  int synthetic_frames = 120;
  std::uint64_t seed = 0;
  int log_interval = 100;

  void validate() const;
};

/// Full-scale schedule.
FitConfig full_profile();
/// Laptop-scale profile used by the acceptance runs.
FitConfig desk_profile();

/// Reads a TOML file on top of the profile it names (`profile = "desk"`,
/// default "full"). Unknown keys and wrongly typed values are ConfigErrors.
FitConfig load_fit_config(const std::filesystem::path& path);
FitConfig parse_fit_config(const std::string& toml_text, const std::string& source_name = "<string>");

}  // namespace headgs
