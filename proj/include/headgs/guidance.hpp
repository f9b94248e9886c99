#pragma once

#include "headgs/image.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace headgs {

inline constexpr const char* kDefaultNegativePrompt =
    "unrealistic, blurry, low quality, out of focus, ugly, low contrast, dull, dark, low-resolution, gloomy";

enum class SdsWeighting {
  Constant,  // w(t) = 1
  Sigma,     // w(t) = 1 - alpha_bar(t) of the scaled-linear schedule
};

struct SdsConfig {
  int t_split = 200;
  int max_timestep = 1000;
  SdsWeighting weighting = SdsWeighting::Constant;
  std::string negative_prompt = kDefaultNegativePrompt;

  void validate() const;
};

double sds_weight(int t, const SdsConfig& cfg);

/// Piecewise denoised score: w(t) eps_text below t_split, w(t) (eps_text -
/// eps_neg) from t_split on. The sampled noise does not enter either branch.
std::vector<double> sds_combine(std::span<const double> eps_text, std::span<const double> eps_neg, int t,
                                const SdsConfig& cfg = {});

struct ViewPromptConfig {
  double front_max_azimuth = 45.0;
  double back_min_azimuth = 135.0;
  double overhead_min_elevation = 25.0;
};

/// Appends a view suffix; the overhead suffix takes precedence over azimuth bands.
std::string view_prompt(const std::string& base, double azimuth, double elevation, const ViewPromptConfig& cfg = {});

struct GuidanceRequest {
  Image image;      // rendered, H x W x 3
  Image condition;  // landmark map, H x W x 3 (may be empty)
  std::string prompt;
  std::string negative_prompt = kDefaultNegativePrompt;
  double cfg = 7.5;
  double cfg_neg = 1.0;
  std::optional<int> timestep;
  /// Index of the photometric target view; ignored by remote providers.
  std::optional<std::size_t> target_view;

  void validate() const;
};

struct GuidanceResponse {
  Image gradient;  // dL/d image
  int timestep = -1;
  std::string provider;
  std::optional<double> loss;
};

/// Source of image-space gradients. Implementations must be safe to call
/// concurrently.
class GuidanceProvider {
 public:
  virtual ~GuidanceProvider() = default;
  virtual std::string id() const = 0;
  virtual GuidanceResponse gradient(const GuidanceRequest& request) = 0;
  virtual std::vector<GuidanceResponse> gradient_batch(std::span<const GuidanceRequest> requests);
  /// Whether requests need a landmark condition image.
  virtual bool wants_condition() const { return false; }
};

/// Gradient of the mean-free L2 loss sum((render - target)^2) / pixel_count.
GuidanceResponse photometric_gradient(const Image& render, const Image& target);

class PhotometricProvider final : public GuidanceProvider {
 public:
  explicit PhotometricProvider(std::vector<Image> targets) : targets_(std::move(targets)) {}
  std::string id() const override { return "photometric"; }
  GuidanceResponse gradient(const GuidanceRequest& request) override;
  const std::vector<Image>& targets() const { return targets_; }

 private:
  std::vector<Image> targets_;
};

/// Always returns a zero gradient.
class EchoStubProvider final : public GuidanceProvider {
 public:
  std::string id() const override { return "echo-stub"; }
  GuidanceResponse gradient(const GuidanceRequest& request) override;
};

/// Replays one recorded response; its gradient must match the request size.
class FixtureReplayProvider final : public GuidanceProvider {
 public:
  explicit FixtureReplayProvider(GuidanceResponse recorded) : recorded_(std::move(recorded)) {}
  std::string id() const override { return "fixture-replay"; }
  GuidanceResponse gradient(const GuidanceRequest& request) override;

 private:
  GuidanceResponse recorded_;
};

}  // namespace headgs
