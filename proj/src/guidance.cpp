#include "headgs/guidance.hpp"

#include "headgs/errors.hpp"

#include <cmath>

namespace headgs {

void SdsConfig::validate() const {
  if (!(t_split > 0 && t_split < max_timestep)) throw ConfigError("t_split must lie in (0, max_timestep)");
}

double sds_weight(int t, const SdsConfig& cfg) {
  if (cfg.weighting == SdsWeighting::Constant) return 1.0;
  // Scaled-linear beta schedule: beta_i = (sqrt(b0) + i/(T-1) (sqrt(b1) - sqrt(b0)))^2.
  const double s0 = std::sqrt(0.00085), s1 = std::sqrt(0.012);
  double alpha_bar = 1.0;
  for (int i = 0; i <= t && i < cfg.max_timestep; ++i) {
    const double s = s0 + (s1 - s0) * i / (cfg.max_timestep - 1);
    alpha_bar *= 1.0 - s * s;
  }
  return 1.0 - alpha_bar;
}

std::vector<double> sds_combine(std::span<const double> eps_text, std::span<const double> eps_neg, int t,
                                const SdsConfig& cfg) {
  if (eps_text.size() != eps_neg.size()) throw DimensionError("noise predictions differ in size");
  if (t < 0 || t >= cfg.max_timestep) throw Error("timestep " + std::to_string(t) + " outside [0, max_timestep)");
  const double w = sds_weight(t, cfg);
  std::vector<double> out(eps_text.size());
  if (t < cfg.t_split) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = w * eps_text[i];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = w * (eps_text[i] - eps_neg[i]);
  }
  return out;
}

std::string view_prompt(const std::string& base, double azimuth, double elevation, const ViewPromptConfig& cfg) {
  if (elevation > cfg.overhead_min_elevation) return base + ", overhead view";
  const double a = std::abs(azimuth);
  if (a < cfg.front_max_azimuth) return base + ", front view";
  if (a < cfg.back_min_azimuth) return base + ", side view";
  return base + ", back view";
}

void GuidanceRequest::validate() const {
  if (!(cfg > 0)) throw Error("cfg scale must be positive");
  if (image.channels != 3 || image.width <= 0 || image.height <= 0) throw DimensionError("request image must be H x W x 3");
  if (!condition.data.empty() && (condition.width != image.width || condition.height != image.height))
    throw DimensionError("condition image size differs from the rendered image");
}

std::vector<GuidanceResponse> GuidanceProvider::gradient_batch(std::span<const GuidanceRequest> requests) {
  std::vector<GuidanceResponse> out;
  out.reserve(requests.size());
  for (const auto& r : requests) out.push_back(gradient(r));
  return out;
}

GuidanceResponse photometric_gradient(const Image& render, const Image& target) {
  if (!render.same_shape(target)) throw DimensionError("render and target sizes differ");
  GuidanceResponse r;
  r.provider = "photometric";
  r.gradient = Image(render.width, render.height, render.channels);
  const double inv = 1.0 / static_cast<double>(render.pixel_count());
  double loss = 0.0;
  for (std::size_t i = 0; i < render.data.size(); ++i) {
    const double d = render.data[i] - target.data[i];
    r.gradient.data[i] = 2.0 * d * inv;
    loss += d * d;
  }
  r.loss = loss * inv;
  return r;
}

GuidanceResponse PhotometricProvider::gradient(const GuidanceRequest& request) {
  if (!request.target_view || *request.target_view >= targets_.size())
    throw Error("photometric guidance needs a valid target view index");
  return photometric_gradient(request.image, targets_[*request.target_view]);
}

GuidanceResponse EchoStubProvider::gradient(const GuidanceRequest& request) {
  GuidanceResponse r;
  r.provider = id();
  r.timestep = request.timestep.value_or(0);
  r.gradient = Image(request.image.width, request.image.height, 3, 0.0);
  return r;
}

GuidanceResponse FixtureReplayProvider::gradient(const GuidanceRequest& request) {
  if (recorded_.gradient.width != request.image.width || recorded_.gradient.height != request.image.height)
    throw ProtocolError("recorded gradient size differs from the request");
  GuidanceResponse r = recorded_;
  r.provider = id();
  return r;
}

}  // namespace headgs
