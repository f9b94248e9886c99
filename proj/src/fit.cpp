#include "headgs/fit.hpp"

#include "headgs/avatar.hpp"
#include "headgs/binding.hpp"
#include "headgs/errors.hpp"
#include "headgs/landmark_map.hpp"
#include "headgs/optimizer.hpp"
#include "headgs/regularize.hpp"
#include "headgs/remote.hpp"
#include "headgs/renderer.hpp"
#include "headgs/wire.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace headgs {

namespace {

static_assert(sizeof(Vec3) == 3 * sizeof(double) && sizeof(Vec4) == 4 * sizeof(double));

template <typename V>
std::span<double> flat(std::vector<V>& v) {
  return {v.data()->data(), v.size() * sizeof(V) / sizeof(double)};
}

template <typename V>
std::span<const double> flat(const std::vector<V>& v) {
  return {v.data()->data(), v.size() * sizeof(V) / sizeof(double)};
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

struct Optimizers {
  Adam position, log_scale, rotation, color, opacity, shape;

  explicit Optimizers(const FitConfig& c)
      : position(c.lr.position, c.beta1, c.beta2, c.adam_eps),
        log_scale(c.lr.scale, c.beta1, c.beta2, c.adam_eps),
        rotation(c.lr.rotation, c.beta1, c.beta2, c.adam_eps),
        color(c.lr.color, c.beta1, c.beta2, c.adam_eps),
        opacity(c.lr.opacity, c.beta1, c.beta2, c.adam_eps),
        shape(c.lr.shape, c.beta1, c.beta2, c.adam_eps) {}

  void remap(const DensifyResult& r) {
    position.remap(r.origin, r.created, 3);
    log_scale.remap(r.origin, r.created, 3);
    rotation.remap(r.origin, r.created, 4);
    color.remap(r.origin, r.created, 3);
    opacity.remap(r.origin, r.created, 1);
  }
};

struct ItemSample {
  CameraSample camera;
  AnimationInput anim;
  std::optional<std::size_t> target_view;
  std::string prompt;
};

[[noreturn]] void abort_non_finite(const std::filesystem::path& dir, int iter, const std::string& what,
                                   const BoundCloud& cloud, const FitLogRow& row) {
  nlohmann::json j;
  j["iteration"] = iter;
  j["quantity"] = what;
  j["points"] = cloud.size();
  j["guidance_grad_norm"] = row.guidance_grad_norm;
  j["reg_loss"] = row.reg_loss;
  j["shape"] = std::vector<double>(cloud.shape.data(), cloud.shape.data() + cloud.shape.size());
  std::size_t bad_points = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (!cloud.positions[i].allFinite() || !cloud.log_scales[i].allFinite() || !cloud.colors[i].allFinite() ||
        !std::isfinite(cloud.opacity_logits[i]))
      ++bad_points;
  j["non_finite_points"] = bad_points;
  std::filesystem::create_directories(dir);
  const auto path = dir / ("nonfinite_iter_" + std::to_string(iter) + ".json");
  std::ofstream(path) << j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  throw Error("non-finite " + what + " at iteration " + std::to_string(iter) + "; diagnostics in " + path.string());
}

std::vector<TriangleFrame> rest_frames(const HeadModel& model, const Eigen::VectorXd& shape) {
  AnimationInput rest = AnimationInput::neutral(model);
  rest.shape = shape;
  return compute_frames(model, pose_mesh(model, rest).posed_vertices);
}

}  // namespace

PhotometricTargets make_default_targets(const HeadModel& model, const FitConfig& cfg) {
  const BoundCloud reference = make_reference_cloud(model, cfg.photometric.reference_seed);
  return make_photometric_targets(model, reference, cfg.photometric, cfg.resolution, cfg.background);
}

std::unique_ptr<GuidanceProvider> make_provider(const FitConfig& cfg, const PhotometricTargets* targets) {
  switch (cfg.provider) {
    case ProviderKind::Photometric:
      if (!targets) throw ConfigError("photometric provider needs a target set");
      return std::make_unique<PhotometricProvider>(targets->training_images());
    case ProviderKind::EchoStub: return std::make_unique<EchoStubProvider>();
    case ProviderKind::FixtureReplay: {
      std::ifstream in(cfg.fixture_response, std::ios::binary);
      if (!in) throw ConfigError("cannot open guidance fixture " + cfg.fixture_response.string());
      std::stringstream ss;
      ss << in.rdbuf();
      return std::make_unique<FixtureReplayProvider>(wire::decode_response(ss.str()));
    }
    case ProviderKind::Remote: {
      RemoteConfig rc = cfg.remote;
      if (const char* url = std::getenv("HEADGS_GUIDANCE_URL"); url && *url) rc.url = url;
      return std::make_unique<RemoteProvider>(rc);
    }
  }
  throw ConfigError("unknown guidance provider");
}

FitResult fit(const FitConfig& cfg, FitInputs in) {
  cfg.validate();
  if (!in.model || !in.provider) throw ConfigError("fit needs a model and a guidance provider");
  const HeadModel& model = *in.model;
  const bool photometric = in.targets != nullptr;
  if (photometric && in.targets->training.empty()) throw ConfigError("photometric target set is empty");

  AnimationSequence synthetic;
  const AnimationSequence* animation = in.animation;
  if (!photometric && (!animation || animation->frames.empty())) {
    synthetic = synthetic_sequence(model, cfg.synthetic_frames, cfg.seed + 1);
    animation = &synthetic;
  }

  FitResult result;
  BoundCloud& cloud = result.cloud;
  if (in.initial) {
    cloud = std::move(*in.initial);
  } else {
    InitOptions init = cfg.init;
    init.seed = cfg.seed;
    cloud = init_cloud(model, AnimationInput::neutral(model), init);
  }
  cloud.validate(model.num_faces());
  if (cloud.shape.size() != static_cast<Eigen::Index>(model.num_shape()))
    throw DimensionError("cloud shape vector does not match the model");
  cloud.reset_stats();

  Optimizers opt(cfg);
  std::mt19937_64 rng(cfg.seed);
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  const int max_failures = static_cast<int>(std::floor(cfg.max_failure_fraction * cfg.iterations));
  RenderSettings rs;
  rs.background = cfg.background;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const bool learn_shape = iter < cfg.shape_freeze_iter;
    const auto frames_rest = rest_frames(model, cloud.shape);

    std::vector<ItemSample> samples(batch);
    for (auto& s : samples) {
      if (photometric) {
        std::uniform_int_distribution<std::size_t> pick(0, in.targets->training.size() - 1);
        const std::size_t v = pick(rng);
        s.camera = in.targets->training[v].camera;
        s.anim = in.targets->training[v].anim;
        s.target_view = v;
      } else {
        s.camera = sample_camera(rng, cfg.cameras, Vec3::Zero(), cfg.resolution, cfg.resolution);
        std::uniform_int_distribution<std::size_t> pick(0, animation->frames.size() - 1);
        s.anim = animation->frames[pick(rng)];
      }
      s.prompt = view_prompt(cfg.prompt, s.camera.azimuth, s.camera.elevation, cfg.view_prompts);
    }

    std::vector<PosedAvatar> posed(batch);
    std::vector<Camera> cams(batch);
    std::vector<RenderOutput> renders(batch);
    std::vector<GuidanceRequest> requests(batch);
#pragma omp parallel for schedule(static) if (batch > 1)
    for (std::size_t b = 0; b < batch; ++b) {
      posed[b] = pose_avatar(model, cloud, samples[b].anim, &frames_rest);
      cams[b] = Camera::from_sample(samples[b].camera);
      renders[b] = render(posed[b].world, cams[b], rs);
      GuidanceRequest& r = requests[b];
      r.image = renders[b].color;
      if (in.provider->wants_condition()) r.condition = render_landmark_map(model, posed[b].mesh, cams[b]);
      r.prompt = samples[b].prompt;
      r.negative_prompt = cfg.sds.negative_prompt;
      r.cfg = cfg.cfg_scale;
      r.cfg_neg = cfg.cfg_neg_scale;
      r.timestep = cfg.timestep;
      r.target_view = samples[b].target_view;
    }

    FitLogRow row;
    row.iter = iter;
    row.points = cloud.size();
    std::vector<GuidanceResponse> responses;
    try {
      responses = in.provider->gradient_batch(requests);
      if (responses.size() != batch) throw ProtocolError("provider returned a wrong number of responses");
      for (std::size_t b = 0; b < batch; ++b)
        if (!responses[b].gradient.same_shape(renders[b].color))
          throw ProtocolError("guidance gradient does not match the rendered image size");
    } catch (const ProtocolError& e) {
      responses.clear();
      spdlog::warn("iteration {}: guidance failed: {}", iter, e.what());
    } catch (const TransportError& e) {
      responses.clear();
      spdlog::warn("iteration {}: guidance unreachable: {}", iter, e.what());
    }
    if (responses.empty()) {
      ++result.failed_iterations;
      row.failed = true;
      row.guidance_loss = std::numeric_limits<double>::quiet_NaN();
      row.shape_norm = cloud.shape.norm();
      result.log.push_back(row);
      if (result.failed_iterations > max_failures)
        throw Error("aborting fit: " + std::to_string(result.failed_iterations) + " of " +
                    std::to_string(cfg.iterations) + " iterations failed to get guidance");
      continue;
    }

    std::vector<CloudGrads> item_grads(batch, CloudGrads(0, 0));
    std::vector<RegLoss> item_reg(batch);
    std::vector<std::vector<double>> item_norms(batch);
#pragma omp parallel for schedule(static) if (batch > 1)
    for (std::size_t b = 0; b < batch; ++b) {
      const auto wg = render_backward(posed[b].world, cams[b], renders[b], responses[b].gradient);
      item_grads[b] = avatar_backward(model, cloud, posed[b], wg, learn_shape);
      item_reg[b] = reg_loss(cloud, posed[b].frames, cfg.reg);
      item_norms[b] = wg.mean2d_norm;
    }

    const double inv_batch = 1.0 / static_cast<double>(batch);
    CloudGrads grads(cloud.size(), model.num_shape());
    double loss_sum = 0.0, grad_norm_sum = 0.0;
    bool have_loss = true;
    for (std::size_t b = 0; b < batch; ++b) {
      grads += item_grads[b];
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        grads.positions[i] += item_reg[b].grad_position[i];
        grads.log_scales[i] += item_reg[b].grad_log_scale[i];
      }
      row.reg_loss += item_reg[b].value * inv_batch;
      if (responses[b].loss) loss_sum += *responses[b].loss;
      else have_loss = false;
      double sq = 0.0;
      for (double g : responses[b].gradient.data) sq += g * g;
      grad_norm_sum += std::sqrt(sq);
      accumulate_gradient_stats(cloud, item_norms[b]);
    }
    grads *= inv_batch;
    row.guidance_loss = have_loss ? loss_sum * inv_batch : std::numeric_limits<double>::quiet_NaN();
    row.guidance_grad_norm = grad_norm_sum * inv_batch;
    if (!learn_shape) grads.shape.setZero();
    row.shape_grad_norm = grads.shape.norm();

    if (have_loss && !std::isfinite(row.guidance_loss)) abort_non_finite(in.diagnostics_dir, iter, "loss", cloud, row);
    if (!std::isfinite(row.guidance_grad_norm))
      abort_non_finite(in.diagnostics_dir, iter, "guidance gradient", cloud, row);
    if (!std::isfinite(row.reg_loss)) abort_non_finite(in.diagnostics_dir, iter, "regularizer", cloud, row);
    if (!all_finite(flat(grads.positions)) || !all_finite(flat(grads.log_scales)) ||
        !all_finite(flat(grads.rotations)) || !all_finite(flat(grads.colors)) || !all_finite(grads.opacity_logits) ||
        !grads.shape.allFinite())
      abort_non_finite(in.diagnostics_dir, iter, "parameter gradient", cloud, row);

    opt.position.step(flat(cloud.positions), flat(grads.positions));
    opt.log_scale.step(flat(cloud.log_scales), flat(grads.log_scales));
    opt.rotation.step(flat(cloud.rotations), flat(grads.rotations));
    opt.color.step(flat(cloud.colors), flat(grads.colors));
    opt.opacity.step(cloud.opacity_logits, grads.opacity_logits);
    if (learn_shape) {
      const auto n_shape = static_cast<std::size_t>(cloud.shape.size());
      opt.shape.step({cloud.shape.data(), n_shape}, {grads.shape.data(), n_shape});
    }
    for (auto& c : cloud.colors) c = c.cwiseMax(0.0).cwiseMin(1.0);

    if (!all_finite(flat(cloud.positions)) || !all_finite(flat(cloud.log_scales)) || !cloud.shape.allFinite())
      abort_non_finite(in.diagnostics_dir, iter, "parameter", cloud, row);

    row.shape_norm = cloud.shape.norm();
    if (in.on_step) in.on_step(iter, cloud, grads.shape);

    if (cfg.densify.due(iter)) {
      const auto dr = densify_and_prune(cloud, rest_frames(model, cloud.shape), cfg.densify, iter, cfg.seed);
      opt.remap(dr);
      ++result.densify_events;
      spdlog::info("iteration {}: densify cloned {} split {} pruned {} -> {} points", iter, dr.cloned, dr.split,
                   dr.pruned, cloud.size());
    }

    result.log.push_back(row);
    if (iter % cfg.log_interval == 0 || iter + 1 == cfg.iterations)
      spdlog::info("iter {:5d}  loss {:.6g}  |g| {:.4g}  reg {:.4g}  points {}  |beta| {:.4f}", iter,
                   row.guidance_loss, row.guidance_grad_norm, row.reg_loss, cloud.size(), row.shape_norm);
  }
  if (result.failed_iterations > 0)
    spdlog::warn("{} of {} iterations skipped after guidance failures", result.failed_iterations, cfg.iterations);

  quantize_to_storage(cloud);
  cloud.model_hash = model_content_hash(model);
  return result;
}

void write_fit_log(const std::vector<FitLogRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "iter,guidance_loss,guidance_grad_norm,reg_loss,points,shape_norm,shape_grad_norm,failed\n";
  out.precision(10);
  for (const auto& r : rows)
    out << r.iter << ',' << r.guidance_loss << ',' << r.guidance_grad_norm << ',' << r.reg_loss << ',' << r.points
        << ',' << r.shape_norm << ',' << r.shape_grad_norm << ',' << (r.failed ? 1 : 0) << '\n';
}

}  // namespace headgs
