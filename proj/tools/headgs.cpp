#include "headgs/animate.hpp"
#include "headgs/avatar.hpp"
#include "headgs/bench.hpp"
#include "headgs/config.hpp"
#include "headgs/errors.hpp"
#include "headgs/fit.hpp"
#include "headgs/fixtures.hpp"
#include "headgs/landmark_map.hpp"
#include "headgs/renderer.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace headgs;

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  std::string log_level = "info";
};

struct CameraOptions {
  CameraSample sample;
  int resolution = 512;

  void add(CLI::App* app) {
    app->add_option("--azimuth", sample.azimuth, "Camera azimuth in degrees")->capture_default_str();
    app->add_option("--elevation", sample.elevation, "Camera elevation in degrees")->capture_default_str();
    app->add_option("--distance", sample.distance, "Camera distance from the head center")->capture_default_str();
    app->add_option("--fovy", sample.fovy, "Vertical field of view in degrees")->capture_default_str();
    app->add_option("--resolution", resolution, "Square image size in pixels")->capture_default_str();
  }

  CameraSample get() const {
    CameraSample s = sample;
    s.width = s.height = resolution;
    return s;
  }
};

HeadModel load_model(const std::string& dir) {
  if (dir.empty()) return generate_toy_model();
  return load_assets(dir);
}

BoundCloud load_cloud(const std::string& path, const HeadModel& model) {
  BoundCloud cloud = load_checkpoint(path);
  cloud.validate(model.num_faces());
  check_model_hash(model, cloud);
  return cloud;
}

Vec3 parse_background(const std::vector<double>& v) {
  if (v.size() != 3) throw ConfigError("--background takes three values");
  return Vec3(v[0], v[1], v[2]);
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double d = a.norm() * b.norm();
  return d > 0.0 ? a.dot(b) / d : 0.0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mesh-bound Gaussian head avatars: fitting, animation and benchmarking"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "TOML configuration file");
  app.add_option_function<std::uint64_t>(
      "--seed",
      [&](const std::uint64_t& s) {
        g.seed = s;
        g.seed_set = true;
      },
      "Random seed");
  app.add_option("--threads", g.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  // toy-model
  auto* toy = app.add_subcommand("toy-model", "Write the procedural toy head model");
  std::string toy_out;
  ToyModelOptions toy_opts;
  toy->add_option("--out", toy_out, "Output asset directory")->required();
  toy->add_option("--subdivisions", toy_opts.subdivisions, "Icosphere subdivisions")->capture_default_str();
  toy->add_option("--n-shape", toy_opts.n_shape, "Shape basis size")->capture_default_str();
  toy->add_option("--n-expr", toy_opts.n_expr, "Expression basis size")->capture_default_str();

  // init
  auto* init = app.add_subcommand("init", "Initialize a bound cloud on the model surface");
  std::string init_model, init_out, init_scale = "sqrt", init_sampling = "lattice";
  InitOptions init_opts;
  init->add_option("--model", init_model, "Asset directory (default: built-in toy model)");
  init->add_option("--k", init_opts.points_per_face, "Points per face")->capture_default_str();
  init->add_option("--knn", init_opts.knn, "Neighbours for the initial scale")->capture_default_str();
  init->add_option("--scale", init_scale, "Initial scale rule")->check(CLI::IsMember({"sqrt", "linear"}))
      ->capture_default_str();
  init->add_option("--sampling", init_sampling, "Barycentric sampling")
      ->check(CLI::IsMember({"lattice", "random"}))
      ->capture_default_str();
  init->add_option("--out", init_out, "Output checkpoint")->required();

  // fit
  auto* fitc = app.add_subcommand("fit", "Optimize a bound cloud against a guidance provider");
  std::string fit_model, fit_out, fit_init, fit_log, fit_profile = "desk", fit_provider;
  std::optional<int> fit_iterations, fit_resolution;
  fitc->add_option("--model", fit_model, "Asset directory (default: built-in toy model)");
  fitc->add_option("--profile", fit_profile, "Profile used when no config file is given")
      ->check(CLI::IsMember({"full", "desk"}))
      ->capture_default_str();
  fitc->add_option("--provider", fit_provider, "Override the guidance provider")
      ->check(CLI::IsMember({"photometric", "echo-stub", "fixture-replay", "remote"}));
  fitc->add_option("--iterations", fit_iterations, "Override the iteration count");
  fitc->add_option("--resolution", fit_resolution, "Override the render resolution");
  fitc->add_option("--init", fit_init, "Start from this checkpoint instead of a fresh cloud");
  fitc->add_option("--out", fit_out, "Output checkpoint")->required();
  fitc->add_option("--log", fit_log, "Per-iteration CSV log (default: <out>.log.csv)");

  // animate
  auto* anim = app.add_subcommand("animate", "Render an animation sequence frame by frame");
  std::string anim_model, anim_ckpt, anim_seq, anim_out, anim_video;
  int anim_frames = 60;
  double anim_orbit = 0.0;
  bool anim_landmarks = false;
  std::vector<double> anim_bg{1.0, 1.0, 1.0};
  CameraOptions anim_cam;
  anim->add_option("--model", anim_model, "Asset directory (default: built-in toy model)");
  anim->add_option("--checkpoint", anim_ckpt, "Fitted checkpoint")->required();
  anim->add_option("--sequence", anim_seq, "JSON-lines sequence (default: synthetic)");
  anim->add_option("--frames", anim_frames, "Synthetic sequence length")->capture_default_str();
  anim->add_option("--orbit", anim_orbit, "Orbit speed in degrees per second (0: fixed camera)");
  anim->add_option("--background", anim_bg, "Background color")->expected(3);
  anim->add_flag("--landmarks", anim_landmarks, "Also write landmark maps");
  anim->add_option("--out", anim_out, "Output frame directory")->required();
  anim->add_option("--video", anim_video, "Also encode an MP4 with ffmpeg");
  anim_cam.add(anim);

  // render
  auto* rend = app.add_subcommand("render", "Render one view of a checkpoint");
  std::string rend_model, rend_ckpt, rend_out, rend_alpha;
  std::vector<double> rend_bg{1.0, 1.0, 1.0};
  CameraOptions rend_cam;
  rend->add_option("--model", rend_model, "Asset directory (default: built-in toy model)");
  rend->add_option("--checkpoint", rend_ckpt, "Checkpoint")->required();
  rend->add_option("--background", rend_bg, "Background color")->expected(3);
  rend->add_option("--out", rend_out, "Output PNG")->required();
  rend->add_option("--alpha", rend_alpha, "Also write the alpha channel as PNG");
  rend_cam.add(rend);

  // landmarks
  auto* lmk = app.add_subcommand("landmarks", "Render the landmark map of the posed model");
  std::string lmk_model, lmk_ckpt, lmk_out;
  double lmk_jaw = 0.0;
  CameraOptions lmk_cam;
  lmk->add_option("--model", lmk_model, "Asset directory (default: built-in toy model)");
  lmk->add_option("--checkpoint", lmk_ckpt, "Take the shape vector from this checkpoint");
  lmk->add_option("--jaw", lmk_jaw, "Jaw opening in radians");
  lmk->add_option("--out", lmk_out, "Output PNG")->required();
  lmk_cam.add(lmk);

  // bench
  auto* bch = app.add_subcommand("bench", "Measure deformation and rendering throughput");
  std::string bch_model, bch_ckpt, bch_out;
  BenchOptions bch_opts;
  bch->add_option("--model", bch_model, "Asset directory (default: built-in toy model)");
  bch->add_option("--checkpoint", bch_ckpt, "Checkpoint (default: fresh cloud on the model)");
  bch->add_option("--frames", bch_opts.n_frames, "Frames per run")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  bch->add_option("--resolutions", bch_opts.resolutions, "Square image sizes")->capture_default_str();
  bch->add_option("--runs", bch_opts.runs, "Runs per stage; the median is reported")->capture_default_str();
  bch->add_option("--azimuth", bch_opts.camera.azimuth, "Camera azimuth in degrees");
  bch->add_option("--elevation", bch_opts.camera.elevation, "Camera elevation in degrees");
  bch->add_option("--distance", bch_opts.camera.distance, "Camera distance");
  bch->add_option("--fovy", bch_opts.camera.fovy, "Vertical field of view in degrees");
  bch->add_option("--out", bch_out, "Output JSON report");

  // fixtures
  auto* fix = app.add_subcommand("fixtures", "Regenerate guidance conformance fixtures");
  std::string fix_out = "fixtures/guidance";
  fix->add_option("--out", fix_out, "Output directory")->capture_default_str();

  for (auto* sub : app.get_subcommands({}))
    sub->footer("Global options, accepted before or after the subcommand:\n"
                "  --config FILE     TOML configuration file\n"
                "  --seed N          Random seed\n"
                "  --threads N       Worker threads (0: all cores)\n"
                "  --log-level LEVEL trace, debug, info, warn, error or off");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  spdlog::set_level(spdlog::level::from_str(g.log_level));
  if (g.threads > 0) omp_set_num_threads(g.threads);

  try {
    if (*toy) {
      save_assets(generate_toy_model(toy_opts), toy_out);
      spdlog::info("wrote toy model to {}", toy_out);
    } else if (*init) {
      const HeadModel model = load_model(init_model);
      init_opts.scale_mode = init_scale == "linear" ? InitScaleMode::Linear : InitScaleMode::Sqrt;
      init_opts.sampling = init_sampling == "random" ? InitSampling::Random : InitSampling::Lattice;
      init_opts.seed = g.seed;
      BoundCloud cloud = init_cloud(model, AnimationInput::neutral(model), init_opts);
      quantize_to_storage(cloud);
      save_checkpoint(cloud, init_out);
      spdlog::info("wrote {} points to {}", cloud.size(), init_out);
    } else if (*fitc) {
      FitConfig cfg = g.config.empty() ? (fit_profile == "full" ? full_profile() : desk_profile())
                                       : load_fit_config(g.config);
      if (g.seed_set) cfg.seed = g.seed;
      if (!fit_provider.empty()) cfg.provider = provider_from_string(fit_provider);
      if (fit_iterations) {
        cfg.iterations = *fit_iterations;
        cfg.shape_freeze_iter = std::min(cfg.shape_freeze_iter, cfg.iterations);
      }
      if (fit_resolution) cfg.resolution = *fit_resolution;
      cfg.validate();
      const HeadModel model = load_model(fit_model);

      std::optional<PhotometricTargets> targets;
      if (cfg.provider == ProviderKind::Photometric) targets = make_default_targets(model, cfg);
      auto provider = make_provider(cfg, targets ? &*targets : nullptr);
      std::optional<AnimationSequence> sequence;
      if (!cfg.animation_source.empty()) sequence = load_sequence(cfg.animation_source, model);

      FitInputs in;
      in.model = &model;
      in.provider = provider.get();
      in.targets = targets ? &*targets : nullptr;
      in.animation = sequence ? &*sequence : nullptr;
      in.diagnostics_dir = std::filesystem::path(fit_out).parent_path();
      if (in.diagnostics_dir.empty()) in.diagnostics_dir = ".";
      if (!fit_init.empty()) in.initial = load_cloud(fit_init, model);
      spdlog::info("fitting with profile '{}', provider {}, {} iterations at {}px", cfg.profile,
                   to_string(cfg.provider), cfg.iterations, cfg.resolution);
      const FitResult result = fit(cfg, std::move(in));
      save_checkpoint(result.cloud, fit_out);
      write_fit_log(result.log, fit_log.empty() ? fit_out + ".log.csv" : fit_log);
      spdlog::info("wrote {} points to {}", result.cloud.size(), fit_out);
      if (targets) {
        spdlog::info("held-out PSNR {:.2f} dB, shape cosine to reference {:.4f}",
                     mean_psnr(model, result.cloud, targets->held_out, cfg.background),
                     cosine(result.cloud.shape, targets->reference_shape));
      }
    } else if (*anim) {
      const HeadModel model = load_model(anim_model);
      const BoundCloud cloud = load_cloud(anim_ckpt, model);
      const AnimationSequence seq =
          anim_seq.empty() ? synthetic_sequence(model, anim_frames, g.seed) : load_sequence(anim_seq, model);
      AnimateOptions opt;
      opt.path.base = anim_cam.get();
      if (anim_orbit != 0.0) {
        opt.path.kind = CameraPathKind::Orbit;
        opt.path.degrees_per_second = anim_orbit;
      }
      opt.background = parse_background(anim_bg);
      opt.landmark_maps = anim_landmarks;
      std::optional<std::filesystem::path> video;
      if (!anim_video.empty()) video = anim_video;
      const auto n = animate(model, cloud, seq, opt, anim_out, video);
      spdlog::info("wrote {} frames to {}", n, anim_out);
    } else if (*rend) {
      const HeadModel model = load_model(rend_model);
      const BoundCloud cloud = load_cloud(rend_ckpt, model);
      const auto posed = pose_avatar(model, cloud, AnimationInput::neutral(model));
      RenderSettings rs;
      rs.background = parse_background(rend_bg);
      const auto out = render(posed.world, Camera::from_sample(rend_cam.get()), rs);
      write_png(rend_out, out.color);
      if (!rend_alpha.empty()) write_png(rend_alpha, out.alpha);
      std::size_t covered = 0;
      for (double a : out.alpha.data) covered += a > 0.0 ? 1 : 0;
      spdlog::info("wrote {} ({:.1f}% alpha coverage)", rend_out,
                   100.0 * static_cast<double>(covered) / static_cast<double>(out.alpha.data.size()));
    } else if (*lmk) {
      const HeadModel model = load_model(lmk_model);
      AnimationInput a = AnimationInput::neutral(model);
      if (!lmk_ckpt.empty()) a.shape = load_cloud(lmk_ckpt, model).shape;
      if (model.num_joints() > static_cast<std::size_t>(kToyJawJoint)) a.pose[3 * kToyJawJoint] = lmk_jaw;
      write_png(lmk_out, render_landmark_map(model, pose_mesh(model, a), Camera::from_sample(lmk_cam.get())));
      spdlog::info("wrote {}", lmk_out);
    } else if (*bch) {
      const HeadModel model = load_model(bch_model);
      const BoundCloud cloud = bch_ckpt.empty() ? init_cloud(model, AnimationInput::neutral(model))
                                                : load_cloud(bch_ckpt, model);
      bch_opts.seed = g.seed;
      const BenchReport report = bench(model, cloud, bch_opts);
      std::cout << format_table(report);
      if (!bch_out.empty()) {
        std::ofstream out(bch_out);
        if (!out) throw Error("cannot write " + bch_out);
        out << to_json(report).dump(2) << '\n';
      }
    } else if (*fix) {
      write_guidance_fixtures(fix_out);
      spdlog::info("wrote guidance fixtures to {}", fix_out);
    }
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRuntimeError;
  }
  return 0;
}
