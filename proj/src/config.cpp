#include "headgs/config.hpp"

#include "headgs/binary_io.hpp"
#include "headgs/errors.hpp"

#include <toml.hpp>

#include <set>
#include <sstream>

namespace headgs {

std::string to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::Photometric: return "photometric";
    case ProviderKind::EchoStub: return "echo-stub";
    case ProviderKind::FixtureReplay: return "fixture-replay";
    case ProviderKind::Remote: return "remote";
  }
  return "?";
}

ProviderKind provider_from_string(const std::string& name) {
  for (auto k : {ProviderKind::Photometric, ProviderKind::EchoStub, ProviderKind::FixtureReplay, ProviderKind::Remote})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown guidance provider '" + name + "'");
}

void FitConfig::validate() const {
  if (iterations <= 0) throw ConfigError("iterations must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (resolution < 8) throw ConfigError("resolution must be at least 8");
  if (shape_freeze_iter < 0 || shape_freeze_iter > iterations)
    throw ConfigError("shape_freeze_iter must lie in [0, iterations]");
  for (double r : {lr.position, lr.scale, lr.rotation, lr.color, lr.opacity, lr.shape})
    if (!(r > 0)) throw ConfigError("learning rates must be positive");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw ConfigError("optimizer betas must lie in [0, 1)");
  if (!(adam_eps > 0)) throw ConfigError("optimizer eps must be positive");
  if (!(cfg_scale > 0)) throw ConfigError("cfg scale must be positive");
  if (!(max_failure_fraction >= 0 && max_failure_fraction < 1)) throw ConfigError("max_failure_fraction must lie in [0, 1)");
  if (photometric.training_views <= 0 || photometric.held_out_views < 0)
    throw ConfigError("photometric view counts must be positive");
  if (synthetic_frames <= 0) throw ConfigError("synthetic_frames must be positive");
  if (log_interval <= 0) throw ConfigError("log_interval must be positive");
  if (provider == ProviderKind::FixtureReplay && fixture_response.empty())
    throw ConfigError("fixture-replay provider needs guidance.fixture");
  cameras.validate();
  reg.validate();
  if (densify.enabled) densify.validate();
  sds.validate();
  if (init.points_per_face <= 0 || init.knn <= 0) throw ConfigError("init counts must be positive");
}

FitConfig full_profile() { return FitConfig{}; }

FitConfig desk_profile() {
  FitConfig c;
  c.profile = "desk";
  c.iterations = 2000;
  c.batch_size = 4;
  c.resolution = 96;
  c.shape_freeze_iter = 1600;
  c.densify.start_iter = 100;
  c.densify.end_iter = 1000;
  c.densify.interval = 100;
  c.init.scale_mode = InitScaleMode::Linear;
  c.log_interval = 50;
  return c;
}

namespace {

/// Reads keys out of one TOML table and remembers which were consumed.
class TableReader {
 public:
  TableReader(const toml::table& table, std::string path) : table_(table), path_(std::move(path)) {}

  template <typename T>
  void read(const char* key, T& out) {
    used_.insert(key);
    const toml::node* node = table_.get(key);
    if (!node) return;
    if constexpr (std::is_same_v<T, bool>) {
      if (!node->is_boolean()) fail(key, "a boolean");
      out = *node->value<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!node->is_integer()) fail(key, "an integer");
      const auto v = *node->value<std::int64_t>();
      if (std::is_unsigned_v<T> && v < 0) fail(key, "a non-negative integer");
      out = static_cast<T>(v);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!node->is_number()) fail(key, "a number");
      out = *node->value<double>();
    } else {
      if (!node->is_string()) fail(key, "a string");
      out = T(*node->value<std::string>());
    }
  }

  void read_range(const char* key, Range& out) {
    used_.insert(key);
    const toml::node* node = table_.get(key);
    if (!node) return;
    const auto* arr = node->as_array();
    if (!arr || arr->size() != 2 || !(*arr)[0].is_number() || !(*arr)[1].is_number()) fail(key, "a [lo, hi] pair");
    out.lo = *(*arr)[0].value<double>();
    out.hi = *(*arr)[1].value<double>();
  }

  void read_vec3(const char* key, Vec3& out) {
    used_.insert(key);
    const toml::node* node = table_.get(key);
    if (!node) return;
    const auto* arr = node->as_array();
    if (!arr || arr->size() != 3) fail(key, "a 3-element array");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!(*arr)[i].is_number()) fail(key, "a 3-element numeric array");
      out[static_cast<Eigen::Index>(i)] = *(*arr)[i].value<double>();
    }
  }

  void read_optional_int(const char* key, std::optional<int>& out) {
    used_.insert(key);
    if (!table_.get(key)) return;
    int v = 0;
    read(key, v);
    out = v;
  }

  template <typename Fn>
  void section(const char* key, Fn&& fn) {
    used_.insert(key);
    const toml::node* node = table_.get(key);
    if (!node) return;
    const auto* sub = node->as_table();
    if (!sub) fail(key, "a table");
    TableReader reader(*sub, path_.empty() ? key : path_ + "." + key);
    fn(reader);
    reader.finish();
  }

  /// Rejects keys nobody asked for.
  void finish() const {
    for (const auto& [k, v] : table_) {
      const std::string name(k.str());
      if (!used_.count(name))
        throw ConfigError("unknown config key '" + (path_.empty() ? name : path_ + "." + name) + "'");
    }
  }

 private:
  [[noreturn]] void fail(const char* key, const char* what) const {
    throw ConfigError("config key '" + (path_.empty() ? std::string(key) : path_ + "." + key) + "' must be " + what);
  }

  const toml::table& table_;
  std::string path_;
  std::set<std::string> used_;
};

}  // namespace

FitConfig parse_fit_config(const std::string& text, const std::string& source_name) {
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "invalid TOML in " << source_name << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(os.str());
  }

  std::string profile = "full";
  if (const auto* p = root.get("profile")) {
    if (!p->is_string()) throw ConfigError("config key 'profile' must be a string");
    profile = *p->value<std::string>();
  }
  FitConfig c;
  if (profile == "full") {
    c = full_profile();
  } else if (profile == "desk") {
    c = desk_profile();
  } else {
    throw ConfigError("unknown profile '" + profile + "' (expected full or desk)");
  }

  TableReader r(root, "");
  r.read("profile", c.profile);
  r.read("iterations", c.iterations);
  r.read("batch_size", c.batch_size);
  r.read("resolution", c.resolution);
  r.read("shape_freeze_iter", c.shape_freeze_iter);
  r.read("seed", c.seed);
  r.read("prompt", c.prompt);
  r.read_vec3("background", c.background);
  r.read("log_interval", c.log_interval);
  r.section("optimizer", [&](TableReader& t) {
    t.read("beta1", c.beta1);
    t.read("beta2", c.beta2);
    t.read("eps", c.adam_eps);
  });
  r.section("learning_rates", [&](TableReader& t) {
    t.read("position", c.lr.position);
    t.read("scale", c.lr.scale);
    t.read("rotation", c.lr.rotation);
    t.read("color", c.lr.color);
    t.read("opacity", c.lr.opacity);
    t.read("shape", c.lr.shape);
  });
  r.section("cameras", [&](TableReader& t) {
    t.read_range("distance", c.cameras.distance);
    t.read_range("fovy", c.cameras.fovy);
    t.read_range("elevation", c.cameras.elevation);
    t.read_range("azimuth", c.cameras.azimuth);
  });
  r.section("regularization", [&](TableReader& t) {
    t.read("lambda_pos", c.reg.lambda_pos);
    t.read("lambda_scale", c.reg.lambda_scale);
    t.read("tol_pos_factor", c.reg.tol_pos_factor);
    t.read("tol_scale_factor", c.reg.tol_scale_factor);
  });
  r.section("densify", [&](TableReader& t) {
    t.read("enabled", c.densify.enabled);
    t.read("start_iter", c.densify.start_iter);
    t.read("end_iter", c.densify.end_iter);
    t.read("interval", c.densify.interval);
    t.read("normalized_grad_threshold", c.densify.normalized_grad_threshold);
    t.read("opacity_prune_threshold", c.densify.opacity_prune_threshold);
    t.read("max_points", c.densify.max_points);
    t.read("split_scale_factor", c.densify.split_scale_factor);
    t.read("split_size_fraction", c.densify.split_size_fraction);
  });
  r.section("sds", [&](TableReader& t) {
    t.read("t_split", c.sds.t_split);
    std::string weighting = c.sds.weighting == SdsWeighting::Constant ? "constant" : "sigma";
    t.read("weighting", weighting);
    if (weighting == "constant") {
      c.sds.weighting = SdsWeighting::Constant;
    } else if (weighting == "sigma") {
      c.sds.weighting = SdsWeighting::Sigma;
    } else {
      throw ConfigError("sds.weighting must be 'constant' or 'sigma'");
    }
    t.read("negative_prompt", c.sds.negative_prompt);
    t.read("cfg", c.cfg_scale);
    t.read("cfg_neg", c.cfg_neg_scale);
    t.read_optional_int("timestep", c.timestep);
  });
  r.section("view_prompts", [&](TableReader& t) {
    t.read("front_max_azimuth", c.view_prompts.front_max_azimuth);
    t.read("back_min_azimuth", c.view_prompts.back_min_azimuth);
    t.read("overhead_min_elevation", c.view_prompts.overhead_min_elevation);
  });
  r.section("init", [&](TableReader& t) {
    t.read("points_per_face", c.init.points_per_face);
    t.read("knn", c.init.knn);
    std::string mode = c.init.scale_mode == InitScaleMode::Sqrt ? "sqrt" : "linear";
    t.read("scale_mode", mode);
    if (mode == "sqrt") {
      c.init.scale_mode = InitScaleMode::Sqrt;
    } else if (mode == "linear") {
      c.init.scale_mode = InitScaleMode::Linear;
    } else {
      throw ConfigError("init.scale_mode must be 'sqrt' or 'linear'");
    }
    std::string sampling = c.init.sampling == InitSampling::Lattice ? "lattice" : "random";
    t.read("sampling", sampling);
    if (sampling == "lattice") {
      c.init.sampling = InitSampling::Lattice;
    } else if (sampling == "random") {
      c.init.sampling = InitSampling::Random;
    } else {
      throw ConfigError("init.sampling must be 'lattice' or 'random'");
    }
    t.read("opacity", c.init.initial_opacity);
    t.read("color", c.init.initial_color);
  });
  r.section("guidance", [&](TableReader& t) {
    std::string provider = to_string(c.provider);
    t.read("provider", provider);
    c.provider = provider_from_string(provider);
    t.read("url", c.remote.url);
    t.read("max_attempts", c.remote.max_attempts);
    t.read("backoff_ms", c.remote.backoff_ms);
    t.read("timeout_s", c.remote.timeout_s);
    t.read("max_concurrency", c.remote.max_concurrency);
    std::string fixture = c.fixture_response.string();
    t.read("fixture", fixture);
    c.fixture_response = fixture;
    t.read("max_failure_fraction", c.max_failure_fraction);
  });
  r.section("photometric", [&](TableReader& t) {
    t.read("training_views", c.photometric.training_views);
    t.read("held_out_views", c.photometric.held_out_views);
    t.read("reference_seed", c.photometric.reference_seed);
    t.read("camera_distance", c.photometric.camera_distance);
    t.read("fovy", c.photometric.fovy);
  });
  r.section("animation", [&](TableReader& t) {
    std::string source = c.animation_source.string();
    t.read("source", source);
    c.animation_source = source;
    t.read("synthetic_frames", c.synthetic_frames);
  });
  r.finish();
  c.validate();
  return c;
}

FitConfig load_fit_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file " + path.string() + " does not exist");
  return parse_fit_config(io::read_text(path), path.string());
}

}  // namespace headgs
