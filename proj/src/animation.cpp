#include "headgs/animation.hpp"

#include "headgs/binary_io.hpp"
#include "headgs/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace headgs {

using nlohmann::json;

void AnimationSequence::validate(const HeadModel& model) const {
  if (!(fps > 0)) throw Error("sequence fps must be positive");
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& f = frames[k];
    if (f.pose.size() != static_cast<Eigen::Index>(3 * model.num_joints()) ||
        (f.expression.size() != 0 && f.expression.size() != static_cast<Eigen::Index>(model.num_expr())))
      throw DimensionError("animation frame " + std::to_string(k) + " does not match the model dimensions");
    if (!f.pose.allFinite() || !f.expression.allFinite())
      throw Error("animation frame " + std::to_string(k) + " contains non-finite values");
  }
}

AnimationSequence load_sequence(const std::filesystem::path& path, const HeadModel& model) {
  std::istringstream in(io::read_text(path));
  AnimationSequence seq;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + " (frame " + std::to_string(seq.frames.size()) + ")";
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error("malformed animation " + where + ": not a JSON object");
    if (j.contains("fps") && !j.contains("pose")) {
      if (!seq.frames.empty()) throw Error("malformed animation " + where + ": header after frames");
      seq.fps = j.at("fps").get<double>();
      continue;
    }
    try {
      AnimationInput f;
      const auto pose = j.at("pose").get<std::vector<double>>();
      f.pose = Eigen::Map<const Eigen::VectorXd>(pose.data(), static_cast<Eigen::Index>(pose.size()));
      if (j.contains("expr")) {
        const auto expr = j.at("expr").get<std::vector<double>>();
        f.expression = Eigen::Map<const Eigen::VectorXd>(expr.data(), static_cast<Eigen::Index>(expr.size()));
      }
      seq.frames.push_back(std::move(f));
    } catch (const json::exception& e) {
      throw Error("malformed animation " + where + ": " + e.what());
    }
  }
  seq.validate(model);
  return seq;
}

void save_sequence(const AnimationSequence& seq, const std::filesystem::path& path) {
  std::ostringstream out;
  out << json{{"fps", seq.fps}}.dump() << '\n';
  for (const auto& f : seq.frames) {
    json j;
    j["pose"] = std::vector<double>(f.pose.data(), f.pose.data() + f.pose.size());
    j["expr"] = std::vector<double>(f.expression.data(), f.expression.data() + f.expression.size());
    out << j.dump() << '\n';
  }
  io::write_text(path, out.str());
}

AnimationSequence synthetic_sequence(const HeadModel& model, int n_frames, std::uint64_t seed, double fps) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi), freq(0.2, 1.2);
  const auto nj = static_cast<Eigen::Index>(model.num_joints());
  const auto ne = static_cast<Eigen::Index>(model.num_expr());
  // Per channel: frequency (Hz), phase and amplitude.
  struct Wave {
    double f, p, a;
  };
  std::vector<Wave> pose_waves(static_cast<std::size_t>(3 * nj)), expr_waves(static_cast<std::size_t>(ne));
  for (Eigen::Index k = 0; k < 3 * nj; ++k)
    pose_waves[static_cast<std::size_t>(k)] = {freq(rng), phase(rng), k < 3 ? 0.15 : 0.08};
  for (auto& w : expr_waves) w = {freq(rng), phase(rng), 0.8};

  AnimationSequence seq;
  seq.fps = fps;
  for (int i = 0; i < n_frames; ++i) {
    const double t = i / fps;
    AnimationInput f = AnimationInput::neutral(model);
    for (Eigen::Index k = 0; k < 3 * nj; ++k) {
      const auto& w = pose_waves[static_cast<std::size_t>(k)];
      f.pose[k] = w.a * std::sin(2.0 * std::numbers::pi * w.f * t + w.p);
    }
    // Jaw-like joints open one way only.
    if (nj > 1) f.pose[3] = 0.12 * (1.0 - std::cos(2.0 * std::numbers::pi * pose_waves[3].f * t + pose_waves[3].p));
    for (Eigen::Index k = 0; k < ne; ++k) {
      const auto& w = expr_waves[static_cast<std::size_t>(k)];
      f.expression[k] = w.a * std::sin(2.0 * std::numbers::pi * w.f * t + w.p);
    }
    f.shape.resize(0);
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

AnimationSequence jaw_ramp_sequence(const HeadModel& model, int n_frames, double max_angle, int jaw_joint) {
  AnimationSequence seq;
  for (int i = 0; i < n_frames; ++i) {
    AnimationInput f = AnimationInput::neutral(model);
    f.shape.resize(0);
    f.pose[3 * jaw_joint] = n_frames > 1 ? max_angle * i / (n_frames - 1) : 0.0;
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

}  // namespace headgs
