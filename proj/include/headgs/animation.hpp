#pragma once

#include "headgs/head_model.hpp"

#include <filesystem>
#include <vector>

namespace headgs {

/// Ordered (pose, expression) frames; shape is not part of a sequence.
struct AnimationSequence {
  double fps = 30.0;
  std::vector<AnimationInput> frames;

  std::size_t size() const { return frames.size(); }
  /// Throws DimensionError naming the first frame whose sizes do not match.
  void validate(const HeadModel& model) const;
};

/// JSON Lines: an optional header line {"fps": ...} followed by one
/// {"pose": [3J], "expr": [|psi|]} object per frame. Errors name the frame.
AnimationSequence load_sequence(const std::filesystem::path& path, const HeadModel& model);
void save_sequence(const AnimationSequence& seq, const std::filesystem::path& path);

/// Smooth sinusoidal pose and expression trajectories.
AnimationSequence synthetic_sequence(const HeadModel& model, int n_frames, std::uint64_t seed, double fps = 30.0);

/// Jaw opening from 0 to `max_angle` radians at constant speed, no expression.
AnimationSequence jaw_ramp_sequence(const HeadModel& model, int n_frames, double max_angle, int jaw_joint);

}  // namespace headgs
