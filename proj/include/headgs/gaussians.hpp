#pragma once

#include "headgs/binding.hpp"
#include "headgs/head_model.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace headgs {

/// Gaussians bound to mesh triangles, stored as structure-of-arrays.
///
/// Scales are stored as logarithms and opacities as logits; colors are stored
/// directly and kept in [0, 1] by the optimizer.
struct BoundCloud {
  std::vector<Vec3> positions;  // triangle-local, units of sqrt(area)
  std::vector<Vec3> log_scales;
  std::vector<Vec4> rotations;  // (w, x, y, z)
  std::vector<Vec3> colors;
  std::vector<double> opacity_logits;
  std::vector<std::uint32_t> bindings;

  Eigen::VectorXd shape;
  std::array<std::uint8_t, 32> model_hash{};

  // Densification statistics since the last densify step.
  std::vector<double> grad_accum;
  std::vector<std::uint32_t> grad_count;
  std::uint64_t densify_generation = 0;

  std::size_t size() const { return positions.size(); }

  LocalPose local_pose(std::size_t i) const {
    return {positions[i], log_scales[i].array().exp().matrix(), rotations[i]};
  }
  double opacity(std::size_t i) const { return sigmoid(opacity_logits[i]); }

  void resize(std::size_t n);
  /// Appends a copy of point `i` (statistics zeroed).
  void push_copy(std::size_t i);
  /// Keeps the points whose mask entry is true, preserving order.
  void filter(const std::vector<bool>& keep);
  void reset_stats();

  /// Throws CheckpointError on any broken invariant.
  void validate(std::size_t num_faces) const;
};

enum class InitScaleMode { Sqrt, Linear };
enum class InitSampling { Lattice, Random };

struct InitOptions {
  int points_per_face = 10;
  int knn = 10;
  InitScaleMode scale_mode = InitScaleMode::Sqrt;
  InitSampling sampling = InitSampling::Lattice;
  std::uint64_t seed = 0;
  double initial_opacity = 0.1;
  double initial_color = 0.5;
};

/// Barycentric coordinates of the deterministic per-face sample pattern.
/// Throws for unsupported counts.
std::vector<Vec3> barycentric_lattice(int k);
std::vector<int> supported_lattice_sizes();

/// Mean distance from each point to its k nearest other points (R-tree).
std::vector<double> knn_mean_distance(std::span<const Vec3> points, int k);

/// K points per face on the posed mesh for `anim`, with kNN-derived isotropic
/// scales, mapped into local frames by the inverse deformation.
BoundCloud init_cloud(const HeadModel& model, const AnimationInput& anim, const InitOptions& options = {});

/// Deformed world poses of all points under the given frames.
std::vector<WorldPose> deform_cloud(const BoundCloud& cloud, const std::vector<TriangleFrame>& frames);

/// Adds one view's screen-space positional gradient norms to the statistics.
/// `norms[i] < 0` marks a point that was not visible.
void accumulate_gradient_stats(BoundCloud& cloud, std::span<const double> norms);

struct DensifyConfig {
  int start_iter = 500;
  int end_iter = 5000;
  int interval = 500;
  double normalized_grad_threshold = 2.0;
  double opacity_prune_threshold = 0.005;
  std::size_t max_points = 300000;
  double split_scale_factor = 1.6;
  /// Points whose largest world scale exceeds this fraction of the bound
  /// triangle's size are split; smaller ones are cloned.
  double split_size_fraction = 0.5;
  bool enabled = true;

  void validate() const;
  bool due(int iter) const;
};

struct DensifyResult {
  std::size_t cloned = 0;
  std::size_t split = 0;
  std::size_t pruned = 0;
  bool densify_skipped = false;
  /// For each output point: the input index it derives from.
  std::vector<std::size_t> origin;
  /// True for points created by this step (clone or split children).
  std::vector<bool> created;
};

/// Normalized-gradient densification followed by opacity pruning. Children
/// inherit the parent's binding. Resets the statistics.
DensifyResult densify_and_prune(BoundCloud& cloud, const std::vector<TriangleFrame>& frames, const DensifyConfig& cfg,
                                int iter, std::uint64_t seed);

/// Normalized mean gradient per point; zero vector when no statistics exist.
std::vector<double> normalized_gradients(const BoundCloud& cloud);

// Checkpoint format ----------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::size_t kCheckpointRecordSize = 60;

std::size_t checkpoint_header_size(std::size_t num_shape);

void save_checkpoint(const BoundCloud& cloud, const std::filesystem::path& path);
BoundCloud load_checkpoint(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_checkpoint(const BoundCloud& cloud);
BoundCloud decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Rounds every stored parameter to binary32 so a save/load cycle is exact.
void quantize_to_storage(BoundCloud& cloud);

}  // namespace headgs
