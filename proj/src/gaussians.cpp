#include "headgs/gaussians.hpp"

#include "headgs/errors.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace headgs {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

void BoundCloud::resize(std::size_t n) {
  positions.resize(n, Vec3::Zero());
  log_scales.resize(n, Vec3::Zero());
  rotations.resize(n, identity_quaternion());
  colors.resize(n, Vec3::Constant(0.5));
  opacity_logits.resize(n, 0.0);
  bindings.resize(n, 0);
  grad_accum.resize(n, 0.0);
  grad_count.resize(n, 0);
}

void BoundCloud::push_copy(std::size_t i) {
  positions.push_back(positions[i]);
  log_scales.push_back(log_scales[i]);
  rotations.push_back(rotations[i]);
  colors.push_back(colors[i]);
  opacity_logits.push_back(opacity_logits[i]);
  bindings.push_back(bindings[i]);
  grad_accum.push_back(0.0);
  grad_count.push_back(0);
}

namespace {

template <typename T>
void filter_vec(std::vector<T>& v, const std::vector<bool>& keep) {
  std::size_t w = 0;
  for (std::size_t r = 0; r < v.size(); ++r)
    if (keep[r]) v[w++] = v[r];
  v.resize(w);
}

}  // namespace

void BoundCloud::filter(const std::vector<bool>& keep) {
  if (keep.size() != size()) throw DimensionError("filter mask size differs from point count");
  filter_vec(positions, keep);
  filter_vec(log_scales, keep);
  filter_vec(rotations, keep);
  filter_vec(colors, keep);
  filter_vec(opacity_logits, keep);
  filter_vec(bindings, keep);
  filter_vec(grad_accum, keep);
  filter_vec(grad_count, keep);
}

void BoundCloud::reset_stats() {
  grad_accum.assign(size(), 0.0);
  grad_count.assign(size(), 0);
}

void BoundCloud::validate(std::size_t num_faces) const {
  const auto n = size();
  if (n == 0) throw CheckpointError("cloud has no points");
  if (log_scales.size() != n || rotations.size() != n || colors.size() != n || opacity_logits.size() != n ||
      bindings.size() != n)
    throw CheckpointError("cloud arrays have inconsistent lengths");
  for (std::size_t i = 0; i < n; ++i) {
    if (bindings[i] >= num_faces)
      throw CheckpointError("point " + std::to_string(i) + " bound to face " + std::to_string(bindings[i]) +
                            " of " + std::to_string(num_faces));
    if (!log_scales[i].allFinite() || !std::isfinite(opacity_logits[i]) || !positions[i].allFinite() ||
        !rotations[i].allFinite())
      throw CheckpointError("point " + std::to_string(i) + " has non-finite parameters");
  }
}

// ---------------------------------------------------------------------------

std::vector<int> supported_lattice_sizes() { return {1, 3, 4, 6, 10, 15}; }

std::vector<Vec3> barycentric_lattice(int k) {
  // Interior points of the order-m triangular lattice: (m-1)(m-2)/2 points.
  auto interior = [](int m) {
    std::vector<Vec3> pts;
    for (int i = 1; i < m; ++i)
      for (int j = 1; i + j < m; ++j) pts.emplace_back(i, j, m - i - j);
    for (auto& p : pts) p /= static_cast<double>(m);
    return pts;
  };
  switch (k) {
    case 1: return interior(3);
    case 3: return interior(4);
    case 4: {
      auto pts = interior(4);
      pts.emplace_back(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
      return pts;
    }
    case 6: return interior(5);
    case 10: return interior(6);
    case 15: return interior(7);
    default: break;
  }
  std::string supported;
  for (int s : supported_lattice_sizes()) supported += (supported.empty() ? "" : ", ") + std::to_string(s);
  throw Error("no even sampling pattern for K=" + std::to_string(k) + " (supported: " + supported + ")");
}

std::vector<double> knn_mean_distance(std::span<const Vec3> points, int k) {
  using Point = bg::model::point<double, 3, bg::cs::cartesian>;
  using Value = std::pair<Point, std::size_t>;
  if (k < 1) throw Error("knn requires k >= 1");
  std::vector<Value> values;
  values.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    values.emplace_back(Point(points[i].x(), points[i].y(), points[i].z()), i);
  const bgi::rtree<Value, bgi::quadratic<16>> tree(values.begin(), values.end());

  const auto want = static_cast<unsigned>(std::min<std::size_t>(static_cast<std::size_t>(k), points.size() - 1));
  std::vector<double> out(points.size(), 0.0);
  std::vector<Value> hits;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (want == 0) break;
    hits.clear();
    tree.query(bgi::nearest(values[i].first, want + 1), std::back_inserter(hits));
    std::vector<double> d;
    d.reserve(hits.size());
    bool skipped_self = false;
    for (const auto& h : hits) {
      if (!skipped_self && h.second == i) {
        skipped_self = true;
        continue;
      }
      d.push_back((points[h.second] - points[i]).norm());
    }
    std::sort(d.begin(), d.end());
    d.resize(want);
    out[i] = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(want);
  }
  return out;
}

BoundCloud init_cloud(const HeadModel& model, const AnimationInput& anim, const InitOptions& opt) {
  if (opt.points_per_face < 1) throw Error("K must be at least 1");
  const MeshState state = pose_mesh(model, anim);
  const auto frames = compute_frames(model, state.posed_vertices);

  std::vector<Vec3> pattern;
  if (opt.sampling == InitSampling::Lattice) pattern = barycentric_lattice(opt.points_per_face);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  const auto k = static_cast<std::size_t>(opt.points_per_face);
  const std::size_t n = model.num_faces() * k;
  std::vector<Vec3> world(n);
  BoundCloud cloud;
  cloud.resize(n);
  for (std::size_t f = 0; f < model.num_faces(); ++f) {
    const auto& face = model.faces[f];
    const Vec3 v0 = state.posed_vertices.row(face[0]).transpose();
    const Vec3 v1 = state.posed_vertices.row(face[1]).transpose();
    const Vec3 v2 = state.posed_vertices.row(face[2]).transpose();
    for (std::size_t s = 0; s < k; ++s) {
      Vec3 b;
      if (opt.sampling == InitSampling::Lattice) {
        b = pattern[s];
      } else {
        const double r1 = std::sqrt(uni(rng)), r2 = uni(rng);
        b = Vec3(1 - r1, r1 * (1 - r2), r1 * r2);
      }
      world[f * k + s] = b[0] * v0 + b[1] * v1 + b[2] * v2;
      cloud.bindings[f * k + s] = static_cast<std::uint32_t>(f);
    }
  }

  const auto mean_dist = knn_mean_distance(world, opt.knn);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::max(mean_dist[i], 1e-12);
    const double s = opt.scale_mode == InitScaleMode::Sqrt ? std::sqrt(d) : d;
    WorldPose wp;
    wp.position = world[i];
    wp.scale = Vec3::Constant(s);
    const auto local = invert_deform(wp, frames[cloud.bindings[i]]);
    cloud.positions[i] = local.position;
    cloud.log_scales[i] = local.scale.array().log().matrix();
    cloud.rotations[i] = identity_quaternion();
    cloud.colors[i] = Vec3::Constant(opt.initial_color);
    cloud.opacity_logits[i] = logit(opt.initial_opacity);
  }
  cloud.shape = anim.shape.size() ? anim.shape : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.num_shape()));
  cloud.model_hash = model_content_hash(model);
  return cloud;
}

std::vector<WorldPose> deform_cloud(const BoundCloud& cloud, const std::vector<TriangleFrame>& frames) {
  std::vector<WorldPose> out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) out[i] = deform_gaussian(cloud.local_pose(i), frames[cloud.bindings[i]]);
  return out;
}

void accumulate_gradient_stats(BoundCloud& cloud, std::span<const double> norms) {
  if (norms.size() != cloud.size()) throw DimensionError("gradient norm count differs from point count");
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (norms[i] < 0.0) continue;
    cloud.grad_accum[i] += norms[i];
    cloud.grad_count[i] += 1;
  }
}

// ---------------------------------------------------------------------------

void DensifyConfig::validate() const {
  if (start_iter >= end_iter) throw ConfigError("densify start_iter must be < end_iter");
  if (interval <= 0) throw ConfigError("densify interval must be positive");
  if (!(normalized_grad_threshold > 0) || !(opacity_prune_threshold > 0) || !(split_scale_factor > 0) ||
      !(split_size_fraction > 0))
    throw ConfigError("densify thresholds must be positive");
}

bool DensifyConfig::due(int iter) const {
  return enabled && iter >= start_iter && iter <= end_iter && (iter - start_iter) % interval == 0;
}

std::vector<double> normalized_gradients(const BoundCloud& cloud) {
  const auto n = cloud.size();
  std::vector<double> mean(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (cloud.grad_count[i] > 0) mean[i] = cloud.grad_accum[i] / cloud.grad_count[i];
  const double population = n ? std::accumulate(mean.begin(), mean.end(), 0.0) / static_cast<double>(n) : 0.0;
  if (!(population > 0.0)) return std::vector<double>(n, 0.0);
  for (auto& m : mean) m /= population;
  return mean;
}

DensifyResult densify_and_prune(BoundCloud& cloud, const std::vector<TriangleFrame>& frames, const DensifyConfig& cfg,
                                int iter, std::uint64_t seed) {
  const std::size_t n0 = cloud.size();
  DensifyResult res;
  const auto norm_grad = normalized_gradients(cloud);

  std::vector<std::size_t> to_clone, to_split;
  for (std::size_t i = 0; i < n0; ++i) {
    if (!(norm_grad[i] > cfg.normalized_grad_threshold)) continue;
    const auto& frame = frames[cloud.bindings[i]];
    const double world_scale = std::sqrt(frame.area) * cloud.log_scales[i].array().exp().maxCoeff();
    (world_scale > cfg.split_size_fraction * frame.size ? to_split : to_clone).push_back(i);
  }

  std::vector<bool> keep(n0, true);
  res.origin.resize(n0);
  std::iota(res.origin.begin(), res.origin.end(), std::size_t{0});
  res.created.assign(n0, false);

  const std::size_t grown = n0 + to_clone.size() + to_split.size();
  if (grown > cfg.max_points && !(to_clone.empty() && to_split.empty())) {
    spdlog::warn("densify at iteration {}: {} points would exceed max_points={}, skipping densification", iter, grown,
                 cfg.max_points);
    res.densify_skipped = true;
  } else {
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(iter + 1)));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto i : to_clone) {
      cloud.push_copy(i);
      keep.push_back(true);
      res.origin.push_back(i);
      res.created.push_back(true);
    }
    const double shrink = std::log(cfg.split_scale_factor);
    for (auto i : to_split) {
      const Mat3 R = quaternion_to_matrix(cloud.rotations[i]);
      const Vec3 s = cloud.log_scales[i].array().exp().matrix();
      for (int c = 0; c < 2; ++c) {
        const Vec3 z(normal(rng), normal(rng), normal(rng));
        cloud.push_copy(i);
        const std::size_t child = cloud.size() - 1;
        cloud.positions[child] = cloud.positions[i] + R * s.cwiseProduct(z);
        cloud.log_scales[child] = cloud.log_scales[i].array() - shrink;
        keep.push_back(true);
        res.origin.push_back(i);
        res.created.push_back(true);
      }
      keep[i] = false;
    }
    res.cloned = to_clone.size();
    res.split = to_split.size();
  }

  std::size_t best = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.opacity_logits[i] > cloud.opacity_logits[best]) best = i;
    if (keep[i] && cloud.opacity(i) < cfg.opacity_prune_threshold) {
      keep[i] = false;
      ++res.pruned;
    }
  }
  if (std::none_of(keep.begin(), keep.end(), [](bool k) { return k; })) {
    spdlog::warn("densify at iteration {}: pruning would empty the cloud, keeping the most opaque point", iter);
    keep[best] = true;
    --res.pruned;
  }

  cloud.filter(keep);
  std::vector<std::size_t> origin;
  std::vector<bool> created;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (!keep[i]) continue;
    origin.push_back(res.origin[i]);
    created.push_back(res.created[i]);
  }
  res.origin = std::move(origin);
  res.created = std::move(created);
  cloud.reset_stats();
  ++cloud.densify_generation;
  return res;
}

}  // namespace headgs
