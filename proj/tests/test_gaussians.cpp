#include "headgs/avatar.hpp"
#include "headgs/errors.hpp"
#include "headgs/gaussians.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <map>
#include <random>

using namespace headgs;
namespace fs = std::filesystem;

namespace {

const HeadModel& toy() {
  static const HeadModel m = generate_toy_model();
  return m;
}

const BoundCloud& toy_cloud() {
  static const BoundCloud c = init_cloud(toy(), AnimationInput::neutral(toy()));
  return c;
}

std::vector<TriangleFrame> rest_frames() {
  return compute_frames(toy(), pose_mesh(toy(), AnimationInput::neutral(toy())).posed_vertices);
}

}  // namespace

TEST_CASE("barycentric lattices") {
  for (int k : supported_lattice_sizes()) {
    const auto pts = barycentric_lattice(k);
    CHECK(pts.size() == static_cast<std::size_t>(k));
    for (const auto& b : pts) {
      CHECK(b.sum() == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(b.minCoeff() > 0.0);
    }
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) CHECK((pts[i] - pts[j]).norm() > 1e-6);
  }
  CHECK_THROWS(barycentric_lattice(7));
}

TEST_CASE("initialization counts and inversion") {
  const auto& m = toy();
  const auto& cloud = toy_cloud();
  CHECK(cloud.size() == 10 * m.num_faces());
  std::vector<int> per_face(m.num_faces(), 0);
  for (auto b : cloud.bindings) ++per_face[b];
  for (int c : per_face) CHECK(c == 10);
  cloud.validate(m.num_faces());

  // Deforming with the rest frames reproduces the sampled surface points.
  const auto frames = rest_frames();
  const auto world = deform_cloud(cloud, frames);
  const auto lattice = barycentric_lattice(10);
  const auto& v = m.template_vertices;
  double worst = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& f = m.faces[cloud.bindings[i]];
    const Vec3& b = lattice[i % 10];
    const Vec3 p = b[0] * v.row(f[0]).transpose() + b[1] * v.row(f[1]).transpose() + b[2] * v.row(f[2]).transpose();
    worst = std::max(worst, (world[i].position - p).norm());
  }
  CHECK(worst < 1e-10);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(cloud.opacity(i) == doctest::Approx(0.1));
    CHECK(cloud.colors[i] == Vec3::Constant(0.5));
  }
}

TEST_CASE("initial scales follow the neighbor distance") {
  const auto& m = toy();
  const auto world = deform_cloud(toy_cloud(), rest_frames());
  std::vector<Vec3> pts;
  for (const auto& w : world) pts.push_back(w.position);
  const auto mean = knn_mean_distance(pts, 10);
  for (std::size_t i = 0; i < pts.size(); i += 97) {
    CHECK(world[i].scale.x() == doctest::Approx(std::sqrt(mean[i])).epsilon(1e-12));
    CHECK(world[i].scale.y() == doctest::Approx(world[i].scale.x()).epsilon(1e-12));
  }
  InitOptions lin;
  lin.scale_mode = InitScaleMode::Linear;
  const auto c2 = init_cloud(m, AnimationInput::neutral(m), lin);
  const auto w2 = deform_cloud(c2, rest_frames());
  CHECK(w2[5].scale.x() == doctest::Approx(mean[5]).epsilon(1e-12));
}

TEST_CASE("knn matches brute force") {
  const std::vector<Vec3> line = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  CHECK(knn_mean_distance(line, 2)[1] == 1.0);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts(2000);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  const auto fast = knn_mean_distance(pts, 10);
  const auto slow = oracle::brute_knn_mean(pts, 10);
  double worst = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) worst = std::max(worst, std::abs(fast[i] - slow[i]));
  CHECK(worst < 1e-12);
}

TEST_CASE("random sampling stays on the faces") {
  InitOptions opt;
  opt.sampling = InitSampling::Random;
  opt.points_per_face = 7;
  opt.seed = 3;
  const auto c = init_cloud(toy(), AnimationInput::neutral(toy()), opt);
  CHECK(c.size() == 7 * toy().num_faces());
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(c.positions[i].y()) < 1e-9);
}

TEST_CASE("degenerate face at init is an error") {
  HeadModel m = toy();
  const auto f = m.faces[0];
  m.template_vertices.row(f[1]) = m.template_vertices.row(f[0]);
  CHECK_THROWS_AS(init_cloud(m, AnimationInput::neutral(m)), DegenerateTriangleError);
}

TEST_CASE("densification rules") {
  const auto frames = rest_frames();
  BoundCloud cloud = toy_cloud();
  DensifyConfig cfg;

  SUBCASE("equal gradients do nothing") {
    std::vector<double> norms(cloud.size(), 0.3);
    accumulate_gradient_stats(cloud, norms);
    for (double g : normalized_gradients(cloud)) CHECK(g == doctest::Approx(1.0));
    const auto before = cloud.positions;
    const auto res = densify_and_prune(cloud, frames, cfg, 500, 1);
    CHECK(res.cloned + res.split + res.pruned == 0);
    CHECK(cloud.positions == before);
  }
  SUBCASE("hot small point is cloned with its binding") {
    std::vector<double> norms(cloud.size(), 0.1);
    norms[42] = 0.1 * 10.0 * static_cast<double>(cloud.size());  // far above the mean
    cloud.log_scales[42] = Vec3::Constant(-12.0);
    accumulate_gradient_stats(cloud, norms);
    const auto n0 = cloud.size();
    const auto res = densify_and_prune(cloud, frames, cfg, 500, 1);
    CHECK(res.cloned == 1);
    CHECK(res.split == 0);
    CHECK(cloud.size() == n0 + 1);
    CHECK(cloud.bindings.back() == cloud.bindings[42]);
    CHECK(cloud.positions.back() == cloud.positions[42]);
    CHECK(res.origin.back() == 42);
    CHECK(res.created.back());
  }
  SUBCASE("hot large point is split into two smaller children") {
    std::vector<double> norms(cloud.size(), 0.1);
    norms[7] = 0.1 * 10.0 * static_cast<double>(cloud.size());
    cloud.log_scales[7] = Vec3::Constant(std::log(5.0));
    const Vec3 parent_scale = cloud.log_scales[7];
    const auto parent_binding = cloud.bindings[7];
    accumulate_gradient_stats(cloud, norms);
    const auto n0 = cloud.size();
    const auto res = densify_and_prune(cloud, frames, cfg, 500, 1);
    CHECK(res.split == 1);
    CHECK(cloud.size() == n0 + 1);
    for (std::size_t k = cloud.size() - 2; k < cloud.size(); ++k) {
      CHECK(cloud.bindings[k] == parent_binding);
      CHECK((cloud.log_scales[k].array() - (parent_scale.array() - std::log(1.6))).abs().maxCoeff() < 1e-12);
    }
    cloud.validate(toy().num_faces());
  }
  SUBCASE("transparent point is pruned") {
    cloud.opacity_logits[3] = logit(0.001);
    const auto n0 = cloud.size();
    const auto res = densify_and_prune(cloud, frames, cfg, 500, 1);
    CHECK(res.pruned == 1);
    CHECK(cloud.size() == n0 - 1);
  }
  SUBCASE("selection is scale invariant") {
    std::mt19937_64 rng(5);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> norms(cloud.size());
    for (auto& x : norms) x = e(rng);
    BoundCloud a = cloud, b = cloud;
    accumulate_gradient_stats(a, norms);
    for (auto& x : norms) x *= 37.0;
    accumulate_gradient_stats(b, norms);
    const auto ra = densify_and_prune(a, frames, cfg, 500, 1);
    const auto rb = densify_and_prune(b, frames, cfg, 500, 1);
    CHECK(ra.cloned + ra.split > 0);
    CHECK(ra.origin == rb.origin);
  }
  SUBCASE("max points skips densification") {
    cfg.max_points = cloud.size();
    std::vector<double> norms(cloud.size(), 0.1);
    norms[0] = 1000.0;
    accumulate_gradient_stats(cloud, norms);
    const auto res = densify_and_prune(cloud, frames, cfg, 500, 1);
    CHECK(res.densify_skipped);
    CHECK(cloud.size() == toy_cloud().size());
  }
  SUBCASE("cloud never becomes empty") {
    for (auto& o : cloud.opacity_logits) o = logit(0.0001);
    const auto res = densify_and_prune(cloud, frames, cfg, 500, 1);
    CHECK(cloud.size() == 1);
    CHECK(res.pruned == toy_cloud().size() - 1);
  }
}

TEST_CASE("schedule") {
  DensifyConfig cfg;
  CHECK(!cfg.due(0));
  CHECK(cfg.due(500));
  CHECK(!cfg.due(750));
  CHECK(cfg.due(5000));
  CHECK(!cfg.due(5500));
}

TEST_CASE("checkpoint round trip and format errors") {
  BoundCloud cloud = toy_cloud();
  cloud.shape = Eigen::VectorXd::LinSpaced(10, -0.5, 0.5);
  cloud.model_hash = model_content_hash(toy());
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 0.3);
  for (auto& p : cloud.positions) p += Vec3(n(rng), n(rng), n(rng));
  for (auto& q : cloud.rotations) q = oracle::random_quaternion(rng);
  quantize_to_storage(cloud);
  const auto dir = fs::temp_directory_path() / "headgs_test_ckpt";
  fs::create_directories(dir);
  const auto path = dir / "cloud.ahgs";
  save_checkpoint(cloud, path);
  CHECK(fs::file_size(path) == checkpoint_header_size(10) + cloud.size() * kCheckpointRecordSize);
  CHECK(checkpoint_header_size(10) == 4 + 4 + 8 + 4 + 40 + 32);
  const auto loaded = load_checkpoint(path);
  CHECK(loaded.positions == cloud.positions);
  CHECK(loaded.log_scales == cloud.log_scales);
  CHECK(loaded.rotations == cloud.rotations);
  CHECK(loaded.colors == cloud.colors);
  CHECK(loaded.opacity_logits == cloud.opacity_logits);
  CHECK(loaded.bindings == cloud.bindings);
  CHECK(loaded.shape == cloud.shape);
  CHECK(loaded.model_hash == cloud.model_hash);
  CHECK(encode_checkpoint(loaded) == encode_checkpoint(cloud));

  // Records without the binding field (56 bytes each).
  auto bytes = encode_checkpoint(cloud);
  const std::size_t header = checkpoint_header_size(10);
  std::vector<std::uint8_t> no_binding(bytes.begin(), bytes.begin() + static_cast<long>(header));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto rec = bytes.begin() + static_cast<long>(header + i * kCheckpointRecordSize);
    no_binding.insert(no_binding.end(), rec, rec + 56);
  }
  CHECK_THROWS_AS(decode_checkpoint(no_binding), UnsupportedFileError);

  auto truncated = bytes;
  truncated.resize(truncated.size() - 7);
  CHECK_THROWS_AS(decode_checkpoint(truncated), CheckpointError);

  auto wrong_version = bytes;
  wrong_version[4] = 99;
  CHECK_THROWS_AS(decode_checkpoint(wrong_version), CheckpointError);

  auto wrong_magic = bytes;
  wrong_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(wrong_magic), CheckpointError);

  auto bad_binding = cloud;
  bad_binding.bindings[0] = 999999;
  CHECK_THROWS_AS(bad_binding.validate(toy().num_faces()), CheckpointError);
}

TEST_CASE("activations are monotone") {
  double prev = -1.0;
  for (double x = -30.0; x <= 30.0; x += 0.5) {
    const double s = sigmoid(x);
    CHECK(s > prev);
    CHECK((s > 0.0 && s <= 1.0));
    prev = s;
  }
}

TEST_CASE("avatar backward reaches the shape coefficients") {
  const auto& m = toy();
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0.0, 1.0);
  BoundCloud cloud = toy_cloud();
  cloud.shape = Eigen::VectorXd::Zero(10);
  for (Eigen::Index k = 0; k < 10; ++k) cloud.shape[k] = 0.3 * n(rng);
  AnimationInput anim = AnimationInput::neutral(m);
  anim.pose[3] = 0.2;
  for (Eigen::Index k = 0; k < anim.expression.size(); ++k) anim.expression[k] = 0.3 * n(rng);
  const auto posed = pose_avatar(m, cloud, anim);
  WorldGaussianGrads up;
  up.poses.resize(cloud.size());
  up.colors.assign(cloud.size(), Vec3::Zero());
  up.opacities.assign(cloud.size(), 0.0);
  for (auto& g : up.poses) {
    g.position = Vec3(n(rng), n(rng), n(rng));
    g.scale = Vec3(n(rng), n(rng), n(rng));
    for (int k = 0; k < 9; ++k) g.rotation.data()[k] = n(rng);
  }
  auto loss = [&](const BoundCloud& c) {
    const auto p = pose_avatar(m, c, anim);
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
      s += up.poses[i].position.dot(p.world.poses[i].position) + up.poses[i].scale.dot(p.world.poses[i].scale) +
           (up.poses[i].rotation.array() * p.world.poses[i].rotation.array()).sum();
    return s;
  };
  const auto g = avatar_backward(m, cloud, posed, up, true);
  Eigen::VectorXd num(10);
  for (Eigen::Index k = 0; k < 10; ++k)
    num[k] = oracle::central_difference([&](double x) { auto c = cloud; c.shape[k] = x; return loss(c); }, cloud.shape[k], 1e-5);
  CHECK(oracle::relative_error(g.shape, num) < 1e-4);

  const auto g0 = avatar_backward(m, cloud, posed, up, false);
  CHECK(g0.shape.norm() == 0.0);
  CHECK(g0.positions == g.positions);
}
