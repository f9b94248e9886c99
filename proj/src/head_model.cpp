#include "headgs/head_model.hpp"

#include "headgs/binary_io.hpp"
#include "headgs/errors.hpp"

#include <nlohmann/json.hpp>
#include <sodium.h>

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <unordered_map>

namespace headgs {

namespace {

constexpr double kWeightSumTolerance = 1e-5;

void check_dims(const HeadModel& m, const AnimationInput& a) {
  if (a.shape.size() != 0 && static_cast<std::size_t>(a.shape.size()) != m.num_shape())
    throw DimensionError("shape has " + std::to_string(a.shape.size()) + " coefficients, model expects " +
                         std::to_string(m.num_shape()));
  if (a.expression.size() != 0 && static_cast<std::size_t>(a.expression.size()) != m.num_expr())
    throw DimensionError("expression has " + std::to_string(a.expression.size()) +
                         " coefficients, model expects " + std::to_string(m.num_expr()));
  if (a.pose.size() != 0 && static_cast<std::size_t>(a.pose.size()) != 3 * m.num_joints())
    throw DimensionError("pose has " + std::to_string(a.pose.size()) + " values, model expects " +
                         std::to_string(3 * m.num_joints()));
}

}  // namespace

void HeadModel::validate() const {
  const auto n = num_vertices();
  const auto j = num_joints();
  if (n == 0) throw AssetError("model has no vertices");
  if (faces.empty()) throw AssetError("model has no faces");
  for (std::size_t f = 0; f < faces.size(); ++f)
    for (auto idx : faces[f])
      if (idx >= n) throw AssetError("face " + std::to_string(f) + " references vertex " + std::to_string(idx));
  if (static_cast<std::size_t>(shape_basis.rows()) != 3 * n)
    throw DimensionError("shape_basis has " + std::to_string(shape_basis.rows()) + " rows, expected 3N");
  if (static_cast<std::size_t>(expr_basis.rows()) != 3 * n)
    throw DimensionError("expr_basis has " + std::to_string(expr_basis.rows()) + " rows, expected 3N");
  if (j == 0) throw AssetError("model has no joints");
  if (static_cast<std::size_t>(lbs_weights.rows()) != n || static_cast<std::size_t>(lbs_weights.cols()) != j)
    throw DimensionError("lbs_weights must be N x J");
  if (static_cast<std::size_t>(joint_regressor.rows()) != j ||
      static_cast<std::size_t>(joint_regressor.cols()) != n)
    throw DimensionError("joint_regressor must be J x N");
  if (joint_parents[0] != -1) throw AssetError("joint 0 must be a root");
  for (std::size_t k = 1; k < j; ++k)
    if (joint_parents[k] < -1 || joint_parents[k] >= static_cast<int>(k))
      throw AssetError("joint " + std::to_string(k) + " has invalid parent " + std::to_string(joint_parents[k]));
  for (Eigen::Index r = 0; r < lbs_weights.rows(); ++r) {
    if ((lbs_weights.row(r).array() < 0.0).any())
      throw AssetError("lbs_weights row " + std::to_string(r) + " has a negative weight");
    const double s = lbs_weights.row(r).sum();
    if (std::abs(s - 1.0) > kWeightSumTolerance)
      throw AssetError("lbs_weights row " + std::to_string(r) + " sums to " + std::to_string(s) +
                       " instead of 1");
  }
  for (const auto& [name, idx] : landmark_groups)
    for (auto v : idx)
      if (v >= n) throw AssetError("landmark group " + name + " references vertex " + std::to_string(v));
}

AnimationInput AnimationInput::neutral(const HeadModel& model) {
  AnimationInput a;
  a.shape = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.num_shape()));
  a.pose = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * model.num_joints()));
  a.expression = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.num_expr()));
  return a;
}

MeshState pose_mesh(const HeadModel& model, const AnimationInput& anim) {
  check_dims(model, anim);
  const auto n = static_cast<Eigen::Index>(model.num_vertices());
  const auto nj = model.num_joints();

  RowMatrixX3d shaped = model.template_vertices;
  Eigen::Map<Eigen::VectorXd> flat(shaped.data(), 3 * n);
  if (anim.shape.size() != 0) flat.noalias() += model.shape_basis * anim.shape;
  if (anim.expression.size() != 0) flat.noalias() += model.expr_basis * anim.expression;

  MeshState state;
  state.input = anim;
  state.joint_positions = model.joint_regressor * shaped;
  state.joint_rotations.resize(nj);
  state.joint_translations.resize(nj);

  // Forward kinematics: world transform of joint j maps a rest-space point x to
  // Rw_j (x - J_j) + T_j.
  std::vector<Vec3> world_offset(nj);
  for (std::size_t j = 0; j < nj; ++j) {
    const Vec3 joint = state.joint_positions.row(static_cast<Eigen::Index>(j)).transpose();
    const Mat3 local = anim.pose.size() ? axis_angle_to_matrix(anim.pose.segment<3>(3 * static_cast<Eigen::Index>(j)))
                                        : Mat3::Identity();
    const int p = model.joint_parents[j];
    if (p < 0) {
      state.joint_rotations[j] = local;
      world_offset[j] = joint;
    } else {
      const Vec3 parent = state.joint_positions.row(p).transpose();
      state.joint_rotations[j] = state.joint_rotations[static_cast<std::size_t>(p)] * local;
      world_offset[j] =
          state.joint_rotations[static_cast<std::size_t>(p)] * (joint - parent) + world_offset[static_cast<std::size_t>(p)];
    }
    state.joint_translations[j] = world_offset[j] - state.joint_rotations[j] * joint;
  }

  if (anim.pose.size() == 0 || anim.pose.isZero(0.0)) {
    // Every skinning transform is the identity and the weights sum to one.
    state.posed_vertices = shaped;
    return state;
  }
  state.posed_vertices.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 v = shaped.row(i).transpose();
    Vec3 out = Vec3::Zero();
    for (std::size_t j = 0; j < nj; ++j) {
      const double w = model.lbs_weights(i, static_cast<Eigen::Index>(j));
      if (w == 0.0) continue;
      out += w * (state.joint_rotations[j] * v + state.joint_translations[j]);
    }
    state.posed_vertices.row(i) = out.transpose();
  }
  return state;
}

Eigen::VectorXd pose_mesh_backward_shape(const HeadModel& model, const MeshState& state,
                                         const RowMatrixX3d& grad_vertices, Eigen::VectorXd* grad_expression) {
  const auto n = static_cast<Eigen::Index>(model.num_vertices());
  const auto nj = model.num_joints();
  if (grad_vertices.rows() != n) throw DimensionError("vertex gradient must be N x 3");

  RowMatrixX3d grad_shaped(n, 3);
  std::vector<Vec3> grad_trans(nj, Vec3::Zero());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 g = grad_vertices.row(i).transpose();
    Vec3 acc = Vec3::Zero();
    for (std::size_t j = 0; j < nj; ++j) {
      const double w = model.lbs_weights(i, static_cast<Eigen::Index>(j));
      if (w == 0.0) continue;
      acc += w * (state.joint_rotations[j].transpose() * g);
      grad_trans[j] += w * g;
    }
    grad_shaped.row(i) = acc.transpose();
  }

  // translation_j = offset_j - Rw_j J_j, offset_j = Rw_p (J_j - J_p) + offset_p.
  RowMatrixX3d grad_joints = RowMatrixX3d::Zero(static_cast<Eigen::Index>(nj), 3);
  std::vector<Vec3> grad_offset = grad_trans;
  for (std::size_t jj = nj; jj-- > 0;) {
    const auto j = static_cast<Eigen::Index>(jj);
    grad_joints.row(j) -= (state.joint_rotations[jj].transpose() * grad_trans[jj]).transpose();
    const int p = model.joint_parents[jj];
    if (p < 0) {
      grad_joints.row(j) += grad_offset[jj].transpose();
    } else {
      const Vec3 g = state.joint_rotations[static_cast<std::size_t>(p)].transpose() * grad_offset[jj];
      grad_joints.row(j) += g.transpose();
      grad_joints.row(p) -= g.transpose();
      grad_offset[static_cast<std::size_t>(p)] += grad_offset[jj];
    }
  }
  grad_shaped.noalias() += model.joint_regressor.transpose() * grad_joints;

  const Eigen::Map<const Eigen::VectorXd> flat(grad_shaped.data(), 3 * n);
  if (grad_expression) *grad_expression = model.expr_basis.transpose() * flat;
  return model.shape_basis.transpose() * flat;
}

LandmarkSet landmark_positions(const HeadModel& model, const MeshState& state) {
  LandmarkSet out;
  for (const auto& [name, indices] : model.landmark_groups) {
    auto& pts = out[name];
    pts.reserve(indices.size());
    for (auto idx : indices) pts.emplace_back(state.posed_vertices.row(idx).transpose());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Toy model

namespace {

struct Icosphere {
  std::vector<Vec3> dirs;
  std::vector<Face> faces;
};

Icosphere make_icosphere(int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Icosphere s;
  s.dirs = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
            {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& d : s.dirs) d.normalize();
  s.faces = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
             {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::unordered_map<std::uint64_t, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      const std::uint64_t key = (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      s.dirs.push_back((s.dirs[a] + s.dirs[b]).normalized());
      const auto idx = static_cast<std::uint32_t>(s.dirs.size() - 1);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(s.faces.size() * 4);
    for (const auto& f : s.faces) {
      const auto a = mid(f[0], f[1]), b = mid(f[1], f[2]), c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    s.faces = std::move(next);
  }
  return s;
}

const Vec3 kHeadRadii(0.40, 0.50, 0.44);

double smoothstep01(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

// Monomials of the unit direction up to degree 3.
std::array<double, 20> monomials(const Vec3& d) {
  const double x = d.x(), y = d.y(), z = d.z();
  return {1,         x,         y,         z,         x * x,     y * y,     z * z,
          x * y,     y * z,     x * z,     x * x * x, y * y * y, z * z * z, x * x * y,
          x * x * z, y * y * x, y * y * z, z * z * x, z * z * y, x * y * z};
}

double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

// Vertices closest to a cone of angular radius `radius` around `anchor`,
// ordered by polar angle around the anchor.
std::vector<std::uint32_t> ring_around(const std::vector<Vec3>& dirs, const Vec3& anchor, double radius,
                                       double band, std::size_t min_count,
                                       const std::function<bool(const Vec3&)>& keep) {
  std::vector<std::pair<double, std::uint32_t>> cand;
  for (std::uint32_t i = 0; i < dirs.size(); ++i) {
    if (keep && !keep(dirs[i])) continue;
    cand.emplace_back(std::abs(angle_between(anchor, dirs[i]) - radius), i);
  }
  std::sort(cand.begin(), cand.end());
  std::vector<std::uint32_t> picked;
  for (const auto& [dist, idx] : cand)
    if (dist <= band || picked.size() < min_count) picked.push_back(idx);
  // Polar order in the tangent plane at the anchor.
  const Vec3 up = (Vec3::UnitY() - anchor * anchor.y()).normalized();
  const Vec3 side = up.cross(anchor);
  std::sort(picked.begin(), picked.end(), [&](std::uint32_t a, std::uint32_t b) {
    const double pa = std::atan2(dirs[a].dot(up), dirs[a].dot(side));
    const double pb = std::atan2(dirs[b].dot(up), dirs[b].dot(side));
    return pa != pb ? pa < pb : a < b;
  });
  return picked;
}

}  // namespace

HeadModel generate_toy_model(const ToyModelOptions& opt) {
  if (opt.subdivisions < 1) throw Error("toy model requires subdivisions >= 1");
  if (opt.n_shape < 0 || opt.n_expr < 0) throw Error("basis sizes must be non-negative");

  const Icosphere sphere = make_icosphere(opt.subdivisions);
  const auto n = static_cast<Eigen::Index>(sphere.dirs.size());
  HeadModel m;
  m.faces = sphere.faces;
  m.template_vertices.resize(n, 3);
  std::vector<Vec3> normals(sphere.dirs.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3& d = sphere.dirs[static_cast<std::size_t>(i)];
    m.template_vertices.row(i) = d.cwiseProduct(kHeadRadii).transpose();
    normals[static_cast<std::size_t>(i)] = d.cwiseQuotient(kHeadRadii).normalized();
  }

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Shape: orthonormal random combinations of low-order monomials, displaced
  // along the surface normal, peak displacement 3 cm.
  constexpr int kFuncs = 20;
  Eigen::MatrixXd coeff(kFuncs, std::max(opt.n_shape, 1));
  for (int c = 0; c < coeff.cols(); ++c)
    for (int r = 0; r < kFuncs; ++r) coeff(r, c) = normal(rng);
  if (opt.n_shape > 0) {
    const int q = std::min(opt.n_shape, kFuncs);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(coeff.leftCols(q));
    coeff.leftCols(q) = qr.householderQ() * Eigen::MatrixXd::Identity(kFuncs, q);
  }
  m.shape_basis = RowMatrixXd::Zero(3 * n, opt.n_shape);
  for (int k = 0; k < opt.n_shape; ++k) {
    Eigen::VectorXd field(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto mono = monomials(sphere.dirs[static_cast<std::size_t>(i)]);
      double v = 0.0;
      for (int r = 0; r < kFuncs; ++r) v += coeff(r, k) * mono[static_cast<std::size_t>(r)];
      field[i] = v;
    }
    field *= 0.03 / field.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i)
      for (int a = 0; a < 3; ++a) m.shape_basis(3 * i + a, k) = field[i] * normals[static_cast<std::size_t>(i)][a];
  }

  // Expression: localized smooth bumps around the mouth and the eyes.
  const Vec3 mouth = Vec3(0.0, -0.42, 0.9).normalized();
  const Vec3 eye_left = Vec3(0.33, 0.22, 0.92).normalized();
  const Vec3 eye_right = Vec3(-0.33, 0.22, 0.92).normalized();
  m.expr_basis = RowMatrixXd::Zero(3 * n, opt.n_expr);
  for (int k = 0; k < opt.n_expr; ++k) {
    std::array<double, kFuncs> c{};
    for (auto& v : c) v = normal(rng);
    const Vec3& center = (k % 2 == 0) ? mouth : (k % 4 == 1 ? eye_left : eye_right);
    const double width = (k % 2 == 0) ? 0.35 : 0.2;
    Eigen::VectorXd field(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec3& d = sphere.dirs[static_cast<std::size_t>(i)];
      const auto mono = monomials(d);
      double v = 0.0;
      for (int r = 0; r < kFuncs; ++r) v += c[static_cast<std::size_t>(r)] * mono[static_cast<std::size_t>(r)];
      const double ang = angle_between(center, d);
      field[i] = v * std::exp(-ang * ang / (2 * width * width));
    }
    field *= 0.02 / std::max(field.cwiseAbs().maxCoeff(), 1e-12);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int a = 0; a < 3; ++a) m.expr_basis(3 * i + a, k) = field[i] * normals[static_cast<std::size_t>(i)][a];
  }

  // Joints: 0 = neck (root), 1 = jaw.
  m.joint_parents = {-1, 0};
  m.lbs_weights.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3& d = sphere.dirs[static_cast<std::size_t>(i)];
    // On a 2^-24 grid both weights are exact binary32 values summing to 1.
    const double jaw = std::ldexp(std::round(std::ldexp(smoothstep01((-d.y() - 0.38) / 0.09) * smoothstep01(d.z() / 0.3), 24)), -24);
    m.lbs_weights(i, 1) = jaw;
    m.lbs_weights(i, 0) = to_f32(1.0 - jaw);
  }
  m.joint_regressor = RowMatrixXd::Zero(2, n);
  std::vector<Eigen::Index> neck_set, jaw_set;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3& d = sphere.dirs[static_cast<std::size_t>(i)];
    if (d.y() < -0.85) neck_set.push_back(i);
    if (std::abs(d.y() + 0.25) < 0.08) jaw_set.push_back(i);
  }
  if (neck_set.empty() || jaw_set.empty()) throw Error("toy model too coarse for joint regression");
  for (auto i : neck_set) m.joint_regressor(0, i) = to_f32(1.0 / static_cast<double>(neck_set.size()));
  for (auto i : jaw_set) m.joint_regressor(1, i) = to_f32(1.0 / static_cast<double>(jaw_set.size()));

  // Landmarks.
  const double edge = std::numbers::pi / (2.5 * std::pow(2.0, opt.subdivisions));
  const Vec3 up_at_mouth = (Vec3::UnitY() - mouth * mouth.y()).normalized();
  auto lips = ring_around(sphere.dirs, mouth, 0.16, edge / 2, 6, {});
  for (auto idx : lips) {
    auto& group = sphere.dirs[idx].dot(up_at_mouth) >= 0.0 ? m.landmark_groups["upper_lips"]
                                                           : m.landmark_groups["lower_lips"];
    group.push_back(idx);
  }
  m.landmark_groups.try_emplace("upper_lips");
  m.landmark_groups.try_emplace("lower_lips");
  m.landmark_groups["eye_boundary_left"] = ring_around(sphere.dirs, eye_left, 0.2, edge / 2, 4, {});
  m.landmark_groups["eye_boundary_right"] = ring_around(sphere.dirs, eye_right, 0.2, edge / 2, 4, {});
  m.landmark_groups["eyeball_left"] = ring_around(sphere.dirs, eye_left, 0.0, edge * 0.6, 3, {});
  m.landmark_groups["eyeball_right"] = ring_around(sphere.dirs, eye_right, 0.0, edge * 0.6, 3, {});
  m.landmark_groups["face_boundary"] =
      ring_around(sphere.dirs, Vec3(0.0, 0.1, 1.0).normalized(), 1.15, edge / 2, 8, {});

  // Storage precision.
  auto round_all = [](auto& mat) { mat = mat.unaryExpr([](double v) { return to_f32(v); }); };
  round_all(m.template_vertices);
  round_all(m.shape_basis);
  round_all(m.expr_basis);

  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Asset I/O

namespace {

using nlohmann::json;

constexpr const char* kAssetFormat = "headgs-lbs-asset";
constexpr int kAssetVersion = 1;

template <typename Mat>
std::vector<std::uint8_t> f32_blob(const Mat& m) {
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(m.size()) * 4);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) io::put(out, static_cast<float>(m(r, c)));
  return out;
}

std::vector<std::uint8_t> face_blob(const std::vector<Face>& faces) {
  std::vector<std::uint8_t> out;
  out.reserve(faces.size() * 12);
  for (const auto& f : faces)
    for (auto v : f) io::put(out, v);
  return out;
}

std::vector<std::uint8_t> load_blob(const std::filesystem::path& dir, const json& blobs, const std::string& key,
                                    std::size_t expected_bytes) {
  if (!blobs.contains(key)) throw AssetError("manifest lists no blob for " + key);
  const auto path = dir / blobs.at(key).get<std::string>();
  if (!std::filesystem::exists(path)) throw AssetError("missing blob " + path.string());
  auto bytes = io::read_file(path);
  if (bytes.size() != expected_bytes)
    throw DimensionError("blob " + key + " has " + std::to_string(bytes.size()) + " bytes, manifest dimensions imply " +
                         std::to_string(expected_bytes));
  return bytes;
}

RowMatrixXd read_f32_matrix(const std::vector<std::uint8_t>& bytes, Eigen::Index rows, Eigen::Index cols) {
  RowMatrixXd m(rows, cols);
  io::ByteReader r(bytes);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.get<float>();
  return m;
}

}  // namespace

void save_assets(const HeadModel& model, const std::filesystem::path& dir) {
  model.validate();
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["format"] = kAssetFormat;
  manifest["version"] = kAssetVersion;
  manifest["n_vertices"] = model.num_vertices();
  manifest["n_faces"] = model.num_faces();
  manifest["n_shape"] = model.num_shape();
  manifest["n_expr"] = model.num_expr();
  manifest["n_joints"] = model.num_joints();
  manifest["joint_parents"] = model.joint_parents;
  manifest["landmark_groups"] = model.landmark_groups;
  manifest["pose_correctives"] = nullptr;
  manifest["blobs"] = {{"template", "template.f32"},           {"faces", "faces.u32"},
                       {"shape_basis", "shape_basis.f32"},     {"expr_basis", "expr_basis.f32"},
                       {"lbs_weights", "lbs_weights.f32"},     {"joint_regressor", "joint_regressor.f32"}};
  io::write_file(dir / "template.f32", f32_blob(model.template_vertices));
  io::write_file(dir / "faces.u32", face_blob(model.faces));
  io::write_file(dir / "shape_basis.f32", f32_blob(model.shape_basis));
  io::write_file(dir / "expr_basis.f32", f32_blob(model.expr_basis));
  io::write_file(dir / "lbs_weights.f32", f32_blob(model.lbs_weights));
  io::write_file(dir / "joint_regressor.f32", f32_blob(model.joint_regressor));
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

HeadModel load_assets(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) throw AssetError("missing " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(io::read_text(manifest_path));
  } catch (const json::exception& e) {
    throw AssetError("malformed manifest: " + std::string(e.what()));
  }

  HeadModel m;
  try {
    if (manifest.value("format", "") != kAssetFormat) throw AssetError("unknown asset format");
    if (manifest.value("version", 0) != kAssetVersion)
      throw AssetError("unsupported asset version " + manifest.value("version", json()).dump());
    const auto n = manifest.at("n_vertices").get<std::size_t>();
    const auto f = manifest.at("n_faces").get<std::size_t>();
    const auto ns = manifest.at("n_shape").get<std::size_t>();
    const auto ne = manifest.at("n_expr").get<std::size_t>();
    const auto nj = manifest.at("n_joints").get<std::size_t>();
    const auto& blobs = manifest.at("blobs");
    const auto N = static_cast<Eigen::Index>(n);

    m.template_vertices = read_f32_matrix(load_blob(dir, blobs, "template", n * 3 * 4), N, 3);
    m.shape_basis = read_f32_matrix(load_blob(dir, blobs, "shape_basis", n * 3 * ns * 4), 3 * N,
                                    static_cast<Eigen::Index>(ns));
    m.expr_basis = read_f32_matrix(load_blob(dir, blobs, "expr_basis", n * 3 * ne * 4), 3 * N,
                                   static_cast<Eigen::Index>(ne));
    m.lbs_weights = read_f32_matrix(load_blob(dir, blobs, "lbs_weights", n * nj * 4), N, static_cast<Eigen::Index>(nj));
    m.joint_regressor =
        read_f32_matrix(load_blob(dir, blobs, "joint_regressor", n * nj * 4), static_cast<Eigen::Index>(nj), N);
    const auto face_bytes = load_blob(dir, blobs, "faces", f * 3 * 4);
    io::ByteReader r(face_bytes);
    m.faces.resize(f);
    for (auto& face : m.faces)
      for (auto& v : face) v = r.get<std::uint32_t>();

    m.joint_parents = manifest.at("joint_parents").get<std::vector<int>>();
    if (m.joint_parents.size() != nj) throw DimensionError("joint_parents length differs from n_joints");
    m.landmark_groups = manifest.at("landmark_groups").get<std::map<std::string, std::vector<std::uint32_t>>>();
  } catch (const json::exception& e) {
    throw AssetError("malformed manifest: " + std::string(e.what()));
  }
  m.validate();
  return m;
}

std::array<std::uint8_t, 32> model_content_hash(const HeadModel& model) {
  if (sodium_init() < 0) throw Error("libsodium initialization failed");
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  auto feed = [&](const std::vector<std::uint8_t>& bytes) { crypto_hash_sha256_update(&st, bytes.data(), bytes.size()); };
  std::vector<std::uint8_t> dims;
  for (auto d : {model.num_vertices(), model.num_faces(), model.num_shape(), model.num_expr(), model.num_joints()})
    io::put(dims, static_cast<std::uint32_t>(d));
  for (int p : model.joint_parents) io::put(dims, static_cast<std::int32_t>(p));
  feed(dims);
  feed(f32_blob(model.template_vertices));
  feed(face_blob(model.faces));
  feed(f32_blob(model.shape_basis));
  feed(f32_blob(model.expr_basis));
  feed(f32_blob(model.lbs_weights));
  feed(f32_blob(model.joint_regressor));
  std::vector<std::uint8_t> lm;
  for (const auto& [name, idx] : model.landmark_groups) {
    lm.insert(lm.end(), name.begin(), name.end());
    io::put(lm, static_cast<std::uint32_t>(idx.size()));
    for (auto v : idx) io::put(lm, v);
  }
  feed(lm);
  std::array<std::uint8_t, 32> out{};
  crypto_hash_sha256_final(&st, out.data());
  return out;
}

}  // namespace headgs
