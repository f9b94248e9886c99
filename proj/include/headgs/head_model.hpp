#pragma once

#include "headgs/math.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace headgs {

using RowMatrixX3d = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Face = std::array<std::uint32_t, 3>;

/// Canonical landmark group names, in palette order.
inline const std::array<std::string, 7> kLandmarkGroupNames = {
    "upper_lips",     "lower_lips",    "eye_boundary_left", "eye_boundary_right",
    "eyeball_left",   "eyeball_right", "face_boundary"};

/// Linear-blend-skinning head model. Immutable once built or loaded.
///
/// Blendshape bases are stored as (3N x K) matrices whose row 3*i+axis holds the
/// displacement of vertex i along axis, which is also the on-disk layout.
struct HeadModel {
  RowMatrixX3d template_vertices;   // N x 3
  std::vector<Face> faces;          // F
  RowMatrixXd shape_basis;          // 3N x |beta|
  RowMatrixXd expr_basis;           // 3N x |psi|
  RowMatrixXd lbs_weights;          // N x J
  RowMatrixXd joint_regressor;      // J x N
  std::vector<int> joint_parents;   // J, -1 for roots
  std::map<std::string, std::vector<std::uint32_t>> landmark_groups;

  std::size_t num_vertices() const { return static_cast<std::size_t>(template_vertices.rows()); }
  std::size_t num_faces() const { return faces.size(); }
  std::size_t num_joints() const { return joint_parents.size(); }
  std::size_t num_shape() const { return static_cast<std::size_t>(shape_basis.cols()); }
  std::size_t num_expr() const { return static_cast<std::size_t>(expr_basis.cols()); }

  /// Throws AssetError when any structural invariant is violated.
  void validate() const;
};

/// Shape, per-joint axis-angle pose and expression. Empty shape/expression
/// vectors mean zero; an empty pose means rest pose.
struct AnimationInput {
  Eigen::VectorXd shape;
  Eigen::VectorXd pose;  // 3 * J
  Eigen::VectorXd expression;

  static AnimationInput neutral(const HeadModel& model);
};

struct MeshState {
  RowMatrixX3d posed_vertices;
  RowMatrixX3d joint_positions;
  /// World rotation and translation of each joint's skinning transform.
  std::vector<Mat3> joint_rotations;
  std::vector<Vec3> joint_translations;
  AnimationInput input;
};

/// Builds the posed mesh: blendshapes, joint regression, forward kinematics,
/// then linear blend skinning. Pose-corrective blendshapes are not applied.
MeshState pose_mesh(const HeadModel& model, const AnimationInput& anim);

/// Back-propagates dL/d(posed vertices) to the shape coefficients, holding the
/// pose fixed. Expression gradients are returned through `grad_expression` when
/// it is non-null.
Eigen::VectorXd pose_mesh_backward_shape(const HeadModel& model, const MeshState& state,
                                         const RowMatrixX3d& grad_vertices,
                                         Eigen::VectorXd* grad_expression = nullptr);

using LandmarkSet = std::map<std::string, std::vector<Vec3>>;

/// Gathers each landmark group's posed vertices, preserving group order.
LandmarkSet landmark_positions(const HeadModel& model, const MeshState& state);

struct ToyModelOptions {
  std::uint64_t seed = 7;
  int subdivisions = 3;
  int n_shape = 10;
  int n_expr = 10;
};

/// Procedural license-free head: an ellipsoidal subdivided icosahedron with
/// neck and jaw joints, smooth seeded blendshapes and heuristic landmark loops.
/// All floating-point fields are exactly representable in binary32.
HeadModel generate_toy_model(const ToyModelOptions& options = {});

/// Index of the jaw joint in a toy model.
inline constexpr int kToyJawJoint = 1;

HeadModel load_assets(const std::filesystem::path& directory);
void save_assets(const HeadModel& model, const std::filesystem::path& directory);

/// SHA-256 over the canonical binary32 serialization of the model.
std::array<std::uint8_t, 32> model_content_hash(const HeadModel& model);

}  // namespace headgs
