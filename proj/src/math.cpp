#include "headgs/math.hpp"

namespace headgs {

Mat3 quaternion_to_matrix(const Vec4& q_raw) {
  const Vec4 q = q_raw / q_raw.norm();
  const double r = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - r * z), 2 * (x * z + r * y),
      2 * (x * y + r * z), 1 - 2 * (x * x + z * z), 2 * (y * z - r * x),
      2 * (x * z - r * y), 2 * (y * z + r * x), 1 - 2 * (x * x + y * y);
  return R;
}

Vec4 quaternion_to_matrix_backward(const Vec4& q_raw, const Mat3& G) {
  const double n = q_raw.norm();
  const Vec4 q = q_raw / n;
  const double r = q[0], x = q[1], y = q[2], z = q[3];

  // dL/d(normalized q)
  Vec4 gq;
  gq[0] = 2 * (-z * G(0, 1) + y * G(0, 2) + z * G(1, 0) - x * G(1, 2) - y * G(2, 0) + x * G(2, 1));
  gq[1] = 2 * (y * G(0, 1) + z * G(0, 2) + y * G(1, 0) - 2 * x * G(1, 1) - r * G(1, 2) +
               z * G(2, 0) + r * G(2, 1) - 2 * x * G(2, 2));
  gq[2] = 2 * (-2 * y * G(0, 0) + x * G(0, 1) + r * G(0, 2) + x * G(1, 0) + z * G(1, 2) -
               r * G(2, 0) + z * G(2, 1) - 2 * y * G(2, 2));
  gq[3] = 2 * (-2 * z * G(0, 0) - r * G(0, 1) + x * G(0, 2) + r * G(1, 0) - 2 * z * G(1, 1) +
               y * G(1, 2) + x * G(2, 0) + y * G(2, 1));

  // Through q = q_raw / |q_raw|.
  return (gq - q * q.dot(gq)) / n;
}

Mat3 axis_angle_to_matrix(const Vec3& aa) {
  const double angle = aa.norm();
  if (angle < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, aa / angle).toRotationMatrix();
}

}  // namespace headgs
