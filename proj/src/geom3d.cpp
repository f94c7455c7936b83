#include "egomo/geom3d.hpp"

#include <cmath>

#include "egomo/errors.hpp"

namespace egomo::geom3d {

bool is_valid_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  Mat3 err = r.transpose() * r - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() < tol && r.determinant() > 0.0;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

Vec3 unskew(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

Mat3 sixd_to_rotmat(const Rot6d& sixd) {
  Vec3 a1 = sixd.head<3>();
  Vec3 a2 = sixd.tail<3>();
  double n1 = a1.norm();
  require(n1 > 1e-8, ErrorKind::degenerate_input,
          "sixd_to_rotmat: first column is numerically zero");
  Vec3 b1 = a1 / n1;
  Vec3 u2 = a2 - a2.dot(b1) * b1;
  double n2 = a2.norm();
  // sine of the angle between the two input vectors
  require(n2 > 1e-8 && u2.norm() / n2 > 1e-8, ErrorKind::degenerate_input,
          "sixd_to_rotmat: input vectors are parallel");
  Vec3 b2 = u2 / u2.norm();
  Mat3 r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b1.cross(b2);
  return r;
}

Rot6d rotmat_to_sixd(const Mat3& r) {
  require(is_valid_rotation(r), ErrorKind::degenerate_input,
          "rotmat_to_sixd: input is not a rotation matrix");
  Rot6d out;
  out.head<3>() = r.col(0);
  out.tail<3>() = r.col(1);
  return out;
}

Mat3 so3_exp(const Vec3& v) {
  double theta = v.norm();
  Mat3 k = skew(v);
  double a, b;  // sin(t)/t and (1-cos(t))/t^2
  if (theta < 1e-8) {
    double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Mat3::Identity() + a * k + b * (k * k);
}

Vec3 so3_log(const Mat3& r) {
  require(is_valid_rotation(r), ErrorKind::degenerate_input,
          "so3_log: input is not a rotation matrix");
  double c = (r.trace() - 1.0) * 0.5;
  c = std::min(1.0, std::max(-1.0, c));
  double theta = std::acos(c);
  Vec3 w = unskew(r - r.transpose()) * 0.5;  // sin(theta) * axis
  if (theta < 1e-7) {
    // log(R) ~ w * (1 + theta^2/6) near identity
    return w * (1.0 + theta * theta / 6.0);
  }
  if (theta > M_PI - 1e-6) {
    // Near pi the skew part vanishes. The symmetric part is
    // (R + R^T)/2 = cos(t) I + (1 - cos(t)) axis axis^T, so the axis can be
    // read off its dominant diagonal entry.
    Mat3 m = 0.5 * (r + r.transpose());
    int i = 0;
    if (m(1, 1) > m(i, i)) i = 1;
    if (m(2, 2) > m(i, i)) i = 2;
    double omc = 1.0 - c;
    Vec3 axis;
    axis[i] = std::sqrt(std::max(0.0, (m(i, i) - c) / omc));
    for (int j = 0; j < 3; ++j) {
      if (j != i) axis[j] = m(i, j) / (omc * axis[i]);
    }
    axis.normalize();
    // Sign from the residual skew part when it is informative; at exactly pi
    // both signs are valid logs and the computed one is kept.
    if (w.dot(axis) < 0.0) axis = -axis;
    return axis * theta;
  }
  return w * (theta / std::sin(theta));
}

Mat3 rotation_between_vectors(const Vec3& a, const Vec3& b) {
  require(a.norm() > 1e-8 && b.norm() > 1e-8, ErrorKind::degenerate_input,
          "rotation_between_vectors: zero-length input");
  Vec3 an = a.normalized();
  Vec3 bn = b.normalized();
  Vec3 k = an.cross(bn);
  double c = an.dot(bn);
  double s = k.norm();
  if (s < 1e-8) {
    if (c > 0.0) return Mat3::Identity();
    // Antipodal: 180 degrees about a fixed perpendicular axis.
    Vec3 e = std::abs(an.x()) > 0.9 ? Vec3(0, 1, 0) : Vec3(1, 0, 0);
    Vec3 u = an.cross(e).normalized();
    Mat3 ux = skew(u);
    return Mat3::Identity() + 2.0 * (ux * ux);
  }
  Mat3 kx = skew(k);
  // (1 - c) / s^2 == 1 / (1 + c), stable away from the antipodal case
  return Mat3::Identity() + kx + (kx * kx) * (1.0 / (1.0 + c));
}

Mat3 relative_rotation(const Mat3& a, const Mat3& b) {
  require(is_valid_rotation(a) && is_valid_rotation(b),
          ErrorKind::degenerate_input,
          "relative_rotation: input is not a rotation matrix");
  return a.transpose() * b;
}

Mat3 rot_z(double angle) {
  Mat3 r = Mat3::Identity();
  double c = std::cos(angle), s = std::sin(angle);
  r(0, 0) = c;
  r(0, 1) = -s;
  r(1, 0) = s;
  r(1, 1) = c;
  return r;
}

double yaw_of(const Mat3& r) {
  return std::atan2(r(1, 0) - r(0, 1), r(0, 0) + r(1, 1));
}

Mat3 random_rotation(Rng& rng) {
  Eigen::Vector4d q;
  for (int i = 0; i < 4; ++i) q[i] = rng.normal();
  q.normalize();
  double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

}  // namespace egomo::geom3d
