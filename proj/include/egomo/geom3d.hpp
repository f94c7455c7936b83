#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "egomo/rng.hpp"

namespace egomo::geom3d {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
// First two columns of a rotation matrix, stacked column-major:
// (r00 r10 r20 r01 r11 r21).
using Rot6d = Eigen::Matrix<double, 6, 1>;

// Orthonormality within tol and det > 0.
bool is_valid_rotation(const Mat3& r, double tol = 1e-6);

Mat3 skew(const Vec3& v);
Vec3 unskew(const Mat3& m);

// Gram-Schmidt decode of the 6d representation. Degenerate inputs (zero
// first vector, or the two vectors parallel within 1e-8) raise
// ErrorKind::degenerate_input.
Mat3 sixd_to_rotmat(const Rot6d& sixd);

// Inverse direction; validates its input.
Rot6d rotmat_to_sixd(const Mat3& r);

inline Rot6d identity_sixd() {
  Rot6d r;
  r << 1, 0, 0, 0, 1, 0;
  return r;
}

// Rodrigues with a second-order series below 1e-8.
Mat3 so3_exp(const Vec3& v);

// Inverse of so3_exp; result angle in [0, pi].
Vec3 so3_log(const Mat3& r);

// r_ab with r_ab * normalize(a) == normalize(b). For antipodal inputs the
// convention is a 180 degree turn about normalize(a x e) with e = x unless
// |a.x| > 0.9, in which case e = y.
Mat3 rotation_between_vectors(const Vec3& a, const Vec3& b);

// r_rel = a^T * b, so b == a * r_rel.
Mat3 relative_rotation(const Mat3& a, const Mat3& b);

Mat3 rot_z(double angle);

// Angle of the rotation-about-z component of r.
double yaw_of(const Mat3& r);

// Uniform over SO(3) via a normalized 4-normal quaternion.
Mat3 random_rotation(Rng& rng);

}  // namespace egomo::geom3d
