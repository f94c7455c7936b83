#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "egomo/errors.hpp"
#include "egomo/geom3d.hpp"
#include "egomo/rng.hpp"
#include "oracles.hpp"

using namespace egomo;
using namespace egomo::geom3d;

TEST_CASE("sixd round trip on identity") {
  Mat3 r = sixd_to_rotmat(identity_sixd());
  CHECK((r - Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
  Rot6d s = rotmat_to_sixd(Mat3::Identity());
  CHECK((s - identity_sixd()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sixd round trip over random rotations") {
  // Random rotations from an independent quaternion construction.
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Mat3 r = oracle::rotation_from_normals(rng.normal(), rng.normal(),
                                           rng.normal(), rng.normal());
    Mat3 back = sixd_to_rotmat(rotmat_to_sixd(r));
    worst = std::max(worst, (back - r).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("sixd decode orthonormalizes non-orthogonal input") {
  Rot6d s;
  s << 1.0, 0.1, 0.0, 0.3, 1.0, 0.0;
  Mat3 r = sixd_to_rotmat(s);
  CHECK(is_valid_rotation(r, 1e-9));
  CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sixd degenerate inputs raise") {
  Rot6d zero = Rot6d::Zero();
  CHECK_THROWS_AS(sixd_to_rotmat(zero), Error);
  Rot6d parallel;
  parallel << 1, 0, 0, 2, 0, 0;
  CHECK_THROWS_AS(sixd_to_rotmat(parallel), Error);
  Mat3 not_rot = Mat3::Identity() * 2.0;
  CHECK_THROWS_AS(rotmat_to_sixd(not_rot), Error);
}

TEST_CASE("so3_exp zero vector is exactly identity") {
  Mat3 r = so3_exp(Vec3::Zero());
  CHECK((r - Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("so3_exp matches quaternion exponential oracle") {
  Mat3 r = so3_exp(Vec3(0.3, -0.2, 0.1));
  Mat3 ref = oracle::so3_exp_quat(Vec3(0.3, -0.2, 0.1));
  CHECK((r - ref).cwiseAbs().maxCoeff() < 1e-9);

  Rng rng(7);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    Vec3 v(rng.normal(), rng.normal(), rng.normal());
    v *= rng.uniform(0.0, 2.0);
    worst = std::max(worst,
                     (so3_exp(v) - oracle::so3_exp_quat(v)).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("so3_exp small-angle branch stays accurate") {
  for (double scale : {1e-9, 1e-10, 1e-12}) {
    Vec3 v = Vec3(1.0, -2.0, 0.5) * scale;
    Mat3 r = so3_exp(v);
    CHECK(is_valid_rotation(r, 1e-12));
    CHECK((r - oracle::so3_exp_quat(v)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("so3_log inverts so3_exp") {
  Rng rng(11);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    Vec3 v(rng.normal(), rng.normal(), rng.normal());
    double target = rng.uniform(1e-6, M_PI - 1e-3);
    v = v.normalized() * target;
    worst = std::max(worst, (so3_log(so3_exp(v)) - v).norm());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("so3_log handles rotations at and near pi") {
  Vec3 axis = Vec3(1.0, 2.0, -0.5).normalized();
  for (double theta : {M_PI, M_PI - 1e-7, M_PI - 1e-4}) {
    Vec3 v = axis * theta;
    Vec3 back = so3_log(so3_exp(v));
    // At exactly pi the sign of the axis is a free choice.
    double err = std::min((back - v).norm(), (back + v).norm());
    CHECK(err < 1e-6);
  }
}

TEST_CASE("rotation_between_vectors maps a to b") {
  Rng rng(23);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Vec3 a(rng.normal(), rng.normal(), rng.normal());
    Vec3 b(rng.normal(), rng.normal(), rng.normal());
    Mat3 r = rotation_between_vectors(a, b);
    CHECK(is_valid_rotation(r, 1e-9));
    worst = std::max(worst, (r * a.normalized() - b.normalized()).norm());
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("rotation_between_vectors identical input gives identity") {
  Vec3 a(0.2, -0.4, 0.9);
  Mat3 r = rotation_between_vectors(a, a);
  CHECK((r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rotation_between_vectors antipodal convention") {
  // a along +z: e = x-axis, turn axis = normalize(z cross x) = y.
  Mat3 r = rotation_between_vectors(Vec3(0, 0, 1), Vec3(0, 0, -1));
  CHECK((r * Vec3(0, 0, 1) - Vec3(0, 0, -1)).norm() < 1e-12);
  Mat3 expect = oracle::so3_exp_quat(Vec3(0, M_PI, 0));
  CHECK((r - expect).cwiseAbs().maxCoeff() < 1e-12);

  // a along +x: |a.x| > 0.9 so e switches to the y-axis, turn axis = z.
  Mat3 r2 = rotation_between_vectors(Vec3(1, 0, 0), Vec3(-1, 0, 0));
  Mat3 expect2 = oracle::so3_exp_quat(Vec3(0, 0, M_PI));
  CHECK((r2 - expect2).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(rotation_between_vectors(Vec3::Zero(), Vec3(1, 0, 0)), Error);
}

TEST_CASE("relative_rotation composition identity") {
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    Mat3 a = random_rotation(rng);
    Mat3 b = random_rotation(rng);
    Mat3 rel = relative_rotation(a, b);
    CHECK((a * rel - b).cwiseAbs().maxCoeff() < 1e-12);
  }
  Mat3 bad = Mat3::Zero();
  CHECK_THROWS_AS(relative_rotation(bad, Mat3::Identity()), Error);
}

TEST_CASE("composition convention is right-multiplication in the body frame") {
  // Applying a body-frame increment w for time dt advances O to
  // O * exp(w dt); with O = identity the increment is the full rotation.
  Vec3 w(0.0, 0.0, 0.5);
  double dt = 0.1;
  Mat3 o = Mat3::Identity() * so3_exp(w * dt);
  CHECK((o - rot_z(0.05)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("yaw_of recovers z-rotation angle") {
  Rng rng(37);
  for (int i = 0; i < 100; ++i) {
    double a = rng.uniform(-M_PI + 1e-6, M_PI - 1e-6);
    CHECK(yaw_of(rot_z(a)) == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("random_rotation produces valid rotations") {
  Rng rng(41);
  for (int i = 0; i < 200; ++i) {
    CHECK(is_valid_rotation(random_rotation(rng), 1e-10));
  }
}

TEST_CASE("deterministic outputs for identical calls") {
  Vec3 v(0.123, -0.456, 0.789);
  Mat3 a = so3_exp(v);
  Mat3 b = so3_exp(v);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}
