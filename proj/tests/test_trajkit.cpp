#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "egomo/errors.hpp"
#include "egomo/trajkit.hpp"
#include "testutil.hpp"

using namespace egomo;
using namespace egomo::trajkit;
using geom3d::Mat3;
using geom3d::Vec3;

namespace {

HeadTrajectory straight_line(int frames, double step) {
  HeadTrajectory t;
  for (int i = 0; i < frames; ++i) {
    t.positions.push_back(Vec3(step * i, 0.0, 1.6));
    t.rotations.push_back(Mat3::Identity());
  }
  return t;
}

double max_pos_diff(const HeadTrajectory& a, const HeadTrajectory& b) {
  double m = 0.0;
  for (int t = 0; t < a.frames(); ++t) {
    m = std::max(m, (a.positions[t] - b.positions[t]).norm());
  }
  return m;
}

double max_rot_diff(const HeadTrajectory& a, const HeadTrajectory& b) {
  double m = 0.0;
  for (int t = 0; t < a.frames(); ++t) {
    m = std::max(m, (a.rotations[t] - b.rotations[t]).cwiseAbs().maxCoeff());
  }
  return m;
}

}  // namespace

TEST_CASE("emulate_slam scales step distances exactly") {
  Rng rng(5);
  auto clean = testutil::random_trajectory(rng, 40);
  SlamEmulation p;
  p.sigma = 2.0;
  auto corrupted = emulate_slam(clean, p);
  CHECK(mean_step_distance(corrupted) ==
        doctest::Approx(2.0 * mean_step_distance(clean)).epsilon(1e-12));
}

TEST_CASE("emulate_slam identity parameters reproduce the input") {
  Rng rng(6);
  auto clean = testutil::random_trajectory(rng, 25);
  auto out = emulate_slam(clean, SlamEmulation{});
  CHECK(max_pos_diff(clean, out) == 0.0);
  CHECK(max_rot_diff(clean, out) == 0.0);
}

TEST_CASE("emulate_slam is bit-identical for equal seeds") {
  Rng rng(7);
  auto clean = testutil::random_trajectory(rng, 30);
  SlamEmulation p;
  p.sigma = 1.4;
  p.pos_noise_std = 0.02;
  p.rot_noise_std = 0.01;
  p.seed = 99;
  Rng rr(8);
  p.r_c = geom3d::random_rotation(rr);
  auto a = emulate_slam(clean, p);
  auto b = emulate_slam(clean, p);
  CHECK(max_pos_diff(a, b) == 0.0);
  CHECK(max_rot_diff(a, b) == 0.0);
}

TEST_CASE("head_features layout for a static trajectory") {
  HeadTrajectory t = straight_line(5, 0.0);
  auto f = head_features(t);
  REQUIRE(f.rows() == 5);
  REQUIRE(f.cols() == 18);
  for (int i = 0; i < 5; ++i) {
    CHECK(f.block<1, 3>(i, 9).cwiseAbs().maxCoeff() == 0.0);  // pos diffs
    CHECK((f.block<1, 6>(i, 12) -
           geom3d::identity_sixd().transpose())
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("head_features difference blocks ignore global translation") {
  Rng rng(9);
  auto t = testutil::random_trajectory(rng, 20);
  auto shifted = t;
  for (auto& p : shifted.positions) p += Vec3(12.0, -7.0, 3.0);
  auto fa = head_features(t);
  auto fb = head_features(shifted);
  // Equal up to the rounding of (p + c) - (p' + c).
  CHECK((fa.rightCols(9) - fb.rightCols(9)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mean_step_distance basics") {
  CHECK(mean_step_distance(straight_line(11, 0.1)) ==
        doctest::Approx(0.1).epsilon(1e-12));
  HeadTrajectory t;
  t.positions = {Vec3(0, 0, 0), Vec3(0.1, 0, 0), Vec3(0.4, 0, 0)};
  t.rotations.assign(3, Mat3::Identity());
  CHECK(mean_step_distance(t) == doctest::Approx(0.2).epsilon(1e-12));
  HeadTrajectory single = straight_line(1, 0.0);
  CHECK_THROWS_AS(mean_step_distance(single), Error);
}

TEST_CASE("calibrate_scale") {
  CHECK(calibrate_scale(1.0, 0.5) == doctest::Approx(2.0));
  CHECK_THROWS_AS(calibrate_scale(1.0, 1e-7), Error);
  try {
    calibrate_scale(1.0, 0.0);
    FAIL("expected near-static error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::near_static);
  }
}

TEST_CASE("gravity alignment undoes a known corruption up to heading") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    auto clean = testutil::random_trajectory(rng, 30);
    SlamEmulation p;
    p.sigma = rng.uniform(0.5, 2.0);
    p.r_c = geom3d::random_rotation(rng);
    auto corrupted = emulate_slam(clean, p);
    Vec3 g = p.r_c * Vec3(0, 0, -1);
    auto aligned = apply_gravity_alignment(corrupted, g);
    // The residual is a rotation about gravity; undo it with the known
    // corruption and compare against the plainly scaled trajectory.
    Mat3 r_g = geom3d::rotation_between_vectors(g, Vec3(0, 0, -1));
    Mat3 residual = r_g * p.r_c;
    CHECK((residual * Vec3(0, 0, -1) - Vec3(0, 0, -1)).norm() < 1e-9);
    double worst = 0.0;
    for (int t = 0; t < clean.frames(); ++t) {
      Vec3 back = residual.transpose() * aligned.positions[t];
      worst = std::max(worst, (back - p.sigma * clean.positions[t]).norm());
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("gravity alignment flips an upside-down gravity estimate") {
  auto t = straight_line(5, 0.1);
  Vec3 g(0, 0, 1);
  Mat3 r_g = geom3d::rotation_between_vectors(g, Vec3(0, 0, -1));
  CHECK((r_g * g - Vec3(0, 0, -1)).norm() < 1e-12);
  auto aligned = apply_gravity_alignment(t, g);
  for (int i = 0; i < 5; ++i) {
    CHECK((aligned.positions[i] - r_g * t.positions[i]).norm() < 1e-12);
  }
}

TEST_CASE("integrate_angular_velocity constant turn about z") {
  std::vector<Vec3> w(10, Vec3(0, 0, 0.5));
  auto rots = integrate_angular_velocity(Mat3::Identity(), w, 0.1);
  REQUIRE(rots.size() == 11);
  for (int t = 0; t <= 10; ++t) {
    CHECK((rots[t] - geom3d::rot_z(0.05 * t)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("integration inverts extraction on real rotation sequences") {
  Rng rng(17);
  auto traj = testutil::random_trajectory(rng, 60);
  auto w = extract_angular_velocity(traj);
  auto rots = integrate_angular_velocity(traj.rotations.front(), w,
                                         1.0 / traj.frame_rate);
  double worst = 0.0;
  for (int t = 0; t < traj.frames(); ++t) {
    worst = std::max(worst,
                     (rots[t] - traj.rotations[t]).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("fusion with oracle inputs recovers the clean trajectory") {
  Rng rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    auto clean = testutil::random_trajectory(rng, 50);
    SlamEmulation p;
    p.sigma = std::exp(rng.uniform(std::log(0.3), std::log(3.0)));
    p.r_c = geom3d::random_rotation(rng);
    p.seed = 1000 + trial;
    auto corrupted = emulate_slam(clean, p);

    Vec3 g = p.r_c * Vec3(0, 0, -1);
    auto d = step_distances(clean);
    auto w = extract_angular_velocity(clean);
    auto fused =
        fuse_head_estimate(corrupted, g, d, w, clean.rotations.front());
    auto aligned = align_first_frame(fused, clean.positions.front(),
                                     clean.rotations.front());
    CHECK(max_pos_diff(aligned, clean) < 1e-9);
    CHECK(max_rot_diff(aligned, clean) < 1e-9);
    CHECK(fused.frame_rate == clean.frame_rate);

    // Step distances come back exactly (zero-noise corruption).
    auto d_fused = step_distances(fused);
    double worst = 0.0;
    for (size_t i = 0; i < d.size(); ++i) {
      worst = std::max(worst, std::abs(d_fused[i] - d[i]));
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("fusion with identity corruption and oracle inputs is the identity") {
  Rng rng(23);
  auto clean = testutil::random_trajectory(rng, 40);
  auto corrupted = emulate_slam(clean, SlamEmulation{});
  auto fused = fuse_head_estimate(corrupted, Vec3(0, 0, -1),
                                  step_distances(clean),
                                  extract_angular_velocity(clean),
                                  clean.rotations.front());
  CHECK(max_pos_diff(fused, clean) < 1e-9);
  CHECK(max_rot_diff(fused, clean) < 1e-9);
}

TEST_CASE("fused positions are linear in the predicted distances") {
  Rng rng(29);
  auto clean = testutil::random_trajectory(rng, 30);
  SlamEmulation p;
  p.sigma = 1.7;
  Rng rr(30);
  p.r_c = geom3d::random_rotation(rr);
  auto corrupted = emulate_slam(clean, p);
  Vec3 g = p.r_c * Vec3(0, 0, -1);
  auto d = step_distances(clean);
  auto w = extract_angular_velocity(clean);
  auto fused = fuse_head_estimate(corrupted, g, d, w, clean.rotations.front());
  for (auto& v : d) v *= 2.0;
  auto fused2 = fuse_head_estimate(corrupted, g, d, w, clean.rotations.front());
  double worst = 0.0;
  for (int t = 0; t < fused.frames(); ++t) {
    worst = std::max(
        worst, (fused2.positions[t] - 2.0 * fused.positions[t]).norm());
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("fusion validates prediction lengths") {
  Rng rng(31);
  auto clean = testutil::random_trajectory(rng, 10);
  auto d = step_distances(clean);
  auto w = extract_angular_velocity(clean);
  d.pop_back();
  CHECK_THROWS_AS(fuse_head_estimate(clean, Vec3(0, 0, -1), d, w,
                                     clean.rotations.front()),
                  Error);
}

TEST_CASE("align_first_frame pins the first pose") {
  Rng rng(37);
  auto pred = testutil::random_trajectory(rng, 20);
  Vec3 target_pos(4.0, -2.0, 1.5);
  Mat3 target_rot = geom3d::random_rotation(rng);
  auto aligned = align_first_frame(pred, target_pos, target_rot);
  CHECK((aligned.positions.front() - target_pos).norm() < 1e-12);
  // The heading discrepancy against the target is resolved.
  double heading =
      geom3d::yaw_of(aligned.rotations.front() * target_rot.transpose());
  CHECK(std::abs(heading) < 1e-9);
  // Rigid: step distances unchanged.
  auto da = step_distances(pred);
  auto db = step_distances(aligned);
  for (size_t i = 0; i < da.size(); ++i) {
    CHECK(da[i] == doctest::Approx(db[i]).epsilon(1e-12));
  }
}
