#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "egomo/errors.hpp"
#include "egomo/headpose.hpp"
#include "egomo/nets.hpp"
#include "egomo/rng.hpp"
#include "egomo/trajkit.hpp"
#include "testutil.hpp"

using namespace egomo;
using namespace egomo::headpose;
using Eigen::MatrixXd;
using geom3d::Mat3;
using geom3d::Vec3;

namespace {

nets::TransformerConfig tiny_backbone(int max_len = 32) {
  nets::TransformerConfig cfg;
  cfg.input_dim = 64;
  cfg.d_model = 16;
  cfg.heads = 2;
  cfg.ff = 32;
  cfg.max_len = max_len;
  return cfg;
}

// Gravity reads raw head-pose features, not the flow surrogate.
nets::TransformerConfig gravity_backbone(int max_len = 32) {
  nets::TransformerConfig cfg = tiny_backbone(max_len);
  cfg.input_dim = trajkit::kHeadFeatureDim;
  return cfg;
}

}  // namespace

TEST_CASE("flow features project the raw motion channels") {
  Rng rng(21);
  auto traj = testutil::random_trajectory(rng, 15);
  MatrixXd f = surrogate_flow_features(traj, 9, 0.0);
  REQUIRE(f.rows() == 15);
  REQUIRE(f.cols() == 64);

  MatrixXd raw = MatrixXd::Zero(15, 9);
  raw.block<1, 6>(0, 3) = geom3d::identity_sixd().transpose();
  for (int t = 1; t < 15; ++t) {
    raw.block<1, 3>(t, 0) =
        (traj.positions[t] - traj.positions[t - 1]).transpose();
    Mat3 rel = traj.rotations[t - 1].transpose() * traj.rotations[t];
    raw.block<1, 6>(t, 3) = geom3d::rotmat_to_sixd(rel).transpose();
  }
  MatrixXd want = raw * flow_embedding_matrix(64).transpose();
  CHECK((f - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("flow feature noise is seed deterministic") {
  Rng rng(22);
  auto traj = testutil::random_trajectory(rng, 10);
  MatrixXd a = surrogate_flow_features(traj, 123, 0.01);
  MatrixXd b = surrogate_flow_features(traj, 123, 0.01);
  MatrixXd c = surrogate_flow_features(traj, 124, 0.01);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("flow features ignore a global translation") {
  Rng rng(23);
  auto traj = testutil::random_trajectory(rng, 12);
  auto shifted = traj;
  for (auto& p : shifted.positions) p += Vec3(40.0, -7.0, 3.0);
  MatrixXd a = surrogate_flow_features(traj, 5, 0.01);
  MatrixXd b = surrogate_flow_features(shifted, 5, 0.01);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("gravity training pair targets the corrupted down direction") {
  Rng rng(24);
  auto traj = testutil::random_trajectory(rng, 10);
  trajkit::SlamEmulation em;
  em.sigma = 0.7;
  em.r_c = geom3d::random_rotation(rng);
  em.seed = 3;
  auto s = gravity_training_pair(traj, em);
  CHECK((s.target - em.r_c * Vec3(0, 0, -1)).norm() < 1e-15);
  CHECK(std::abs(s.target.norm() - 1.0) < 1e-12);
  CHECK(s.features.rows() == 10);
  CHECK(s.features.cols() == trajkit::kHeadFeatureDim);
  MatrixXd want = trajkit::head_features(trajkit::emulate_slam(traj, em));
  CHECK((s.features - want).cwiseAbs().maxCoeff() == 0.0);

  em.r_c = Mat3::Identity();
  auto s2 = gravity_training_pair(traj, em);
  CHECK((s2.target - Vec3(0, 0, -1)).norm() == 0.0);
}

TEST_CASE("gravity net output is a unit direction") {
  GravityNet net = make_gravity_net(gravity_backbone(), 42);
  Rng rng(25);
  auto traj = testutil::random_trajectory(rng, 20);
  MatrixXd f = trajkit::head_features(traj);
  Vec3 g = predict_gravity(net, f, 20);
  CHECK(std::abs(g.norm() - 1.0) < 1e-9);
  Vec3 g2 = predict_gravity(net, f, 8);  // leading window only
  CHECK(std::abs(g2.norm() - 1.0) < 1e-9);
  CHECK((g - g2).norm() > 0.0);
}

TEST_CASE("gravity net guard survives a collapsed head") {
  GravityNet net = make_gravity_net(gravity_backbone(), 42);
  auto& last = net.head.layers.back();
  net.params.block(last[0]).value.setZero();
  net.params.block(last[1]).value.setZero();
  Rng rng(26);
  auto traj = testutil::random_trajectory(rng, 10);
  MatrixXd f = trajkit::head_features(traj);
  Vec3 g = predict_gravity(net, f, 10);
  CHECK(g.allFinite());
  CHECK(g.norm() < 1e-6);
}

TEST_CASE("gravity net overfits one sample") {
  Rng rng(27);
  auto traj = testutil::random_trajectory(rng, 24);
  trajkit::SlamEmulation em;
  em.sigma = 1.4;
  em.r_c = geom3d::random_rotation(rng);
  em.pos_noise_std = 0.002;
  em.rot_noise_std = 0.002;
  em.seed = 9;
  auto sample = gravity_training_pair(traj, em);

  GravityNet net = make_gravity_net(gravity_backbone(), 4242);
  nets::AdamConfig ac;
  ac.lr = 3e-3;
  nets::Adam opt(ac);
  double first_loss = -1.0, last_loss = -1.0;
  for (int it = 0; it < 300; ++it) {
    nets::Tape tape;
    auto leaves = net.params.register_on(tape);
    int pred = gravitynet_forward(tape, net, leaves, tape.input(sample.features));
    int loss = gravity_loss(tape, pred, sample.target);
    if (it == 0) first_loss = tape.val(loss)(0, 0);
    last_loss = tape.val(loss)(0, 0);
    tape.backward(loss);
    opt.step(net.params, tape, leaves);
  }
  CHECK(last_loss < first_loss * 0.2);
  Vec3 g = predict_gravity(net, sample.features, 24);
  CHECK(g.dot(sample.target) > std::cos(5.0 * M_PI / 180.0));
}

TEST_CASE("head net forward produces nonnegative distances") {
  HeadNet net = make_head_net(tiny_backbone(), 7);
  Rng rng(28);
  auto traj = testutil::random_trajectory(rng, 16);
  MatrixXd f = surrogate_flow_features(traj, 2, 0.01);
  auto p = predict_head(net, f);
  REQUIRE(p.distances.size() == 15);
  REQUIRE(p.angular_velocities.size() == 15);
  for (double d : p.distances) CHECK(d >= 0.0);
  for (const auto& w : p.angular_velocities) CHECK(w.allFinite());
}

TEST_CASE("head loss parts vanish on exact predictions") {
  Rng rng(29);
  auto gt = testutil::random_trajectory(rng, 12);
  int steps = 11;
  auto d_gt = trajkit::step_distances(gt);
  auto w_gt = trajkit::extract_angular_velocity(gt);

  nets::Tape tape;
  MatrixXd dmat = MatrixXd::Constant(12, 1, 0.123);
  MatrixXd wmat = MatrixXd::Zero(12, 3);
  for (int t = 0; t < steps; ++t) {
    dmat(t, 0) = d_gt[t];
    wmat.row(t) = w_gt[t].transpose();
  }
  HeadForward fwd;
  fwd.dist = tape.input(dmat);
  fwd.omega = tape.input(wmat);
  auto loss = headnet_loss(tape, fwd, gt);
  CHECK(tape.val(loss.dist)(0, 0) == 0.0);
  CHECK(tape.val(loss.vel)(0, 0) == 0.0);
  CHECK(tape.val(loss.rot)(0, 0) < 1e-9);
  CHECK(tape.val(loss.total)(0, 0) ==
        doctest::Approx(tape.val(loss.rot)(0, 0)).epsilon(1e-12));
}

TEST_CASE("head loss pins a constant velocity offset at its magnitude") {
  Rng rng(30);
  auto gt = testutil::random_trajectory(rng, 12);
  int steps = 11;
  auto d_gt = trajkit::step_distances(gt);
  auto w_gt = trajkit::extract_angular_velocity(gt);

  nets::Tape tape;
  MatrixXd dmat = MatrixXd::Zero(12, 1);
  MatrixXd wmat = MatrixXd::Zero(12, 3);
  for (int t = 0; t < steps; ++t) {
    dmat(t, 0) = d_gt[t] + 0.005;
    wmat.row(t) = w_gt[t].transpose();
    wmat(t, 0) += 0.1;
  }
  HeadForward fwd;
  fwd.dist = tape.input(dmat);
  fwd.omega = tape.input(wmat);
  auto loss = headnet_loss(tape, fwd, gt);
  CHECK(tape.val(loss.dist)(0, 0) == doctest::Approx(0.005).epsilon(1e-12));
  CHECK(tape.val(loss.vel)(0, 0) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("head loss rejects mismatched prediction length") {
  Rng rng(42);
  auto gt = testutil::random_trajectory(rng, 12);
  nets::Tape tape;
  HeadForward fwd;
  fwd.dist = tape.input(MatrixXd::Zero(9, 1));
  fwd.omega = tape.input(MatrixXd::Zero(9, 3));
  CHECK_THROWS_AS(headnet_loss(tape, fwd, gt), Error);
}

TEST_CASE("head net training reduces its loss") {
  Rng rng(43);
  auto gt = testutil::random_trajectory(rng, 12);
  trajkit::SlamEmulation em;
  em.sigma = 1.0;
  em.r_c = Mat3::Identity();
  em.seed = 2;
  auto slam = trajkit::emulate_slam(gt, em);
  MatrixXd f = surrogate_flow_features(slam, 3, 0.0);

  HeadNet net = make_head_net(tiny_backbone(16), 77);
  nets::AdamConfig ac;
  ac.lr = 3e-3;
  nets::Adam opt(ac);
  double first = -1.0, last = -1.0;
  for (int it = 0; it < 300; ++it) {
    nets::Tape tape;
    auto leaves = net.params.register_on(tape);
    auto fwd = headnet_forward(tape, net, leaves, tape.input(f));
    auto loss = headnet_loss(tape, fwd, gt);
    if (it == 0) first = tape.val(loss.total)(0, 0);
    last = tape.val(loss.total)(0, 0);
    tape.backward(loss.total);
    opt.step(net.params, tape, leaves);
  }
  CHECK(last < first * 0.2);
}

TEST_CASE("hybrid estimate is deterministic and well-formed") {
  Rng rng(44);
  auto clean = testutil::random_trajectory(rng, 20);
  trajkit::SlamEmulation em;
  em.sigma = 1.8;
  em.r_c = geom3d::random_rotation(rng);
  em.seed = 6;
  auto slam = trajkit::emulate_slam(clean, em);

  GravityNet gnet = make_gravity_net(gravity_backbone(), 1);
  HeadNet hnet = make_head_net(tiny_backbone(), 2);
  auto est = hybrid_estimate(slam, gnet, hnet, clean.rotations[0], 8, 16);
  REQUIRE(est.frames() == 20);
  CHECK(est.frame_rate == clean.frame_rate);
  for (const auto& r : est.rotations) CHECK(geom3d::is_valid_rotation(r, 1e-9));
  for (const auto& p : est.positions) CHECK(p.allFinite());
  CHECK((est.rotations[0] - clean.rotations[0]).cwiseAbs().maxCoeff() < 1e-12);

  auto est2 = hybrid_estimate(slam, gnet, hnet, clean.rotations[0], 8, 16);
  for (int t = 0; t < 20; ++t) {
    CHECK((est.positions[t] - est2.positions[t]).norm() == 0.0);
    CHECK((est.rotations[t] - est2.rotations[t]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("oracle stage-one inputs reproduce the ground truth head") {
  // With exact distances, angular velocities, and gravity, the hybrid
  // pipeline must reproduce the clean trajectory after first-frame
  // alignment. This wires the learned-piece interfaces to the oracle.
  Rng rng(45);
  auto clean = testutil::random_trajectory(rng, 25);
  trajkit::SlamEmulation em;
  em.sigma = 0.5;
  em.r_c = geom3d::random_rotation(rng);
  em.seed = 12;
  auto slam = trajkit::emulate_slam(clean, em);

  Vec3 g = em.r_c * Vec3(0, 0, -1);
  auto d = trajkit::step_distances(clean);
  auto w = trajkit::extract_angular_velocity(clean);
  auto fused =
      trajkit::fuse_head_estimate(slam, g, d, w, clean.rotations[0]);
  auto aligned = trajkit::align_first_frame(fused, clean.positions[0],
                                            clean.rotations[0]);
  for (int t = 0; t < 25; ++t) {
    CHECK((aligned.positions[t] - clean.positions[t]).norm() < 1e-9);
    CHECK((aligned.rotations[t] - clean.rotations[t]).cwiseAbs().maxCoeff() <
          1e-9);
  }
}
