#include "egomo/headpose.hpp"

#include <cmath>

#include "egomo/errors.hpp"
#include "egomo/rng.hpp"

namespace egomo::headpose {

using Eigen::MatrixXd;
using geom3d::Mat3;
using geom3d::Vec3;
using nets::Tape;

MatrixXd flow_embedding_matrix(int dim) {
  require(dim >= 1, ErrorKind::invalid_argument,
          "flow_embedding_matrix: bad dim");
  Rng rng(kFlowEmbedSeed);
  MatrixXd e(dim, 9);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < 9; ++c) e(r, c) = rng.normal() / 3.0;
  }
  return e;
}

MatrixXd surrogate_flow_features(const trajkit::HeadTrajectory& traj,
                                 std::uint64_t noise_seed, double noise_std,
                                 int dim) {
  traj.validate();
  require(noise_std >= 0.0, ErrorKind::invalid_argument,
          "surrogate_flow_features: negative noise");
  int frames = traj.frames();
  MatrixXd raw = MatrixXd::Zero(frames, 9);
  raw.block<1, 6>(0, 3) = geom3d::identity_sixd().transpose();
  for (int t = 1; t < frames; ++t) {
    raw.block<1, 3>(t, 0) =
        (traj.positions[t] - traj.positions[t - 1]).transpose();
    Mat3 rel = geom3d::relative_rotation(traj.rotations[t - 1],
                                         traj.rotations[t]);
    raw.block<1, 6>(t, 3) = geom3d::rotmat_to_sixd(rel).transpose();
  }
  MatrixXd features = raw * flow_embedding_matrix(dim).transpose();
  if (noise_std > 0.0) {
    Rng rng(noise_seed);
    for (int t = 0; t < frames; ++t) {
      for (int c = 0; c < dim; ++c) features(t, c) += noise_std * rng.normal();
    }
  }
  return features;
}

GravityNet make_gravity_net(nets::TransformerConfig backbone,
                            std::uint64_t seed) {
  backbone.output_dim = backbone.d_model;
  GravityNet net;
  Rng rng(seed);
  net.tf = nets::add_transformer(net.params, "gravity.tf", backbone, rng);
  net.head = nets::add_mlp(net.params, "gravity.head",
                           {backbone.d_model, backbone.d_model, 3}, rng);
  return net;
}

int gravitynet_forward(Tape& tape, const GravityNet& net,
                       const std::vector<int>& leaves, int features) {
  int y = nets::transformer_forward(tape, net.tf, leaves, features);
  int tok = tape.row(y, 0);
  int h = nets::mlp_forward(tape, net.head, leaves, tok);
  int n2 = tape.sum_all(tape.mul_elem(h, h));
  // The tiny bias keeps the direction well-defined if the head collapses.
  int inv = tape.recip(tape.sqrt_op(tape.add_scalar(n2, 1e-24)));
  return tape.mul_scalar_node(h, inv);
}

int gravity_loss(Tape& tape, int pred, const Vec3& target) {
  MatrixXd t(1, 3);
  t << target.x(), target.y(), target.z();
  return tape.l1(tape.sub(pred, tape.input(std::move(t))));
}

GravitySample gravity_training_pair(const trajkit::HeadTrajectory& clean,
                                    const trajkit::SlamEmulation& em) {
  GravitySample s;
  trajkit::HeadTrajectory corrupted = trajkit::emulate_slam(clean, em);
  s.features = trajkit::head_features(corrupted);
  s.target = em.r_c * Vec3(0.0, 0.0, -1.0);
  return s;
}

Vec3 predict_gravity(const GravityNet& net, const MatrixXd& features,
                     int window) {
  require(window >= 1, ErrorKind::invalid_argument,
          "predict_gravity: bad window");
  int rows = std::min<int>(window, static_cast<int>(features.rows()));
  Tape tape;
  auto leaves = net.params.register_on(tape);
  int pred = gravitynet_forward(tape, net, leaves,
                                tape.input(features.topRows(rows)));
  const MatrixXd& v = tape.val(pred);
  return Vec3(v(0, 0), v(0, 1), v(0, 2));
}

HeadNet make_head_net(nets::TransformerConfig backbone, std::uint64_t seed) {
  backbone.output_dim = 4;
  HeadNet net;
  Rng rng(seed);
  net.tf = nets::add_transformer(net.params, "head.tf", backbone, rng);
  return net;
}

HeadForward headnet_forward(Tape& tape, const HeadNet& net,
                            const std::vector<int>& leaves, int features) {
  int y = nets::transformer_forward(tape, net.tf, leaves, features);
  HeadForward f;
  f.dist = tape.softplus(tape.slice_cols(y, 0, 1));
  f.omega = tape.slice_cols(y, 1, 3);
  return f;
}

HeadLoss headnet_loss(Tape& tape, const HeadForward& fwd,
                      const trajkit::HeadTrajectory& gt) {
  gt.validate();
  int frames = gt.frames();
  require(frames >= 2, ErrorKind::degenerate_input,
          "headnet_loss: need at least two frames");
  require(tape.val(fwd.dist).rows() == frames &&
              tape.val(fwd.omega).rows() == frames,
          ErrorKind::shape, "headnet_loss: prediction length mismatch");
  int steps = frames - 1;
  double inv_steps = 1.0 / static_cast<double>(steps);
  double dt = 1.0 / gt.frame_rate;

  std::vector<double> d_gt = trajkit::step_distances(gt);
  MatrixXd dmat(steps, 1);
  for (int t = 0; t < steps; ++t) dmat(t, 0) = d_gt[t];
  int dist = tape.scale(
      tape.l1(tape.sub(tape.slice_rows(fwd.dist, 0, steps),
                       tape.input(std::move(dmat)))),
      inv_steps);

  std::vector<Vec3> w_gt = trajkit::extract_angular_velocity(gt);
  MatrixXd wmat(steps, 3);
  for (int t = 0; t < steps; ++t) wmat.row(t) = w_gt[t].transpose();
  int vel = tape.scale(
      tape.l1(tape.sub(tape.slice_rows(fwd.omega, 0, steps),
                       tape.input(std::move(wmat)))),
      inv_steps);

  int rot_chain = tape.input(gt.rotations[0]);
  int identity = tape.input(MatrixXd::Identity(3, 3));
  int rot_acc = -1;
  for (int t = 0; t < steps; ++t) {
    rot_chain = tape.matmul(
        rot_chain, tape.so3_exp(tape.scale(tape.row(fwd.omega, t), dt)));
    int term = tape.l1(tape.sub(
        tape.matmul(rot_chain, tape.input(gt.rotations[t + 1].transpose())),
        identity));
    rot_acc = (t == 0) ? term : tape.add(rot_acc, term);
  }
  int rot = tape.scale(rot_acc, inv_steps);

  HeadLoss loss;
  loss.dist = dist;
  loss.vel = vel;
  loss.rot = rot;
  loss.total = tape.add(tape.add(dist, vel), rot);
  return loss;
}

HeadPrediction predict_head(const HeadNet& net, const MatrixXd& features) {
  require(features.rows() >= 2, ErrorKind::degenerate_input,
          "predict_head: need at least two frames");
  Tape tape;
  auto leaves = net.params.register_on(tape);
  HeadForward f = headnet_forward(tape, net, leaves, tape.input(features));
  int steps = static_cast<int>(features.rows()) - 1;
  HeadPrediction p;
  p.distances.reserve(steps);
  p.angular_velocities.reserve(steps);
  const MatrixXd& d = tape.val(f.dist);
  const MatrixXd& w = tape.val(f.omega);
  for (int t = 0; t < steps; ++t) {
    p.distances.push_back(d(t, 0));
    p.angular_velocities.push_back(Vec3(w(t, 0), w(t, 1), w(t, 2)));
  }
  return p;
}

trajkit::HeadTrajectory hybrid_estimate(const trajkit::HeadTrajectory& slam,
                                        const GravityNet& gnet,
                                        const HeadNet& hnet,
                                        const Mat3& o_start,
                                        std::uint64_t feature_seed,
                                        int gravity_window, double noise_std,
                                        int dim) {
  Vec3 g = predict_gravity(gnet, trajkit::head_features(slam), gravity_window);
  MatrixXd features = surrogate_flow_features(slam, feature_seed, noise_std,
                                              dim);
  HeadPrediction hp = predict_head(hnet, features);
  return trajkit::fuse_head_estimate(slam, g, hp.distances,
                                     hp.angular_velocities, o_start);
}

}  // namespace egomo::headpose
