#include "egomo/trajkit.hpp"

#include "egomo/errors.hpp"
#include "egomo/rng.hpp"

namespace egomo::trajkit {

using geom3d::Mat3;
using geom3d::Vec3;

void HeadTrajectory::validate() const {
  require(!positions.empty(), ErrorKind::shape, "trajectory has no frames");
  require(positions.size() == rotations.size(), ErrorKind::shape,
          "trajectory position/rotation lengths differ");
  require(frame_rate > 0.0, ErrorKind::invalid_argument,
          "trajectory frame rate must be positive");
  for (const auto& r : rotations) {
    require(geom3d::is_valid_rotation(r), ErrorKind::degenerate_input,
            "trajectory contains an invalid rotation");
  }
}

HeadTrajectory emulate_slam(const HeadTrajectory& clean,
                            const SlamEmulation& params) {
  clean.validate();
  require(params.sigma > 0.0, ErrorKind::invalid_argument,
          "emulate_slam: scale must be positive");
  require(params.pos_noise_std >= 0.0 && params.rot_noise_std >= 0.0,
          ErrorKind::invalid_argument, "emulate_slam: negative noise std");
  Rng rng(params.seed);
  HeadTrajectory out;
  out.frame_rate = clean.frame_rate;
  out.positions.reserve(clean.positions.size());
  out.rotations.reserve(clean.rotations.size());
  for (int t = 0; t < clean.frames(); ++t) {
    Vec3 eta(rng.normal(), rng.normal(), rng.normal());
    Vec3 xi(rng.normal(), rng.normal(), rng.normal());
    out.positions.push_back(params.sigma * (params.r_c * clean.positions[t]) +
                            params.pos_noise_std * eta);
    out.rotations.push_back(params.r_c * clean.rotations[t] *
                            geom3d::so3_exp(params.rot_noise_std * xi));
  }
  return out;
}

Eigen::MatrixXd head_features(const HeadTrajectory& traj) {
  traj.validate();
  int n = traj.frames();
  Eigen::MatrixXd f(n, 18);
  for (int t = 0; t < n; ++t) {
    f.block<1, 3>(t, 0) = traj.positions[t].transpose();
    f.block<1, 6>(t, 3) = geom3d::rotmat_to_sixd(traj.rotations[t]).transpose();
    if (t == 0) {
      f.block<1, 3>(t, 9).setZero();
      f.block<1, 6>(t, 12) = geom3d::identity_sixd().transpose();
    } else {
      f.block<1, 3>(t, 9) =
          (traj.positions[t] - traj.positions[t - 1]).transpose();
      Mat3 rel =
          geom3d::relative_rotation(traj.rotations[t - 1], traj.rotations[t]);
      f.block<1, 6>(t, 12) = geom3d::rotmat_to_sixd(rel).transpose();
    }
  }
  return f;
}

std::vector<double> step_distances(const HeadTrajectory& traj) {
  std::vector<double> d;
  for (int t = 0; t + 1 < traj.frames(); ++t) {
    d.push_back((traj.positions[t + 1] - traj.positions[t]).norm());
  }
  return d;
}

double mean_step_distance(const HeadTrajectory& traj) {
  traj.validate();
  require(traj.frames() >= 2, ErrorKind::shape,
          "mean_step_distance: need at least two frames");
  auto d = step_distances(traj);
  double acc = 0.0;
  for (double v : d) acc += v;
  return acc / static_cast<double>(d.size());
}

double calibrate_scale(double d_pred, double d_slam) {
  require(d_pred >= 0.0, ErrorKind::invalid_argument,
          "calibrate_scale: negative predicted distance");
  require(d_slam > 1e-6, ErrorKind::near_static,
          "calibrate_scale: trajectory is near-static, scale is undefined");
  return d_pred / d_slam;
}

HeadTrajectory apply_gravity_alignment(const HeadTrajectory& traj,
                                       const Vec3& g) {
  traj.validate();
  Mat3 r_g = geom3d::rotation_between_vectors(g, Vec3(0, 0, -1));
  HeadTrajectory out;
  out.frame_rate = traj.frame_rate;
  out.positions.reserve(traj.positions.size());
  out.rotations.reserve(traj.rotations.size());
  for (int t = 0; t < traj.frames(); ++t) {
    out.positions.push_back(r_g * traj.positions[t]);
    out.rotations.push_back(r_g * traj.rotations[t]);
  }
  return out;
}

std::vector<Mat3> integrate_angular_velocity(const Mat3& o_start,
                                             const std::vector<Vec3>& omega,
                                             double dt) {
  require(geom3d::is_valid_rotation(o_start), ErrorKind::degenerate_input,
          "integrate_angular_velocity: invalid start rotation");
  require(dt > 0.0, ErrorKind::invalid_argument,
          "integrate_angular_velocity: dt must be positive");
  std::vector<Mat3> out;
  out.reserve(omega.size() + 1);
  out.push_back(o_start);
  for (const auto& w : omega) {
    out.push_back(out.back() * geom3d::so3_exp(w * dt));
  }
  return out;
}

std::vector<Vec3> extract_angular_velocity(const HeadTrajectory& traj) {
  traj.validate();
  double dt = 1.0 / traj.frame_rate;
  std::vector<Vec3> w;
  for (int t = 0; t + 1 < traj.frames(); ++t) {
    Mat3 rel =
        geom3d::relative_rotation(traj.rotations[t], traj.rotations[t + 1]);
    w.push_back(geom3d::so3_log(rel) / dt);
  }
  return w;
}

HeadTrajectory fuse_head_estimate(const HeadTrajectory& slam_traj,
                                  const Vec3& g,
                                  const std::vector<double>& d_pred,
                                  const std::vector<Vec3>& omega_pred,
                                  const Mat3& o_start) {
  slam_traj.validate();
  require(slam_traj.frames() >= 2, ErrorKind::shape,
          "fuse_head_estimate: need at least two frames");
  size_t steps = static_cast<size_t>(slam_traj.frames()) - 1;
  require(d_pred.size() == steps && omega_pred.size() == steps,
          ErrorKind::shape,
          "fuse_head_estimate: predictions must have frames-1 entries");
  require(geom3d::is_valid_rotation(o_start), ErrorKind::degenerate_input,
          "fuse_head_estimate: invalid start rotation");

  // Gravity fixes roll and pitch; the heading left over is read off the
  // first frame against the known start orientation.
  Mat3 r_g = geom3d::rotation_between_vectors(g, Vec3(0, 0, -1));
  double heading =
      geom3d::yaw_of(r_g * slam_traj.rotations.front() * o_start.transpose());
  Mat3 r_align = geom3d::rot_z(-heading) * r_g;

  HeadTrajectory out;
  out.frame_rate = slam_traj.frame_rate;
  out.positions.reserve(slam_traj.positions.size());
  for (const auto& p : slam_traj.positions) out.positions.push_back(r_align * p);

  double d_mean = 0.0;
  for (double d : d_pred) d_mean += d;
  d_mean /= static_cast<double>(d_pred.size());
  double d_slam = 0.0;
  for (size_t t = 0; t + 1 < out.positions.size(); ++t) {
    d_slam += (out.positions[t + 1] - out.positions[t]).norm();
  }
  d_slam /= static_cast<double>(steps);
  double s = calibrate_scale(d_mean, d_slam);
  for (auto& p : out.positions) p *= s;

  out.rotations =
      integrate_angular_velocity(o_start, omega_pred, 1.0 / slam_traj.frame_rate);
  return out;
}

HeadTrajectory align_first_frame(const HeadTrajectory& pred,
                                 const Vec3& gt_first_pos,
                                 const Mat3& gt_first_rot) {
  pred.validate();
  double heading =
      geom3d::yaw_of(pred.rotations.front() * gt_first_rot.transpose());
  Mat3 r = geom3d::rot_z(-heading);
  HeadTrajectory out;
  out.frame_rate = pred.frame_rate;
  Vec3 p0 = pred.positions.front();
  out.positions.reserve(pred.positions.size());
  out.rotations.reserve(pred.rotations.size());
  for (int t = 0; t < pred.frames(); ++t) {
    out.positions.push_back(r * (pred.positions[t] - p0) + gt_first_pos);
    out.rotations.push_back(r * pred.rotations[t]);
  }
  return out;
}

}  // namespace egomo::trajkit
