#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "egomo/geom3d.hpp"

namespace egomo::trajkit {

struct HeadTrajectory {
  std::vector<geom3d::Vec3> positions;
  std::vector<geom3d::Mat3> rotations;
  double frame_rate = 30.0;

  int frames() const { return static_cast<int>(positions.size()); }
  void validate() const;  // equal lengths, >= 1 frame, valid rotations
};

// Synthetic stand-in for a monocular SLAM estimate: a global rotation, a
// global scale and optional per-frame noise applied to a clean trajectory.
struct SlamEmulation {
  double sigma = 1.0;               // applied scale factor
  geom3d::Mat3 r_c = geom3d::Mat3::Identity();  // applied global rotation
  double pos_noise_std = 0.0;       // meters, per axis
  double rot_noise_std = 0.0;       // radians, per axis
  std::uint64_t seed = 0;
};

HeadTrajectory emulate_slam(const HeadTrajectory& clean,
                            const SlamEmulation& params);

// Per-frame feature rows: position (3) | rot6d (6) | position diff (3) |
// relative rot6d (6). Frame 0 uses a zero diff and the identity relative
// rotation.
inline constexpr int kHeadFeatureDim = 18;
Eigen::MatrixXd head_features(const HeadTrajectory& traj);

double mean_step_distance(const HeadTrajectory& traj);

// s = d_pred / d_slam. d_slam below 1e-6 means the trajectory carries no
// usable scale information and raises ErrorKind::near_static.
double calibrate_scale(double d_pred, double d_slam);

// Rotates positions and rotations by the rotation that takes g to the
// canonical gravity (0, 0, -1).
HeadTrajectory apply_gravity_alignment(const HeadTrajectory& traj,
                                       const geom3d::Vec3& g);

// O_0 = o_start, O_{t+1} = O_t * exp(w_t dt); output length is omega.size()+1.
std::vector<geom3d::Mat3> integrate_angular_velocity(
    const geom3d::Mat3& o_start, const std::vector<geom3d::Vec3>& omega,
    double dt);

// Angular velocities w_t = log(O_t^T O_{t+1}) / dt, length frames-1. The
// inverse of integrate_angular_velocity on exact inputs.
std::vector<geom3d::Vec3> extract_angular_velocity(const HeadTrajectory& traj);

std::vector<double> step_distances(const HeadTrajectory& traj);

// Head-pose fusion: gravity-align, resolve the residual heading against the
// known first orientation, rescale with the predicted distances, and replace
// the rotations by integrating the predicted angular velocities from o_start.
// d_pred and omega_pred must have length frames-1.
HeadTrajectory fuse_head_estimate(const HeadTrajectory& slam_traj,
                                  const geom3d::Vec3& g,
                                  const std::vector<double>& d_pred,
                                  const std::vector<geom3d::Vec3>& omega_pred,
                                  const geom3d::Mat3& o_start);

// Evaluation alignment: heading-only rotation from the first-frame rotation
// discrepancy plus a translation taking the first position onto the target.
// Applied to every method before trajectory metrics are computed.
HeadTrajectory align_first_frame(const HeadTrajectory& pred,
                                 const geom3d::Vec3& gt_first_pos,
                                 const geom3d::Mat3& gt_first_rot);

}  // namespace egomo::trajkit
