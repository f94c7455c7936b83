#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "egomo/geom3d.hpp"
#include "egomo/trajkit.hpp"

namespace egomo::bodygen {

inline constexpr int kJoints = 22;
inline constexpr int kPoseDim = kJoints * 3 + kJoints * 6;  // 198
inline constexpr int kCondDim = 9;  // head position (3) | head rot6d (6)

// Per-frame layout: 22 joint positions (66) then 22 joint global rotations
// as 6d (132).
struct MotionSequence {
  Eigen::MatrixXd data;  // frames x 198
  double frame_rate = 30.0;

  int frames() const { return static_cast<int>(data.rows()); }
  void validate() const;

  geom3d::Vec3 joint_position(int t, int j) const {
    return data.block<1, 3>(t, 3 * j).transpose();
  }
  void set_joint_position(int t, int j, const geom3d::Vec3& p) {
    data.block<1, 3>(t, 3 * j) = p.transpose();
  }
  geom3d::Rot6d joint_rot6d(int t, int j) const {
    return data.block<1, 6>(t, 3 * kJoints + 6 * j).transpose();
  }
  void set_joint_rot6d(int t, int j, const geom3d::Rot6d& r) {
    data.block<1, 6>(t, 3 * kJoints + 6 * j) = r.transpose();
  }
  geom3d::Mat3 joint_rotation(int t, int j) const {
    return geom3d::sixd_to_rotmat(joint_rot6d(t, j));
  }
};

struct Skeleton {
  std::array<int, kJoints> parents;
  std::array<geom3d::Vec3, kJoints> offsets;  // meters, relative to parent

  int head = 15;
  int left_ankle = 7, right_ankle = 8;
  int left_toe = 10, right_toe = 11;

  void validate() const;  // acyclic tree rooted at joint 0

  // Hand-authored 1.7 m humanoid in the standard 22-joint order.
  static Skeleton humanoid22();
};

// p_j = p_parent(j) + O_parent(j) * offset_j, root carried by root_pos.
std::array<geom3d::Vec3, kJoints> fk_global(
    const Skeleton& skel, const geom3d::Vec3& root_pos,
    const std::array<geom3d::Mat3, kJoints>& global_rots);

struct MotionParams {
  double speed = 1.0;          // m/s along the heading
  double turn_rate = 0.0;      // rad/s heading change
  double step_frequency = 1.0; // full gait cycles per second
  double hip_amplitude = 0.35; // rad
  double knee_amplitude = 0.5; // rad
  double arm_amplitude = 0.25; // rad
  double head_osc = 0.06;      // rad, head joint oscillation
  double head_bob = 0.008;     // m, whole-body vertical bob (< 0.019)
  int frames = 150;
  double frame_rate = 30.0;

  void validate() const;
};

// Sinusoidal walk cycle. The root covers speed * frames / frame_rate meters
// of arc over the sequence, phase-opposed legs and arms swing at the step
// frequency, and the root height is set per frame so the lowest foot joint
// tracks a small positive clearance (within [-1, 3] cm of the floor always).
// speed == 0 freezes the gait into a static stance.
MotionSequence procedural_motion(const Skeleton& skel,
                                 const MotionParams& params,
                                 std::uint64_t seed);

struct FloorPrim {
  geom3d::Vec3 point{0, 0, 0};
  geom3d::Vec3 normal{0, 0, 1};
};

struct BoxPrim {
  geom3d::Vec3 center{0, 0, 0};
  geom3d::Vec3 half_extents{0.5, 0.5, 0.5};
};

struct SdfScene {
  std::vector<FloorPrim> floors;  // at least one
  std::vector<BoxPrim> boxes;
  Eigen::Vector2d region_min{-5.0, -5.0};  // placement sampling window
  Eigen::Vector2d region_max{5.0, 5.0};

  void validate() const;
};

// Signed distance of the scene union (pointwise min over primitives),
// negative inside.
double scene_sdf(const SdfScene& scene, const geom3d::Vec3& p);

SdfScene default_scene();

// Versioned JSON description: {"version": 1, "primitives": [...],
// "placement_region": {...}}.
SdfScene parse_scene(const std::string& json_text);
SdfScene load_scene(const std::string& path);

// 22 joints plus 21 bone midpoints for one frame.
std::vector<geom3d::Vec3> penetration_points(const MotionSequence& motion,
                                             const Skeleton& skel, int frame);

// Sum of |d| over points with d < 0.
double penetration_loss(const std::vector<geom3d::Vec3>& points,
                        const SdfScene& scene);

std::vector<double> penetration_losses(const MotionSequence& motion,
                                       const Skeleton& skel,
                                       const SdfScene& scene);

// Rigid motion on a whole sequence: p -> r p + t, O -> r O.
MotionSequence transform_rigid(const MotionSequence& motion,
                               const geom3d::Mat3& r, const geom3d::Vec3& t);

// Uniformly samples a heading and an xy location in the scene region, drops
// the sequence there with the first frame's lowest foot joint exactly on the
// first floor primitive, and requires the first frame to be penetration-free.
// Fails with ErrorKind::placement after 100 rejected attempts.
MotionSequence place_sequence(const MotionSequence& motion,
                              const Skeleton& skel, const SdfScene& scene,
                              std::uint64_t seed, int max_attempts = 100);

// Indices of frames with penetration loss strictly below the threshold.
std::vector<int> filter_by_penetration(const MotionSequence& motion,
                                       const Skeleton& skel,
                                       const SdfScene& scene,
                                       double threshold);

// Consecutive non-overlapping windows; the remainder is discarded.
std::vector<MotionSequence> chunk_sequence(const MotionSequence& motion,
                                           int chunk_frames);

trajkit::HeadTrajectory head_from_motion(const MotionSequence& motion);

// Head condition rows: head position (3) | head rot6d (6). A plain copy of
// the head joint's channels, so it round-trips bit-exactly with the motion.
Eigen::MatrixXd head_condition(const MotionSequence& motion);

Eigen::MatrixXd head_condition_from_trajectory(
    const trajkit::HeadTrajectory& traj);

}  // namespace egomo::bodygen
