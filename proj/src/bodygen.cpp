#include "egomo/bodygen.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "egomo/errors.hpp"
#include "egomo/rng.hpp"
#include "egomo/version.hpp"

namespace egomo::bodygen {

using geom3d::Mat3;
using geom3d::Vec3;

void MotionSequence::validate() const {
  require(data.cols() == kPoseDim, ErrorKind::shape,
          "motion sequence must have 198 channels");
  require(data.rows() >= 1, ErrorKind::shape, "motion sequence has no frames");
  require(data.allFinite(), ErrorKind::non_finite,
          "motion sequence contains non-finite values");
  require(frame_rate > 0.0, ErrorKind::invalid_argument,
          "motion frame rate must be positive");
}

void Skeleton::validate() const {
  require(parents[0] == -1, ErrorKind::invalid_argument,
          "skeleton joint 0 must be the root");
  for (int j = 1; j < kJoints; ++j) {
    require(parents[j] >= 0 && parents[j] < kJoints && parents[j] != j,
            ErrorKind::invalid_argument, "skeleton parent index out of range");
  }
  for (int j = 1; j < kJoints; ++j) {
    int cur = j;
    int hops = 0;
    while (cur != 0) {
      cur = parents[cur];
      require(cur >= 0 && ++hops <= kJoints, ErrorKind::invalid_argument,
              "skeleton parent array contains a cycle");
    }
  }
}

Skeleton Skeleton::humanoid22() {
  Skeleton s;
  // parent, offset (x left, y forward, z up)
  const struct {
    int parent;
    double x, y, z;
  } table[kJoints] = {
      {-1, 0.00, 0.00, 0.00},   // 0  pelvis
      {0, 0.09, 0.00, -0.06},   // 1  left hip
      {0, -0.09, 0.00, -0.06},  // 2  right hip
      {0, 0.00, 0.00, 0.11},    // 3  spine1
      {1, 0.00, 0.00, -0.40},   // 4  left knee
      {2, 0.00, 0.00, -0.40},   // 5  right knee
      {3, 0.00, 0.00, 0.13},    // 6  spine2
      {4, 0.00, 0.00, -0.42},   // 7  left ankle
      {5, 0.00, 0.00, -0.42},   // 8  right ankle
      {6, 0.00, 0.00, 0.06},    // 9  spine3
      {7, 0.00, 0.13, -0.05},   // 10 left toe
      {8, 0.00, 0.13, -0.05},   // 11 right toe
      {9, 0.00, 0.00, 0.22},    // 12 neck
      {9, 0.07, 0.00, 0.18},    // 13 left collar
      {9, -0.07, 0.00, 0.18},   // 14 right collar
      {12, 0.00, 0.00, 0.21},   // 15 head
      {13, 0.10, 0.00, 0.00},   // 16 left shoulder
      {14, -0.10, 0.00, 0.00},  // 17 right shoulder
      {16, 0.26, 0.00, 0.00},   // 18 left elbow
      {17, -0.26, 0.00, 0.00},  // 19 right elbow
      {18, 0.25, 0.00, 0.00},   // 20 left wrist
      {19, -0.25, 0.00, 0.00},  // 21 right wrist
  };
  for (int j = 0; j < kJoints; ++j) {
    s.parents[j] = table[j].parent;
    s.offsets[j] = Vec3(table[j].x, table[j].y, table[j].z);
  }
  return s;
}

std::array<Vec3, kJoints> fk_global(
    const Skeleton& skel, const Vec3& root_pos,
    const std::array<Mat3, kJoints>& global_rots) {
  skel.validate();
  std::array<Vec3, kJoints> pos;
  std::array<bool, kJoints> done{};
  pos[0] = root_pos;
  done[0] = true;
  int resolved = 1;
  // Tree order is whatever the parent array implies; sweep until settled.
  while (resolved < kJoints) {
    int before = resolved;
    for (int j = 1; j < kJoints; ++j) {
      if (done[j] || !done[skel.parents[j]]) continue;
      pos[j] = pos[skel.parents[j]] + global_rots[skel.parents[j]] * skel.offsets[j];
      done[j] = true;
      ++resolved;
    }
    require(resolved > before, ErrorKind::internal,
            "fk_global failed to resolve the joint tree");
  }
  return pos;
}

void MotionParams::validate() const {
  require(speed >= 0.0, ErrorKind::invalid_argument,
          "motion params: negative speed");
  require(step_frequency > 0.0, ErrorKind::invalid_argument,
          "motion params: step frequency must be positive");
  require(hip_amplitude >= 0.0 && hip_amplitude < 1.2 &&
              knee_amplitude >= 0.0 && knee_amplitude < 1.5 &&
              arm_amplitude >= 0.0 && arm_amplitude < 1.2 && head_osc >= 0.0,
          ErrorKind::invalid_argument, "motion params: amplitude out of range");
  require(head_bob >= 0.0 && head_bob < 0.019, ErrorKind::invalid_argument,
          "motion params: head bob must stay below 1.9 cm");
  require(frames >= 2, ErrorKind::invalid_argument,
          "motion params: need at least two frames");
  require(frame_rate > 0.0, ErrorKind::invalid_argument,
          "motion params: frame rate must be positive");
}

namespace {

Mat3 rot_x(double a) {
  Mat3 r = Mat3::Identity();
  double c = std::cos(a), s = std::sin(a);
  r(1, 1) = c;
  r(1, 2) = -s;
  r(2, 1) = s;
  r(2, 2) = c;
  return r;
}

Mat3 rot_y(double a) {
  Mat3 r = Mat3::Identity();
  double c = std::cos(a), s = std::sin(a);
  r(0, 0) = c;
  r(0, 2) = s;
  r(2, 0) = -s;
  r(2, 2) = c;
  return r;
}

}  // namespace

MotionSequence procedural_motion(const Skeleton& skel,
                                 const MotionParams& params,
                                 std::uint64_t seed) {
  params.validate();
  skel.validate();
  Rng rng(seed);
  double phase0 = rng.uniform(0.0, 2.0 * M_PI);
  double heading0 = rng.uniform(0.0, 2.0 * M_PI);
  double hip_amp = params.hip_amplitude * rng.uniform(0.9, 1.1);
  double knee_amp = params.knee_amplitude * rng.uniform(0.9, 1.1);
  double arm_amp = params.arm_amplitude * rng.uniform(0.9, 1.1);

  bool walking = params.speed > 0.0;
  if (!walking) {
    hip_amp = knee_amp = arm_amp = 0.0;
  }
  double bob = walking ? params.head_bob : 0.0;
  double head_amp = walking ? params.head_osc : 0.0;

  int n = params.frames;
  double dt = 1.0 / params.frame_rate;
  // Stretch the step so the sequence covers speed * frames * dt meters of
  // arc across its frames - 1 steps.
  double dtau = dt * static_cast<double>(n) / static_cast<double>(n - 1);

  MotionSequence motion;
  motion.frame_rate = params.frame_rate;
  motion.data.resize(n, kPoseDim);

  double x = 0.0, y = 0.0;
  for (int t = 0; t < n; ++t) {
    double tau = t * dtau;
    double heading = heading0 + params.turn_rate * tau;
    double phi = 2.0 * M_PI * params.step_frequency * tau + phase0;
    double swing = std::sin(phi);

    std::array<Mat3, kJoints> local;
    local.fill(Mat3::Identity());
    local[0] = geom3d::rot_z(heading);
    local[1] = rot_x(hip_amp * swing);
    local[2] = rot_x(-hip_amp * swing);
    local[4] = rot_x(-knee_amp * 0.5 * (1.0 - std::cos(phi)));
    local[5] = rot_x(-knee_amp * 0.5 * (1.0 + std::cos(phi)));
    double droop = 0.9;
    local[16] = geom3d::rot_z(-arm_amp * swing) * rot_y(droop);
    local[17] = geom3d::rot_z(arm_amp * swing) * rot_y(-droop);
    local[18] = geom3d::rot_z(0.25);
    local[19] = geom3d::rot_z(-0.25);
    local[15] = rot_x(head_amp * std::sin(2.0 * phi)) *
                geom3d::rot_z(0.8 * head_amp * swing);

    std::array<Mat3, kJoints> global;
    global[0] = local[0];
    for (int j = 1; j < kJoints; ++j) {
      global[j] = global[skel.parents[j]] * local[j];
    }

    auto pos = fk_global(skel, Vec3(x, y, 0.0), global);
    double lowest = std::min(std::min(pos[skel.left_ankle].z(),
                                      pos[skel.right_ankle].z()),
                             std::min(pos[skel.left_toe].z(),
                                      pos[skel.right_toe].z()));
    // Lowest foot joint rides a small positive clearance curve; the bob term
    // moves the whole body.
    double clearance = 0.01 + bob * std::sin(2.0 * phi);
    double root_z = clearance - lowest;

    for (int j = 0; j < kJoints; ++j) {
      motion.set_joint_position(t, j, pos[j] + Vec3(0, 0, root_z));
      motion.set_joint_rot6d(t, j, geom3d::rotmat_to_sixd(global[j]));
    }

    x += params.speed * dtau * -std::sin(heading);
    y += params.speed * dtau * std::cos(heading);
  }
  return motion;
}

void SdfScene::validate() const {
  require(!floors.empty(), ErrorKind::config,
          "scene must contain at least one floor primitive");
  for (const auto& f : floors) {
    require(f.normal.norm() > 1e-8, ErrorKind::config,
            "scene floor has a zero normal");
  }
  for (const auto& b : boxes) {
    require(b.half_extents.minCoeff() > 0.0, ErrorKind::config,
            "scene box has non-positive extents");
  }
  require((region_max - region_min).minCoeff() > 0.0, ErrorKind::config,
          "scene placement region is empty");
}

namespace {

double floor_sdf(const FloorPrim& f, const Vec3& p) {
  return (p - f.point).dot(f.normal.normalized());
}

double box_sdf(const BoxPrim& b, const Vec3& p) {
  Vec3 q = (p - b.center).cwiseAbs() - b.half_extents;
  Vec3 outside = q.cwiseMax(0.0);
  double inside = std::min(q.maxCoeff(), 0.0);
  return outside.norm() + inside;
}

}  // namespace

double scene_sdf(const SdfScene& scene, const Vec3& p) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& f : scene.floors) d = std::min(d, floor_sdf(f, p));
  for (const auto& b : scene.boxes) d = std::min(d, box_sdf(b, p));
  return d;
}

SdfScene default_scene() {
  SdfScene s;
  s.floors.push_back(FloorPrim{});
  s.boxes.push_back(BoxPrim{Vec3(1.8, 2.2, 0.4), Vec3(0.5, 0.5, 0.4)});
  s.boxes.push_back(BoxPrim{Vec3(-2.5, -1.5, 0.5), Vec3(0.6, 0.4, 0.5)});
  return s;
}

namespace {

Vec3 vec3_from_json(const nlohmann::json& j, const char* what) {
  require(j.is_array() && j.size() == 3, ErrorKind::config,
          std::string("scene: expected a 3-vector for ") + what);
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

SdfScene parse_scene(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
  require(!j.is_discarded(), ErrorKind::config, "scene: malformed JSON");
  require(j.contains("version") && j["version"].is_number_integer(),
          ErrorKind::config, "scene: missing version");
  require(j["version"].get<int>() == EGOMO_CONTAINER_VERSION,
          ErrorKind::version, "scene: unsupported version tag");
  require(j.contains("primitives") && j["primitives"].is_array(),
          ErrorKind::config, "scene: missing primitive list");
  SdfScene s;
  for (const auto& prim : j["primitives"]) {
    std::string type = prim.value("type", "");
    if (type == "floor") {
      FloorPrim f;
      f.point = vec3_from_json(prim.at("point"), "floor point");
      f.normal = vec3_from_json(prim.at("normal"), "floor normal");
      s.floors.push_back(f);
    } else if (type == "box") {
      BoxPrim b;
      b.center = vec3_from_json(prim.at("center"), "box center");
      b.half_extents = vec3_from_json(prim.at("half_extents"), "box extents");
      s.boxes.push_back(b);
    } else {
      fail(ErrorKind::config, "scene: unknown primitive type '" + type + "'");
    }
  }
  if (j.contains("placement_region")) {
    const auto& r = j["placement_region"];
    require(r.contains("min") && r.contains("max"), ErrorKind::config,
            "scene: placement_region needs min and max");
    s.region_min = Eigen::Vector2d(r["min"][0].get<double>(),
                                   r["min"][1].get<double>());
    s.region_max = Eigen::Vector2d(r["max"][0].get<double>(),
                                   r["max"][1].get<double>());
  }
  s.validate();
  return s;
}

SdfScene load_scene(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "scene: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str());
}

std::vector<Vec3> penetration_points(const MotionSequence& motion,
                                     const Skeleton& skel, int frame) {
  require(frame >= 0 && frame < motion.frames(), ErrorKind::invalid_argument,
          "penetration_points: frame out of range");
  std::vector<Vec3> pts;
  pts.reserve(kJoints + kJoints - 1);
  for (int j = 0; j < kJoints; ++j) pts.push_back(motion.joint_position(frame, j));
  for (int j = 1; j < kJoints; ++j) {
    pts.push_back(0.5 * (motion.joint_position(frame, j) +
                         motion.joint_position(frame, skel.parents[j])));
  }
  return pts;
}

double penetration_loss(const std::vector<Vec3>& points,
                        const SdfScene& scene) {
  double acc = 0.0;
  for (const auto& p : points) {
    double d = scene_sdf(scene, p);
    if (d < 0.0) acc += -d;
  }
  return acc;
}

std::vector<double> penetration_losses(const MotionSequence& motion,
                                       const Skeleton& skel,
                                       const SdfScene& scene) {
  motion.validate();
  scene.validate();
  std::vector<double> out;
  out.reserve(motion.frames());
  for (int t = 0; t < motion.frames(); ++t) {
    out.push_back(penetration_loss(penetration_points(motion, skel, t), scene));
  }
  return out;
}

MotionSequence transform_rigid(const MotionSequence& motion, const Mat3& r,
                               const Vec3& t) {
  motion.validate();
  MotionSequence out = motion;
  for (int f = 0; f < motion.frames(); ++f) {
    for (int j = 0; j < kJoints; ++j) {
      out.set_joint_position(f, j, r * motion.joint_position(f, j) + t);
      geom3d::Rot6d s = motion.joint_rot6d(f, j);
      geom3d::Rot6d rs;
      rs.head<3>() = r * s.head<3>();
      rs.tail<3>() = r * s.tail<3>();
      out.set_joint_rot6d(f, j, rs);
    }
  }
  return out;
}

MotionSequence place_sequence(const MotionSequence& motion,
                              const Skeleton& skel, const SdfScene& scene,
                              std::uint64_t seed, int max_attempts) {
  motion.validate();
  skel.validate();
  scene.validate();
  Rng rng(seed);
  const FloorPrim& floor = scene.floors.front();
  Vec3 n = floor.normal.normalized();
  const int feet[4] = {skel.left_ankle, skel.right_ankle, skel.left_toe,
                       skel.right_toe};
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    double yaw = rng.uniform(0.0, 2.0 * M_PI);
    double px = rng.uniform(scene.region_min.x(), scene.region_max.x());
    double py = rng.uniform(scene.region_min.y(), scene.region_max.y());
    Mat3 r = geom3d::rot_z(yaw);
    Vec3 root0 = motion.joint_position(0, 0);
    Vec3 shift = Vec3(px, py, root0.z()) - r * root0;
    MotionSequence placed = transform_rigid(motion, r, shift);
    double lowest = std::numeric_limits<double>::infinity();
    for (int f : feet) {
      lowest = std::min(lowest, floor_sdf(floor, placed.joint_position(0, f)));
    }
    placed = transform_rigid(placed, Mat3::Identity(), -lowest * n);
    if (penetration_loss(penetration_points(placed, skel, 0), scene) == 0.0) {
      return placed;
    }
  }
  fail(ErrorKind::placement,
       "place_sequence: no free placement found after " +
           std::to_string(max_attempts) + " attempts");
}

std::vector<int> filter_by_penetration(const MotionSequence& motion,
                                       const Skeleton& skel,
                                       const SdfScene& scene,
                                       double threshold) {
  auto losses = penetration_losses(motion, skel, scene);
  std::vector<int> kept;
  for (int t = 0; t < static_cast<int>(losses.size()); ++t) {
    if (losses[t] < threshold) kept.push_back(t);
  }
  return kept;
}

std::vector<MotionSequence> chunk_sequence(const MotionSequence& motion,
                                           int chunk_frames) {
  motion.validate();
  require(chunk_frames >= 2, ErrorKind::invalid_argument,
          "chunk_sequence: chunks need at least two frames");
  std::vector<MotionSequence> out;
  int n = motion.frames() / chunk_frames;
  for (int c = 0; c < n; ++c) {
    MotionSequence chunk;
    chunk.frame_rate = motion.frame_rate;
    chunk.data = motion.data.middleRows(c * chunk_frames, chunk_frames);
    out.push_back(std::move(chunk));
  }
  return out;
}

trajkit::HeadTrajectory head_from_motion(const MotionSequence& motion) {
  motion.validate();
  trajkit::HeadTrajectory traj;
  traj.frame_rate = motion.frame_rate;
  int head = Skeleton::humanoid22().head;
  traj.positions.reserve(motion.frames());
  traj.rotations.reserve(motion.frames());
  for (int t = 0; t < motion.frames(); ++t) {
    traj.positions.push_back(motion.joint_position(t, head));
    traj.rotations.push_back(motion.joint_rotation(t, head));
  }
  return traj;
}

Eigen::MatrixXd head_condition(const MotionSequence& motion) {
  motion.validate();
  int head = Skeleton::humanoid22().head;
  Eigen::MatrixXd cond(motion.frames(), 9);
  cond.leftCols(3) = motion.data.middleCols(3 * head, 3);
  cond.rightCols(6) = motion.data.middleCols(3 * kJoints + 6 * head, 6);
  return cond;
}

Eigen::MatrixXd head_condition_from_trajectory(
    const trajkit::HeadTrajectory& traj) {
  traj.validate();
  Eigen::MatrixXd cond(traj.frames(), 9);
  for (int t = 0; t < traj.frames(); ++t) {
    cond.block<1, 3>(t, 0) = traj.positions[t].transpose();
    cond.block<1, 6>(t, 3) =
        geom3d::rotmat_to_sixd(traj.rotations[t]).transpose();
  }
  return cond;
}

}  // namespace egomo::bodygen
