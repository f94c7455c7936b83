#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "egomo/geom3d.hpp"
#include "egomo/trajkit.hpp"

namespace egomo::container {

inline constexpr int kVersion = 1;

// One named array. f4 blobs quantize to 32-bit floats on disk; f8 blobs keep
// the full doubles and are reserved for geometric fixtures.
struct Blob {
  std::string name;
  Eigen::MatrixXd data;
  bool f64 = false;
};

// Directory with manifest.json (version, kind, meta, blob table with shapes
// and crc32 checksums) plus data.bin holding the row-major values.
struct Container {
  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<Blob> blobs;

  bool has_blob(const std::string& name) const;
  const Blob& blob(const std::string& name) const;
  void add_blob(const std::string& name, const Eigen::MatrixXd& data,
                bool f64 = false);
};

void save_container(const std::string& path, const Container& c);
Container load_container(const std::string& path);

// Round trip through the 32-bit storage type. Derivations inside the data
// pipeline run on quantized values so stored stages agree bit-exactly with
// recomputation from their stored inputs.
Eigen::MatrixXd quantize_f4(const Eigen::MatrixXd& m);

// Trajectory components as blob matrices: positions T x 3, rotations T x 9
// with row-major entries.
Eigen::MatrixXd pack_positions(const std::vector<geom3d::Vec3>& p);
Eigen::MatrixXd pack_rotations(const std::vector<geom3d::Mat3>& r);
std::vector<geom3d::Vec3> unpack_positions(const Eigen::MatrixXd& m);
std::vector<geom3d::Mat3> unpack_rotations(const Eigen::MatrixXd& m);

// A SLAM-like trajectory plus the calibration inputs the pipeline command
// needs: the true initial head orientation and the flow-feature noise seed.
struct TrajectoryInput {
  trajkit::HeadTrajectory traj;
  geom3d::Mat3 o_start = geom3d::Mat3::Identity();
  std::uint64_t feature_seed = 0;
};

void save_trajectory(const std::string& path, const TrajectoryInput& input);
TrajectoryInput load_trajectory(const std::string& path);

}  // namespace egomo::container
