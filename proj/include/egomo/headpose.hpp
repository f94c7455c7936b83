#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "egomo/geom3d.hpp"
#include "egomo/nets.hpp"
#include "egomo/trajkit.hpp"

namespace egomo::headpose {

// The projection every flow-feature stream shares. Training and inference
// must see the same embedding, so its seed is a project constant.
inline constexpr std::uint64_t kFlowEmbedSeed = 0x666c6f77ull;

// dim x 9 Gaussian projection, scaled by 1/3 so the output variance tracks
// the input variance.
Eigen::MatrixXd flow_embedding_matrix(int dim);

// Stand-in for learned optical-flow descriptors: per frame the 9 raw motion
// channels [position delta | relative rot6d] pushed through the fixed
// embedding, plus seeded Gaussian noise. Row 0 encodes a zero delta and the
// identity relative rotation. Persist the result instead of recomputing it
// so the noise draw stays frozen with a dataset.
Eigen::MatrixXd surrogate_flow_features(const trajkit::HeadTrajectory& traj,
                                        std::uint64_t noise_seed,
                                        double noise_std = 0.01, int dim = 64);

struct GravityNet {
  nets::TransformerIds tf;
  nets::MlpIds head;
  nets::ParamStore params;
};

// Transformer over a window of raw head-pose features (trajkit::head_features,
// 18 channels: the absolute poses carry the corrupted frame's orientation);
// the first token goes through a small MLP and is normalized into a
// direction. output_dim of the backbone is forced to d_model.
GravityNet make_gravity_net(nets::TransformerConfig backbone,
                            std::uint64_t seed);
int gravitynet_forward(nets::Tape& tape, const GravityNet& net,
                       const std::vector<int>& leaves, int features);
// L1 between the predicted direction and the target direction.
int gravity_loss(nets::Tape& tape, int pred, const geom3d::Vec3& target);

struct GravitySample {
  Eigen::MatrixXd features;  // head_features of the corrupted trajectory
  geom3d::Vec3 target;       // where true down ends up in the emulated frame
};

GravitySample gravity_training_pair(const trajkit::HeadTrajectory& clean,
                                    const trajkit::SlamEmulation& em);

// features are head-pose features; only the leading window rows are read.
geom3d::Vec3 predict_gravity(const GravityNet& net,
                             const Eigen::MatrixXd& features, int window);

struct HeadNet {
  nets::TransformerIds tf;
  nets::ParamStore params;
};

// Per-frame heads: softplus step distance and a 3d angular velocity.
// output_dim of the backbone is forced to 4.
HeadNet make_head_net(nets::TransformerConfig backbone, std::uint64_t seed);

struct HeadForward {
  int dist;   // T x 1, nonnegative
  int omega;  // T x 3
};

HeadForward headnet_forward(nets::Tape& tape, const HeadNet& net,
                            const std::vector<int>& leaves, int features);

// Loss nodes over the first frames-1 predictions: mean L1 of the step
// distances, mean per-frame L1 of the angular velocity, and mean entrywise
// L1 of R_pred R_gt^T - I along the integrated rotation chain.
struct HeadLoss {
  int total;
  int dist;
  int vel;
  int rot;
};

HeadLoss headnet_loss(nets::Tape& tape, const HeadForward& fwd,
                      const trajkit::HeadTrajectory& gt);

struct HeadPrediction {
  std::vector<double> distances;               // frames - 1
  std::vector<geom3d::Vec3> angular_velocities;  // frames - 1
};

HeadPrediction predict_head(const HeadNet& net,
                            const Eigen::MatrixXd& features);

// Full first-stage estimate: predicted gravity over the leading window of
// head-pose features, per-step distances and angular velocities from the
// flow features, then fusion. noise_std and dim shape the flow surrogate
// only; the gravity input is noise-free by construction.
trajkit::HeadTrajectory hybrid_estimate(const trajkit::HeadTrajectory& slam,
                                        const GravityNet& gnet,
                                        const HeadNet& hnet,
                                        const geom3d::Mat3& o_start,
                                        std::uint64_t feature_seed,
                                        int gravity_window = 64,
                                        double noise_std = 0.01, int dim = 64);

}  // namespace egomo::headpose
