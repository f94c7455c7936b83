#pragma once

#include <string>
#include <vector>

#include "egomo/pipeline.hpp"

// Helpers shared between the pipeline translation units; not API.
namespace egomo::pipeline {

nets::TransformerConfig to_backbone(const BackboneConfig& b, int input_dim);

// Round trip through 32-bit storage; matches the dataset discipline of
// deriving every stage from quantized inputs.
trajkit::HeadTrajectory quantize_traj(const trajkit::HeadTrajectory& t);

// Per-target derivation salt into seeds.training and step budget block.
std::uint64_t target_salt(const std::string& target);
const TrainBudget& target_budget(const ExperimentConfig& cfg,
                                 const std::string& target);

// Overwrites every dst block (value and Adam moments) with the src block of
// the same name; a missing or misshapen source block is an error.
void restore_params(const nets::ParamStore& src, nets::ParamStore& dst);

headpose::GravityNet gravity_from_checkpoint(const ExperimentConfig& cfg,
                                             const Checkpoint& ck);
headpose::HeadNet head_from_checkpoint(const ExperimentConfig& cfg,
                                       const Checkpoint& ck);
diffusion::Denoiser denoiser_from_checkpoint(const ExperimentConfig& cfg,
                                             const Checkpoint& ck);

// k reverse chains for one condition sequence; chain j draws from
// Rng(mix_seed(chain_root, j)). Conditions are normalized with the
// checkpoint's statistics and samples denormalized back to pose space.
std::vector<bodygen::MotionSequence> draw_samples(
    const ExperimentConfig& cfg, const Checkpoint& dck,
    const diffusion::Denoiser& net, const Eigen::MatrixXd& cond_raw,
    double frame_rate, std::uint64_t chain_root, int k);

}  // namespace egomo::pipeline
