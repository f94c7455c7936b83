#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "egomo/bodygen.hpp"
#include "egomo/container.hpp"
#include "egomo/diffusion.hpp"
#include "egomo/headpose.hpp"
#include "egomo/metrics.hpp"
#include "egomo/nets.hpp"
#include "egomo/trajkit.hpp"

namespace egomo::pipeline {

// Every stochastic choice in the project chains off one of these three
// streams; nothing reads entropy from the environment.
struct Seeds {
  std::uint64_t data = 0;
  std::uint64_t training = 0;
  std::uint64_t sampling = 0;
};

struct DatasetConfig {
  int train_sequences = 8;
  int test_sequences = 2;
  int frames = 150;
  int chunk_frames = 150;
  double frame_rate = 30.0;
  double penetration_threshold = 2.0;
  int max_boxes = 2;
};

struct SlamConfig {
  double sigma_min = 0.3;
  double sigma_max = 3.0;
  double pos_noise_std = 0.0;
  double rot_noise_std = 0.0;
};

struct FeatureConfig {
  double noise_std = 0.01;
  int dim = 64;
  int gravity_window = 64;
};

struct BackboneConfig {
  int d_model = 64;
  int heads = 4;
  int ff = 128;
  int max_len = 512;
};

struct ScheduleConfig {
  int steps = 100;
  double beta_start = 1e-4;
  double beta_end = 0.2;
  std::string sigma_mode = "posterior";

  diffusion::NoiseSchedule build() const;
};

struct TrainBudget {
  int steps = 2000;
  double lr = 1e-3;
  int batch = 1;
};

struct EvalConfig {
  int k = 20;
  std::string split = "test";
};

struct PathsConfig {
  std::string dataset;
  std::string gravity_checkpoint;
  std::string head_checkpoint;
  std::string diffusion_checkpoint;
  std::string reports;
  std::string output;
};

// Parsed strictly: unknown keys anywhere are a config error, and the three
// seeds are mandatory. Everything else falls back to the defaults above.
struct ExperimentConfig {
  Seeds seeds;
  DatasetConfig dataset;
  SlamConfig slam;
  FeatureConfig features;
  BackboneConfig gravity_net;
  BackboneConfig head_net;
  BackboneConfig denoiser;
  ScheduleConfig schedule;
  TrainBudget train_gravity;
  TrainBudget train_head;
  TrainBudget train_diffusion;
  EvalConfig eval;
  PathsConfig paths;

  nlohmann::json to_json() const;
  // crc32 over the canonical serialization without the train, eval and paths
  // sections, 8 hex digits. Artifacts embed it to bind a dataset or model to
  // the settings that produced it; budgets and locations may differ.
  std::string digest() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// One 150-frame-style chunk with everything both training stages consume.
// All numeric members are f4-quantized so recomputing any derived stage from
// the stored form reproduces it bit-exactly.
struct DatasetRecord {
  bodygen::MotionSequence motion;
  trajkit::HeadTrajectory head;
  Eigen::MatrixXd condition;  // frames x 9
  Eigen::MatrixXd features;   // frames x features.dim
  trajkit::SlamEmulation slam_params;
  trajkit::HeadTrajectory slam;
  std::uint64_t feature_seed = 0;
  int sequence = 0;
  int chunk = 0;
  bool test = false;
};

struct Dataset {
  std::vector<DatasetRecord> records;
  std::string config_digest;

  std::vector<int> train_indices() const;
  std::vector<int> test_indices() const;
};

Dataset build_dataset(const ExperimentConfig& cfg);
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

// Model parameters plus optimizer state; the diffusion target additionally
// carries the normalization statistics fitted on its training split.
struct Checkpoint {
  std::string target;
  std::string config_digest;
  int steps_taken = 0;
  double final_loss = 0.0;
  std::vector<double> loss_curve;
  nets::ParamStore params;
  diffusion::Normalizer x_norm;
  diffusion::Normalizer cond_norm;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

// Runs the target's loss to cfg's step budget. resume, when non-null, must
// carry a matching config digest; training continues from its step count, so
// a resume to the same budget performs zero steps. Step k of a resumed run
// consumes the same derived rng stream as step k of an uninterrupted run.
Checkpoint train_target(const ExperimentConfig& cfg, const Dataset& ds,
                        const std::string& target, const Checkpoint* resume);

// Head-pose sources for the ablation table plus the end-to-end modes.
inline constexpr const char* kEvalModes[] = {"slam", "slam+s", "slam+s+g",
                                             "full", "gt-head"};

metrics::MetricReport run_eval(const ExperimentConfig& cfg, const Dataset& ds,
                               const std::string& mode,
                               const Checkpoint* gravity,
                               const Checkpoint* head,
                               const Checkpoint* diffusion);

void cmd_datagen(const ExperimentConfig& cfg);
Checkpoint cmd_train(const ExperimentConfig& cfg, const std::string& target);
metrics::MetricReport cmd_eval(const ExperimentConfig& cfg,
                               const std::string& mode);

struct PipelineResult {
  bodygen::MotionSequence best;
  int best_index = 0;
  bool has_report = false;
  metrics::MetricReport report;
};

// Full inference on one trajectory container: features, GravityNet,
// alignment, HeadNet, fusion, then K diffusion samples, all persisted under
// cfg.paths.output. gt_path may be empty; when given it names a motion
// container, enables best-of-K selection, and produces a report that matches
// cmd_eval's full mode for the equivalent record at eval position 0 when
// seed equals the config's sampling seed.
PipelineResult cmd_pipeline(const ExperimentConfig& cfg,
                            const std::string& input_path,
                            const std::string& gt_path, std::uint64_t seed);

// Motion containers back cmd_pipeline's ground-truth input and outputs.
void save_motion(const std::string& path,
                 const bodygen::MotionSequence& motion);
bodygen::MotionSequence load_motion(const std::string& path);

}  // namespace egomo::pipeline
