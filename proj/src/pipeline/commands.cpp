#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "egomo/errors.hpp"
#include "egomo/pipeline.hpp"
#include "egomo/rng.hpp"
#include "internal.hpp"

namespace egomo::pipeline {

using container::Container;
using Eigen::MatrixXd;
using nlohmann::json;

namespace {

const std::string& checkpoint_path(const ExperimentConfig& cfg,
                                   const std::string& target) {
  const std::string* path = nullptr;
  if (target == "gravity") path = &cfg.paths.gravity_checkpoint;
  else if (target == "head") path = &cfg.paths.head_checkpoint;
  else if (target == "diffusion") path = &cfg.paths.diffusion_checkpoint;
  else fail(ErrorKind::invalid_argument, "unknown target '" + target + "'");
  require(!path->empty(), ErrorKind::config,
          "paths." + target + "_checkpoint is not set");
  return *path;
}

bool container_exists(const std::string& path) {
  return std::filesystem::exists(std::filesystem::path(path) /
                                 "manifest.json");
}

Checkpoint need_checkpoint(const ExperimentConfig& cfg,
                           const std::string& target,
                           const std::string& needed_for) {
  const std::string& path = checkpoint_path(cfg, target);
  require(container_exists(path), ErrorKind::missing_checkpoint,
          needed_for + " requires the " + target + " checkpoint at " + path);
  return load_checkpoint(path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::io, "cannot open " + path + " for writing");
  out << text;
  require(out.good(), ErrorKind::io, "failed writing " + path);
}

}  // namespace

void cmd_datagen(const ExperimentConfig& cfg) {
  require(!cfg.paths.dataset.empty(), ErrorKind::config,
          "paths.dataset is not set");
  save_dataset(cfg.paths.dataset, build_dataset(cfg));
}

Checkpoint cmd_train(const ExperimentConfig& cfg, const std::string& target) {
  require(!cfg.paths.dataset.empty(), ErrorKind::config,
          "paths.dataset is not set");
  const std::string& path = checkpoint_path(cfg, target);
  Dataset ds = load_dataset(cfg.paths.dataset);
  std::optional<Checkpoint> resume;
  if (container_exists(path)) resume = load_checkpoint(path);
  Checkpoint ck = train_target(cfg, ds, target, resume ? &*resume : nullptr);
  save_checkpoint(path, ck);
  return ck;
}

metrics::MetricReport cmd_eval(const ExperimentConfig& cfg,
                               const std::string& mode) {
  require(!cfg.paths.dataset.empty(), ErrorKind::config,
          "paths.dataset is not set");
  require(!cfg.paths.reports.empty(), ErrorKind::config,
          "paths.reports is not set");
  Dataset ds = load_dataset(cfg.paths.dataset);

  std::string what = "eval mode '" + mode + "'";
  Checkpoint diffusion_ck = need_checkpoint(cfg, "diffusion", what);
  std::optional<Checkpoint> gravity, head;
  if (mode == "full") {
    gravity = need_checkpoint(cfg, "gravity", what);
    head = need_checkpoint(cfg, "head", what);
  }

  metrics::MetricReport report =
      run_eval(cfg, ds, mode, gravity ? &*gravity : nullptr,
               head ? &*head : nullptr, &diffusion_ck);

  std::string dir =
      (std::filesystem::path(cfg.paths.reports) / mode).string();
  Container c;
  c.kind = "report";
  c.meta["report"] = json::parse(report.to_json());
  container::save_container(dir, c);
  write_text((std::filesystem::path(dir) / "report.txt").string(),
             report.to_text());
  return report;
}

PipelineResult cmd_pipeline(const ExperimentConfig& cfg,
                            const std::string& input_path,
                            const std::string& gt_path, std::uint64_t seed) {
  require(!cfg.paths.output.empty(), ErrorKind::config,
          "paths.output is not set");
  container::TrajectoryInput input = container::load_trajectory(input_path);

  Checkpoint gravity_ck = need_checkpoint(cfg, "gravity", "the pipeline");
  Checkpoint head_ck = need_checkpoint(cfg, "head", "the pipeline");
  Checkpoint diffusion_ck = need_checkpoint(cfg, "diffusion", "the pipeline");
  headpose::GravityNet gnet = gravity_from_checkpoint(cfg, gravity_ck);
  headpose::HeadNet hnet = head_from_checkpoint(cfg, head_ck);
  diffusion::Denoiser dnet = denoiser_from_checkpoint(cfg, diffusion_ck);

  trajkit::HeadTrajectory est = headpose::hybrid_estimate(
      input.traj, gnet, hnet, input.o_start, input.feature_seed,
      cfg.features.gravity_window, cfg.features.noise_std, cfg.features.dim);

  std::optional<bodygen::MotionSequence> gt;
  std::optional<trajkit::HeadTrajectory> gt_head;
  if (!gt_path.empty()) {
    gt = load_motion(gt_path);
    gt_head = quantize_traj(bodygen::head_from_motion(*gt));
    require(gt_head->frames() == est.frames(), ErrorKind::shape,
            "ground truth frame count does not match the input trajectory");
    est = trajkit::align_first_frame(est, gt_head->positions[0],
                                     gt_head->rotations[0]);
  }

  MatrixXd cond_raw = bodygen::head_condition_from_trajectory(est);
  std::vector<bodygen::MotionSequence> samples =
      draw_samples(cfg, diffusion_ck, dnet, cond_raw, input.traj.frame_rate,
                   mix_seed(seed, 0), cfg.eval.k);

  PipelineResult result;
  if (gt) {
    std::vector<double> scores;
    scores.reserve(samples.size());
    for (const bodygen::MotionSequence& s : samples)
      scores.push_back(metrics::mpjpe(s, *gt));
    result.best_index = diffusion::best_of_k(scores);
    bodygen::Skeleton skel = bodygen::Skeleton::humanoid22();
    result.report.mode = "pipeline";
    result.report.config_digest = cfg.digest();
    result.report.per_sequence.push_back(
        metrics::evaluate_sequence(samples[result.best_index], *gt, skel));
    result.report.input_o_head.push_back(metrics::head_orientation_error(
        est.rotations, gt_head->rotations));
    result.report.input_t_head.push_back(metrics::head_translation_error(
        est.positions, gt_head->positions));
    result.has_report = true;
  }

  Container out;
  out.kind = "samples";
  out.meta["config_digest"] = cfg.digest();
  out.meta["k"] = static_cast<int>(samples.size());
  out.meta["best_index"] = result.best_index;
  out.meta["frame_rate"] = input.traj.frame_rate;
  if (result.has_report)
    out.meta["report"] = json::parse(result.report.to_json());
  for (size_t j = 0; j < samples.size(); ++j)
    out.add_blob("sample" + std::to_string(j), samples[j].data);
  container::save_container(cfg.paths.output, out);
  if (result.has_report)
    write_text((std::filesystem::path(cfg.paths.output) / "report.txt")
                   .string(),
               result.report.to_text());

  result.best = std::move(samples[result.best_index]);
  return result;
}

void save_motion(const std::string& path,
                 const bodygen::MotionSequence& motion) {
  motion.validate();
  Container c;
  c.kind = "motion";
  c.meta["frame_rate"] = motion.frame_rate;
  c.add_blob("motion", motion.data);
  container::save_container(path, c);
}

bodygen::MotionSequence load_motion(const std::string& path) {
  Container c = container::load_container(path);
  require(c.kind == "motion", ErrorKind::shape,
          "load_motion: container kind is '" + c.kind + "'");
  bodygen::MotionSequence motion;
  motion.data = c.blob("motion").data;
  motion.frame_rate = c.meta.at("frame_rate").get<double>();
  motion.validate();
  return motion;
}

}  // namespace egomo::pipeline
