#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "egomo/errors.hpp"
#include "egomo/pipeline.hpp"
#include "egomo/rng.hpp"
#include "internal.hpp"

namespace egomo::pipeline {

using Eigen::MatrixXd;

std::vector<bodygen::MotionSequence> draw_samples(
    const ExperimentConfig& cfg, const Checkpoint& dck,
    const diffusion::Denoiser& net, const MatrixXd& cond_raw,
    double frame_rate, std::uint64_t chain_root, int k) {
  require(k >= 1, ErrorKind::invalid_argument,
          "draw_samples: k must be positive");
  diffusion::NoiseSchedule sched = cfg.schedule.build();
  MatrixXd cond = diffusion::normalize(dck.cond_norm, cond_raw);
  std::vector<bodygen::MotionSequence> out;
  out.reserve(k);
  for (int j = 0; j < k; ++j) {
    Rng rng(mix_seed(chain_root, j));
    MatrixXd x = diffusion::sample(sched, net, cond, rng);
    bodygen::MotionSequence seq;
    seq.data = diffusion::denormalize(dck.x_norm, x);
    seq.frame_rate = frame_rate;
    out.push_back(std::move(seq));
  }
  return out;
}

namespace {

bool known_mode(const std::string& mode) {
  for (const char* m : kEvalModes)
    if (mode == m) return true;
  return false;
}

// Head-pose source feeding the generator, before evaluation alignment.
trajkit::HeadTrajectory estimate_head(const ExperimentConfig& cfg,
                                      const DatasetRecord& rec,
                                      const std::string& mode,
                                      const headpose::GravityNet* gnet,
                                      const headpose::HeadNet* hnet) {
  if (mode == "gt-head") return rec.head;
  if (mode == "full") {
    return headpose::hybrid_estimate(
        rec.slam, *gnet, *hnet, rec.head.rotations[0], rec.feature_seed,
        cfg.features.gravity_window, cfg.features.noise_std,
        cfg.features.dim);
  }
  trajkit::HeadTrajectory est = rec.slam;
  if (mode == "slam+s+g") {
    // Oracle gravity: where true down ends up under the emulation rotation.
    geom3d::Vec3 g = rec.slam_params.r_c * geom3d::Vec3(0, 0, -1);
    est = trajkit::apply_gravity_alignment(est, g);
  }
  if (mode == "slam+s" || mode == "slam+s+g") {
    // Oracle scale from the true mean step distance.
    double s = trajkit::calibrate_scale(trajkit::mean_step_distance(rec.head),
                                        trajkit::mean_step_distance(est));
    for (geom3d::Vec3& p : est.positions) p *= s;
  }
  return est;
}

}  // namespace

metrics::MetricReport run_eval(const ExperimentConfig& cfg, const Dataset& ds,
                               const std::string& mode,
                               const Checkpoint* gravity,
                               const Checkpoint* head,
                               const Checkpoint* diffusion_ck) {
  require(known_mode(mode), ErrorKind::invalid_argument,
          "run_eval: unknown mode '" + mode + "'");
  require(ds.config_digest == cfg.digest(), ErrorKind::config,
          "run_eval: dataset digest " + ds.config_digest +
              " does not match the config digest " + cfg.digest());
  require(diffusion_ck != nullptr, ErrorKind::missing_checkpoint,
          "run_eval: mode '" + mode + "' requires the diffusion checkpoint");
  if (mode == "full") {
    require(gravity != nullptr && head != nullptr,
            ErrorKind::missing_checkpoint,
            "run_eval: mode 'full' requires the gravity and head checkpoints");
  }

  diffusion::Denoiser dnet = denoiser_from_checkpoint(cfg, *diffusion_ck);
  std::optional<headpose::GravityNet> gnet;
  std::optional<headpose::HeadNet> hnet;
  if (mode == "full") {
    gnet.emplace(gravity_from_checkpoint(cfg, *gravity));
    hnet.emplace(head_from_checkpoint(cfg, *head));
  }

  std::vector<int> indices =
      cfg.eval.split == "test" ? ds.test_indices() : ds.train_indices();
  require(!indices.empty(), ErrorKind::invalid_argument,
          "run_eval: the '" + cfg.eval.split + "' split holds no records");

  bodygen::Skeleton skel = bodygen::Skeleton::humanoid22();
  metrics::MetricReport report;
  report.mode = mode;
  report.config_digest = cfg.digest();

  for (size_t i = 0; i < indices.size(); ++i) {
    const DatasetRecord& rec = ds.records[indices[i]];
    trajkit::HeadTrajectory est =
        estimate_head(cfg, rec, mode, gnet ? &*gnet : nullptr,
                      hnet ? &*hnet : nullptr);
    est = trajkit::align_first_frame(est, rec.head.positions[0],
                                     rec.head.rotations[0]);
    report.input_o_head.push_back(
        metrics::head_orientation_error(est.rotations, rec.head.rotations));
    report.input_t_head.push_back(
        metrics::head_translation_error(est.positions, rec.head.positions));

    MatrixXd cond_raw = bodygen::head_condition_from_trajectory(est);
    std::vector<bodygen::MotionSequence> samples = draw_samples(
        cfg, *diffusion_ck, dnet, cond_raw, rec.motion.frame_rate,
        mix_seed(cfg.seeds.sampling, i), cfg.eval.k);
    std::vector<double> scores;
    scores.reserve(samples.size());
    for (const bodygen::MotionSequence& s : samples)
      scores.push_back(metrics::mpjpe(s, rec.motion));
    int best = diffusion::best_of_k(scores);
    report.per_sequence.push_back(
        metrics::evaluate_sequence(samples[best], rec.motion, skel));
  }
  return report;
}

}  // namespace egomo::pipeline
