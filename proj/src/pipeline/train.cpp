#include <algorithm>
#include <cmath>
#include <optional>

#include "egomo/errors.hpp"
#include "egomo/pipeline.hpp"
#include "egomo/rng.hpp"
#include "internal.hpp"

namespace egomo::pipeline {

using Eigen::MatrixXd;

nets::TransformerConfig to_backbone(const BackboneConfig& b, int input_dim) {
  nets::TransformerConfig cfg;
  cfg.input_dim = input_dim;
  cfg.d_model = b.d_model;
  cfg.heads = b.heads;
  cfg.ff = b.ff;
  cfg.max_len = b.max_len;
  return cfg;
}

std::uint64_t target_salt(const std::string& target) {
  if (target == "gravity") return 1;
  if (target == "head") return 2;
  if (target == "diffusion") return 3;
  fail(ErrorKind::invalid_argument, "unknown training target '" + target + "'");
}

const TrainBudget& target_budget(const ExperimentConfig& cfg,
                                 const std::string& target) {
  if (target == "gravity") return cfg.train_gravity;
  if (target == "head") return cfg.train_head;
  return cfg.train_diffusion;
}

void restore_params(const nets::ParamStore& src, nets::ParamStore& dst) {
  for (int i = 0; i < dst.count(); ++i) {
    nets::ParamBlock& d = dst.block(i);
    const nets::ParamBlock* s = nullptr;
    for (int j = 0; j < src.count(); ++j) {
      if (src.block(j).name == d.name) {
        s = &src.block(j);
        break;
      }
    }
    require(s != nullptr, ErrorKind::integrity,
            "checkpoint is missing parameter block " + d.name);
    require(s->value.rows() == d.value.rows() &&
                s->value.cols() == d.value.cols(),
            ErrorKind::shape,
            "checkpoint block " + d.name + " has the wrong shape");
    d.value = s->value;
    d.m = s->m;
    d.v = s->v;
  }
}

namespace {

std::uint64_t init_seed(const ExperimentConfig& cfg,
                        const std::string& target) {
  return mix_seed(mix_seed(cfg.seeds.training, target_salt(target)), 0);
}

void check_checkpoint(const ExperimentConfig& cfg, const Checkpoint& ck,
                      const std::string& target) {
  require(ck.target == target, ErrorKind::invalid_argument,
          "checkpoint trained for target '" + ck.target + "', expected '" +
              target + "'");
  require(ck.config_digest == cfg.digest(), ErrorKind::config,
          "checkpoint digest " + ck.config_digest +
              " does not match the config digest " + cfg.digest());
}

}  // namespace

headpose::GravityNet gravity_from_checkpoint(const ExperimentConfig& cfg,
                                             const Checkpoint& ck) {
  check_checkpoint(cfg, ck, "gravity");
  headpose::GravityNet net = headpose::make_gravity_net(
      to_backbone(cfg.gravity_net, trajkit::kHeadFeatureDim),
      init_seed(cfg, "gravity"));
  restore_params(ck.params, net.params);
  return net;
}

headpose::HeadNet head_from_checkpoint(const ExperimentConfig& cfg,
                                       const Checkpoint& ck) {
  check_checkpoint(cfg, ck, "head");
  headpose::HeadNet net = headpose::make_head_net(
      to_backbone(cfg.head_net, cfg.features.dim), init_seed(cfg, "head"));
  restore_params(ck.params, net.params);
  return net;
}

diffusion::Denoiser denoiser_from_checkpoint(const ExperimentConfig& cfg,
                                             const Checkpoint& ck) {
  check_checkpoint(cfg, ck, "diffusion");
  require(ck.x_norm.mean.size() == bodygen::kPoseDim &&
              ck.cond_norm.mean.size() == bodygen::kCondDim,
          ErrorKind::integrity,
          "diffusion checkpoint carries no normalization statistics");
  diffusion::Denoiser net = diffusion::make_denoiser(
      to_backbone(cfg.denoiser, 0), init_seed(cfg, "diffusion"));
  restore_params(ck.params, net.params);
  return net;
}

Checkpoint train_target(const ExperimentConfig& cfg, const Dataset& ds,
                        const std::string& target, const Checkpoint* resume) {
  std::uint64_t salt = target_salt(target);
  const TrainBudget& budget = target_budget(cfg, target);
  std::string digest = cfg.digest();
  require(ds.config_digest == digest, ErrorKind::config,
          "train_target: dataset digest " + ds.config_digest +
              " does not match the config digest " + digest);
  std::vector<int> train = ds.train_indices();
  require(!train.empty(), ErrorKind::degenerate_input,
          "train_target: the dataset has no training records");

  Checkpoint ck;
  ck.target = target;
  ck.config_digest = digest;

  int start = 0;
  if (resume != nullptr) {
    check_checkpoint(cfg, *resume, target);
    start = resume->steps_taken;
    ck.loss_curve = resume->loss_curve;
  }

  std::optional<headpose::GravityNet> gnet;
  std::optional<headpose::HeadNet> hnet;
  std::optional<diffusion::Denoiser> dnet;
  nets::ParamStore* store = nullptr;
  diffusion::NoiseSchedule sched;

  if (target == "gravity") {
    gnet.emplace(headpose::make_gravity_net(
        to_backbone(cfg.gravity_net, trajkit::kHeadFeatureDim),
        init_seed(cfg, target)));
    store = &gnet->params;
  } else if (target == "head") {
    hnet.emplace(headpose::make_head_net(
        to_backbone(cfg.head_net, cfg.features.dim), init_seed(cfg, target)));
    store = &hnet->params;
  } else {
    dnet.emplace(diffusion::make_denoiser(to_backbone(cfg.denoiser, 0),
                                          init_seed(cfg, target)));
    store = &dnet->params;
    sched = cfg.schedule.build();
    std::vector<MatrixXd> xs, cs;
    for (int idx : train) {
      xs.push_back(ds.records[idx].motion.data);
      cs.push_back(ds.records[idx].condition);
    }
    ck.x_norm = diffusion::fit_normalizer(xs);
    ck.cond_norm = diffusion::fit_normalizer(cs);
  }
  if (resume != nullptr) restore_params(resume->params, *store);

  // One record's loss; draws (record pick, then target-specific values) come
  // from the step stream in a fixed order.
  auto item_loss = [&](nets::Tape& tape, const std::vector<int>& leaves,
                       Rng& rng) -> int {
    const DatasetRecord& rec =
        ds.records[train[rng.uniform_index(train.size())]];
    if (target == "gravity") {
      Eigen::MatrixXd pose_feat = trajkit::head_features(rec.slam);
      int window = std::min<int>(cfg.features.gravity_window,
                                 static_cast<int>(pose_feat.rows()));
      int feat = tape.input(pose_feat.topRows(window));
      int pred = headpose::gravitynet_forward(tape, *gnet, leaves, feat);
      geom3d::Vec3 down = rec.slam_params.r_c * geom3d::Vec3(0, 0, -1);
      return headpose::gravity_loss(tape, pred, down);
    }
    if (target == "head") {
      int feat = tape.input(rec.features);
      headpose::HeadForward fwd =
          headpose::headnet_forward(tape, *hnet, leaves, feat);
      return headpose::headnet_loss(tape, fwd, rec.head).total;
    }
    MatrixXd x0 = diffusion::normalize(ck.x_norm, rec.motion.data);
    MatrixXd cond = diffusion::normalize(ck.cond_norm, rec.condition);
    int n = 1 + static_cast<int>(rng.uniform_index(sched.steps));
    MatrixXd eps = diffusion::gaussian_like(
        static_cast<int>(x0.rows()), static_cast<int>(x0.cols()), rng);
    return diffusion::diffusion_loss(tape, sched, *dnet, leaves, cond, x0, n,
                                     eps);
  };

  nets::AdamConfig acfg;
  acfg.lr = budget.lr;
  nets::Adam adam(acfg);
  adam.set_steps_taken(start);

  std::uint64_t base = mix_seed(cfg.seeds.training, salt);
  for (int k = start; k < budget.steps; ++k) {
    Rng rng(mix_seed(base, 1 + static_cast<std::uint64_t>(k)));
    nets::Tape tape;
    std::vector<int> leaves = store->register_on(tape);
    int loss = -1;
    for (int b = 0; b < budget.batch; ++b) {
      int item = item_loss(tape, leaves, rng);
      loss = b == 0 ? item : tape.add(loss, item);
    }
    if (budget.batch > 1) loss = tape.scale(loss, 1.0 / budget.batch);
    double value = tape.val(loss)(0, 0);
    require(std::isfinite(value), ErrorKind::non_finite,
            "train_target: non-finite " + target + " loss at step " +
                std::to_string(k));
    tape.backward(loss);
    adam.step(*store, tape, leaves);
    ck.loss_curve.push_back(value);
  }

  ck.steps_taken = std::max(start, budget.steps);
  ck.final_loss = ck.loss_curve.empty() ? 0.0 : ck.loss_curve.back();
  ck.params = std::move(*store);
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  container::Container c;
  c.kind = "checkpoint";
  c.meta["target"] = ck.target;
  c.meta["config_digest"] = ck.config_digest;
  c.meta["steps_taken"] = ck.steps_taken;
  c.meta["final_loss"] = ck.final_loss;
  for (int i = 0; i < ck.params.count(); ++i) {
    const nets::ParamBlock& b = ck.params.block(i);
    c.add_blob("param." + b.name, b.value, true);
    c.add_blob("adam_m." + b.name, b.m, true);
    c.add_blob("adam_v." + b.name, b.v, true);
  }
  if (!ck.loss_curve.empty()) {
    MatrixXd curve(ck.loss_curve.size(), 1);
    for (size_t i = 0; i < ck.loss_curve.size(); ++i)
      curve(static_cast<int>(i), 0) = ck.loss_curve[i];
    c.add_blob("loss_curve", curve, true);
  }
  if (ck.x_norm.mean.size() > 0) {
    c.add_blob("x_mean", ck.x_norm.mean, true);
    c.add_blob("x_std", ck.x_norm.stdev, true);
    c.add_blob("c_mean", ck.cond_norm.mean, true);
    c.add_blob("c_std", ck.cond_norm.stdev, true);
  }
  container::save_container(path, c);
}

Checkpoint load_checkpoint(const std::string& path) {
  container::Container c = container::load_container(path);
  require(c.kind == "checkpoint", ErrorKind::shape,
          "load_checkpoint: container kind is '" + c.kind + "'");
  Checkpoint ck;
  ck.target = c.meta.at("target").get<std::string>();
  ck.config_digest = c.meta.at("config_digest").get<std::string>();
  ck.steps_taken = c.meta.at("steps_taken").get<int>();
  ck.final_loss = c.meta.at("final_loss").get<double>();

  Rng dummy(0);
  for (const container::Blob& b : c.blobs) {
    if (!b.name.starts_with("param.")) continue;
    std::string name = b.name.substr(6);
    int i = ck.params.add(name, static_cast<int>(b.data.rows()),
                          static_cast<int>(b.data.cols()), 0.0, dummy);
    nets::ParamBlock& blk = ck.params.block(i);
    blk.value = b.data;
    const MatrixXd& m = c.blob("adam_m." + name).data;
    const MatrixXd& v = c.blob("adam_v." + name).data;
    require(m.rows() == b.data.rows() && m.cols() == b.data.cols() &&
                v.rows() == b.data.rows() && v.cols() == b.data.cols(),
            ErrorKind::shape,
            "load_checkpoint: moment shapes for " + name + " do not match");
    blk.m = m;
    blk.v = v;
  }

  if (c.has_blob("loss_curve")) {
    const MatrixXd& curve = c.blob("loss_curve").data;
    require(curve.cols() == 1, ErrorKind::shape,
            "load_checkpoint: loss curve must be a column");
    for (int i = 0; i < curve.rows(); ++i)
      ck.loss_curve.push_back(curve(i, 0));
  }
  require(static_cast<int>(ck.loss_curve.size()) == ck.steps_taken,
          ErrorKind::integrity,
          "load_checkpoint: loss curve length disagrees with steps_taken");

  if (c.has_blob("x_mean")) {
    auto rowvec = [&](const std::string& name) -> Eigen::RowVectorXd {
      const MatrixXd& m = c.blob(name).data;
      require(m.rows() == 1, ErrorKind::shape,
              "load_checkpoint: " + name + " must be a row vector");
      return m.row(0);
    };
    ck.x_norm.mean = rowvec("x_mean");
    ck.x_norm.stdev = rowvec("x_std");
    ck.cond_norm.mean = rowvec("c_mean");
    ck.cond_norm.stdev = rowvec("c_std");
  }
  return ck;
}

}  // namespace egomo::pipeline
