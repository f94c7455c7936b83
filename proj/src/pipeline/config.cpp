#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "egomo/errors.hpp"
#include "egomo/pipeline.hpp"

namespace egomo::pipeline {

using nlohmann::json;

diffusion::NoiseSchedule ScheduleConfig::build() const {
  diffusion::SigmaMode mode = sigma_mode == "beta"
                                  ? diffusion::SigmaMode::beta
                                  : diffusion::SigmaMode::posterior;
  return diffusion::make_schedule(steps, beta_start, beta_end, mode);
}

namespace {

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> known) {
  require(j.is_object(), ErrorKind::config,
          "config: '" + section + "' must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* name : known)
      if (item.key() == name) ok = true;
    require(ok, ErrorKind::config,
            "config: unknown key '" + item.key() + "' in " + section);
  }
}

int get_int(const json& j, const char* key, int def,
            const std::string& section) {
  auto it = j.find(key);
  if (it == j.end()) return def;
  require(it->is_number_integer(), ErrorKind::config,
          "config: " + section + "." + key + " must be an integer");
  return it->get<int>();
}

double get_num(const json& j, const char* key, double def,
               const std::string& section) {
  auto it = j.find(key);
  if (it == j.end()) return def;
  require(it->is_number(), ErrorKind::config,
          "config: " + section + "." + key + " must be a number");
  return it->get<double>();
}

std::string get_str(const json& j, const char* key, const std::string& def,
                    const std::string& section) {
  auto it = j.find(key);
  if (it == j.end()) return def;
  require(it->is_string(), ErrorKind::config,
          "config: " + section + "." + key + " must be a string");
  return it->get<std::string>();
}

std::uint64_t get_seed(const json& j, const char* key) {
  auto it = j.find(key);
  require(it != j.end(), ErrorKind::config,
          std::string("config: seeds.") + key + " is mandatory");
  require(it->is_number_integer() &&
              (it->is_number_unsigned() || it->get<std::int64_t>() >= 0),
          ErrorKind::config,
          std::string("config: seeds.") + key +
              " must be a nonnegative integer");
  return it->get<std::uint64_t>();
}

BackboneConfig parse_backbone(const json& j, const std::string& section,
                              const BackboneConfig& def) {
  check_keys(j, section, {"d_model", "heads", "ff", "max_len"});
  BackboneConfig b;
  b.d_model = get_int(j, "d_model", def.d_model, section);
  b.heads = get_int(j, "heads", def.heads, section);
  b.ff = get_int(j, "ff", def.ff, section);
  b.max_len = get_int(j, "max_len", def.max_len, section);
  require(b.d_model >= 1 && b.heads >= 1 && b.ff >= 1 && b.max_len >= 2,
          ErrorKind::config, "config: " + section + " has a nonpositive size");
  require(b.d_model % b.heads == 0, ErrorKind::config,
          "config: " + section + ".d_model must be divisible by heads");
  return b;
}

TrainBudget parse_budget(const json& j, const std::string& section,
                         const TrainBudget& def) {
  check_keys(j, section, {"steps", "lr", "batch"});
  TrainBudget t;
  t.steps = get_int(j, "steps", def.steps, section);
  t.lr = get_num(j, "lr", def.lr, section);
  t.batch = get_int(j, "batch", def.batch, section);
  require(t.steps >= 0, ErrorKind::config,
          "config: " + section + ".steps must be nonnegative");
  require(t.lr > 0.0, ErrorKind::config,
          "config: " + section + ".lr must be positive");
  require(t.batch >= 1, ErrorKind::config,
          "config: " + section + ".batch must be positive");
  return t;
}

json backbone_json(const BackboneConfig& b) {
  return {{"d_model", b.d_model},
          {"heads", b.heads},
          {"ff", b.ff},
          {"max_len", b.max_len}};
}

json budget_json(const TrainBudget& t) {
  return {{"steps", t.steps}, {"lr", t.lr}, {"batch", t.batch}};
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config,
                std::string("config: invalid JSON: ") + e.what());
  }
  check_keys(j, "root",
             {"seeds", "dataset", "slam", "features", "gravity_net",
              "head_net", "denoiser", "schedule", "train", "eval", "paths"});
  ExperimentConfig cfg;

  auto seeds_it = j.find("seeds");
  require(seeds_it != j.end(), ErrorKind::config,
          "config: 'seeds' is mandatory");
  check_keys(*seeds_it, "seeds", {"data", "training", "sampling"});
  cfg.seeds.data = get_seed(*seeds_it, "data");
  cfg.seeds.training = get_seed(*seeds_it, "training");
  cfg.seeds.sampling = get_seed(*seeds_it, "sampling");

  if (auto it = j.find("dataset"); it != j.end()) {
    check_keys(*it, "dataset",
               {"train_sequences", "test_sequences", "frames", "chunk_frames",
                "frame_rate", "penetration_threshold", "max_boxes"});
    DatasetConfig d;
    d.train_sequences = get_int(*it, "train_sequences", d.train_sequences,
                                "dataset");
    d.test_sequences = get_int(*it, "test_sequences", d.test_sequences,
                               "dataset");
    d.frames = get_int(*it, "frames", d.frames, "dataset");
    d.chunk_frames = get_int(*it, "chunk_frames", d.chunk_frames, "dataset");
    d.frame_rate = get_num(*it, "frame_rate", d.frame_rate, "dataset");
    d.penetration_threshold = get_num(*it, "penetration_threshold",
                                      d.penetration_threshold, "dataset");
    d.max_boxes = get_int(*it, "max_boxes", d.max_boxes, "dataset");
    require(d.train_sequences >= 1 && d.test_sequences >= 0,
            ErrorKind::config, "config: dataset needs train sequences");
    require(d.frames >= 2 && d.chunk_frames >= 2, ErrorKind::config,
            "config: dataset.frames and chunk_frames must be at least 2");
    require(d.frame_rate > 0.0, ErrorKind::config,
            "config: dataset.frame_rate must be positive");
    require(d.penetration_threshold > 0.0, ErrorKind::config,
            "config: dataset.penetration_threshold must be positive");
    require(d.max_boxes >= 0, ErrorKind::config,
            "config: dataset.max_boxes must be nonnegative");
    cfg.dataset = d;
  }

  if (auto it = j.find("slam"); it != j.end()) {
    check_keys(*it, "slam",
               {"sigma_min", "sigma_max", "pos_noise_std", "rot_noise_std"});
    SlamConfig s;
    s.sigma_min = get_num(*it, "sigma_min", s.sigma_min, "slam");
    s.sigma_max = get_num(*it, "sigma_max", s.sigma_max, "slam");
    s.pos_noise_std = get_num(*it, "pos_noise_std", s.pos_noise_std, "slam");
    s.rot_noise_std = get_num(*it, "rot_noise_std", s.rot_noise_std, "slam");
    require(s.sigma_min > 0.0 && s.sigma_min <= s.sigma_max,
            ErrorKind::config,
            "config: slam needs 0 < sigma_min <= sigma_max");
    require(s.pos_noise_std >= 0.0 && s.rot_noise_std >= 0.0,
            ErrorKind::config, "config: slam noise must be nonnegative");
    cfg.slam = s;
  }

  if (auto it = j.find("features"); it != j.end()) {
    check_keys(*it, "features", {"noise_std", "dim", "gravity_window"});
    FeatureConfig f;
    f.noise_std = get_num(*it, "noise_std", f.noise_std, "features");
    f.dim = get_int(*it, "dim", f.dim, "features");
    f.gravity_window = get_int(*it, "gravity_window", f.gravity_window,
                               "features");
    require(f.noise_std >= 0.0, ErrorKind::config,
            "config: features.noise_std must be nonnegative");
    require(f.dim >= 1 && f.gravity_window >= 1, ErrorKind::config,
            "config: features sizes must be positive");
    cfg.features = f;
  }

  if (auto it = j.find("gravity_net"); it != j.end())
    cfg.gravity_net = parse_backbone(*it, "gravity_net", cfg.gravity_net);
  if (auto it = j.find("head_net"); it != j.end())
    cfg.head_net = parse_backbone(*it, "head_net", cfg.head_net);
  if (auto it = j.find("denoiser"); it != j.end())
    cfg.denoiser = parse_backbone(*it, "denoiser", cfg.denoiser);

  if (auto it = j.find("schedule"); it != j.end()) {
    check_keys(*it, "schedule",
               {"steps", "beta_start", "beta_end", "sigma_mode"});
    ScheduleConfig s;
    s.steps = get_int(*it, "steps", s.steps, "schedule");
    s.beta_start = get_num(*it, "beta_start", s.beta_start, "schedule");
    s.beta_end = get_num(*it, "beta_end", s.beta_end, "schedule");
    s.sigma_mode = get_str(*it, "sigma_mode", s.sigma_mode, "schedule");
    require(s.steps >= 1, ErrorKind::config,
            "config: schedule.steps must be positive");
    require(s.beta_start > 0.0 && s.beta_start <= s.beta_end &&
                s.beta_end < 1.0,
            ErrorKind::config,
            "config: schedule needs 0 < beta_start <= beta_end < 1");
    require(s.sigma_mode == "posterior" || s.sigma_mode == "beta",
            ErrorKind::config,
            "config: schedule.sigma_mode must be 'posterior' or 'beta'");
    cfg.schedule = s;
  }

  if (auto it = j.find("train"); it != j.end()) {
    check_keys(*it, "train", {"gravity", "head", "diffusion"});
    if (auto g = it->find("gravity"); g != it->end())
      cfg.train_gravity = parse_budget(*g, "train.gravity", cfg.train_gravity);
    if (auto h = it->find("head"); h != it->end())
      cfg.train_head = parse_budget(*h, "train.head", cfg.train_head);
    if (auto d = it->find("diffusion"); d != it->end())
      cfg.train_diffusion =
          parse_budget(*d, "train.diffusion", cfg.train_diffusion);
  }

  if (auto it = j.find("eval"); it != j.end()) {
    check_keys(*it, "eval", {"k", "split"});
    EvalConfig e;
    e.k = get_int(*it, "k", e.k, "eval");
    e.split = get_str(*it, "split", e.split, "eval");
    require(e.k >= 1, ErrorKind::config, "config: eval.k must be at least 1");
    require(e.split == "train" || e.split == "test", ErrorKind::config,
            "config: eval.split must be 'train' or 'test'");
    cfg.eval = e;
  }

  if (auto it = j.find("paths"); it != j.end()) {
    check_keys(*it, "paths",
               {"dataset", "gravity_checkpoint", "head_checkpoint",
                "diffusion_checkpoint", "reports", "output"});
    PathsConfig p;
    p.dataset = get_str(*it, "dataset", "", "paths");
    p.gravity_checkpoint = get_str(*it, "gravity_checkpoint", "", "paths");
    p.head_checkpoint = get_str(*it, "head_checkpoint", "", "paths");
    p.diffusion_checkpoint = get_str(*it, "diffusion_checkpoint", "", "paths");
    p.reports = get_str(*it, "reports", "", "paths");
    p.output = get_str(*it, "output", "", "paths");
    cfg.paths = p;
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorKind::io, "load_config: cannot open " + path);
  std::ostringstream text;
  text << f.rdbuf();
  return parse_config(text.str());
}

json ExperimentConfig::to_json() const {
  json j;
  j["seeds"] = {{"data", seeds.data},
                {"training", seeds.training},
                {"sampling", seeds.sampling}};
  j["dataset"] = {{"train_sequences", dataset.train_sequences},
                  {"test_sequences", dataset.test_sequences},
                  {"frames", dataset.frames},
                  {"chunk_frames", dataset.chunk_frames},
                  {"frame_rate", dataset.frame_rate},
                  {"penetration_threshold", dataset.penetration_threshold},
                  {"max_boxes", dataset.max_boxes}};
  j["slam"] = {{"sigma_min", slam.sigma_min},
               {"sigma_max", slam.sigma_max},
               {"pos_noise_std", slam.pos_noise_std},
               {"rot_noise_std", slam.rot_noise_std}};
  j["features"] = {{"noise_std", features.noise_std},
                   {"dim", features.dim},
                   {"gravity_window", features.gravity_window}};
  j["gravity_net"] = backbone_json(gravity_net);
  j["head_net"] = backbone_json(head_net);
  j["denoiser"] = backbone_json(denoiser);
  j["schedule"] = {{"steps", schedule.steps},
                   {"beta_start", schedule.beta_start},
                   {"beta_end", schedule.beta_end},
                   {"sigma_mode", schedule.sigma_mode}};
  j["train"] = {{"gravity", budget_json(train_gravity)},
                {"head", budget_json(train_head)},
                {"diffusion", budget_json(train_diffusion)}};
  j["eval"] = {{"k", eval.k}, {"split", eval.split}};
  j["paths"] = {{"dataset", paths.dataset},
                {"gravity_checkpoint", paths.gravity_checkpoint},
                {"head_checkpoint", paths.head_checkpoint},
                {"diffusion_checkpoint", paths.diffusion_checkpoint},
                {"reports", paths.reports},
                {"output", paths.output}};
  return j;
}

std::string ExperimentConfig::digest() const {
  // Step budgets, eval settings and file locations do not change what data
  // or models a config describes, so they stay out of the digest; a longer
  // training run can resume a shorter one's checkpoint.
  json doc = to_json();
  doc.erase("train");
  doc.erase("eval");
  doc.erase("paths");
  std::string text = doc.dump();
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(text.data()),
              static_cast<uInt>(text.size()));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

}  // namespace egomo::pipeline
