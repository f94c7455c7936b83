#include "egomo/errors.hpp"
#include "egomo/pipeline.hpp"
#include "egomo/rng.hpp"
#include "internal.hpp"

namespace egomo::pipeline {

using container::Container;
using container::pack_positions;
using container::pack_rotations;
using container::quantize_f4;
using container::unpack_positions;
using container::unpack_rotations;
using nlohmann::json;

namespace {

// Salts for the per-sequence and per-chunk derivation chains. Everything a
// record contains is reproducible from seeds.data plus these constants.
constexpr std::uint64_t kSaltGait = 1;
constexpr std::uint64_t kSaltMotion = 2;
constexpr std::uint64_t kSaltScene = 3;
constexpr std::uint64_t kSaltPlace = 4;
constexpr std::uint64_t kSaltSlamDraw = 5;
constexpr std::uint64_t kSaltSlamNoise = 6;
constexpr std::uint64_t kSaltFeatures = 7;

std::uint64_t chunk_salt(int chunk, std::uint64_t salt) {
  return 100 + 10 * static_cast<std::uint64_t>(chunk) + salt;
}

bodygen::MotionParams draw_gait(Rng& rng, const DatasetConfig& dc) {
  bodygen::MotionParams p;
  p.speed = rng.uniform(0.6, 1.4);
  p.turn_rate = rng.uniform(-0.3, 0.3);
  p.step_frequency = rng.uniform(0.8, 1.3);
  p.hip_amplitude = rng.uniform(0.25, 0.45);
  p.knee_amplitude = rng.uniform(0.4, 0.6);
  p.arm_amplitude = rng.uniform(0.15, 0.35);
  p.head_osc = rng.uniform(0.03, 0.09);
  p.head_bob = rng.uniform(0.004, 0.012);
  p.frames = dc.frames;
  p.frame_rate = dc.frame_rate;
  return p;
}

// Boxes sit near the region border so placements around the middle stay
// feasible; sequences that still wander into one lose frames to the filter.
bodygen::SdfScene draw_scene(Rng& rng, int max_boxes) {
  bodygen::SdfScene scene = bodygen::default_scene();
  int boxes = static_cast<int>(rng.uniform_index(max_boxes + 1));
  for (int b = 0; b < boxes; ++b) {
    bodygen::BoxPrim box;
    double sx = rng.uniform() < 0.5 ? -1.0 : 1.0;
    double sy = rng.uniform() < 0.5 ? -1.0 : 1.0;
    double h = rng.uniform(0.2, 0.5);
    box.half_extents = geom3d::Vec3(rng.uniform(0.2, 0.5),
                                    rng.uniform(0.2, 0.5), h);
    box.center = geom3d::Vec3(sx * rng.uniform(3.0, 4.5),
                              sy * rng.uniform(3.0, 4.5), h);
    scene.boxes.push_back(box);
  }
  return scene;
}

// Maximal runs of consecutive kept frames.
std::vector<std::pair<int, int>> contiguous_runs(const std::vector<int>& kept) {
  std::vector<std::pair<int, int>> runs;
  for (size_t i = 0; i < kept.size();) {
    size_t j = i;
    while (j + 1 < kept.size() && kept[j + 1] == kept[j] + 1) ++j;
    runs.push_back({kept[i], kept[j] - kept[i] + 1});
    i = j + 1;
  }
  return runs;
}

}  // namespace

trajkit::HeadTrajectory quantize_traj(const trajkit::HeadTrajectory& t) {
  trajkit::HeadTrajectory q;
  q.positions = unpack_positions(quantize_f4(pack_positions(t.positions)));
  q.rotations = unpack_rotations(quantize_f4(pack_rotations(t.rotations)));
  q.frame_rate = t.frame_rate;
  return q;
}

std::vector<int> Dataset::train_indices() const {
  std::vector<int> out;
  for (size_t i = 0; i < records.size(); ++i)
    if (!records[i].test) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> Dataset::test_indices() const {
  std::vector<int> out;
  for (size_t i = 0; i < records.size(); ++i)
    if (records[i].test) out.push_back(static_cast<int>(i));
  return out;
}

Dataset build_dataset(const ExperimentConfig& cfg) {
  const DatasetConfig& dc = cfg.dataset;
  bodygen::Skeleton skel = bodygen::Skeleton::humanoid22();
  Dataset ds;
  ds.config_digest = cfg.digest();

  int total = dc.train_sequences + dc.test_sequences;
  for (int seq = 0; seq < total; ++seq) {
    std::uint64_t seq_seed = mix_seed(cfg.seeds.data, seq);

    Rng gait_rng(mix_seed(seq_seed, kSaltGait));
    bodygen::MotionParams params = draw_gait(gait_rng, dc);
    bodygen::MotionSequence motion =
        bodygen::procedural_motion(skel, params, mix_seed(seq_seed, kSaltMotion));

    Rng scene_rng(mix_seed(seq_seed, kSaltScene));
    bodygen::SdfScene scene = draw_scene(scene_rng, dc.max_boxes);

    bodygen::MotionSequence placed;
    try {
      placed = bodygen::place_sequence(motion, skel, scene,
                                       mix_seed(seq_seed, kSaltPlace));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::placement) throw;
      throw Error(ErrorKind::placement,
                  "build_dataset: sequence " + std::to_string(seq) + ": " +
                      e.what());
    }

    std::vector<int> kept = bodygen::filter_by_penetration(
        placed, skel, scene, dc.penetration_threshold);

    int chunk_index = 0;
    for (const auto& [start, len] : contiguous_runs(kept)) {
      if (len < dc.chunk_frames) continue;
      bodygen::MotionSequence run;
      run.data = placed.data.middleRows(start, len);
      run.frame_rate = placed.frame_rate;
      for (bodygen::MotionSequence& chunk :
           bodygen::chunk_sequence(run, dc.chunk_frames)) {
        DatasetRecord rec;
        rec.sequence = seq;
        rec.chunk = chunk_index;
        rec.test = seq >= dc.train_sequences;

        // Quantize each stage before deriving the next, so every stored
        // stage equals recomputation from its stored input.
        rec.motion.data = quantize_f4(chunk.data);
        rec.motion.frame_rate = chunk.frame_rate;
        rec.head = quantize_traj(bodygen::head_from_motion(rec.motion));
        rec.condition = bodygen::head_condition(rec.motion);

        Rng slam_rng(mix_seed(seq_seed, chunk_salt(chunk_index, kSaltSlamDraw)));
        rec.slam_params.sigma = slam_rng.uniform(cfg.slam.sigma_min,
                                                 cfg.slam.sigma_max);
        rec.slam_params.r_c = geom3d::random_rotation(slam_rng);
        rec.slam_params.pos_noise_std = cfg.slam.pos_noise_std;
        rec.slam_params.rot_noise_std = cfg.slam.rot_noise_std;
        rec.slam_params.seed =
            mix_seed(seq_seed, chunk_salt(chunk_index, kSaltSlamNoise));
        rec.slam = quantize_traj(trajkit::emulate_slam(rec.head,
                                                       rec.slam_params));

        rec.feature_seed =
            mix_seed(seq_seed, chunk_salt(chunk_index, kSaltFeatures));
        rec.features = quantize_f4(headpose::surrogate_flow_features(
            rec.slam, rec.feature_seed, cfg.features.noise_std,
            cfg.features.dim));

        ds.records.push_back(std::move(rec));
        ++chunk_index;
      }
    }
  }
  require(!ds.records.empty(), ErrorKind::degenerate_input,
          "build_dataset: no chunk survived placement and filtering");
  return ds;
}

void save_dataset(const std::string& path, const Dataset& ds) {
  Container c;
  c.kind = "dataset";
  c.meta["config_digest"] = ds.config_digest;
  json records = json::array();
  for (size_t r = 0; r < ds.records.size(); ++r) {
    const DatasetRecord& rec = ds.records[r];
    const geom3d::Mat3& rc = rec.slam_params.r_c;
    json meta;
    meta["sequence"] = rec.sequence;
    meta["chunk"] = rec.chunk;
    meta["test"] = rec.test;
    meta["frame_rate"] = rec.motion.frame_rate;
    meta["feature_seed"] = rec.feature_seed;
    meta["slam"] = {
        {"sigma", rec.slam_params.sigma},
        {"r_c", {rc(0, 0), rc(0, 1), rc(0, 2), rc(1, 0), rc(1, 1), rc(1, 2),
                 rc(2, 0), rc(2, 1), rc(2, 2)}},
        {"pos_noise_std", rec.slam_params.pos_noise_std},
        {"rot_noise_std", rec.slam_params.rot_noise_std},
        {"seed", rec.slam_params.seed}};
    records.push_back(meta);

    std::string p = "rec" + std::to_string(r) + ".";
    c.add_blob(p + "motion", rec.motion.data);
    c.add_blob(p + "head_pos", pack_positions(rec.head.positions));
    c.add_blob(p + "head_rot", pack_rotations(rec.head.rotations));
    c.add_blob(p + "condition", rec.condition);
    c.add_blob(p + "features", rec.features);
    c.add_blob(p + "slam_pos", pack_positions(rec.slam.positions));
    c.add_blob(p + "slam_rot", pack_rotations(rec.slam.rotations));
  }
  c.meta["records"] = records;
  save_container(path, c);
}

Dataset load_dataset(const std::string& path) {
  Container c = container::load_container(path);
  require(c.kind == "dataset", ErrorKind::shape,
          "load_dataset: container kind is '" + c.kind + "'");
  Dataset ds;
  ds.config_digest = c.meta.at("config_digest").get<std::string>();
  const json& records = c.meta.at("records");
  require(records.is_array(), ErrorKind::integrity,
          "load_dataset: record table is not an array");
  for (size_t r = 0; r < records.size(); ++r) {
    const json& meta = records[r];
    DatasetRecord rec;
    rec.sequence = meta.at("sequence").get<int>();
    rec.chunk = meta.at("chunk").get<int>();
    rec.test = meta.at("test").get<bool>();
    rec.feature_seed = meta.at("feature_seed").get<std::uint64_t>();
    double frame_rate = meta.at("frame_rate").get<double>();

    const json& slam = meta.at("slam");
    rec.slam_params.sigma = slam.at("sigma").get<double>();
    const json& rc = slam.at("r_c");
    require(rc.is_array() && rc.size() == 9, ErrorKind::integrity,
            "load_dataset: r_c must hold 9 numbers");
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        rec.slam_params.r_c(a, b) = rc[3 * a + b].get<double>();
    rec.slam_params.pos_noise_std = slam.at("pos_noise_std").get<double>();
    rec.slam_params.rot_noise_std = slam.at("rot_noise_std").get<double>();
    rec.slam_params.seed = slam.at("seed").get<std::uint64_t>();

    std::string p = "rec" + std::to_string(r) + ".";
    rec.motion.data = c.blob(p + "motion").data;
    rec.motion.frame_rate = frame_rate;
    rec.motion.validate();
    rec.head.positions = unpack_positions(c.blob(p + "head_pos").data);
    rec.head.rotations = unpack_rotations(c.blob(p + "head_rot").data);
    rec.head.frame_rate = frame_rate;
    rec.head.validate();
    rec.condition = c.blob(p + "condition").data;
    rec.features = c.blob(p + "features").data;
    rec.slam.positions = unpack_positions(c.blob(p + "slam_pos").data);
    rec.slam.rotations = unpack_rotations(c.blob(p + "slam_rot").data);
    rec.slam.frame_rate = frame_rate;
    rec.slam.validate();
    require(rec.head.frames() == rec.motion.frames() &&
                rec.slam.frames() == rec.motion.frames() &&
                rec.condition.rows() == rec.motion.frames() &&
                rec.features.rows() == rec.motion.frames(),
            ErrorKind::shape,
            "load_dataset: record " + std::to_string(r) +
                " has inconsistent frame counts");
    ds.records.push_back(std::move(rec));
  }
  require(!ds.records.empty(), ErrorKind::degenerate_input,
          "load_dataset: dataset holds no records");
  return ds;
}

}  // namespace egomo::pipeline
