#include "egomo/metrics.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "egomo/errors.hpp"

namespace egomo::metrics {

using bodygen::MotionSequence;
using bodygen::Skeleton;
using geom3d::Mat3;
using geom3d::Vec3;

double head_orientation_error(const std::vector<Mat3>& pred,
                              const std::vector<Mat3>& gt) {
  require(!pred.empty() && pred.size() == gt.size(), ErrorKind::shape,
          "head_orientation_error: length mismatch");
  double acc = 0.0;
  for (size_t t = 0; t < pred.size(); ++t) {
    acc += (pred[t] * gt[t].transpose() - Mat3::Identity()).norm();
  }
  return acc / static_cast<double>(pred.size());
}

double head_translation_error(const std::vector<Vec3>& pred,
                              const std::vector<Vec3>& gt) {
  require(!pred.empty() && pred.size() == gt.size(), ErrorKind::shape,
          "head_translation_error: length mismatch");
  double acc = 0.0;
  for (size_t t = 0; t < pred.size(); ++t) acc += (pred[t] - gt[t]).norm();
  return 1000.0 * acc / static_cast<double>(pred.size());
}

double mpjpe(const MotionSequence& pred, const MotionSequence& gt) {
  pred.validate();
  gt.validate();
  require(pred.frames() == gt.frames(), ErrorKind::shape,
          "mpjpe: frame count mismatch");
  double acc = 0.0;
  for (int t = 0; t < pred.frames(); ++t) {
    for (int j = 0; j < bodygen::kJoints; ++j) {
      acc += (pred.joint_position(t, j) - gt.joint_position(t, j)).norm();
    }
  }
  return 1000.0 * acc / static_cast<double>(pred.frames() * bodygen::kJoints);
}

double accel_error(const MotionSequence& pred, const MotionSequence& gt) {
  pred.validate();
  gt.validate();
  require(pred.frames() == gt.frames(), ErrorKind::shape,
          "accel_error: frame count mismatch");
  require(pred.frame_rate == gt.frame_rate, ErrorKind::invalid_argument,
          "accel_error: frame rate mismatch");
  require(pred.frames() >= 3, ErrorKind::shape,
          "accel_error: need at least three frames");
  double dt2 = 1.0 / (pred.frame_rate * pred.frame_rate);
  double acc = 0.0;
  for (int t = 1; t + 1 < pred.frames(); ++t) {
    for (int j = 0; j < bodygen::kJoints; ++j) {
      Vec3 ap = (pred.joint_position(t + 1, j) - 2.0 * pred.joint_position(t, j) +
                 pred.joint_position(t - 1, j)) /
                dt2;
      Vec3 ag = (gt.joint_position(t + 1, j) - 2.0 * gt.joint_position(t, j) +
                 gt.joint_position(t - 1, j)) /
                dt2;
      acc += (ap - ag).norm();
    }
  }
  return 1000.0 * acc /
         static_cast<double>((pred.frames() - 2) * bodygen::kJoints);
}

double foot_skating(const MotionSequence& motion, const Skeleton& skel,
                    double height_threshold) {
  motion.validate();
  require(height_threshold > 0.0, ErrorKind::invalid_argument,
          "foot_skating: threshold must be positive");
  require(motion.frames() >= 2, ErrorKind::shape,
          "foot_skating: need at least two frames");
  const int feet[4] = {skel.left_ankle, skel.right_ankle, skel.left_toe,
                       skel.right_toe};
  double acc = 0.0;
  long counted = 0;
  for (int t = 0; t + 1 < motion.frames(); ++t) {
    for (int f : feet) {
      double h = motion.joint_position(t, f).z();
      if (h >= height_threshold) continue;
      Vec3 d = motion.joint_position(t + 1, f) - motion.joint_position(t, f);
      double v = 1000.0 * (std::abs(d.x()) + std::abs(d.y()));
      acc += v * (2.0 - std::exp2(h / height_threshold));
      ++counted;
    }
  }
  return counted == 0 ? 0.0 : acc / static_cast<double>(counted);
}

SequenceMetrics evaluate_sequence(const MotionSequence& pred,
                                  const MotionSequence& gt,
                                  const Skeleton& skel) {
  SequenceMetrics m;
  auto pred_head = bodygen::head_from_motion(pred);
  auto gt_head = bodygen::head_from_motion(gt);
  m.o_head = head_orientation_error(pred_head.rotations, gt_head.rotations);
  m.t_head = head_translation_error(pred_head.positions, gt_head.positions);
  m.mpjpe = mpjpe(pred, gt);
  m.accel = accel_error(pred, gt);
  m.foot_skate = foot_skating(pred, skel);
  return m;
}

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

}  // namespace

SequenceMetrics MetricReport::aggregate() const {
  SequenceMetrics agg;
  if (per_sequence.empty()) return agg;
  for (const auto& m : per_sequence) {
    agg.o_head += m.o_head;
    agg.t_head += m.t_head;
    agg.mpjpe += m.mpjpe;
    agg.accel += m.accel;
    agg.foot_skate += m.foot_skate;
  }
  double n = static_cast<double>(per_sequence.size());
  agg.o_head /= n;
  agg.t_head /= n;
  agg.mpjpe /= n;
  agg.accel /= n;
  agg.foot_skate /= n;
  return agg;
}

double MetricReport::mean_input_o_head() const { return mean_of(input_o_head); }
double MetricReport::mean_input_t_head() const { return mean_of(input_t_head); }

std::string MetricReport::to_text() const {
  std::ostringstream os;
  os << "# mode: " << mode << "\n";
  os << "# config: " << config_digest << "\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-6s %12s %12s %12s %14s %10s\n", "seq",
                "O_head", "T_head(mm)", "MPJPE(mm)", "Accel(mm/s^2)", "FS(mm)");
  os << line;
  for (size_t i = 0; i < per_sequence.size(); ++i) {
    const auto& m = per_sequence[i];
    std::snprintf(line, sizeof(line), "%-6zu %12.4f %12.2f %12.2f %14.2f %10.2f\n",
                  i, m.o_head, m.t_head, m.mpjpe, m.accel, m.foot_skate);
    os << line;
  }
  SequenceMetrics agg = aggregate();
  std::snprintf(line, sizeof(line), "%-6s %12.4f %12.2f %12.2f %14.2f %10.2f\n",
                "mean", agg.o_head, agg.t_head, agg.mpjpe, agg.accel,
                agg.foot_skate);
  os << line;
  if (!input_t_head.empty()) {
    std::snprintf(line, sizeof(line),
                  "# head input: O_head %.6f  T_head %.3f mm\n",
                  mean_input_o_head(), mean_input_t_head());
    os << line;
  }
  return os.str();
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["mode"] = mode;
  j["config_digest"] = config_digest;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& m : per_sequence) {
    rows.push_back({{"o_head", m.o_head},
                    {"t_head_mm", m.t_head},
                    {"mpjpe_mm", m.mpjpe},
                    {"accel_mm_s2", m.accel},
                    {"foot_skate_mm", m.foot_skate}});
  }
  j["per_sequence"] = rows;
  SequenceMetrics agg = aggregate();
  j["aggregate"] = {{"o_head", agg.o_head},
                    {"t_head_mm", agg.t_head},
                    {"mpjpe_mm", agg.mpjpe},
                    {"accel_mm_s2", agg.accel},
                    {"foot_skate_mm", agg.foot_skate}};
  if (!input_t_head.empty()) {
    j["head_input"] = {{"o_head", mean_input_o_head()},
                       {"t_head_mm", mean_input_t_head()},
                       {"per_sequence_o_head", input_o_head},
                       {"per_sequence_t_head_mm", input_t_head}};
  }
  return j.dump(2);
}

}  // namespace egomo::metrics
