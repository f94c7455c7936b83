#pragma once

#include <string>
#include <vector>

#include "egomo/bodygen.hpp"
#include "egomo/geom3d.hpp"
#include "egomo/trajkit.hpp"

namespace egomo::metrics {

// Mean Frobenius norm of R_pred R_gt^T - I over frames. A 180 degree error
// scores 2 sqrt(2).
double head_orientation_error(const std::vector<geom3d::Mat3>& pred,
                              const std::vector<geom3d::Mat3>& gt);

// Mean Euclidean head position error, millimeters.
double head_translation_error(const std::vector<geom3d::Vec3>& pred,
                              const std::vector<geom3d::Vec3>& gt);

// Mean per-joint global position error, millimeters. No re-rooting.
double mpjpe(const bodygen::MotionSequence& pred,
             const bodygen::MotionSequence& gt);

// Mean norm of the difference of central-second-difference accelerations
// over interior frames, mm/s^2. Insensitive to drift that is affine in t.
double accel_error(const bodygen::MotionSequence& pred,
                   const bodygen::MotionSequence& gt);

// Foot skating over ankle and toe joints: per step the xy displacement
// (L1, mm) weighted by 2 - 2^(h/H), counted only when the joint height at
// the step start is strictly below H. Mean over counted joint-steps.
double foot_skating(const bodygen::MotionSequence& motion,
                    const bodygen::Skeleton& skel, double height_threshold = 0.05);

struct SequenceMetrics {
  double o_head = 0.0;
  double t_head = 0.0;
  double mpjpe = 0.0;
  double accel = 0.0;
  double foot_skate = 0.0;
};

// All five metrics of a generated sequence against ground truth. Head errors
// are measured on the head joint of the generated body.
SequenceMetrics evaluate_sequence(const bodygen::MotionSequence& pred,
                                  const bodygen::MotionSequence& gt,
                                  const bodygen::Skeleton& skel);

// Per-sequence rows plus aggregate means; the column order follows the
// usual reporting order (O_head, T_head, MPJPE, Accel, FS).
struct MetricReport {
  std::string mode;
  std::string config_digest;
  std::vector<SequenceMetrics> per_sequence;
  // Errors of the head-pose input fed to the generator, when applicable.
  std::vector<double> input_o_head;
  std::vector<double> input_t_head;

  SequenceMetrics aggregate() const;
  double mean_input_o_head() const;
  double mean_input_t_head() const;
  std::string to_text() const;
  std::string to_json() const;
};

}  // namespace egomo::metrics
