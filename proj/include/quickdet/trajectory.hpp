#pragma once

#include <span>
#include <vector>

#include "quickdet/core.hpp"
#include "quickdet/evidence.hpp"

namespace quickdet {

/// Result of a one-step box update. log_evidence holds the natural log of
/// the per-class evidence at the chosen box (size n+1). observed_index is
/// the index of the chosen detection in the frame, or -1 when the
/// constant-velocity prediction won.
struct BoxUpdate {
  BoundingBox box;
  std::vector<double> log_evidence;
  int observed_index = -1;
};

/// One-step trajectory update. The candidate set is the constant-velocity
/// prediction from the trajectory tail plus every observed box overlapping
/// that prediction at IoU > iou_lim. The winner maximizes, jointly over
/// candidates and active object classes,
///   log evidence(candidate, class) - lambda * smoothness_penalty
/// with the penalty taken over the last two tail boxes (zero when the tail
/// is shorter than two). Ties go to the prediction, then the lowest
/// observed index. `tail` is the trajectory suffix, most recent box last;
/// only the last two entries are read. `prediction_evidence`, when
/// non-empty, supplies the precomputed linear evidence at the prediction.
BoxUpdate recursive_box_update(const EvidenceContext& ctx,
                               std::span<const BoundingBox> tail,
                               std::span<const int> active_classes,
                               std::span<const double> prediction_evidence = {});

/// Convenience overload reading the tail from a trajectory value.
BoxUpdate recursive_box_update(const EvidenceContext& ctx, const Trajectory& traj,
                               std::span<const int> active_classes);

/// Result of a whole-trajectory refinement over buffered frames.
/// cum_log_increments[k] is the sum over frames of the class-(k+1) log
/// increment along the final path. objective is the best-class penalized
/// log evidence of the final path.
struct MapEstimate {
  std::vector<BoundingBox> boxes;
  std::vector<double> cum_log_increments;
  double objective = 0.0;
};

/// Coordinate-ascent refinement of a trajectory spanning `frames` (one box
/// per frame). `init` may be shorter than `frames`; it is extended with the
/// constant-velocity model first. Each sweep revisits every frame and
/// replaces its box with the best of: the current box, extrapolations from
/// either side, the neighbor midpoint, and observed boxes overlapping any
/// of those. A replacement is accepted only when it strictly raises
///   max over active classes of sum_j log evidence_j  -  lambda * penalty,
/// so the objective never decreases. Runs config.map_sweeps sweeps with
/// early exit once a sweep changes nothing. `objective_trace`, when given,
/// receives the objective after every coordinate visit.
MapEstimate full_map_estimate(std::span<const FrameData> frames,
                              std::span<const BoundingBox> init,
                              const DetectorConfig& config,
                              std::span<const int> active_classes,
                              std::vector<double>* objective_trace = nullptr);

}  // namespace quickdet
