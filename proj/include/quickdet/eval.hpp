#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "quickdet/core.hpp"
#include "quickdet/detector.hpp"
#include "quickdet/synth.hpp"

namespace quickdet {

struct EvalReport {
  double threshold = 0.0;
  std::int64_t n_declared = 0;  // n_correct + n_false_alarms
  std::int64_t n_correct = 0;
  std::int64_t n_false_alarms = 0;
  double far = 0.0;            // n_false_alarms / max(n_declared, 1)
  double average_delay = 0.0;  // over all ground-truth objects
  std::int64_t n_objects = 0;
  std::map<std::int64_t, double> per_object_delays;  // single-case reports only
  double mean_runtime_ms_per_frame = 0.0;
};

/// Outcome of matching declarations against ground truth. A declaration is
/// correct when a ground-truth object visible at its frame overlaps the
/// declared box at IoU > iou_lim with a matching label. Every object is
/// credited at most once, first declaration in time wins; later
/// declarations whose only matches are already-credited objects are
/// ignored (neither correct nor false alarms). Declarations matching
/// nothing are false alarms.
struct MatchResult {
  std::vector<std::size_t> correct;       // indices into the declaration list
  std::vector<std::size_t> false_alarms;
  std::vector<std::size_t> ignored;
  std::map<std::int64_t, std::int64_t> credited;  // object id -> declared frame
};

MatchResult match_declarations(std::span<const Declaration> declarations,
                               const GroundTruth& truth, double iou_lim);

/// Per-object delays: declared frame minus appear frame for credited
/// objects; undetected objects get the maximum delay, disappear minus
/// appear.
std::map<std::int64_t, double> delays(const MatchResult& match, const GroundTruth& truth);

/// Match + delays folded into a report.
EvalReport evaluate(std::span<const Declaration> declarations, const GroundTruth& truth,
                    double iou_lim, double threshold);

/// Single-frame baseline: every detection whose best object-class score
/// max_i v_i * mu exceeds score_threshold declares immediately; boxes in
/// adjacent frames overlapping at IoU > iou_lim are grouped into one
/// trajectory that counts once, and the delay of a matched object comes
/// from the group's first correct frame.
EvalReport baseline_single_frame(std::span<const FrameData> frames, const GroundTruth& truth,
                                 double score_threshold, double iou_lim);

struct StreamCase {
  std::vector<FrameData> frames;
  GroundTruth truth;
};

struct SweepOptions {
  bool rerun_per_threshold = false;  // default: one recording pass, post-hoc
  int workers = 1;
};

/// FAR-vs-delay curve over a threshold grid, aggregated across cases. The
/// default runs the detector once per case with retire_on_declare off and
/// thresholds applied post hoc to the recorded statistic paths, which is
/// equivalent to re-running because the paths do not depend on the
/// threshold. Reports come back in threshold order.
std::vector<EvalReport> sweep(std::span<const StreamCase> cases, const DetectorConfig& config,
                              DetectorMode mode, std::span<const double> thresholds,
                              const SweepOptions& options = {});

/// Baseline curve over a score-threshold grid, same aggregation.
std::vector<EvalReport> baseline_sweep(std::span<const StreamCase> cases,
                                       std::span<const double> score_thresholds,
                                       double iou_lim);

/// Mean frames to the first declaration per threshold, averaged over
/// streams; streams with no declaration count their full length. This is
/// the empirical run-length estimate behind the 1 / E[run length] view of
/// the false alarm rate on no-change streams.
std::vector<double> mean_run_lengths(std::span<const std::vector<FrameData>> streams,
                                     const DetectorConfig& config, DetectorMode mode,
                                     std::span<const double> thresholds);

}  // namespace quickdet
