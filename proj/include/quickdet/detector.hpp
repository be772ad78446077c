#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "quickdet/core.hpp"
#include "quickdet/evidence.hpp"
#include "quickdet/trajectory.hpp"

namespace quickdet {

enum class DetectorMode { recursive, full };

/// CUSUM recursion: max(w + increment, 0).
double cusum_update(double w, double increment);

/// Detections whose best object-class probability strictly beats the
/// background probability.
std::vector<Detection> spawn_candidates(const FrameData& frame_data);
std::vector<std::size_t> spawn_candidate_indices(const FrameData& frame_data);

struct ScoredBox {
  BoundingBox box;
  double score = 0.0;
};

/// Suppression of new candidates against existing trajectory boxes and each
/// other. A new candidate is dropped when it overlaps any existing box at
/// IoU > nms_iou (existing boxes always win, whatever their score), or a
/// higher-scoring surviving new candidate. Greedy descending by score among
/// the new candidates; suppressed candidates suppress nothing. Returns the
/// surviving indices into `fresh`, in their original order.
std::vector<std::size_t> nms(std::span<const ScoredBox> existing,
                             std::span<const ScoredBox> fresh, double nms_iou);

/// One recorded point of a trajectory's statistic path.
struct StatPoint {
  std::int64_t frame = 0;
  double statistic = 0.0;  // max_i w_i after the frame's update
  int label = 0;           // argmax_i w_i, lowest index on ties
  BoundingBox box;
};

struct TrackRecord {
  std::int64_t trajectory_id = 0;
  std::int64_t spawn_frame = 0;
  std::vector<StatPoint> path;
};

/// Online detection state machine. Feed frames in order through step();
/// declarations are returned per frame and accumulated.
///
/// In recursive mode each trajectory keeps only its last two boxes and its
/// CUSUM vector, so memory is proportional to the number of live
/// trajectories. In full mode frames are buffered and every trajectory is
/// re-optimized from its spawn frame on each step; the buffer grows with
/// the oldest live trajectory.
class Detector {
 public:
  explicit Detector(DetectorConfig config,
                    DetectorMode mode = DetectorMode::recursive);

  /// Consume the next frame (index must be previous + 1; throws FrameGap
  /// otherwise) and return the declarations emitted at this frame.
  std::vector<Declaration> step(const FrameData& frame_data);

  const DetectorConfig& config() const { return config_; }
  DetectorMode mode() const { return mode_; }
  std::size_t live_trajectories() const { return tracks_.size(); }

  /// Snapshots of the live trajectories. In recursive mode the box list is
  /// the retained two-frame tail, not the full path.
  std::vector<Trajectory> trajectories() const;

  /// All declarations emitted so far.
  const std::vector<Declaration>& declarations() const { return declarations_; }

  /// When recording, every trajectory's statistic path is kept (including
  /// pruned and retired ones) for post-hoc threshold analysis.
  void set_recording(bool on) { recording_ = on; }
  const std::vector<TrackRecord>& records() const { return records_; }

 private:
  struct Track {
    std::int64_t id = 0;
    std::int64_t spawn_frame = 0;
    std::vector<BoundingBox> boxes;  // recursive: last two; full: whole path
    std::vector<double> w;           // per object class, >= 0
    bool declared = false;
    std::size_t record_index = static_cast<std::size_t>(-1);
  };

  std::vector<int> active_classes_of(const Track& track) const;
  void update_existing_recursive(Track& track, const EvidenceContext& ctx,
                                 const std::vector<double>& prediction_evidence);
  void update_existing_full(Track& track, const EvidenceContext& ctx);
  void spawn_track(const Detection& det, const EvidenceContext& ctx);
  void record_track(const Track& track, std::int64_t frame);
  std::vector<Declaration> declare_and_retire(std::int64_t frame);

  DetectorConfig config_;
  DetectorMode mode_;
  std::vector<int> all_object_classes_;
  std::int64_t next_id_ = 0;
  bool started_ = false;
  std::int64_t expected_frame_ = 0;
  std::vector<Track> tracks_;
  std::vector<Declaration> declarations_;
  bool recording_ = false;
  std::vector<TrackRecord> records_;

  // full mode only; contiguous so trajectory windows can be viewed in place
  std::vector<FrameData> buffer_;
  std::int64_t buffer_base_ = 0;
};

}  // namespace quickdet
