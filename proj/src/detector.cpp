#include "quickdet/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace quickdet {

double cusum_update(double w, double increment) {
  return std::max(w + increment, 0.0);
}

std::vector<std::size_t> spawn_candidate_indices(const FrameData& frame_data) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < frame_data.detections.size(); ++k) {
    const std::vector<double>& v = frame_data.detections[k].probs.v;
    double best = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) best = std::max(best, v[i]);
    if (best > v[0]) out.push_back(k);
  }
  return out;
}

std::vector<Detection> spawn_candidates(const FrameData& frame_data) {
  std::vector<Detection> out;
  for (std::size_t k : spawn_candidate_indices(frame_data)) {
    out.push_back(frame_data.detections[k]);
  }
  return out;
}

std::vector<std::size_t> nms(std::span<const ScoredBox> existing,
                             std::span<const ScoredBox> fresh, double nms_iou) {
  std::vector<std::size_t> order(fresh.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fresh[a].score > fresh[b].score;
  });

  std::vector<char> alive(fresh.size(), 1);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t k = order[pos];
    if (!alive[k]) continue;
    for (const ScoredBox& e : existing) {
      if (iou(fresh[k].box, e.box) > nms_iou) {
        alive[k] = 0;
        break;
      }
    }
    if (!alive[k]) continue;
    for (std::size_t later = pos + 1; later < order.size(); ++later) {
      const std::size_t j = order[later];
      if (alive[j] && iou(fresh[k].box, fresh[j].box) > nms_iou) alive[j] = 0;
    }
  }

  std::vector<std::size_t> survivors;
  for (std::size_t k = 0; k < fresh.size(); ++k) {
    if (alive[k]) survivors.push_back(k);
  }
  return survivors;
}

Detector::Detector(DetectorConfig config, DetectorMode mode)
    : config_(std::move(config)), mode_(mode) {
  config_.validate();
  all_object_classes_.resize(static_cast<std::size_t>(config_.n_classes()));
  std::iota(all_object_classes_.begin(), all_object_classes_.end(), 1);
}

std::vector<int> Detector::active_classes_of(const Track& track) const {
  // Full mode evaluates every class; recursive mode skips classes whose
  // statistic sits at zero (they carry no information until their increment
  // turns positive) unless the reduction is switched off.
  if (mode_ == DetectorMode::full || !config_.class_reduction) {
    return all_object_classes_;
  }
  std::vector<int> active;
  for (std::size_t i = 0; i < track.w.size(); ++i) {
    if (track.w[i] > 0.0) active.push_back(static_cast<int>(i) + 1);
  }
  return active;
}

void Detector::update_existing_recursive(Track& track, const EvidenceContext& ctx,
                                         const std::vector<double>& prediction_evidence) {
  const std::vector<int> active = active_classes_of(track);
  BoxUpdate upd = recursive_box_update(ctx, track.boxes, active, prediction_evidence);

  if (track.boxes.size() == 2) track.boxes.erase(track.boxes.begin());
  track.boxes.push_back(upd.box);

  const double log_bg = upd.log_evidence[0];
  for (int i : active) {
    const double inc = upd.log_evidence[static_cast<std::size_t>(i)] - log_bg;
    track.w[static_cast<std::size_t>(i) - 1] =
        cusum_update(track.w[static_cast<std::size_t>(i) - 1], inc);
  }
}

void Detector::update_existing_full(Track& track, const EvidenceContext& ctx) {
  const std::size_t first = static_cast<std::size_t>(track.spawn_frame - buffer_base_);
  const std::size_t count = static_cast<std::size_t>(ctx.frame_data.frame - track.spawn_frame) + 1;
  const std::span<const FrameData> window(buffer_.data() + first, count);

  MapEstimate est = full_map_estimate(window, track.boxes, config_, all_object_classes_);
  track.boxes = std::move(est.boxes);
  for (std::size_t i = 0; i < track.w.size(); ++i) {
    track.w[i] = std::max(est.cum_log_increments[i], 0.0);
  }
}

void Detector::spawn_track(const Detection& det, const EvidenceContext& ctx) {
  Track track;
  track.id = next_id_++;
  track.spawn_frame = ctx.frame_data.frame;
  track.boxes.push_back(det.box);
  track.w.assign(static_cast<std::size_t>(config_.n_classes()), 0.0);

  // The spawn frame's own data supplies the first increment; statistics
  // start at zero and a spawn whose increments are all non-positive dies in
  // the same frame's pruning pass.
  const std::vector<double> evidence = frame_evidence_all(ctx, det.box);
  const double log_bg = std::log(evidence[0]);

  std::vector<int> initial;
  if (mode_ == DetectorMode::full || !config_.class_reduction) {
    initial = all_object_classes_;
  } else {
    for (int i = 1; i <= config_.n_classes(); ++i) {
      if (det.probs.v[static_cast<std::size_t>(i)] > det.probs.v[0]) initial.push_back(i);
    }
  }
  for (int i : initial) {
    const double inc = std::log(evidence[static_cast<std::size_t>(i)]) - log_bg;
    track.w[static_cast<std::size_t>(i) - 1] = std::max(inc, 0.0);
  }
  tracks_.push_back(std::move(track));
}

void Detector::record_track(const Track& track, std::int64_t frame) {
  std::size_t idx = track.record_index;
  if (idx == static_cast<std::size_t>(-1)) return;

  double stat = 0.0;
  int label = 0;
  for (std::size_t i = 0; i < track.w.size(); ++i) {
    if (track.w[i] > stat) {
      stat = track.w[i];
      label = static_cast<int>(i) + 1;
    }
  }
  records_[idx].path.push_back(StatPoint{frame, stat, label, track.boxes.back()});
}

std::vector<Declaration> Detector::declare_and_retire(std::int64_t frame) {
  std::vector<Declaration> out;
  std::vector<Track> kept;
  kept.reserve(tracks_.size());
  for (Track& track : tracks_) {
    double stat = 0.0;
    int label = 0;
    for (std::size_t i = 0; i < track.w.size(); ++i) {
      if (track.w[i] > stat) {
        stat = track.w[i];
        label = static_cast<int>(i) + 1;
      }
    }
    if (!track.declared && stat > config_.threshold) {
      out.push_back(Declaration{track.id, frame, track.boxes.back(), label, stat,
                                track.spawn_frame});
      if (config_.retire_on_declare) continue;  // drop the track
      track.declared = true;
    }
    kept.push_back(std::move(track));
  }
  tracks_ = std::move(kept);
  declarations_.insert(declarations_.end(), out.begin(), out.end());
  return out;
}

std::vector<Declaration> Detector::step(const FrameData& frame_data) {
  if (started_ && frame_data.frame != expected_frame_) {
    throw FrameGap(expected_frame_, frame_data.frame);
  }
  started_ = true;
  expected_frame_ = frame_data.frame + 1;
  const std::int64_t t = frame_data.frame;
  const EvidenceContext ctx{config_, frame_data};

  if (mode_ == DetectorMode::full) {
    if (buffer_.empty()) buffer_base_ = t;
    buffer_.push_back(frame_data);
  }

  // Predictions of the existing trajectories into this frame; their
  // evidence doubles as the NMS score and as the prediction candidate's
  // evidence in the recursive update.
  const std::size_t n_existing = tracks_.size();
  std::vector<BoundingBox> predictions(n_existing);
  std::vector<std::vector<double>> prediction_evidence(n_existing);
  std::vector<ScoredBox> existing_boxes(n_existing);
  for (std::size_t k = 0; k < n_existing; ++k) {
    predictions[k] = predict_constant_velocity(tracks_[k].boxes);
    prediction_evidence[k] = frame_evidence_all(ctx, predictions[k]);
    double score = 0.0;
    for (int i : all_object_classes_) {
      score = std::max(score, prediction_evidence[k][static_cast<std::size_t>(i)]);
    }
    existing_boxes[k] = ScoredBox{predictions[k], score};
  }

  // Fresh candidates, suppressed against existing trajectories and each other.
  const std::vector<std::size_t> cand_idx = spawn_candidate_indices(frame_data);
  std::vector<ScoredBox> fresh(cand_idx.size());
  for (std::size_t k = 0; k < cand_idx.size(); ++k) {
    const Detection& det = frame_data.detections[cand_idx[k]];
    double best = 0.0;
    for (std::size_t i = 1; i < det.probs.v.size(); ++i) {
      best = std::max(best, det.probs.v[i]);
    }
    fresh[k] = ScoredBox{det.box, best * det.mu};
  }
  const std::vector<std::size_t> survivors = nms(existing_boxes, fresh, config_.nms_iou);

  // Update pre-existing trajectories.
  for (std::size_t k = 0; k < n_existing; ++k) {
    if (mode_ == DetectorMode::recursive) {
      update_existing_recursive(tracks_[k], ctx, prediction_evidence[k]);
    } else {
      update_existing_full(tracks_[k], ctx);
    }
  }

  // Spawn survivors; their box at the spawn frame is the detection itself.
  for (std::size_t s : survivors) {
    spawn_track(frame_data.detections[cand_idx[s]], ctx);
  }

  if (recording_) {
    for (Track& track : tracks_) {
      if (track.record_index == static_cast<std::size_t>(-1)) {
        track.record_index = records_.size();
        records_.push_back(TrackRecord{track.id, track.spawn_frame, {}});
      }
      record_track(track, t);
    }
  }

  // Prune trajectories that carry no information about any class.
  std::erase_if(tracks_, [](const Track& track) {
    return std::accumulate(track.w.begin(), track.w.end(), 0.0) == 0.0;
  });

  std::vector<Declaration> declared = declare_and_retire(t);

  if (mode_ == DetectorMode::full) {
    std::int64_t min_spawn = t + 1;
    for (const Track& track : tracks_) min_spawn = std::min(min_spawn, track.spawn_frame);
    if (min_spawn > buffer_base_) {
      buffer_.erase(buffer_.begin(),
                    buffer_.begin() + static_cast<std::ptrdiff_t>(min_spawn - buffer_base_));
      buffer_base_ = min_spawn;
    }
  }
  return declared;
}

std::vector<Trajectory> Detector::trajectories() const {
  std::vector<Trajectory> out;
  out.reserve(tracks_.size());
  for (const Track& track : tracks_) {
    out.push_back(Trajectory{track.id, track.spawn_frame, track.boxes, track.w});
  }
  return out;
}

}  // namespace quickdet
