#include "quickdet/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace quickdet {

namespace {

double best_class_log(std::span<const double> log_evidence,
                      std::span<const int> active_classes) {
  double best = -std::numeric_limits<double>::infinity();
  for (int i : active_classes) {
    best = std::max(best, log_evidence[static_cast<std::size_t>(i)]);
  }
  return best;
}

std::vector<double> to_logs(const std::vector<double>& evidence) {
  std::vector<double> logs(evidence.size());
  for (std::size_t i = 0; i < evidence.size(); ++i) logs[i] = std::log(evidence[i]);
  return logs;
}

}  // namespace

BoxUpdate recursive_box_update(const EvidenceContext& ctx,
                               std::span<const BoundingBox> tail,
                               std::span<const int> active_classes,
                               std::span<const double> prediction_evidence) {
  const DetectorConfig& cfg = ctx.config;
  const BoundingBox prediction = predict_constant_velocity(tail);
  const bool has_penalty = tail.size() >= 2;

  BoxUpdate best;
  best.box = prediction;
  if (!prediction_evidence.empty()) {
    best.log_evidence = to_logs(std::vector<double>(prediction_evidence.begin(),
                                                    prediction_evidence.end()));
  } else {
    best.log_evidence = to_logs(frame_evidence_all(ctx, prediction));
  }
  best.observed_index = -1;

  if (active_classes.empty()) return best;

  const BoundingBox prev2 = has_penalty ? tail[tail.size() - 2] : BoundingBox{};
  const BoundingBox prev = tail.back();
  auto penalty = [&](const BoundingBox& b) {
    return has_penalty ? smoothness_penalty(prev2, prev, b) : 0.0;
  };

  double best_score = best_class_log(best.log_evidence, active_classes) -
                      cfg.lambda * penalty(prediction);

  for (std::size_t k = 0; k < ctx.frame_data.detections.size(); ++k) {
    const BoundingBox& cand = ctx.frame_data.detections[k].box;
    if (!indicator_overlap(cand, prediction, cfg.iou_lim)) continue;
    std::vector<double> logs = to_logs(frame_evidence_all(ctx, cand));
    const double score =
        best_class_log(logs, active_classes) - cfg.lambda * penalty(cand);
    if (score > best_score) {
      best_score = score;
      best.box = cand;
      best.log_evidence = std::move(logs);
      best.observed_index = static_cast<int>(k);
    }
  }
  return best;
}

BoxUpdate recursive_box_update(const EvidenceContext& ctx, const Trajectory& traj,
                               std::span<const int> active_classes) {
  return recursive_box_update(ctx, std::span<const BoundingBox>(traj.boxes),
                              active_classes);
}

namespace {

BoundingBox clamp_scales(BoundingBox b) {
  b.lx = std::max(b.lx, kScaleFloor);
  b.ly = std::max(b.ly, kScaleFloor);
  return b;
}

// Sum of the second-difference terms that read index j, with boxes[j]
// replaced by b.
double local_penalty(const std::vector<BoundingBox>& boxes, std::size_t j,
                     const BoundingBox& b) {
  const std::size_t n = boxes.size();
  auto at = [&](std::size_t k) -> const BoundingBox& {
    return k == j ? b : boxes[k];
  };
  double total = 0.0;
  for (std::size_t center = (j >= 1 ? j - 1 : 0); center <= j + 1; ++center) {
    if (center < 1 || center + 1 >= n) continue;
    total += smoothness_penalty(at(center - 1), at(center), at(center + 1));
  }
  return total;
}

}  // namespace

MapEstimate full_map_estimate(std::span<const FrameData> frames,
                              std::span<const BoundingBox> init,
                              const DetectorConfig& config,
                              std::span<const int> active_classes,
                              std::vector<double>* objective_trace) {
  const std::size_t n_frames = frames.size();
  const std::size_t n_total = config.priors.size();

  std::vector<BoundingBox> boxes(init.begin(), init.end());
  while (boxes.size() < n_frames) {
    boxes.push_back(predict_constant_velocity(boxes));
  }

  // Per-frame log evidence at the current boxes, all classes.
  std::vector<std::vector<double>> log_e(n_frames);
  std::vector<double> class_sums(n_total, 0.0);
  for (std::size_t j = 0; j < n_frames; ++j) {
    EvidenceContext ctx{config, frames[j]};
    log_e[j] = to_logs(frame_evidence_all(ctx, boxes[j]));
    for (std::size_t i = 0; i < n_total; ++i) class_sums[i] += log_e[j][i];
  }
  double penalty_total = 0.0;
  for (std::size_t k = 1; k + 1 < n_frames; ++k) {
    penalty_total += smoothness_penalty(boxes[k - 1], boxes[k], boxes[k + 1]);
  }

  auto objective = [&](std::span<const double> sums, double pen) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i : active_classes) best = std::max(best, sums[static_cast<std::size_t>(i)]);
    return best - config.lambda * pen;
  };
  double current = objective(class_sums, penalty_total);

  std::vector<double> shifted(n_total);
  for (int sweep = 0; sweep < config.map_sweeps; ++sweep) {
    bool changed = false;
    for (std::size_t j = 0; j < n_frames; ++j) {
      EvidenceContext ctx{config, frames[j]};

      // Structural candidates first, then observed boxes near them.
      std::vector<BoundingBox> cands;
      cands.push_back(boxes[j]);
      if (j >= 2) {
        cands.push_back(clamp_scales({2 * boxes[j - 1].x - boxes[j - 2].x,
                                      2 * boxes[j - 1].y - boxes[j - 2].y,
                                      2 * boxes[j - 1].lx - boxes[j - 2].lx,
                                      2 * boxes[j - 1].ly - boxes[j - 2].ly}));
      }
      if (j + 2 < n_frames) {
        cands.push_back(clamp_scales({2 * boxes[j + 1].x - boxes[j + 2].x,
                                      2 * boxes[j + 1].y - boxes[j + 2].y,
                                      2 * boxes[j + 1].lx - boxes[j + 2].lx,
                                      2 * boxes[j + 1].ly - boxes[j + 2].ly}));
      }
      if (j >= 1 && j + 1 < n_frames) {
        cands.push_back(clamp_scales({(boxes[j - 1].x + boxes[j + 1].x) / 2,
                                      (boxes[j - 1].y + boxes[j + 1].y) / 2,
                                      (boxes[j - 1].lx + boxes[j + 1].lx) / 2,
                                      (boxes[j - 1].ly + boxes[j + 1].ly) / 2}));
      }
      const std::size_t n_structural = cands.size();
      for (const Detection& det : frames[j].detections) {
        bool near = false;
        for (std::size_t s = 0; s < n_structural && !near; ++s) {
          near = indicator_overlap(det.box, cands[s], config.iou_lim) != 0;
        }
        if (near) cands.push_back(det.box);
      }

      const double pen_old = local_penalty(boxes, j, boxes[j]);
      std::size_t best_k = 0;
      double best_obj = current;
      std::vector<double> best_logs;
      double best_pen_new = pen_old;

      for (std::size_t k = 1; k < cands.size(); ++k) {
        if (cands[k] == boxes[j]) continue;
        std::vector<double> logs = to_logs(frame_evidence_all(ctx, cands[k]));
        for (std::size_t i = 0; i < n_total; ++i) {
          shifted[i] = class_sums[i] + (logs[i] - log_e[j][i]);
        }
        const double pen_new = local_penalty(boxes, j, cands[k]);
        const double obj = objective(shifted, penalty_total + (pen_new - pen_old));
        if (obj > best_obj) {
          best_obj = obj;
          best_k = k;
          best_logs = std::move(logs);
          best_pen_new = pen_new;
        }
      }

      if (best_k != 0) {
        for (std::size_t i = 0; i < n_total; ++i) {
          class_sums[i] += best_logs[i] - log_e[j][i];
        }
        penalty_total += best_pen_new - pen_old;
        boxes[j] = cands[best_k];
        log_e[j] = std::move(best_logs);
        current = objective(class_sums, penalty_total);
        changed = true;
      }
      if (objective_trace) objective_trace->push_back(current);
    }
    if (!changed) break;
  }

  MapEstimate out;
  out.boxes = std::move(boxes);
  out.cum_log_increments.resize(n_total - 1);
  for (std::size_t i = 1; i < n_total; ++i) {
    out.cum_log_increments[i - 1] = class_sums[i] - class_sums[0];
  }
  out.objective = current;
  return out;
}

}  // namespace quickdet
