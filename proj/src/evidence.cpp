#include "quickdet/evidence.hpp"

#include <algorithm>
#include <cmath>

namespace quickdet {

std::vector<double> frame_evidence_all(const EvidenceContext& ctx, const BoundingBox& b_t) {
  const DetectorConfig& cfg = ctx.config;
  const std::size_t n_total = cfg.priors.size();

  std::vector<double> evidence(n_total, cfg.c);
  double mass = 0.0;
  for (const Detection& det : ctx.frame_data.detections) {
    if (det.probs.v.size() != n_total) {
      throw ConfigError("class probability vector length does not match priors");
    }
    if (!indicator_overlap(det.box, b_t, cfg.iou_lim)) continue;
    mass += det.mu;
    for (std::size_t i = 0; i < n_total; ++i) {
      evidence[i] += (det.probs.v[i] / cfg.priors[i] - 1.0) * det.mu;
    }
  }

  // c has to strictly dominate the overlapping mass: a class with zero
  // probability on every overlapping box bottoms out at c - mass.
  if (mass >= cfg.c) {
    throw NonPositiveEvidence(ctx.frame_data.frame, mass, cfg.c);
  }
  for (double e : evidence) {
    if (e <= 0.0) throw NonPositiveEvidence(ctx.frame_data.frame, mass, cfg.c);
  }
  return evidence;
}

double frame_evidence(const EvidenceContext& ctx, const BoundingBox& b_t, int i) {
  return frame_evidence_all(ctx, b_t)[static_cast<std::size_t>(i)];
}

double log_increment(const EvidenceContext& ctx, const BoundingBox& b_t, int i) {
  const std::vector<double> e = frame_evidence_all(ctx, b_t);
  // Class-independent normalizers are shared between numerator and
  // denominator, so they cancel here; only the ratio is ever needed and no
  // absolute probability is computed.
  return std::log(e[static_cast<std::size_t>(i)]) - std::log(e[0]);
}

std::vector<double> log_increments(const EvidenceContext& ctx, const BoundingBox& b_t) {
  return log_increments_from(frame_evidence_all(ctx, b_t));
}

std::vector<double> log_increments_from(std::span<const double> evidence) {
  const double log_bg = std::log(evidence[0]);
  std::vector<double> inc(evidence.size() - 1);
  for (std::size_t i = 1; i < evidence.size(); ++i) {
    inc[i - 1] = std::log(evidence[i]) - log_bg;
  }
  return inc;
}

double suggest_c(std::span<const FrameData> frames, double iou_lim) {
  double max_mass = 0.0;
  for (const FrameData& frame : frames) {
    // Candidate anchor points: the observed boxes themselves plus pairwise
    // midpoints, which catch hypothesis boxes straddling two detections
    // that do not overlap each other.
    std::vector<BoundingBox> anchors;
    const auto& dets = frame.detections;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      anchors.push_back(dets[i].box);
      for (std::size_t j = i + 1; j < dets.size(); ++j) {
        anchors.push_back(BoundingBox{(dets[i].box.x + dets[j].box.x) / 2,
                                      (dets[i].box.y + dets[j].box.y) / 2,
                                      (dets[i].box.lx + dets[j].box.lx) / 2,
                                      (dets[i].box.ly + dets[j].box.ly) / 2});
      }
    }
    for (const BoundingBox& anchor : anchors) {
      double mass = 0.0;
      for (const Detection& det : dets) {
        if (indicator_overlap(det.box, anchor, iou_lim)) mass += det.mu;
      }
      max_mass = std::max(max_mass, mass);
    }
  }
  return std::max(2.0 * max_mass, 1.0);
}

}  // namespace quickdet
