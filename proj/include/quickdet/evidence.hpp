#pragma once

#include <span>
#include <vector>

#include "quickdet/core.hpp"

namespace quickdet {

/// View bundling one frame of data with the detector configuration. Both
/// referents must outlive the context.
struct EvidenceContext {
  const DetectorConfig& config;
  const FrameData& frame_data;
};

/// Per-class evidence at a hypothesized box, all classes in one scan:
/// for class i, sum over observed boxes overlapping b_t of
/// (v_i / prior_i - 1) * mu, plus the constant c. Result has size n+1
/// (index 0 = background) and every component is strictly positive.
/// Throws NonPositiveEvidence when the overlapping confidence mass reaches
/// c, which would let some class evidence drop to zero or below.
std::vector<double> frame_evidence_all(const EvidenceContext& ctx, const BoundingBox& b_t);

/// Single-class accessor for frame_evidence_all.
double frame_evidence(const EvidenceContext& ctx, const BoundingBox& b_t, int i);

/// log evidence(i) - log evidence(0) for object class i in 1..n. This is
/// the per-frame log-likelihood increment accumulated by the CUSUM
/// statistics.
double log_increment(const EvidenceContext& ctx, const BoundingBox& b_t, int i);

/// All object-class increments at once; index k holds class k+1.
std::vector<double> log_increments(const EvidenceContext& ctx, const BoundingBox& b_t);

/// Increments computed from an evidence vector already in hand.
std::vector<double> log_increments_from(std::span<const double> evidence);

/// Pre-scan rule for choosing c: twice the largest overlapping confidence
/// mass seen at any observed box of the stream, floored at 1. Streams used
/// live (unbuffered) should set c explicitly instead.
double suggest_c(std::span<const FrameData> frames, double iou_lim);

}  // namespace quickdet
