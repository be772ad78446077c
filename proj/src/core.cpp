#include "quickdet/core.hpp"

#include <algorithm>
#include <cmath>

namespace quickdet {

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ax0 = a.x - a.lx / 2, ax1 = a.x + a.lx / 2;
  const double ay0 = a.y - a.ly / 2, ay1 = a.y + a.ly / 2;
  const double bx0 = b.x - b.lx / 2, bx1 = b.x + b.lx / 2;
  const double by0 = b.y - b.ly / 2, by1 = b.y + b.ly / 2;

  const double ix = std::min(ax1, bx1) - std::max(ax0, bx0);
  const double iy = std::min(ay1, by1) - std::max(ay0, by0);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;

  const double inter = ix * iy;
  const double uni = a.lx * a.ly + b.lx * b.ly - inter;
  return inter / uni;
}

int indicator_overlap(const BoundingBox& a, const BoundingBox& b, double iou_lim) {
  return iou(a, b) > iou_lim ? 1 : 0;
}

BoundingBox predict_constant_velocity(std::span<const BoundingBox> boxes) {
  const std::size_t n = boxes.size();
  if (n == 1) return boxes.back();

  const BoundingBox& prev = boxes[n - 2];
  const BoundingBox& last = boxes[n - 1];
  BoundingBox out;
  out.x = 2.0 * last.x - prev.x;
  out.y = 2.0 * last.y - prev.y;
  out.lx = std::max(2.0 * last.lx - prev.lx, kScaleFloor);
  out.ly = std::max(2.0 * last.ly - prev.ly, kScaleFloor);
  return out;
}

double smoothness_penalty(const BoundingBox& b_prev2, const BoundingBox& b_prev,
                          const BoundingBox& b) {
  const double dx = b_prev2.x - 2.0 * b_prev.x + b.x;
  const double dy = b_prev2.y - 2.0 * b_prev.y + b.y;
  const double dlx = b_prev2.lx - 2.0 * b_prev.lx + b.lx;
  const double dly = b_prev2.ly - 2.0 * b_prev.ly + b.ly;
  return dx * dx + dy * dy + dlx * dlx + dly * dly;
}

DetectorConfig DetectorConfig::with_uniform_priors(int n_classes) {
  DetectorConfig cfg;
  cfg.priors.assign(static_cast<std::size_t>(n_classes) + 1,
                    1.0 / (n_classes + 1));
  return cfg;
}

void DetectorConfig::validate() const {
  if (threshold <= 0.0) throw ConfigError("threshold must be > 0");
  if (!(iou_lim > 0.0 && iou_lim < 1.0)) throw ConfigError("iou_lim must be in (0,1)");
  if (!(nms_iou > 0.0 && nms_iou < 1.0)) throw ConfigError("nms_iou must be in (0,1)");
  if (c <= 0.0) throw ConfigError("c must be > 0");
  if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (map_sweeps < 1) throw ConfigError("map_sweeps must be >= 1");
  if (priors.size() < 2) throw ConfigError("priors need background plus at least one class");
  double sum = 0.0;
  for (double p : priors) {
    if (p <= 0.0) throw ConfigError("priors must be strictly positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw ConfigError("priors must sum to 1");
}

}  // namespace quickdet
