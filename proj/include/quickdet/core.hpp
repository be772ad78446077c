#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "quickdet/errors.hpp"

namespace quickdet {

/// Lower bound applied to extrapolated box scales, which can otherwise go
/// non-positive under the constant-velocity model.
inline constexpr double kScaleFloor = 1e-4;

/// Axis-aligned image region, centroid + scales, in normalized image units.
/// The extent is [x - lx/2, x + lx/2] x [y - ly/2, y + ly/2].
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double lx = 0.0;  // horizontal scale, > 0
  double ly = 0.0;  // vertical scale, > 0

  bool valid() const { return lx > 0.0 && ly > 0.0; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Intersection-over-union of the two extents. Symmetric, in [0, 1],
/// 0 for disjoint extents.
double iou(const BoundingBox& a, const BoundingBox& b);

/// 1 iff iou(a, b) strictly exceeds iou_lim.
int indicator_overlap(const BoundingBox& a, const BoundingBox& b, double iou_lim);

/// Extrapolate one frame ahead from the last two boxes: 2*b[t] - b[t-1]
/// componentwise, scales clamped to kScaleFloor. A single box predicts
/// itself (zero-velocity convention).
BoundingBox predict_constant_velocity(std::span<const BoundingBox> boxes);

/// Squared Euclidean norm of the second difference over (x, y, lx, ly).
/// Zero exactly when b continues b_prev2, b_prev at constant velocity.
double smoothness_penalty(const BoundingBox& b_prev2, const BoundingBox& b_prev,
                          const BoundingBox& b);

/// Class-probability vector from a single-frame detector. Index 0 is the
/// background class; indices 1..n are object classes. Components are in
/// [0, 1] and sum to 1.
struct ClassProbs {
  std::vector<double> v;

  int n_object_classes() const { return static_cast<int>(v.size()) - 1; }
  double background() const { return v[0]; }
};

/// One observed box with its class probabilities and confidence measure.
/// One-stage detector streams carry mu = 1 for every box.
struct Detection {
  BoundingBox box;
  ClassProbs probs;
  double mu = 1.0;
};

/// A single frame of detector output. The observed set may be empty.
struct FrameData {
  std::int64_t frame = 0;
  std::vector<Detection> detections;
};

/// A hypothesized object path with per-object-class CUSUM statistics.
/// spawn_frame is the candidate change time.
struct Trajectory {
  std::int64_t id = 0;
  std::int64_t spawn_frame = 0;
  std::vector<BoundingBox> boxes;
  std::vector<double> w;  // size n, all >= 0
};

struct DetectorConfig {
  double threshold = 2.0;  // log-domain declaration level
  double iou_lim = 0.5;    // strict lower limit for the overlap indicator
  double c = 4.0;          // unobserved-box evidence constant; must dominate
                           // the overlapping confidence mass on every frame
  std::vector<double> priors;  // size n+1, sums to 1; index 0 = background
  double lambda = 50.0;    // smoothness weight, normalized units
  double nms_iou = 0.5;
  int map_sweeps = 2;      // coordinate-ascent sweeps in full mode
  bool retire_on_declare = true;
  bool class_reduction = true;  // skip classes whose statistic sits at zero

  int n_classes() const { return static_cast<int>(priors.size()) - 1; }

  /// Uniform priors over n object classes plus background.
  static DetectorConfig with_uniform_priors(int n_classes);

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// A declared detection.
struct Declaration {
  std::int64_t trajectory_id = 0;
  std::int64_t frame = 0;  // declaration time
  BoundingBox box;
  int label = 0;           // declared object class, 1..n
  double statistic = 0.0;  // CUSUM value at declaration
  std::int64_t spawn_frame = 0;
};

}  // namespace quickdet
