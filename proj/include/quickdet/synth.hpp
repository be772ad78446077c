#pragma once

#include <cstdint>
#include <vector>

#include "quickdet/core.hpp"

namespace quickdet {

/// One scripted object in a synthetic scenario. The object follows a
/// constant-velocity path from `box` starting at appear_frame; its centroid
/// is clamped to stay inside the unit square.
struct ObjectSpec {
  int class_id = 1;
  std::int64_t appear_frame = 0;
  std::int64_t disappear_frame = 0;  // last visible frame, inclusive
  BoundingBox box;                   // at appear_frame
  double vx = 0.0, vy = 0.0, vlx = 0.0, vly = 0.0;  // per-frame velocity
  double miss_prob = 0.0;            // chance the detector misses the object
  double box_jitter_sigma = 0.0;     // per-component noise on emitted boxes
  double prob_concentration = 10.0;  // sharpness of the class probabilities
  double exact_prob = 0.0;  // > 0: deterministic probs, v_true = exact_prob,
                            // remaining mass on background
  double mu_lo = 1.0, mu_hi = 1.0;
};

struct ScenarioSpec {
  int n_classes = 1;
  std::int64_t n_frames = 0;
  std::vector<ObjectSpec> objects;
  double clutter_rate = 0.0;  // expected false boxes per frame (Poisson)
  bool clutter_uninformative = false;  // emit exactly uniform probs
  double clutter_concentration = 8.0;
  std::uint64_t seed = 0;
};

struct GroundTruthObject {
  std::int64_t id = 0;
  int class_id = 1;
  std::int64_t appear_frame = 0;
  std::int64_t disappear_frame = 0;  // inclusive
  std::vector<BoundingBox> boxes;    // one per frame, appear..disappear
};

struct GroundTruth {
  std::vector<GroundTruthObject> objects;
};

struct SynthResult {
  std::vector<FrameData> frames;
  GroundTruth truth;
};

/// Generate a detector-output stream plus its ground truth. Identical spec
/// and seed reproduce the identical stream. Object class probabilities are
/// Dirichlet draws with concentration prob_concentration stacked on the true
/// class; clutter boxes arrive as Poisson(clutter_rate) per frame, split
/// 50/50 between background-dominant and random-class-dominant probabilities
/// (or exactly uniform when clutter_uninformative is set).
/// Throws InvalidSpec on inconsistent specs.
SynthResult generate(const ScenarioSpec& spec);

/// Clutter-only generation with the same seeding; objects are ignored.
std::vector<FrameData> null_stream(const ScenarioSpec& spec);

}  // namespace quickdet
