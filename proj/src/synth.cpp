#include "quickdet/synth.hpp"

#include <algorithm>
#include <cmath>

#include "quickdet/rng.hpp"

namespace quickdet {

namespace {

constexpr double kClutterScaleLo = 0.02;
constexpr double kClutterScaleHi = 0.15;

void validate(const ScenarioSpec& spec) {
  if (spec.n_classes < 1) throw InvalidSpec("n_classes must be >= 1");
  if (spec.n_frames < 0) throw InvalidSpec("n_frames must be >= 0");
  if (spec.clutter_rate < 0.0) throw InvalidSpec("clutter_rate must be >= 0");
  if (spec.clutter_concentration <= 0.0) {
    throw InvalidSpec("clutter_concentration must be > 0");
  }
  for (const ObjectSpec& obj : spec.objects) {
    if (obj.class_id < 1 || obj.class_id > spec.n_classes) {
      throw InvalidSpec("object class_id out of range");
    }
    if (obj.appear_frame < 0 || obj.appear_frame >= obj.disappear_frame ||
        obj.disappear_frame >= spec.n_frames) {
      throw InvalidSpec("object frame range must satisfy 0 <= appear < disappear < n_frames");
    }
    if (!obj.box.valid()) throw InvalidSpec("object box must have positive scales");
    if (obj.miss_prob < 0.0 || obj.miss_prob >= 1.0) {
      throw InvalidSpec("miss_prob must be in [0, 1)");
    }
    if (obj.box_jitter_sigma < 0.0) throw InvalidSpec("box_jitter_sigma must be >= 0");
    if (obj.prob_concentration <= 0.0) throw InvalidSpec("prob_concentration must be > 0");
    if (obj.exact_prob < 0.0 || obj.exact_prob > 1.0) {
      throw InvalidSpec("exact_prob must be in [0, 1]");
    }
    if (obj.mu_lo < 0.0 || obj.mu_hi < obj.mu_lo) throw InvalidSpec("bad mu_range");
  }
}

BoundingBox truth_box(const ObjectSpec& obj, std::int64_t frame) {
  const double k = static_cast<double>(frame - obj.appear_frame);
  BoundingBox b;
  b.x = std::clamp(obj.box.x + k * obj.vx, 0.0, 1.0);
  b.y = std::clamp(obj.box.y + k * obj.vy, 0.0, 1.0);
  b.lx = std::max(obj.box.lx + k * obj.vlx, kScaleFloor);
  b.ly = std::max(obj.box.ly + k * obj.vly, kScaleFloor);
  return b;
}

ClassProbs object_probs(const ObjectSpec& obj, int n_classes, Rng& rng) {
  ClassProbs probs;
  if (obj.exact_prob > 0.0) {
    probs.v.assign(static_cast<std::size_t>(n_classes) + 1, 0.0);
    probs.v[static_cast<std::size_t>(obj.class_id)] = obj.exact_prob;
    probs.v[0] = 1.0 - obj.exact_prob;
    return probs;
  }
  std::vector<double> alpha(static_cast<std::size_t>(n_classes) + 1, 1.0);
  alpha[static_cast<std::size_t>(obj.class_id)] += obj.prob_concentration;
  probs.v = rng.dirichlet(alpha);
  return probs;
}

ClassProbs clutter_probs(const ScenarioSpec& spec, Rng& rng) {
  ClassProbs probs;
  const std::size_t n_total = static_cast<std::size_t>(spec.n_classes) + 1;
  if (spec.clutter_uninformative) {
    probs.v.assign(n_total, 1.0 / static_cast<double>(n_total));
    return probs;
  }
  std::vector<double> alpha(n_total, 1.0);
  if (rng.uniform() < 0.5) {
    alpha[0] += spec.clutter_concentration;
  } else {
    const std::size_t cls = 1 + rng.uniform_int(static_cast<std::uint64_t>(spec.n_classes));
    alpha[cls] += spec.clutter_concentration;
  }
  probs.v = rng.dirichlet(alpha);
  return probs;
}

std::vector<FrameData> render(const ScenarioSpec& spec, bool with_objects) {
  Rng rng(spec.seed);
  std::vector<FrameData> frames;
  frames.reserve(static_cast<std::size_t>(spec.n_frames));

  for (std::int64_t f = 0; f < spec.n_frames; ++f) {
    FrameData fd;
    fd.frame = f;

    if (with_objects) {
      for (const ObjectSpec& obj : spec.objects) {
        if (f < obj.appear_frame || f > obj.disappear_frame) continue;
        if (rng.uniform() < obj.miss_prob) continue;

        Detection det;
        BoundingBox b = truth_box(obj, f);
        if (obj.box_jitter_sigma > 0.0) {
          b.x = std::clamp(b.x + rng.normal(0.0, obj.box_jitter_sigma), 0.0, 1.0);
          b.y = std::clamp(b.y + rng.normal(0.0, obj.box_jitter_sigma), 0.0, 1.0);
          b.lx = std::max(b.lx + rng.normal(0.0, obj.box_jitter_sigma), kScaleFloor);
          b.ly = std::max(b.ly + rng.normal(0.0, obj.box_jitter_sigma), kScaleFloor);
        }
        det.box = b;
        det.probs = object_probs(obj, spec.n_classes, rng);
        det.mu = rng.uniform(obj.mu_lo, obj.mu_hi);
        fd.detections.push_back(std::move(det));
      }
    }

    const int clutter = rng.poisson(spec.clutter_rate);
    for (int k = 0; k < clutter; ++k) {
      Detection det;
      det.box.x = rng.uniform();
      det.box.y = rng.uniform();
      det.box.lx = rng.uniform(kClutterScaleLo, kClutterScaleHi);
      det.box.ly = rng.uniform(kClutterScaleLo, kClutterScaleHi);
      det.probs = clutter_probs(spec, rng);
      det.mu = 1.0;
      fd.detections.push_back(std::move(det));
    }
    frames.push_back(std::move(fd));
  }
  return frames;
}

}  // namespace

SynthResult generate(const ScenarioSpec& spec) {
  validate(spec);
  SynthResult out;
  out.frames = render(spec, true);

  std::int64_t id = 0;
  for (const ObjectSpec& obj : spec.objects) {
    GroundTruthObject gt;
    gt.id = id++;
    gt.class_id = obj.class_id;
    gt.appear_frame = obj.appear_frame;
    gt.disappear_frame = obj.disappear_frame;
    for (std::int64_t f = obj.appear_frame; f <= obj.disappear_frame; ++f) {
      gt.boxes.push_back(truth_box(obj, f));
    }
    out.truth.objects.push_back(std::move(gt));
  }
  return out;
}

std::vector<FrameData> null_stream(const ScenarioSpec& spec) {
  validate(spec);
  return render(spec, false);
}

}  // namespace quickdet
