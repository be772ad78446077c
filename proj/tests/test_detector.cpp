#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "quickdet/detector.hpp"
#include "quickdet/synth.hpp"

using namespace quickdet;

namespace {

Detection make_det(BoundingBox box, std::vector<double> probs, double mu = 1.0) {
  return Detection{box, ClassProbs{std::move(probs)}, mu};
}

DetectorConfig config_n(int n_classes, double c, double threshold) {
  DetectorConfig cfg = DetectorConfig::with_uniform_priors(n_classes);
  cfg.c = c;
  cfg.threshold = threshold;
  return cfg;
}

// Frames 0..appear-1 empty, then one detection per frame at a fixed box
// with v = (0.1, 0.9, 0.0): the noise-free single-object stream.
std::vector<FrameData> perfect_stream(std::int64_t appear, std::int64_t n_frames,
                                      const BoundingBox& box) {
  std::vector<FrameData> frames;
  for (std::int64_t f = 0; f < n_frames; ++f) {
    FrameData fd{f, {}};
    if (f >= appear) fd.detections.push_back(make_det(box, {0.1, 0.9, 0.0}));
    frames.push_back(std::move(fd));
  }
  return frames;
}

double brute_force_cusum(std::span<const double> increments, std::size_t t) {
  // max over change times of the tail sums, clamped at zero
  double best = 0.0;
  for (std::size_t tc = 0; tc <= t; ++tc) {
    double sum = 0.0;
    for (std::size_t s = tc; s <= t; ++s) sum += increments[s];
    best = std::max(best, sum);
  }
  return best;
}

}  // namespace

TEST_CASE("cusum_update clamps at zero") {
  CHECK(cusum_update(0.0, -1.0) == 0.0);
  CHECK(cusum_update(0.5, 0.3) == doctest::Approx(0.8).epsilon(1e-15));

  const std::vector<double> incs{1.0, -3.0, 2.0, 0.5};
  const std::vector<double> expected{1.0, 0.0, 2.0, 2.5};
  double w = 0.0;
  for (std::size_t t = 0; t < incs.size(); ++t) {
    w = cusum_update(w, incs[t]);
    CHECK(w == doctest::Approx(expected[t]).epsilon(1e-15));
    CHECK(w == doctest::Approx(brute_force_cusum(incs, t)).epsilon(1e-15));
  }
}

TEST_CASE("recursive cusum equals the brute-force max over change times") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> incs(60);
    for (double& x : incs) x = noise(rng) + 0.05;
    double w = 0.0;
    for (std::size_t t = 0; t < incs.size(); ++t) {
      w = cusum_update(w, incs[t]);
      CHECK(w == doctest::Approx(brute_force_cusum(incs, t)).epsilon(1e-12));
    }
  }
}

TEST_CASE("spawn gating compares best object class against background") {
  FrameData frame{0, {}};
  frame.detections.push_back(make_det({0.2, 0.2, 0.1, 0.1}, {0.6, 0.3, 0.1}));
  frame.detections.push_back(make_det({0.5, 0.5, 0.1, 0.1}, {0.3, 0.6, 0.1}));
  frame.detections.push_back(make_det({0.8, 0.8, 0.1, 0.1}, {0.4, 0.4, 0.2}));

  const std::vector<Detection> spawned = spawn_candidates(frame);
  REQUIRE(spawned.size() == 1);
  CHECK(spawned[0].box == frame.detections[1].box);
}

TEST_CASE("nms keeps existing trajectories and the top fresh scorers") {
  const double nms_iou = 0.5;

  SUBCASE("fresh candidate on an existing box is suppressed") {
    const std::vector<ScoredBox> existing{{{0.5, 0.5, 0.2, 0.2}, 1.0}};
    const std::vector<ScoredBox> fresh{{{0.5, 0.5, 0.2, 0.2}, 99.0}};
    CHECK(nms(existing, fresh, nms_iou).empty());
  }

  SUBCASE("disjoint fresh candidates both survive") {
    const std::vector<ScoredBox> existing;
    const std::vector<ScoredBox> fresh{{{0.2, 0.2, 0.1, 0.1}, 0.9},
                                       {{0.8, 0.8, 0.1, 0.1}, 0.5}};
    CHECK(nms(existing, fresh, nms_iou) == std::vector<std::size_t>{0, 1});
  }

  SUBCASE("mutually overlapping trio keeps only the top score") {
    // pairwise IoU 0.8 or higher
    const BoundingBox a{0.500, 0.5, 0.2, 0.2};
    const BoundingBox b{0.505, 0.5, 0.2, 0.2};
    const BoundingBox c{0.510, 0.5, 0.2, 0.2};
    REQUIRE(iou(a, b) > 0.8);
    REQUIRE(iou(b, c) > 0.8);
    REQUIRE(iou(a, c) > 0.8);
    const std::vector<ScoredBox> fresh{{a, 0.4}, {b, 0.9}, {c, 0.6}};
    CHECK(nms({}, fresh, nms_iou) == std::vector<std::size_t>{1});
  }
}

TEST_CASE("empty streams produce no trajectories and no declarations") {
  Detector det(config_n(2, 3.0, 2.0));
  for (std::int64_t f = 0; f < 20; ++f) {
    const std::vector<Declaration> out = det.step(FrameData{f, {}});
    CHECK(out.empty());
  }
  CHECK(det.live_trajectories() == 0);
  CHECK(det.declarations().empty());
}

TEST_CASE("noise-free single object declares two frames after spawn") {
  const BoundingBox box{0.5, 0.5, 0.2, 0.2};
  const std::vector<FrameData> frames = perfect_stream(5, 12, box);
  Detector det(config_n(2, 3.0, 2.0));

  std::vector<Declaration> all;
  for (const FrameData& frame : frames) {
    for (const Declaration& d : det.step(frame)) all.push_back(d);
  }

  // Per-frame increment ln(4.7 / 2.3); threshold 2.0 needs three increments.
  const double inc = std::log(4.7 / 2.3);
  REQUIRE(!all.empty());
  const Declaration& first = all.front();
  CHECK(first.frame == 7);
  CHECK(first.spawn_frame == 5);
  CHECK(first.label == 1);
  CHECK(first.statistic == doctest::Approx(3.0 * inc).epsilon(1e-12));
  CHECK(first.box == box);
  CHECK(first.statistic > 2.0);
}

TEST_CASE("spawns are suppressed while a trajectory covers the object") {
  const BoundingBox box{0.5, 0.5, 0.2, 0.2};
  const std::vector<FrameData> frames = perfect_stream(3, 30, box);
  DetectorConfig cfg = config_n(2, 3.0, 2.0);
  cfg.retire_on_declare = false;
  Detector det(cfg);

  std::vector<Declaration> all;
  for (const FrameData& frame : frames) {
    for (const Declaration& d : det.step(frame)) all.push_back(d);
    if (frame.frame >= 3) CHECK(det.live_trajectories() == 1);
  }
  // One trajectory, declared exactly once.
  CHECK(all.size() == 1);
  CHECK(all.front().frame == 5);
}

TEST_CASE("uninformative probabilities never spawn") {
  DetectorConfig cfg = config_n(2, 3.0, 0.1);
  Detector det(cfg);
  const BoundingBox box{0.5, 0.5, 0.2, 0.2};
  for (std::int64_t f = 0; f < 15; ++f) {
    FrameData frame{f, {make_det(box, {1.0 / 3, 1.0 / 3, 1.0 / 3})}};
    CHECK(det.step(frame).empty());
  }
  CHECK(det.live_trajectories() == 0);
}

TEST_CASE("a spawn with non-positive first increment dies immediately") {
  DetectorConfig cfg = config_n(1, 4.0, 2.0);
  Detector det(cfg);
  // Two overlapping boxes: the spawner favors class 1 but the companion is
  // so background-heavy that the summed increment turns negative.
  const BoundingBox box{0.5, 0.5, 0.2, 0.2};
  FrameData frame{0,
                  {make_det(box, {0.45, 0.55}),
                   make_det(box, {0.95, 0.05}), make_det(box, {0.95, 0.05})}};
  det.step(frame);
  CHECK(det.live_trajectories() == 0);
}

TEST_CASE("frame gaps are rejected") {
  Detector det(config_n(1, 3.0, 2.0));
  det.step(FrameData{4, {}});
  det.step(FrameData{5, {}});
  CHECK_THROWS_AS(det.step(FrameData{7, {}}), FrameGap);
}

TEST_CASE("full mode matches recursive mode on the noise-free stream") {
  const BoundingBox box{0.5, 0.5, 0.2, 0.2};
  const std::vector<FrameData> frames = perfect_stream(4, 14, box);

  Detector recursive(config_n(2, 3.0, 2.0), DetectorMode::recursive);
  Detector full(config_n(2, 3.0, 2.0), DetectorMode::full);
  std::vector<Declaration> rec_out, full_out;
  for (const FrameData& frame : frames) {
    for (const Declaration& d : recursive.step(frame)) rec_out.push_back(d);
    for (const Declaration& d : full.step(frame)) full_out.push_back(d);
  }

  REQUIRE(rec_out.size() == full_out.size());
  for (std::size_t k = 0; k < rec_out.size(); ++k) {
    CHECK(rec_out[k].frame == full_out[k].frame);
    CHECK(rec_out[k].label == full_out[k].label);
    CHECK(rec_out[k].box == full_out[k].box);
    CHECK(rec_out[k].statistic ==
          doctest::Approx(full_out[k].statistic).epsilon(1e-9));
  }
}

TEST_CASE("class reduction does not change declarations on a clean stream") {
  ScenarioSpec spec;
  spec.n_classes = 3;
  spec.n_frames = 60;
  spec.seed = 11;
  spec.clutter_rate = 0.5;
  ObjectSpec obj;
  obj.class_id = 2;
  obj.appear_frame = 8;
  obj.disappear_frame = 55;
  obj.box = BoundingBox{0.3, 0.5, 0.12, 0.12};
  obj.vx = 0.004;
  obj.miss_prob = 0.1;
  obj.box_jitter_sigma = 0.005;
  obj.prob_concentration = 14.0;
  spec.objects.push_back(obj);
  const SynthResult synth = generate(spec);

  DetectorConfig with = config_n(3, 4.0, 2.5);
  DetectorConfig without = with;
  without.class_reduction = false;

  Detector det_with(with), det_without(without);
  for (const FrameData& frame : synth.frames) {
    det_with.step(frame);
    det_without.step(frame);
  }
  const std::vector<Declaration>& a = det_with.declarations();
  const std::vector<Declaration>& b = det_without.declarations();
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].frame == b[k].frame);
    CHECK(a[k].label == b[k].label);
    CHECK(a[k].box == b[k].box);
  }
}

TEST_CASE("declaration times are nondecreasing in the threshold") {
  ScenarioSpec spec;
  spec.n_classes = 2;
  spec.n_frames = 80;
  spec.seed = 29;
  spec.clutter_rate = 1.0;
  ObjectSpec obj;
  obj.class_id = 1;
  obj.appear_frame = 10;
  obj.disappear_frame = 70;
  obj.box = BoundingBox{0.4, 0.4, 0.15, 0.15};
  obj.miss_prob = 0.2;
  obj.box_jitter_sigma = 0.01;
  obj.prob_concentration = 10.0;
  spec.objects.push_back(obj);
  const SynthResult synth = generate(spec);

  DetectorConfig cfg = config_n(2, 4.0, 1e18);
  cfg.retire_on_declare = false;
  Detector det(cfg);
  det.set_recording(true);
  for (const FrameData& frame : synth.frames) det.step(frame);

  const std::vector<double> grid{0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0};
  for (const TrackRecord& rec : det.records()) {
    std::int64_t last_time = -1;
    bool last_fired = true;
    for (double h : grid) {
      std::int64_t fired_at = -1;
      for (const StatPoint& p : rec.path) {
        if (p.statistic > h) {
          fired_at = p.frame;
          break;
        }
      }
      if (fired_at >= 0) {
        CHECK(last_fired);  // once a level stops firing, higher ones cannot fire
        if (last_time >= 0) CHECK(fired_at >= last_time);
        last_time = fired_at;
      }
      last_fired = fired_at >= 0;
    }
  }
}

TEST_CASE("statistic semantics diverge as designed when evidence dips") {
  // Evidence for class 1 rises, dips below zero cumulatively, then rises
  // again, while class 2 stays weakly positive and keeps the trajectory
  // alive. The three statistic flavors then separate:
  //   - recursive with class reduction freezes class 1 once its statistic
  //     clamps to zero, so nothing ever declares;
  //   - recursive without the reduction restarts class 1 from zero and is
  //     first to cross;
  //   - full mode carries the plain clamped cumulative sum, which must
  //     first climb out of the dip, so it crosses one frame later.
  const BoundingBox box{0.5, 0.5, 0.2, 0.2};
  auto frame_at = [&](std::int64_t f) {
    std::vector<double> v;
    if (f == 0) {
      v = {0.1, 0.6, 0.3};  // spawn, both classes beat background
    } else if (f <= 2) {
      v = {0.5, 0.1, 0.4};  // dip: class 1 increment -0.42, class 2 -0.09
    } else {
      v = {0.1, 0.8, 0.1};  // recovery: class 1 increment +0.649, class 2 zero
    }
    return FrameData{f, {make_det(box, v)}};
  };

  DetectorConfig cfg = config_n(2, 3.0, 1.0);
  cfg.retire_on_declare = false;  // keep one trajectory per detector throughout
  DetectorConfig no_reduction = cfg;
  no_reduction.class_reduction = false;

  Detector frozen(cfg, DetectorMode::recursive);
  Detector restarted(no_reduction, DetectorMode::recursive);
  Detector summed(cfg, DetectorMode::full);
  for (std::int64_t f = 0; f < 8; ++f) {
    const FrameData frame = frame_at(f);
    frozen.step(frame);
    restarted.step(frame);
    summed.step(frame);
  }

  CHECK(frozen.declarations().empty());
  REQUIRE(frozen.live_trajectories() == 1);
  CHECK(frozen.trajectories()[0].w[0] == 0.0);

  REQUIRE(restarted.declarations().size() == 1);
  CHECK(restarted.declarations()[0].frame == 4);
  CHECK(restarted.declarations()[0].label == 1);
  CHECK(restarted.declarations()[0].statistic == doctest::Approx(1.2974).epsilon(1e-3));

  REQUIRE(summed.declarations().size() == 1);
  CHECK(summed.declarations()[0].frame == 5);
  CHECK(summed.declarations()[0].label == 1);
  CHECK(summed.declarations()[0].statistic == doctest::Approx(1.6085).epsilon(1e-3));
}

TEST_CASE("recursive mode keeps a bounded tail, full mode the whole path") {
  const BoundingBox box{0.5, 0.5, 0.2, 0.2};
  const std::vector<FrameData> frames = perfect_stream(2, 20, box);

  DetectorConfig cfg = config_n(2, 3.0, 1e18);
  Detector recursive(cfg, DetectorMode::recursive);
  Detector full(cfg, DetectorMode::full);
  for (const FrameData& frame : frames) {
    recursive.step(frame);
    full.step(frame);
    for (const Trajectory& traj : recursive.trajectories()) {
      CHECK(traj.boxes.size() <= 2);
      for (double w : traj.w) CHECK(w >= 0.0);
    }
    for (const Trajectory& traj : full.trajectories()) {
      CHECK(static_cast<std::int64_t>(traj.boxes.size()) ==
            frame.frame - traj.spawn_frame + 1);
      for (double w : traj.w) CHECK(w >= 0.0);
    }
  }
}

TEST_CASE("a pruned trajectory's record ends at statistic zero") {
  DetectorConfig cfg = config_n(1, 3.0, 50.0);
  Detector det(cfg);
  det.set_recording(true);

  const BoundingBox box{0.5, 0.5, 0.2, 0.2};
  det.step(FrameData{0, {make_det(box, {0.3, 0.7})}});            // spawns, w > 0
  CHECK(det.live_trajectories() == 1);
  det.step(FrameData{1, {make_det(box, {0.95, 0.05})}});          // strong background
  det.step(FrameData{2, {make_det(box, {0.95, 0.05})}});
  CHECK(det.live_trajectories() == 0);

  REQUIRE(!det.records().empty());
  const TrackRecord& rec = det.records().front();
  CHECK(rec.path.back().statistic == 0.0);
}
