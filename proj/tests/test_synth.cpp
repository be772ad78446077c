#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "quickdet/synth.hpp"

using namespace quickdet;

namespace {

bool frames_equal(const std::vector<FrameData>& a, const std::vector<FrameData>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t f = 0; f < a.size(); ++f) {
    if (a[f].frame != b[f].frame) return false;
    if (a[f].detections.size() != b[f].detections.size()) return false;
    for (std::size_t k = 0; k < a[f].detections.size(); ++k) {
      const Detection& x = a[f].detections[k];
      const Detection& y = b[f].detections[k];
      if (!(x.box == y.box) || x.mu != y.mu || x.probs.v != y.probs.v) return false;
    }
  }
  return true;
}

// Upper chi-square quantile via the Wilson-Hilferty cube approximation.
double chi2_quantile(double dof, double z) {
  const double t = 1.0 - 2.0 / (9.0 * dof) + z * std::sqrt(2.0 / (9.0 * dof));
  return dof * t * t * t;
}

ScenarioSpec clutter_spec(double rate, std::uint64_t seed, std::int64_t n_frames) {
  ScenarioSpec spec;
  spec.n_classes = 2;
  spec.n_frames = n_frames;
  spec.clutter_rate = rate;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("identical spec and seed reproduce the identical stream") {
  ScenarioSpec spec = clutter_spec(1.5, 99, 200);
  ObjectSpec obj;
  obj.class_id = 1;
  obj.appear_frame = 20;
  obj.disappear_frame = 150;
  obj.box = BoundingBox{0.4, 0.5, 0.1, 0.1};
  obj.vx = 0.002;
  obj.miss_prob = 0.25;
  obj.box_jitter_sigma = 0.01;
  spec.objects.push_back(obj);

  const SynthResult a = generate(spec);
  const SynthResult b = generate(spec);
  CHECK(frames_equal(a.frames, b.frames));
  CHECK(frames_equal(null_stream(spec), null_stream(spec)));

  ScenarioSpec other = spec;
  other.seed = 100;
  CHECK(!frames_equal(a.frames, generate(other).frames));
}

TEST_CASE("clutter counts average out to the configured rate") {
  const std::vector<FrameData> frames = null_stream(clutter_spec(2.0, 7, 10000));
  double total = 0.0;
  for (const FrameData& fd : frames) total += static_cast<double>(fd.detections.size());
  const double mean = total / static_cast<double>(frames.size());
  CHECK(mean >= 1.9);
  CHECK(mean <= 2.1);
}

TEST_CASE("clutter counts pass a chi-square goodness-of-fit test") {
  const double rate = 2.0;
  const std::vector<FrameData> frames = null_stream(clutter_spec(rate, 12345, 10000));

  std::map<std::size_t, std::size_t> counts;
  for (const FrameData& fd : frames) ++counts[fd.detections.size()];

  // Poisson cell probabilities, tail cells merged so expectations stay >= 5.
  std::vector<double> expected;
  std::vector<double> observed;
  const double n = static_cast<double>(frames.size());
  double pmf = std::exp(-rate);  // k = 0
  double tail = 1.0;
  std::size_t k = 0;
  while (pmf * n >= 5.0) {
    expected.push_back(pmf * n);
    const auto it = counts.find(k);
    observed.push_back(it == counts.end() ? 0.0 : static_cast<double>(it->second));
    tail -= pmf;
    ++k;
    pmf *= rate / static_cast<double>(k);
  }
  REQUIRE(expected.size() >= 4);
  expected.push_back(tail * n);
  double rest = 0.0;
  for (const auto& [count, times] : counts) {
    if (count >= k) rest += static_cast<double>(times);
  }
  observed.push_back(rest);

  double stat = 0.0;
  for (std::size_t cell = 0; cell < expected.size(); ++cell) {
    const double diff = observed[cell] - expected[cell];
    stat += diff * diff / expected[cell];
  }
  const double dof = static_cast<double>(expected.size()) - 1.0;
  const double critical = chi2_quantile(dof, 2.326);  // significance 0.01
  CHECK(stat < critical);
}

TEST_CASE("emitted probability vectors sum to one") {
  ScenarioSpec spec = clutter_spec(1.0, 3, 500);
  ObjectSpec obj;
  obj.class_id = 2;
  obj.appear_frame = 5;
  obj.disappear_frame = 400;
  obj.box = BoundingBox{0.5, 0.5, 0.2, 0.2};
  obj.prob_concentration = 6.0;
  spec.objects.push_back(obj);

  const SynthResult result = generate(spec);
  for (const FrameData& fd : result.frames) {
    for (const Detection& det : fd.detections) {
      REQUIRE(det.probs.v.size() == 3);
      double sum = 0.0;
      for (double p : det.probs.v) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        sum += p;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("noise-free limit emits one exact detection per visible frame") {
  ScenarioSpec spec;
  spec.n_classes = 2;
  spec.n_frames = 30;
  spec.seed = 0;
  ObjectSpec obj;
  obj.class_id = 1;
  obj.appear_frame = 10;
  obj.disappear_frame = 25;
  obj.box = BoundingBox{0.5, 0.5, 0.2, 0.2};
  obj.exact_prob = 0.9;
  spec.objects.push_back(obj);

  const SynthResult result = generate(spec);
  REQUIRE(result.frames.size() == 30);
  for (const FrameData& fd : result.frames) {
    if (fd.frame < 10 || fd.frame > 25) {
      CHECK(fd.detections.empty());
    } else {
      REQUIRE(fd.detections.size() == 1);
      const Detection& det = fd.detections[0];
      CHECK(det.box == obj.box);
      CHECK(det.probs.v == std::vector<double>{0.09999999999999998, 0.9, 0.0});
      CHECK(det.mu == 1.0);
    }
  }
  REQUIRE(result.truth.objects.size() == 1);
  CHECK(result.truth.objects[0].appear_frame == 10);
  CHECK(result.truth.objects[0].disappear_frame == 25);
  CHECK(result.truth.objects[0].boxes.size() == 16);
}

TEST_CASE("invalid specs are rejected") {
  ScenarioSpec bad = clutter_spec(-1.0, 0, 10);
  CHECK_THROWS_AS(generate(bad), InvalidSpec);

  ScenarioSpec overrun = clutter_spec(0.0, 0, 10);
  ObjectSpec obj;
  obj.class_id = 1;
  obj.appear_frame = 5;
  obj.disappear_frame = 10;  // must stay below n_frames
  obj.box = BoundingBox{0.5, 0.5, 0.1, 0.1};
  overrun.objects.push_back(obj);
  CHECK_THROWS_AS(generate(overrun), InvalidSpec);

  ScenarioSpec backwards = clutter_spec(0.0, 0, 10);
  obj.appear_frame = 6;
  obj.disappear_frame = 6;
  backwards.objects.push_back(obj);
  CHECK_THROWS_AS(generate(backwards), InvalidSpec);

  ScenarioSpec bad_class = clutter_spec(0.0, 0, 10);
  obj.class_id = 5;
  obj.appear_frame = 2;
  obj.disappear_frame = 8;
  bad_class.objects.push_back(obj);
  CHECK_THROWS_AS(generate(bad_class), InvalidSpec);
}

TEST_CASE("uninformative clutter carries exactly uniform probabilities") {
  ScenarioSpec spec = clutter_spec(2.0, 5, 200);
  spec.clutter_uninformative = true;
  const std::vector<FrameData> frames = null_stream(spec);
  bool saw_any = false;
  for (const FrameData& fd : frames) {
    for (const Detection& det : fd.detections) {
      saw_any = true;
      for (double p : det.probs.v) CHECK(p == 1.0 / 3.0);
    }
  }
  CHECK(saw_any);
}
