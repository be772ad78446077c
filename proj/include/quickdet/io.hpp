#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "quickdet/core.hpp"
#include "quickdet/eval.hpp"
#include "quickdet/synth.hpp"

namespace quickdet {

// Line-delimited JSON formats; see docs/formats.md. The first line of each
// file is a header record naming the format, version, and for streams the
// class count and coordinate units. Pixel-unit streams are normalized at
// read time using the per-frame image dimensions; everything downstream
// works in normalized units.

struct StreamHeader {
  int n_classes = 0;
  bool pixel_units = false;
};

void write_stream(const std::string& path, std::span<const FrameData> frames, int n_classes);
std::vector<FrameData> read_stream(const std::string& path, StreamHeader* header = nullptr);

void write_ground_truth(const std::string& path, const GroundTruth& truth, int n_classes);
GroundTruth read_ground_truth(const std::string& path);

void write_declarations(const std::string& path, std::span<const Declaration> declarations);
std::vector<Declaration> read_declarations(const std::string& path);

/// Scenario spec, a single JSON document. Unknown keys are rejected.
ScenarioSpec read_scenario(const std::string& path);
ScenarioSpec parse_scenario(const std::string& text);

struct FrameTiming {
  std::int64_t frame = 0;
  double millis = 0.0;
  std::size_t live_trajectories = 0;
};

void write_timing_csv(const std::string& path, std::span<const FrameTiming> timings);

/// One row per threshold: threshold, n_declared, n_correct, n_false_alarms,
/// far, average_delay, mean_runtime_per_frame (milliseconds).
void write_sweep_csv(const std::string& path, std::span<const EvalReport> reports);

}  // namespace quickdet
