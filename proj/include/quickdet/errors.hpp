#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace quickdet {

// Error taxonomy mirrors the CLI exit codes: usage errors are handled by the
// argument parser (exit 1), DataError and subclasses map to exit 2, and
// ConfigError / NonPositiveEvidence map to exit 3.

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed stream, ground-truth, or scenario file.
struct ParseError : DataError {
  using DataError::DataError;
};

/// A frame index that is not exactly previous + 1.
struct FrameGap : DataError {
  FrameGap(std::int64_t expected_frame, std::int64_t got_frame)
      : DataError("frame gap: expected frame " + std::to_string(expected_frame) +
                  ", got " + std::to_string(got_frame)),
        expected(expected_frame),
        got(got_frame) {}

  std::int64_t expected;
  std::int64_t got;
};

/// Scenario spec violates its own invariants.
struct InvalidSpec : DataError {
  using DataError::DataError;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The evidence constant c does not dominate the overlapping confidence mass
/// on some frame, so per-class evidence would drop to zero or below. The run
/// must abort; the message names the offending frame.
struct NonPositiveEvidence : ConfigError {
  NonPositiveEvidence(std::int64_t frame_index, double mass, double c)
      : ConfigError("non-positive evidence at frame " + std::to_string(frame_index) +
                    ": overlapping confidence mass " + std::to_string(mass) +
                    " reaches c = " + std::to_string(c) +
                    "; raise c for this stream"),
        frame(frame_index),
        overlap_mass(mass) {}

  std::int64_t frame;
  double overlap_mass;
};

}  // namespace quickdet
