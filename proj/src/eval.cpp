#include "quickdet/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>

namespace quickdet {

namespace {

const BoundingBox* truth_box_at(const GroundTruthObject& obj, std::int64_t frame) {
  if (frame < obj.appear_frame || frame > obj.disappear_frame) return nullptr;
  return &obj.boxes[static_cast<std::size_t>(frame - obj.appear_frame)];
}

struct TruthMatch {
  std::size_t object_index = 0;
  double overlap = 0.0;
};

// Best-overlapping object for a declared (frame, box, label); when
// prefer_uncredited, credited objects are only reported if no uncredited
// object matches.
bool best_match(const GroundTruth& truth, const std::vector<char>& credited_mask,
                std::int64_t frame, const BoundingBox& box, int label, double iou_lim,
                TruthMatch* uncredited, bool* any_credited) {
  bool found = false;
  *any_credited = false;
  for (std::size_t k = 0; k < truth.objects.size(); ++k) {
    const GroundTruthObject& obj = truth.objects[k];
    if (obj.class_id != label) continue;
    const BoundingBox* tb = truth_box_at(obj, frame);
    if (!tb) continue;
    const double overlap = iou(box, *tb);
    if (!(overlap > iou_lim)) continue;
    if (credited_mask[k]) {
      *any_credited = true;
      continue;
    }
    if (!found || overlap > uncredited->overlap) {
      *uncredited = TruthMatch{k, overlap};
      found = true;
    }
  }
  return found;
}

}  // namespace

MatchResult match_declarations(std::span<const Declaration> declarations,
                               const GroundTruth& truth, double iou_lim) {
  std::vector<std::size_t> order(declarations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (declarations[a].frame != declarations[b].frame) {
      return declarations[a].frame < declarations[b].frame;
    }
    return declarations[a].trajectory_id < declarations[b].trajectory_id;
  });

  MatchResult result;
  std::vector<char> credited_mask(truth.objects.size(), 0);
  for (std::size_t idx : order) {
    const Declaration& decl = declarations[idx];
    TruthMatch match;
    bool any_credited = false;
    if (best_match(truth, credited_mask, decl.frame, decl.box, decl.label, iou_lim,
                   &match, &any_credited)) {
      credited_mask[match.object_index] = 1;
      result.credited[truth.objects[match.object_index].id] = decl.frame;
      result.correct.push_back(idx);
    } else if (any_credited) {
      result.ignored.push_back(idx);
    } else {
      result.false_alarms.push_back(idx);
    }
  }
  return result;
}

std::map<std::int64_t, double> delays(const MatchResult& match, const GroundTruth& truth) {
  std::map<std::int64_t, double> out;
  for (const GroundTruthObject& obj : truth.objects) {
    auto it = match.credited.find(obj.id);
    if (it != match.credited.end()) {
      out[obj.id] = static_cast<double>(it->second - obj.appear_frame);
    } else {
      out[obj.id] = static_cast<double>(obj.disappear_frame - obj.appear_frame);
    }
  }
  return out;
}

EvalReport evaluate(std::span<const Declaration> declarations, const GroundTruth& truth,
                    double iou_lim, double threshold) {
  const MatchResult match = match_declarations(declarations, truth, iou_lim);

  EvalReport report;
  report.threshold = threshold;
  report.n_correct = static_cast<std::int64_t>(match.correct.size());
  report.n_false_alarms = static_cast<std::int64_t>(match.false_alarms.size());
  report.n_declared = report.n_correct + report.n_false_alarms;
  report.far = static_cast<double>(report.n_false_alarms) /
               static_cast<double>(std::max<std::int64_t>(report.n_declared, 1));
  report.per_object_delays = delays(match, truth);
  report.n_objects = static_cast<std::int64_t>(truth.objects.size());
  double total = 0.0;
  for (const auto& [id, delay] : report.per_object_delays) total += delay;
  report.average_delay =
      report.n_objects > 0 ? total / static_cast<double>(report.n_objects) : 0.0;
  return report;
}

EvalReport baseline_single_frame(std::span<const FrameData> frames, const GroundTruth& truth,
                                 double score_threshold, double iou_lim) {
  struct Group {
    std::vector<BoundingBox> last_boxes;
    std::int64_t last_frame = -1;
    bool correct = false;
    bool touched_credited = false;
  };
  std::vector<Group> groups;
  std::vector<char> credited_mask(truth.objects.size(), 0);
  std::map<std::int64_t, std::int64_t> credited;  // object id -> frame

  for (const FrameData& frame : frames) {
    // (group index, boxes assigned this frame); -1 opens a new group
    std::vector<std::pair<std::ptrdiff_t, BoundingBox>> assignments;

    for (const Detection& det : frame.detections) {
      double score = 0.0;
      int label = 0;
      for (std::size_t i = 1; i < det.probs.v.size(); ++i) {
        if (det.probs.v[i] > score) {
          score = det.probs.v[i];
          label = static_cast<int>(i);
        }
      }
      score *= det.mu;
      if (!(score > score_threshold)) continue;

      std::ptrdiff_t group_idx = -1;
      double best_overlap = iou_lim;
      for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].last_frame != frame.frame - 1) continue;
        for (const BoundingBox& prev : groups[g].last_boxes) {
          const double overlap = iou(det.box, prev);
          if (overlap > best_overlap) {
            best_overlap = overlap;
            group_idx = static_cast<std::ptrdiff_t>(g);
          }
        }
      }
      if (group_idx < 0) {
        groups.push_back(Group{});
        group_idx = static_cast<std::ptrdiff_t>(groups.size()) - 1;
      }
      Group& group = groups[static_cast<std::size_t>(group_idx)];
      assignments.emplace_back(group_idx, det.box);

      if (!group.correct) {
        TruthMatch match;
        bool any_credited = false;
        if (best_match(truth, credited_mask, frame.frame, det.box, label, iou_lim,
                       &match, &any_credited)) {
          credited_mask[match.object_index] = 1;
          credited[truth.objects[match.object_index].id] = frame.frame;
          group.correct = true;
        } else if (any_credited) {
          group.touched_credited = true;
        }
      }
    }

    for (auto& group : groups) {
      if (group.last_frame < frame.frame - 1) group.last_boxes.clear();
    }
    for (auto& [g, box] : assignments) {
      Group& group = groups[static_cast<std::size_t>(g)];
      if (group.last_frame != frame.frame) {
        group.last_boxes.clear();
        group.last_frame = frame.frame;
      }
      group.last_boxes.push_back(box);
    }
  }

  EvalReport report;
  report.threshold = score_threshold;
  for (const Group& group : groups) {
    if (group.correct) {
      ++report.n_correct;
    } else if (!group.touched_credited) {
      ++report.n_false_alarms;
    }
  }
  report.n_declared = report.n_correct + report.n_false_alarms;
  report.far = static_cast<double>(report.n_false_alarms) /
               static_cast<double>(std::max<std::int64_t>(report.n_declared, 1));
  report.n_objects = static_cast<std::int64_t>(truth.objects.size());
  double total = 0.0;
  for (const GroundTruthObject& obj : truth.objects) {
    auto it = credited.find(obj.id);
    const double d = it != credited.end()
                         ? static_cast<double>(it->second - obj.appear_frame)
                         : static_cast<double>(obj.disappear_frame - obj.appear_frame);
    report.per_object_delays[obj.id] = d;
    total += d;
  }
  report.average_delay =
      report.n_objects > 0 ? total / static_cast<double>(report.n_objects) : 0.0;
  return report;
}

namespace {

// Run fn(case_index) across a bounded pool, results collected by index.
void parallel_cases(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (n_workers == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= n) return;
        fn(k);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

struct RecordedCase {
  std::vector<TrackRecord> records;
  double total_ms = 0.0;
  std::size_t n_frames = 0;
};

RecordedCase record_case(std::span<const FrameData> frames, DetectorConfig config,
                         DetectorMode mode) {
  config.retire_on_declare = false;
  config.threshold = std::numeric_limits<double>::max();
  Detector det(std::move(config), mode);
  det.set_recording(true);

  RecordedCase out;
  const auto start = std::chrono::steady_clock::now();
  for (const FrameData& frame : frames) det.step(frame);
  const auto stop = std::chrono::steady_clock::now();
  out.total_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  out.n_frames = frames.size();
  out.records = det.records();
  return out;
}

std::vector<Declaration> declarations_from_records(std::span<const TrackRecord> records,
                                                   double threshold) {
  std::vector<Declaration> out;
  for (const TrackRecord& rec : records) {
    for (const StatPoint& point : rec.path) {
      if (point.statistic > threshold) {
        out.push_back(Declaration{rec.trajectory_id, point.frame, point.box, point.label,
                                  point.statistic, rec.spawn_frame});
        break;
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Declaration& a, const Declaration& b) {
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.trajectory_id < b.trajectory_id;
  });
  return out;
}

EvalReport merge_reports(std::span<const EvalReport> parts, double threshold,
                         double total_ms, std::size_t total_frames) {
  EvalReport merged;
  merged.threshold = threshold;
  double delay_total = 0.0;
  for (const EvalReport& part : parts) {
    merged.n_declared += part.n_declared;
    merged.n_correct += part.n_correct;
    merged.n_false_alarms += part.n_false_alarms;
    merged.n_objects += part.n_objects;
    delay_total += part.average_delay * static_cast<double>(part.n_objects);
  }
  merged.far = static_cast<double>(merged.n_false_alarms) /
               static_cast<double>(std::max<std::int64_t>(merged.n_declared, 1));
  merged.average_delay =
      merged.n_objects > 0 ? delay_total / static_cast<double>(merged.n_objects) : 0.0;
  merged.mean_runtime_ms_per_frame =
      total_frames > 0 ? total_ms / static_cast<double>(total_frames) : 0.0;
  return merged;
}

}  // namespace

std::vector<EvalReport> sweep(std::span<const StreamCase> cases, const DetectorConfig& config,
                              DetectorMode mode, std::span<const double> thresholds,
                              const SweepOptions& options) {
  std::vector<EvalReport> out;
  out.reserve(thresholds.size());

  if (!options.rerun_per_threshold) {
    std::vector<RecordedCase> recorded(cases.size());
    parallel_cases(cases.size(), options.workers, [&](std::size_t k) {
      recorded[k] = record_case(cases[k].frames, config, mode);
    });
    double total_ms = 0.0;
    std::size_t total_frames = 0;
    for (const RecordedCase& rc : recorded) {
      total_ms += rc.total_ms;
      total_frames += rc.n_frames;
    }
    for (double h : thresholds) {
      std::vector<EvalReport> parts(cases.size());
      for (std::size_t k = 0; k < cases.size(); ++k) {
        const std::vector<Declaration> decls =
            declarations_from_records(recorded[k].records, h);
        parts[k] = evaluate(decls, cases[k].truth, config.iou_lim, h);
      }
      out.push_back(merge_reports(parts, h, total_ms, total_frames));
    }
    return out;
  }

  for (double h : thresholds) {
    std::vector<EvalReport> parts(cases.size());
    std::vector<double> case_ms(cases.size(), 0.0);
    std::size_t total_frames = 0;
    for (const StreamCase& sc : cases) total_frames += sc.frames.size();
    parallel_cases(cases.size(), options.workers, [&](std::size_t k) {
      DetectorConfig cfg = config;
      cfg.threshold = h;
      cfg.retire_on_declare = false;
      Detector det(std::move(cfg), mode);
      const auto start = std::chrono::steady_clock::now();
      for (const FrameData& frame : cases[k].frames) det.step(frame);
      const auto stop = std::chrono::steady_clock::now();
      case_ms[k] = std::chrono::duration<double, std::milli>(stop - start).count();
      parts[k] = evaluate(det.declarations(), cases[k].truth, config.iou_lim, h);
    });
    const double total_ms = std::accumulate(case_ms.begin(), case_ms.end(), 0.0);
    out.push_back(merge_reports(parts, h, total_ms, total_frames));
  }
  return out;
}

std::vector<EvalReport> baseline_sweep(std::span<const StreamCase> cases,
                                       std::span<const double> score_thresholds,
                                       double iou_lim) {
  std::vector<EvalReport> out;
  out.reserve(score_thresholds.size());
  std::size_t total_frames = 0;
  for (const StreamCase& sc : cases) total_frames += sc.frames.size();

  for (double h : score_thresholds) {
    std::vector<EvalReport> parts(cases.size());
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t k = 0; k < cases.size(); ++k) {
      parts[k] = baseline_single_frame(cases[k].frames, cases[k].truth, h, iou_lim);
    }
    const auto stop = std::chrono::steady_clock::now();
    const double total_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    out.push_back(merge_reports(parts, h, total_ms, total_frames));
  }
  return out;
}

std::vector<double> mean_run_lengths(std::span<const std::vector<FrameData>> streams,
                                     const DetectorConfig& config, DetectorMode mode,
                                     std::span<const double> thresholds) {
  std::vector<std::vector<double>> lengths(thresholds.size());
  for (const std::vector<FrameData>& frames : streams) {
    const RecordedCase recorded = record_case(frames, config, mode);
    for (std::size_t hi = 0; hi < thresholds.size(); ++hi) {
      const std::vector<Declaration> decls =
          declarations_from_records(recorded.records, thresholds[hi]);
      double run = static_cast<double>(frames.size());
      if (!decls.empty() && !frames.empty()) {
        run = static_cast<double>(decls.front().frame - frames.front().frame + 1);
      }
      lengths[hi].push_back(run);
    }
  }
  std::vector<double> means(thresholds.size(), 0.0);
  for (std::size_t hi = 0; hi < thresholds.size(); ++hi) {
    if (!lengths[hi].empty()) {
      means[hi] = std::accumulate(lengths[hi].begin(), lengths[hi].end(), 0.0) /
                  static_cast<double>(lengths[hi].size());
    }
  }
  return means;
}

}  // namespace quickdet
