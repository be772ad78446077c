#include <chrono>
#include <iostream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "quickdet/detector.hpp"
#include "quickdet/eval.hpp"
#include "quickdet/io.hpp"
#include "quickdet/synth.hpp"

namespace {

using namespace quickdet;

struct DetectorFlags {
  double threshold = 2.0;
  double iou_lim = 0.5;
  double c = 0.0;  // 0: pre-scan the stream
  double lambda = 50.0;
  double nms_iou = 0.5;
  int map_sweeps = 2;
  bool retire = true;
  std::string mode = "recursive";
};

void add_detector_flags(CLI::App* cmd, DetectorFlags* flags) {
  cmd->add_option("--threshold", flags->threshold, "Declaration threshold (log domain)")
      ->capture_default_str();
  cmd->add_option("--iou-lim", flags->iou_lim, "Overlap indicator limit")
      ->capture_default_str();
  cmd->add_option("--c", flags->c,
                  "Unobserved-box evidence constant; 0 selects 2x the largest "
                  "overlapping confidence mass found in the stream");
  cmd->add_option("--lambda", flags->lambda, "Smoothness weight")->capture_default_str();
  cmd->add_option("--nms-iou", flags->nms_iou, "NMS overlap limit")->capture_default_str();
  cmd->add_option("--map-sweeps", flags->map_sweeps, "Coordinate-ascent sweeps (full mode)")
      ->capture_default_str();
  cmd->add_flag("--retire,!--no-retire", flags->retire,
                "Remove a trajectory once it declares")
      ->capture_default_str();
  cmd->add_option("--mode", flags->mode, "recursive or full")
      ->check(CLI::IsMember({"recursive", "full"}))
      ->capture_default_str();
}

DetectorConfig make_config(const DetectorFlags& flags, int n_classes,
                           std::span<const FrameData> frames_for_prescan) {
  DetectorConfig cfg = DetectorConfig::with_uniform_priors(n_classes);
  cfg.threshold = flags.threshold;
  cfg.iou_lim = flags.iou_lim;
  cfg.lambda = flags.lambda;
  cfg.nms_iou = flags.nms_iou;
  cfg.map_sweeps = flags.map_sweeps;
  cfg.retire_on_declare = flags.retire;
  cfg.c = flags.c > 0.0 ? flags.c : suggest_c(frames_for_prescan, flags.iou_lim);
  return cfg;
}

DetectorMode parse_mode(const std::string& mode) {
  return mode == "full" ? DetectorMode::full : DetectorMode::recursive;
}

int run_synth(const std::string& spec_path, const std::string& stream_path,
              const std::string& truth_path, bool null_only, std::int64_t seed_override) {
  ScenarioSpec spec = read_scenario(spec_path);
  if (seed_override >= 0) spec.seed = static_cast<std::uint64_t>(seed_override);

  if (null_only) {
    const std::vector<FrameData> frames = null_stream(spec);
    write_stream(stream_path, frames, spec.n_classes);
    if (!truth_path.empty()) write_ground_truth(truth_path, GroundTruth{}, spec.n_classes);
  } else {
    const SynthResult result = generate(spec);
    write_stream(stream_path, result.frames, spec.n_classes);
    if (!truth_path.empty()) write_ground_truth(truth_path, result.truth, spec.n_classes);
  }
  return 0;
}

int run_detect(const std::string& stream_path, const std::string& out_path,
               const std::string& timing_path, const DetectorFlags& flags) {
  StreamHeader header;
  const std::vector<FrameData> frames = read_stream(stream_path, &header);
  const DetectorConfig cfg = make_config(flags, header.n_classes, frames);

  Detector det(cfg, parse_mode(flags.mode));
  std::vector<FrameTiming> timings;
  timings.reserve(frames.size());
  for (const FrameData& frame : frames) {
    const auto start = std::chrono::steady_clock::now();
    det.step(frame);
    const auto stop = std::chrono::steady_clock::now();
    timings.push_back(FrameTiming{
        frame.frame, std::chrono::duration<double, std::milli>(stop - start).count(),
        det.live_trajectories()});
  }

  if (!out_path.empty()) write_declarations(out_path, det.declarations());
  if (!timing_path.empty()) write_timing_csv(timing_path, timings);
  std::cout << "frames: " << frames.size() << "  declarations: " << det.declarations().size()
            << "  live trajectories at end: " << det.live_trajectories() << "\n";
  return 0;
}

int run_eval(const std::string& decl_path, const std::string& truth_path, double iou_lim,
             const std::string& csv_path, double threshold) {
  const std::vector<Declaration> decls = read_declarations(decl_path);
  const GroundTruth truth = read_ground_truth(truth_path);
  const EvalReport report = evaluate(decls, truth, iou_lim, threshold);

  std::cout << "declared:      " << report.n_declared << "\n"
            << "correct:       " << report.n_correct << "\n"
            << "false alarms:  " << report.n_false_alarms << "\n"
            << "far:           " << report.far << "\n"
            << "average delay: " << report.average_delay << " frames over "
            << report.n_objects << " objects\n";
  if (!csv_path.empty()) {
    write_sweep_csv(csv_path, std::span<const EvalReport>(&report, 1));
  }
  return 0;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::string token;
  std::stringstream ss(text);
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) grid.push_back(std::stod(token));
  }
  if (grid.empty()) throw CLI::ValidationError("--thresholds", "empty grid");
  return grid;
}

int run_sweep(const std::vector<std::string>& stream_paths,
              const std::vector<std::string>& truth_paths, const std::string& grid_text,
              const std::string& out_path, bool with_baseline,
              const std::string& baseline_grid_text, const std::string& baseline_out,
              int workers, bool rerun, const DetectorFlags& flags) {
  if (stream_paths.size() != truth_paths.size()) {
    throw DataError("need one --truth per --stream");
  }

  std::vector<StreamCase> cases;
  int n_classes = 0;
  for (std::size_t k = 0; k < stream_paths.size(); ++k) {
    StreamHeader header;
    StreamCase sc;
    sc.frames = read_stream(stream_paths[k], &header);
    sc.truth = read_ground_truth(truth_paths[k]);
    if (k == 0) {
      n_classes = header.n_classes;
    } else if (header.n_classes != n_classes) {
      throw DataError("streams disagree on n_classes");
    }
    cases.push_back(std::move(sc));
  }

  std::vector<FrameData> all_frames;
  for (const StreamCase& sc : cases) {
    all_frames.insert(all_frames.end(), sc.frames.begin(), sc.frames.end());
  }
  DetectorConfig cfg = make_config(flags, n_classes, all_frames);
  all_frames.clear();
  all_frames.shrink_to_fit();

  const std::vector<double> grid = parse_grid(grid_text);
  SweepOptions options;
  options.workers = workers;
  options.rerun_per_threshold = rerun;
  const std::vector<EvalReport> curve =
      sweep(cases, cfg, parse_mode(flags.mode), grid, options);
  write_sweep_csv(out_path, curve);
  std::cout << "wrote " << curve.size() << " detector rows to " << out_path << "\n";

  if (with_baseline) {
    const std::vector<double> bgrid = parse_grid(baseline_grid_text);
    const std::vector<EvalReport> bcurve = baseline_sweep(cases, bgrid, flags.iou_lim);
    write_sweep_csv(baseline_out, bcurve);
    std::cout << "wrote " << bcurve.size() << " baseline rows to " << baseline_out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming minimum-delay object detection over single-frame detector output"};
  app.require_subcommand(1);

  // synth
  std::string spec_path, stream_out, truth_out;
  bool null_only = false;
  std::int64_t seed_override = -1;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic detection stream");
  synth->add_option("--spec", spec_path, "Scenario spec (JSON)")->required();
  synth->add_option("--stream", stream_out, "Output stream path (JSONL)")->required();
  synth->add_option("--truth", truth_out, "Output ground-truth path (JSONL)");
  synth->add_flag("--null", null_only, "Clutter only; ignore scripted objects");
  synth->add_option("--seed", seed_override, "Override the spec seed");

  // detect
  std::string det_stream, det_out, det_timing;
  DetectorFlags det_flags;
  CLI::App* detect = app.add_subcommand("detect", "Run the detector over a stream file");
  detect->add_option("--stream", det_stream, "Input stream (JSONL)")->required();
  detect->add_option("--out", det_out, "Declarations output (JSONL)");
  detect->add_option("--timing-log", det_timing, "Per-frame timing CSV");
  add_detector_flags(detect, &det_flags);

  // eval
  std::string eval_decls, eval_truth, eval_csv;
  double eval_iou = 0.5;
  double eval_threshold = std::numeric_limits<double>::quiet_NaN();
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score declarations against ground truth");
  eval_cmd->add_option("--declarations", eval_decls, "Declarations file (JSONL)")->required();
  eval_cmd->add_option("--truth", eval_truth, "Ground-truth file (JSONL)")->required();
  eval_cmd->add_option("--iou-lim", eval_iou, "Matching overlap limit")->capture_default_str();
  eval_cmd->add_option("--csv", eval_csv, "Write the report as one CSV row");
  eval_cmd->add_option("--threshold", eval_threshold, "Threshold recorded in the CSV row");

  // sweep
  std::vector<std::string> sweep_streams, sweep_truths;
  std::string sweep_grid, sweep_out = "curve.csv";
  bool sweep_baseline = false, sweep_rerun = false;
  std::string sweep_bgrid = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  std::string sweep_bout = "baseline.csv";
  int sweep_workers = 1;
  DetectorFlags sweep_flags;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "FAR-vs-delay curve over a threshold grid");
  sweep_cmd->add_option("--stream", sweep_streams, "Stream file; repeatable")->required();
  sweep_cmd->add_option("--truth", sweep_truths, "Ground-truth file; repeatable")->required();
  sweep_cmd->add_option("--thresholds", sweep_grid, "Comma-separated threshold grid")
      ->required();
  sweep_cmd->add_option("--out", sweep_out, "Detector curve CSV")->capture_default_str();
  sweep_cmd->add_flag("--baseline", sweep_baseline, "Also sweep the single-frame baseline");
  sweep_cmd->add_option("--baseline-thresholds", sweep_bgrid, "Baseline score grid")
      ->capture_default_str();
  sweep_cmd->add_option("--baseline-out", sweep_bout, "Baseline curve CSV")
      ->capture_default_str();
  sweep_cmd->add_option("--workers", sweep_workers, "Concurrent streams")
      ->capture_default_str();
  sweep_cmd->add_flag("--rerun", sweep_rerun,
                      "Re-run the detector per threshold instead of post-hoc thresholding");
  add_detector_flags(sweep_cmd, &sweep_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      return run_synth(spec_path, stream_out, truth_out, null_only, seed_override);
    }
    if (detect->parsed()) {
      return run_detect(det_stream, det_out, det_timing, det_flags);
    }
    if (eval_cmd->parsed()) {
      return run_eval(eval_decls, eval_truth, eval_iou, eval_csv, eval_threshold);
    }
    if (sweep_cmd->parsed()) {
      return run_sweep(sweep_streams, sweep_truths, sweep_grid, sweep_out, sweep_baseline,
                       sweep_bgrid, sweep_bout, sweep_workers, sweep_rerun, sweep_flags);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
