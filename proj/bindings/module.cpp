#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "quickdet/detector.hpp"
#include "quickdet/eval.hpp"
#include "quickdet/evidence.hpp"
#include "quickdet/io.hpp"
#include "quickdet/synth.hpp"
#include "quickdet/trajectory.hpp"

namespace py = pybind11;
using namespace quickdet;

PYBIND11_MODULE(_quickdet, m) {
  m.doc() = "Streaming minimum-delay object detection over single-frame detector output";

  py::register_exception<DataError>(m, "DataError");
  py::register_exception<ConfigError>(m, "ConfigError");

  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init<>())
      .def(py::init([](double x, double y, double lx, double ly) {
             return BoundingBox{x, y, lx, ly};
           }),
           py::arg("x"), py::arg("y"), py::arg("lx"), py::arg("ly"))
      .def_readwrite("x", &BoundingBox::x)
      .def_readwrite("y", &BoundingBox::y)
      .def_readwrite("lx", &BoundingBox::lx)
      .def_readwrite("ly", &BoundingBox::ly)
      .def("__eq__", [](const BoundingBox& a, const BoundingBox& b) { return a == b; })
      .def("__repr__", [](const BoundingBox& b) {
        return "BoundingBox(x=" + std::to_string(b.x) + ", y=" + std::to_string(b.y) +
               ", lx=" + std::to_string(b.lx) + ", ly=" + std::to_string(b.ly) + ")";
      });

  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def("indicator_overlap", &indicator_overlap, py::arg("a"), py::arg("b"),
        py::arg("iou_lim"));
  m.def(
      "predict_constant_velocity",
      [](const std::vector<BoundingBox>& boxes) { return predict_constant_velocity(boxes); },
      py::arg("boxes"));
  m.def("smoothness_penalty", &smoothness_penalty, py::arg("b_prev2"), py::arg("b_prev"),
        py::arg("b"));
  m.def("cusum_update", &cusum_update, py::arg("w"), py::arg("increment"));

  py::class_<ClassProbs>(m, "ClassProbs")
      .def(py::init<>())
      .def(py::init([](std::vector<double> v) { return ClassProbs{std::move(v)}; }),
           py::arg("v"))
      .def_readwrite("v", &ClassProbs::v);

  py::class_<Detection>(m, "Detection")
      .def(py::init<>())
      .def(py::init([](BoundingBox box, std::vector<double> probs, double mu) {
             return Detection{box, ClassProbs{std::move(probs)}, mu};
           }),
           py::arg("box"), py::arg("probs"), py::arg("mu") = 1.0)
      .def_readwrite("box", &Detection::box)
      .def_readwrite("probs", &Detection::probs)
      .def_readwrite("mu", &Detection::mu);

  py::class_<FrameData>(m, "FrameData")
      .def(py::init<>())
      .def(py::init([](std::int64_t frame, std::vector<Detection> detections) {
             return FrameData{frame, std::move(detections)};
           }),
           py::arg("frame"), py::arg("detections") = std::vector<Detection>{})
      .def_readwrite("frame", &FrameData::frame)
      .def_readwrite("detections", &FrameData::detections);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("id", &Trajectory::id)
      .def_readonly("spawn_frame", &Trajectory::spawn_frame)
      .def_readonly("boxes", &Trajectory::boxes)
      .def_readonly("w", &Trajectory::w);

  py::class_<DetectorConfig>(m, "DetectorConfig")
      .def(py::init<>())
      .def_static("with_uniform_priors", &DetectorConfig::with_uniform_priors,
                  py::arg("n_classes"))
      .def_readwrite("threshold", &DetectorConfig::threshold)
      .def_readwrite("iou_lim", &DetectorConfig::iou_lim)
      .def_readwrite("c", &DetectorConfig::c)
      .def_readwrite("priors", &DetectorConfig::priors)
      .def_readwrite("lambda_", &DetectorConfig::lambda)
      .def_readwrite("nms_iou", &DetectorConfig::nms_iou)
      .def_readwrite("map_sweeps", &DetectorConfig::map_sweeps)
      .def_readwrite("retire_on_declare", &DetectorConfig::retire_on_declare)
      .def_readwrite("class_reduction", &DetectorConfig::class_reduction)
      .def("n_classes", &DetectorConfig::n_classes)
      .def("validate", &DetectorConfig::validate);

  py::class_<Declaration>(m, "Declaration")
      .def_readonly("trajectory_id", &Declaration::trajectory_id)
      .def_readonly("frame", &Declaration::frame)
      .def_readonly("box", &Declaration::box)
      .def_readonly("label", &Declaration::label)
      .def_readonly("statistic", &Declaration::statistic)
      .def_readonly("spawn_frame", &Declaration::spawn_frame)
      .def("__repr__", [](const Declaration& d) {
        return "Declaration(frame=" + std::to_string(d.frame) +
               ", label=" + std::to_string(d.label) +
               ", statistic=" + std::to_string(d.statistic) + ")";
      });

  py::enum_<DetectorMode>(m, "DetectorMode")
      .value("recursive", DetectorMode::recursive)
      .value("full", DetectorMode::full);

  py::class_<StatPoint>(m, "StatPoint")
      .def_readonly("frame", &StatPoint::frame)
      .def_readonly("statistic", &StatPoint::statistic)
      .def_readonly("label", &StatPoint::label)
      .def_readonly("box", &StatPoint::box);

  py::class_<TrackRecord>(m, "TrackRecord")
      .def_readonly("trajectory_id", &TrackRecord::trajectory_id)
      .def_readonly("spawn_frame", &TrackRecord::spawn_frame)
      .def_readonly("path", &TrackRecord::path);

  py::class_<Detector>(m, "Detector")
      .def(py::init<DetectorConfig, DetectorMode>(), py::arg("config"),
           py::arg("mode") = DetectorMode::recursive)
      .def("step", &Detector::step, py::arg("frame_data"))
      .def("live_trajectories", &Detector::live_trajectories)
      .def("trajectories", &Detector::trajectories)
      .def("declarations", &Detector::declarations)
      .def("set_recording", &Detector::set_recording, py::arg("on"))
      .def("records", &Detector::records);

  m.def(
      "frame_evidence",
      [](const DetectorConfig& config, const FrameData& frame, const BoundingBox& box,
         int i) {
        EvidenceContext ctx{config, frame};
        return frame_evidence(ctx, box, i);
      },
      py::arg("config"), py::arg("frame_data"), py::arg("box"), py::arg("i"));
  m.def(
      "log_increment",
      [](const DetectorConfig& config, const FrameData& frame, const BoundingBox& box,
         int i) {
        EvidenceContext ctx{config, frame};
        return log_increment(ctx, box, i);
      },
      py::arg("config"), py::arg("frame_data"), py::arg("box"), py::arg("i"));
  m.def(
      "suggest_c",
      [](const std::vector<FrameData>& frames, double iou_lim) {
        return suggest_c(frames, iou_lim);
      },
      py::arg("frames"), py::arg("iou_lim"));
  m.def(
      "spawn_candidates", [](const FrameData& fd) { return spawn_candidates(fd); },
      py::arg("frame_data"));

  py::class_<BoxUpdate>(m, "BoxUpdate")
      .def_readonly("box", &BoxUpdate::box)
      .def_readonly("log_evidence", &BoxUpdate::log_evidence)
      .def_readonly("observed_index", &BoxUpdate::observed_index);

  m.def(
      "recursive_box_update",
      [](const DetectorConfig& config, const FrameData& frame,
         const std::vector<BoundingBox>& tail, const std::vector<int>& active_classes) {
        EvidenceContext ctx{config, frame};
        return recursive_box_update(ctx, tail, active_classes);
      },
      py::arg("config"), py::arg("frame_data"), py::arg("tail"), py::arg("active_classes"));

  py::class_<MapEstimate>(m, "MapEstimate")
      .def_readonly("boxes", &MapEstimate::boxes)
      .def_readonly("cum_log_increments", &MapEstimate::cum_log_increments)
      .def_readonly("objective", &MapEstimate::objective);

  m.def(
      "full_map_estimate",
      [](const std::vector<FrameData>& frames, const std::vector<BoundingBox>& init,
         const DetectorConfig& config, const std::vector<int>& active_classes) {
        return full_map_estimate(frames, init, config, active_classes);
      },
      py::arg("frames"), py::arg("init"), py::arg("config"), py::arg("active_classes"));

  py::class_<ObjectSpec>(m, "ObjectSpec")
      .def(py::init<>())
      .def_readwrite("class_id", &ObjectSpec::class_id)
      .def_readwrite("appear_frame", &ObjectSpec::appear_frame)
      .def_readwrite("disappear_frame", &ObjectSpec::disappear_frame)
      .def_readwrite("box", &ObjectSpec::box)
      .def_readwrite("vx", &ObjectSpec::vx)
      .def_readwrite("vy", &ObjectSpec::vy)
      .def_readwrite("vlx", &ObjectSpec::vlx)
      .def_readwrite("vly", &ObjectSpec::vly)
      .def_readwrite("miss_prob", &ObjectSpec::miss_prob)
      .def_readwrite("box_jitter_sigma", &ObjectSpec::box_jitter_sigma)
      .def_readwrite("prob_concentration", &ObjectSpec::prob_concentration)
      .def_readwrite("exact_prob", &ObjectSpec::exact_prob)
      .def_readwrite("mu_lo", &ObjectSpec::mu_lo)
      .def_readwrite("mu_hi", &ObjectSpec::mu_hi);

  py::class_<ScenarioSpec>(m, "ScenarioSpec")
      .def(py::init<>())
      .def_readwrite("n_classes", &ScenarioSpec::n_classes)
      .def_readwrite("n_frames", &ScenarioSpec::n_frames)
      .def_readwrite("objects", &ScenarioSpec::objects)
      .def_readwrite("clutter_rate", &ScenarioSpec::clutter_rate)
      .def_readwrite("clutter_uninformative", &ScenarioSpec::clutter_uninformative)
      .def_readwrite("clutter_concentration", &ScenarioSpec::clutter_concentration)
      .def_readwrite("seed", &ScenarioSpec::seed);

  py::class_<GroundTruthObject>(m, "GroundTruthObject")
      .def_readonly("id", &GroundTruthObject::id)
      .def_readonly("class_id", &GroundTruthObject::class_id)
      .def_readonly("appear_frame", &GroundTruthObject::appear_frame)
      .def_readonly("disappear_frame", &GroundTruthObject::disappear_frame)
      .def_readonly("boxes", &GroundTruthObject::boxes);

  py::class_<GroundTruth>(m, "GroundTruth")
      .def(py::init<>())
      .def_readwrite("objects", &GroundTruth::objects);

  py::class_<SynthResult>(m, "SynthResult")
      .def_readonly("frames", &SynthResult::frames)
      .def_readonly("truth", &SynthResult::truth);

  m.def("generate", &generate, py::arg("spec"));
  m.def("null_stream", &null_stream, py::arg("spec"));

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("threshold", &EvalReport::threshold)
      .def_readonly("n_declared", &EvalReport::n_declared)
      .def_readonly("n_correct", &EvalReport::n_correct)
      .def_readonly("n_false_alarms", &EvalReport::n_false_alarms)
      .def_readonly("far", &EvalReport::far)
      .def_readonly("average_delay", &EvalReport::average_delay)
      .def_readonly("n_objects", &EvalReport::n_objects)
      .def_readonly("per_object_delays", &EvalReport::per_object_delays)
      .def_readonly("mean_runtime_ms_per_frame", &EvalReport::mean_runtime_ms_per_frame);

  py::class_<StreamCase>(m, "StreamCase")
      .def(py::init<>())
      .def(py::init([](std::vector<FrameData> frames, GroundTruth truth) {
             return StreamCase{std::move(frames), std::move(truth)};
           }),
           py::arg("frames"), py::arg("truth"))
      .def_readwrite("frames", &StreamCase::frames)
      .def_readwrite("truth", &StreamCase::truth);

  m.def(
      "evaluate",
      [](const std::vector<Declaration>& decls, const GroundTruth& truth, double iou_lim,
         double threshold) { return evaluate(decls, truth, iou_lim, threshold); },
      py::arg("declarations"), py::arg("truth"), py::arg("iou_lim") = 0.5,
      py::arg("threshold") = 0.0);
  m.def(
      "baseline_single_frame",
      [](const std::vector<FrameData>& frames, const GroundTruth& truth,
         double score_threshold, double iou_lim) {
        return baseline_single_frame(frames, truth, score_threshold, iou_lim);
      },
      py::arg("frames"), py::arg("truth"), py::arg("score_threshold"),
      py::arg("iou_lim") = 0.5);
  m.def(
      "sweep",
      [](const std::vector<StreamCase>& cases, const DetectorConfig& config,
         DetectorMode mode, const std::vector<double>& thresholds, bool rerun, int workers) {
        SweepOptions options;
        options.rerun_per_threshold = rerun;
        options.workers = workers;
        return sweep(cases, config, mode, thresholds, options);
      },
      py::arg("cases"), py::arg("config"), py::arg("mode"), py::arg("thresholds"),
      py::arg("rerun") = false, py::arg("workers") = 1);
  m.def(
      "baseline_sweep",
      [](const std::vector<StreamCase>& cases, const std::vector<double>& grid,
         double iou_lim) { return baseline_sweep(cases, grid, iou_lim); },
      py::arg("cases"), py::arg("score_thresholds"), py::arg("iou_lim") = 0.5);
  m.def(
      "mean_run_lengths",
      [](const std::vector<std::vector<FrameData>>& streams, const DetectorConfig& config,
         DetectorMode mode, const std::vector<double>& thresholds) {
        return mean_run_lengths(streams, config, mode, thresholds);
      },
      py::arg("streams"), py::arg("config"), py::arg("mode"), py::arg("thresholds"));

  m.def(
      "write_stream",
      [](const std::string& path, const std::vector<FrameData>& frames, int n_classes) {
        write_stream(path, frames, n_classes);
      },
      py::arg("path"), py::arg("frames"), py::arg("n_classes"));
  m.def(
      "read_stream",
      [](const std::string& path) {
        StreamHeader header;
        std::vector<FrameData> frames = read_stream(path, &header);
        return py::make_tuple(frames, header.n_classes);
      },
      py::arg("path"));
  m.def("write_ground_truth", &write_ground_truth, py::arg("path"), py::arg("truth"),
        py::arg("n_classes"));
  m.def("read_ground_truth", &read_ground_truth, py::arg("path"));
  m.def(
      "write_declarations",
      [](const std::string& path, const std::vector<Declaration>& decls) {
        write_declarations(path, decls);
      },
      py::arg("path"), py::arg("declarations"));
  m.def("read_declarations", &read_declarations, py::arg("path"));
  m.def("read_scenario", &read_scenario, py::arg("path"));
  m.def("parse_scenario", &parse_scenario, py::arg("text"));

  m.attr("__version__") = "0.1.0";
}
