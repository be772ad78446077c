#include "quickdet/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace quickdet {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open for reading: " + path);
  return in;
}

json parse_line(const std::string& line, const std::string& path, std::size_t line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": invalid JSON");
  }
  return j;
}

// Translate json type/access errors into ParseError with location context.
template <typename Fn>
auto parsing(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
}

json box_to_json(const BoundingBox& b) {
  return json::array({b.x, b.y, b.lx, b.ly});
}

BoundingBox box_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw ParseError(where + ": box must be [x,y,lx,ly]");
  BoundingBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                j[3].get<double>()};
  return b;
}

void check_probs(const std::vector<double>& v, int n_classes, const std::string& where) {
  if (static_cast<int>(v.size()) != n_classes + 1) {
    throw ParseError(where + ": probs must have n_classes + 1 entries");
  }
  double sum = 0.0;
  for (double p : v) {
    if (p < 0.0 || p > 1.0) throw ParseError(where + ": prob components must be in [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw ParseError(where + ": probs must sum to 1");
}

}  // namespace

void write_stream(const std::string& path, std::span<const FrameData> frames, int n_classes) {
  std::ofstream out = open_out(path);
  json header = {{"format", "quickdet-stream"},
                 {"version", kFormatVersion},
                 {"n_classes", n_classes},
                 {"units", "normalized"}};
  out << header.dump() << "\n";
  for (const FrameData& frame : frames) {
    json dets = json::array();
    for (const Detection& det : frame.detections) {
      dets.push_back({{"box", box_to_json(det.box)}, {"probs", det.probs.v}, {"mu", det.mu}});
    }
    json record = {{"frame", frame.frame}, {"detections", std::move(dets)}};
    out << record.dump() << "\n";
  }
}

std::vector<FrameData> read_stream(const std::string& path, StreamHeader* header) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError(path + ": empty file, header expected");
  ++line_no;
  json h = parse_line(line, path, line_no);
  if (h.value("format", "") != "quickdet-stream" || h.value("version", 0) != kFormatVersion) {
    throw ParseError(path + ": not a quickdet-stream v1 file");
  }
  const int n_classes = h.value("n_classes", -1);
  if (n_classes < 1) throw ParseError(path + ": header must declare n_classes >= 1");
  const std::string units = h.value("units", "normalized");
  const bool pixel = units == "pixel";
  if (!pixel && units != "normalized") throw ParseError(path + ": unknown units: " + units);
  if (header) *header = StreamHeader{n_classes, pixel};

  std::vector<FrameData> frames;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json j = parse_line(line, path, line_no);

    FrameData frame = parsing(where, [&] {
      FrameData out;
      out.frame = j.value("frame", std::int64_t{-1});
      if (out.frame < 0) throw ParseError(where + ": missing or negative frame index");

      double width = 1.0;
      double height = 1.0;
      if (pixel) {
        width = j.value("width", 0.0);
        height = j.value("height", 0.0);
        if (width <= 0.0 || height <= 0.0) {
          throw ParseError(where + ": pixel streams need positive width and height");
        }
      }

      if (!j.contains("detections") || !j["detections"].is_array()) {
        throw ParseError(where + ": missing detections array");
      }
      for (const json& dj : j["detections"]) {
        Detection det;
        det.box = box_from_json(dj.at("box"), where);
        det.box.x /= width;
        det.box.lx /= width;
        det.box.y /= height;
        det.box.ly /= height;
        if (!det.box.valid()) throw ParseError(where + ": box scales must be positive");
        det.probs.v = dj.at("probs").get<std::vector<double>>();
        check_probs(det.probs.v, n_classes, where);
        det.mu = dj.value("mu", 1.0);
        if (det.mu < 0.0) throw ParseError(where + ": mu must be >= 0");
        out.detections.push_back(std::move(det));
      }
      return out;
    });

    if (!frames.empty() && frame.frame != frames.back().frame + 1) {
      throw FrameGap(frames.back().frame + 1, frame.frame);
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

void write_ground_truth(const std::string& path, const GroundTruth& truth, int n_classes) {
  std::ofstream out = open_out(path);
  json header = {{"format", "quickdet-truth"},
                 {"version", kFormatVersion},
                 {"n_classes", n_classes}};
  out << header.dump() << "\n";
  for (const GroundTruthObject& obj : truth.objects) {
    json boxes = json::array();
    for (const BoundingBox& b : obj.boxes) boxes.push_back(box_to_json(b));
    json record = {{"id", obj.id},
                   {"class_id", obj.class_id},
                   {"appear_frame", obj.appear_frame},
                   {"disappear_frame", obj.disappear_frame},
                   {"boxes", std::move(boxes)}};
    out << record.dump() << "\n";
  }
}

GroundTruth read_ground_truth(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError(path + ": empty file, header expected");
  ++line_no;
  json h = parse_line(line, path, line_no);
  if (h.value("format", "") != "quickdet-truth" || h.value("version", 0) != kFormatVersion) {
    throw ParseError(path + ": not a quickdet-truth v1 file");
  }

  GroundTruth truth;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json j = parse_line(line, path, line_no);

    GroundTruthObject obj = parsing(where, [&] {
      GroundTruthObject out;
      out.id = j.at("id").get<std::int64_t>();
      out.class_id = j.at("class_id").get<int>();
      out.appear_frame = j.at("appear_frame").get<std::int64_t>();
      out.disappear_frame = j.at("disappear_frame").get<std::int64_t>();
      if (out.disappear_frame < out.appear_frame) {
        throw ParseError(where + ": disappear_frame before appear_frame");
      }
      for (const json& bj : j.at("boxes")) out.boxes.push_back(box_from_json(bj, where));
      const auto expected =
          static_cast<std::size_t>(out.disappear_frame - out.appear_frame) + 1;
      if (out.boxes.size() != expected) {
        throw ParseError(where + ": need one box per frame in [appear, disappear]");
      }
      return out;
    });
    truth.objects.push_back(std::move(obj));
  }
  return truth;
}

void write_declarations(const std::string& path, std::span<const Declaration> declarations) {
  std::ofstream out = open_out(path);
  json header = {{"format", "quickdet-declarations"}, {"version", kFormatVersion}};
  out << header.dump() << "\n";
  for (const Declaration& d : declarations) {
    json record = {{"trajectory_id", d.trajectory_id}, {"frame", d.frame},
                   {"box", box_to_json(d.box)},        {"label", d.label},
                   {"statistic", d.statistic},         {"spawn_frame", d.spawn_frame}};
    out << record.dump() << "\n";
  }
}

std::vector<Declaration> read_declarations(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError(path + ": empty file, header expected");
  ++line_no;
  json h = parse_line(line, path, line_no);
  if (h.value("format", "") != "quickdet-declarations" ||
      h.value("version", 0) != kFormatVersion) {
    throw ParseError(path + ": not a quickdet-declarations v1 file");
  }

  std::vector<Declaration> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json j = parse_line(line, path, line_no);
    out.push_back(parsing(where, [&] {
      Declaration d;
      d.trajectory_id = j.at("trajectory_id").get<std::int64_t>();
      d.frame = j.at("frame").get<std::int64_t>();
      d.box = box_from_json(j.at("box"), where);
      d.label = j.at("label").get<int>();
      d.statistic = j.at("statistic").get<double>();
      d.spawn_frame = j.at("spawn_frame").get<std::int64_t>();
      return d;
    }));
  }
  return out;
}

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw InvalidSpec(where + ": unknown key '" + item.key() + "'");
  }
}

ScenarioSpec scenario_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"n_classes", "n_frames", "seed", "clutter_rate",
                       "clutter_uninformative", "clutter_concentration", "objects"},
                      "scenario");

  ScenarioSpec spec;
  spec.n_classes = j.value("n_classes", 1);
  spec.n_frames = j.value("n_frames", std::int64_t{0});
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.clutter_rate = j.value("clutter_rate", 0.0);
  spec.clutter_uninformative = j.value("clutter_uninformative", false);
  spec.clutter_concentration = j.value("clutter_concentration", 8.0);

  for (const json& oj : j.value("objects", json::array())) {
    reject_unknown_keys(oj,
                        {"class_id", "appear_frame", "disappear_frame", "box", "velocity",
                         "miss_prob", "box_jitter_sigma", "prob_concentration",
                         "exact_prob", "mu_range"},
                        "scenario object");
    ObjectSpec obj;
    obj.class_id = oj.value("class_id", 1);
    obj.appear_frame = oj.value("appear_frame", std::int64_t{0});
    obj.disappear_frame = oj.value("disappear_frame", std::int64_t{0});
    obj.box = box_from_json(oj.at("box"), "scenario object");
    if (oj.contains("velocity")) {
      const json& vj = oj["velocity"];
      if (!vj.is_array() || vj.size() != 4) {
        throw InvalidSpec("scenario object: velocity must be [vx,vy,vlx,vly]");
      }
      obj.vx = vj[0].get<double>();
      obj.vy = vj[1].get<double>();
      obj.vlx = vj[2].get<double>();
      obj.vly = vj[3].get<double>();
    }
    obj.miss_prob = oj.value("miss_prob", 0.0);
    obj.box_jitter_sigma = oj.value("box_jitter_sigma", 0.0);
    obj.prob_concentration = oj.value("prob_concentration", 10.0);
    obj.exact_prob = oj.value("exact_prob", 0.0);
    if (oj.contains("mu_range")) {
      const json& mj = oj["mu_range"];
      if (!mj.is_array() || mj.size() != 2) {
        throw InvalidSpec("scenario object: mu_range must be [lo,hi]");
      }
      obj.mu_lo = mj[0].get<double>();
      obj.mu_hi = mj[1].get<double>();
    }
    spec.objects.push_back(obj);
  }
  return spec;
}

}  // namespace

ScenarioSpec parse_scenario(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw InvalidSpec("scenario: invalid JSON");
  try {
    return scenario_from_json(j);
  } catch (const json::exception& e) {
    throw InvalidSpec(std::string("scenario: ") + e.what());
  }
}

ScenarioSpec read_scenario(const std::string& path) {
  std::ifstream in = open_in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_scenario(buffer.str());
  } catch (const InvalidSpec& e) {
    throw InvalidSpec(path + ": " + e.what());
  }
}

void write_timing_csv(const std::string& path, std::span<const FrameTiming> timings) {
  std::ofstream out = open_out(path);
  out << "frame,millis,live_trajectories\n";
  for (const FrameTiming& t : timings) {
    out << t.frame << "," << t.millis << "," << t.live_trajectories << "\n";
  }
}

void write_sweep_csv(const std::string& path, std::span<const EvalReport> reports) {
  std::ofstream out = open_out(path);
  out << "threshold,n_declared,n_correct,n_false_alarms,far,average_delay,"
         "mean_runtime_per_frame\n";
  for (const EvalReport& r : reports) {
    out << r.threshold << "," << r.n_declared << "," << r.n_correct << ","
        << r.n_false_alarms << "," << r.far << "," << r.average_delay << ","
        << r.mean_runtime_ms_per_frame << "\n";
  }
}

}  // namespace quickdet
