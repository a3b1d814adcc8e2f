#include "aos/mission_io.hpp"

#include "aos/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <istream>
#include <ostream>

namespace aos {

using nlohmann::json;

namespace {

json to_json(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }
json to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const Pose& p) {
  return json::array({p.position.x(), p.position.y(), p.position.z(), p.yaw_deg, p.pitch_deg, p.roll_deg});
}

json to_json(const Detection& d) {
  return {{"bbox", {d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max}},
          {"confidence", d.confidence},
          {"world", to_json(d.world_center)},
          {"area_px", d.area_px},
          {"peak", d.peak}};
}

json cell_json(const std::optional<CellId>& c) { return c ? json::array({c->row, c->col}) : json(nullptr); }

struct PayloadWriter {
  json& j;
  const MissionLog& log;
  void operator()(const TransitEvent& e) const {
    j["from"] = to_json(e.from);
    j["to"] = to_json(e.to);
    j["length_m"] = e.length_m;
  }
  void operator()(const SampleEvent& e) const {
    j["sample"] = e.sample_index;
    j["true_pose"] = to_json(e.true_pose);
    j["measured_pose"] = to_json(e.measured_pose);
  }
  void operator()(const IntegrateEvent& e) const {
    const auto& rec = log.integrals.at(static_cast<std::size_t>(e.integral_id));
    j["integral"] = e.integral_id;
    j["purpose"] = to_string(e.purpose);
    j["frames"] = e.frames;
    j["leg_length_m"] = e.leg_length_m;
    j["virtual_pose"] = to_json(rec.virtual_pose);
    j["valid_pixels"] = rec.valid_pixels;
    j["registration_shift"] = to_json(rec.registration_shift);
    j["file"] = integral_file_name(e.integral_id);
  }
  void operator()(const DetectEvent& e) const {
    j["integral"] = e.integral_id;
    json dets = json::array();
    for (const auto& d : e.detections) dets.push_back(to_json(d));
    j["detections"] = std::move(dets);
  }
  void operator()(const ResampleEvent& e) const {
    j["source_integral"] = e.source_integral;
    j["detection"] = e.detection_index;
    j["center"] = to_json(e.center);
    j["heading_deg"] = e.heading_deg;
    j["integral"] = e.integral_id >= 0 ? json(e.integral_id) : json(nullptr);
  }
  void operator()(const ConfirmEvent& e) const {
    j["source_integral"] = e.source_integral;
    j["detection"] = e.detection_index;
    j["resample_integral"] = e.resample_integral >= 0 ? json(e.resample_integral) : json(nullptr);
    j["c0"] = e.record.initial_confidence;
    j["c1"] = e.record.resampled_confidence;
    j["delta_c"] = e.record.delta();
    j["verdict"] = to_string(e.record.verdict);
    j["world"] = to_json(e.world_position);
  }
  void operator()(const StopEvent& e) const { j["reason"] = to_string(e.reason); }
};

Eigen::Vector2d vec2(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

Eigen::Vector3d vec3(const json& j) {
  if (j.at(0).is_null()) return Eigen::Vector3d::Constant(std::nan(""));
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

Pose pose(const json& j) {
  Pose p;
  p.position = {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
  p.yaw_deg = j.at(3).get<double>();
  p.pitch_deg = j.at(4).get<double>();
  p.roll_deg = j.at(5).get<double>();
  return p;
}

IntegralPurpose purpose_from(const std::string& s) {
  if (s == "segment") return IntegralPurpose::segment;
  if (s == "scan") return IntegralPurpose::scan;
  if (s == "resample") return IntegralPurpose::resample;
  throw Error("unknown integral purpose '" + s + "'");
}

}  // namespace

std::string integral_file_name(int id) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "integrals/integral_%03d.pgm", id);
  return buf;
}

std::string integral_sidecar_name(int id) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "integrals/integral_%03d.txt", id);
  return buf;
}

void write_mission_log(std::ostream& out, const MissionLog& log) {
  out << json{{"kind", "mission"}, {"mission_id", log.mission_id}}.dump() << '\n';
  for (const auto& ev : log.events) {
    json j;
    j["kind"] = event_kind(ev.payload);
    j["t"] = ev.timestamp_s;
    j["cell"] = cell_json(ev.cell);
    j["path_m"] = ev.path_length_m;
    std::visit(PayloadWriter{j, log}, ev.payload);
    out << j.dump() << '\n';
  }
  json summary{{"kind", "summary"},
               {"path_length_m", log.path_length_m},
               {"flight_time_s", log.flight_time_s},
               {"cells_visited", log.cells_visited},
               {"integrals", log.integrals.size()},
               {"messages", log.messages.size()},
               {"stop_reason", to_string(log.stop_reason)}};
  summary["found_position"] = log.found_position ? to_json(*log.found_position) : json(nullptr);
  out << summary.dump() << '\n';
}

void write_message(std::ostream& out, const DetectionMessage& msg) {
  json j{{"mission_id", msg.mission_id},
         {"t", msg.timestamp_s},
         {"world", to_json(msg.world_position)},
         {"confidence", msg.confidence},
         {"verdict", msg.verdict},
         {"crop", msg.crop_file}};
  if (msg.lat_lon) {
    j["lat"] = msg.lat_lon->x();
    j["lon"] = msg.lat_lon->y();
  }
  out << j.dump() << '\n';
}

MissionSummary read_mission_log(std::istream& in) {
  MissionSummary s;
  std::string line;
  std::size_t line_no = 0;
  bool header = false, closed = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "mission") {
        s.mission_id = j.at("mission_id").get<std::string>();
        header = true;
      } else if (kind == "integrate") {
        IntegralRecord rec;
        rec.id = j.at("integral").get<int>();
        if (rec.id != static_cast<int>(s.integrals.size())) throw Error("integral ids out of order");
        rec.purpose = purpose_from(j.at("purpose").get<std::string>());
        if (!j.at("cell").is_null()) rec.cell = CellId{j["cell"].at(0).get<int>(), j["cell"].at(1).get<int>()};
        rec.frames = j.at("frames").get<int>();
        rec.virtual_pose = pose(j.at("virtual_pose"));
        rec.valid_pixels = j.at("valid_pixels").get<int>();
        rec.registration_shift = vec2(j.at("registration_shift"));
        s.integrals.push_back(rec);
      } else if (kind == "detect") {
        const int id = j.at("integral").get<int>();
        if (id < 0 || id >= static_cast<int>(s.integrals.size())) throw Error("detect before its integrate");
        for (const auto& dj : j.at("detections")) {
          Detection d;
          const auto& b = dj.at("bbox");
          d.bbox = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
          d.confidence = dj.at("confidence").get<double>();
          d.world_center = vec3(dj.at("world"));
          d.area_px = dj.at("area_px").get<int>();
          d.peak = dj.at("peak").get<double>();
          s.integrals[static_cast<std::size_t>(id)].detections.push_back(d);
        }
      } else if (kind == "confirm") {
        ConfirmEvent c;
        c.source_integral = j.at("source_integral").get<int>();
        c.detection_index = j.at("detection").get<int>();
        c.resample_integral = j.at("resample_integral").is_null() ? -1 : j["resample_integral"].get<int>();
        c.record.initial_confidence = j.at("c0").get<double>();
        c.record.resampled_confidence = j.at("c1").get<double>();
        c.record.verdict = j.at("verdict").get<std::string>() == "confirmed-true" ? Verdict::confirmed_true
                                                                                  : Verdict::confirmed_false;
        c.world_position = vec3(j.at("world"));
        s.confirmations.push_back(c);
      } else if (kind == "summary") {
        s.path_length_m = j.at("path_length_m").get<double>();
        s.flight_time_s = j.at("flight_time_s").get<double>();
        s.cells_visited = j.at("cells_visited").get<int>();
        s.stop_reason = j.at("stop_reason").get<std::string>();
        closed = true;
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(line_no, std::string("mission log: ") + e.what());
    }
  }
  if (!header) throw ParseError(0, "mission log has no header line");
  if (!closed) throw ParseError(line_no, "mission log has no summary line");
  return s;
}

}  // namespace aos
