#include "aos/mission.hpp"

#include "aos/error.hpp"

#include <cmath>
#include <cstdio>

namespace aos {

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::found: return "found";
    case StopReason::budget: return "budget";
    case StopReason::coverage: return "coverage";
    case StopReason::path_complete: return "path_complete";
  }
  return "?";
}

const char* to_string(Verdict v) { return v == Verdict::confirmed_true ? "confirmed-true" : "confirmed-false"; }

const char* to_string(IntegralPurpose p) {
  switch (p) {
    case IntegralPurpose::segment: return "segment";
    case IntegralPurpose::scan: return "scan";
    case IntegralPurpose::resample: return "resample";
  }
  return "?";
}

const char* event_kind(const EventPayload& p) {
  static constexpr const char* names[] = {"transit", "sample", "integrate", "detect", "resample", "confirm", "stop"};
  return names[p.index()];
}

void MissionConfig::validate() const {
  planner.validate();
  if (!(sample_speed > 0.0 && transit_speed > 0.0)) throw ParameterError("speeds must be > 0");
  if (!(segment_length > 0.0)) throw ParameterError("segment_length must be > 0");
  if (!(min_residue >= 0.0)) throw ParameterError("min_residue must be >= 0");
  if (crop_size < 1) throw ParameterError("crop_size must be >= 1");
}

std::vector<std::pair<double, double>> split_segments(double total, double segment_length, double min_residue) {
  if (!(total > 0.0)) throw ParameterError("path length must be > 0");
  std::vector<std::pair<double, double>> out;
  // Tolerate floating-point dust so that 30.0000001 m stays one segment.
  const double eps = 1e-9 * std::max(1.0, total);
  const auto full = static_cast<int>(std::floor((total + eps) / segment_length));
  for (int k = 0; k < full; ++k) out.push_back({k * segment_length, (k + 1) * segment_length});
  const double residue = total - full * segment_length;
  if (residue > eps) {
    if (out.empty() || residue >= min_residue) {
      out.push_back({full * segment_length, total});
    } else {
      out.back().second = total;
    }
  }
  if (!out.empty()) out.back().second = total;
  return out;
}

namespace {

class Executor {
 public:
  Executor(const SceneRenderer& renderer, const ElevationModel& dem, const Detector& detector,
           const MissionConfig& cfg, const MissionOutputs& out)
      : renderer_(renderer), dem_(dem), detector_(detector), cfg_(cfg), out_(out) {
    log_.mission_id = cfg.mission_id;
  }

  MissionLog& log() { return log_; }
  const Eigen::Vector2d& position() const { return pos_; }
  void set_position(const Eigen::Vector2d& p) { pos_ = p; }

  double transit_cost(const Eigen::Vector2d& to) const { return (to - pos_).norm(); }

  void transit(const Eigen::Vector2d& to, std::optional<CellId> cell) {
    const double d = (to - pos_).norm();
    if (d <= 0.0) return;
    log_.path_length_m += d;
    log_.flight_time_s += d / cfg_.transit_speed;
    push(cell, TransitEvent{pos_, to, d});
    pos_ = to;
  }

  struct Flown {
    int integral_id;
    IntegralImage image;
  };

  Flown fly(const SamplingPlan& plan, double leg_length, IntegralPurpose purpose, std::optional<CellId> cell) {
    const double t0 = log_.flight_time_s, path0 = log_.path_length_m;
    const auto n = plan.poses.size();
    std::vector<ThermalFrame> frames;
    frames.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double along = (k + 0.5) * leg_length / static_cast<double>(n);
      ThermalFrame f = renderer_.render(plan.poses[k], cfg_.workers);
      f.measured_pose = perturb_pose(plan.poses[k], cfg_.noise, sample_counter_);
      MissionEvent ev;
      ev.timestamp_s = t0 + along / cfg_.sample_speed;
      ev.cell = cell;
      ev.path_length_m = path0 + along;
      ev.payload = SampleEvent{sample_counter_, f.true_pose, f.measured_pose};
      log_.events.push_back(std::move(ev));
      ++sample_counter_;
      frames.push_back(std::move(f));
    }
    log_.path_length_m += leg_length;
    log_.flight_time_s += leg_length / cfg_.sample_speed;
    pos_ = plan.exit;

    const auto& anchor = frames[plan.central_index()].measured_pose;
    IntegralImage img = integrate(frames, dem_, virtual_view(anchor, cfg_.sa.yaw_deg), {cfg_.workers});

    IntegralRecord rec;
    rec.id = static_cast<int>(log_.integrals.size());
    rec.purpose = purpose;
    rec.cell = cell;
    rec.virtual_pose = img.virtual_pose;
    rec.frames = img.frame_count;
    rec.valid_pixels = img.valid_count();
    for (const auto& f : frames) rec.registration_shift += (f.measured_pose.xy() - f.true_pose.xy());
    rec.registration_shift /= static_cast<double>(frames.size());
    rec.detections = detector_.detect(img).detections;

    push(cell, IntegrateEvent{rec.id, purpose, rec.frames, leg_length});
    push(cell, DetectEvent{rec.id, rec.detections});
    if (out_.on_integral) out_.on_integral(rec, img);
    log_.integrals.push_back(rec);
    return {rec.id, std::move(img)};
  }

  std::string crop(const IntegralImage& img, int integral_id, int det_index, const Detection& d) {
    char name[64];
    std::snprintf(name, sizeof name, "crops/i%03d_d%02d.pgm", integral_id, det_index);
    if (out_.on_crop) out_.on_crop(name, aos::crop(img, d.bbox.center(), cfg_.crop_size));
    return name;
  }

  void message(DetectionMessage m) {
    if (out_.on_message) out_.on_message(m);
    log_.messages.push_back(std::move(m));
  }

  DetectionMessage unconfirmed(const Detection& d, const std::string& crop_file) const {
    DetectionMessage m;
    m.mission_id = cfg_.mission_id;
    m.timestamp_s = log_.flight_time_s;
    m.world_position = d.world_center;
    if (cfg_.geo) m.lat_lon = cfg_.geo->to_geo(d.world_center.head<2>());
    m.confidence = d.confidence;
    m.verdict = "unconfirmed";
    m.crop_file = crop_file;
    return m;
  }

  void push(std::optional<CellId> cell, EventPayload p) {
    MissionEvent ev;
    ev.timestamp_s = log_.flight_time_s;
    ev.cell = cell;
    ev.path_length_m = log_.path_length_m;
    ev.payload = std::move(p);
    log_.events.push_back(std::move(ev));
  }

  void stop(StopReason reason) {
    log_.stop_reason = reason;
    push(std::nullopt, StopEvent{reason});
  }

 private:
  const SceneRenderer& renderer_;
  const ElevationModel& dem_;
  const Detector& detector_;
  const MissionConfig& cfg_;
  const MissionOutputs& out_;
  MissionLog log_;
  Eigen::Vector2d pos_ = Eigen::Vector2d::Zero();
  std::uint64_t sample_counter_ = 0;
};

}  // namespace

MissionLog run_predefined(std::span<const Eigen::Vector2d> waypoints, const SceneRenderer& renderer,
                          const ElevationModel& dem, const Detector& detector, const MissionConfig& cfg,
                          const MissionOutputs& out) {
  cfg.validate();
  if (waypoints.empty()) throw ConfigError("predefined.waypoint", "no waypoints");
  for (const auto& w : waypoints) {
    if (std::isnan(dem.sample(w.x(), w.y()))) {
      throw ConfigError("predefined.waypoint", "waypoint (" + std::to_string(w.x()) + ", " + std::to_string(w.y()) +
                                                   ") is outside the terrain footprint");
    }
  }
  const double total = polyline_length(waypoints);
  if (!(total > 0.0)) throw ConfigError("predefined.waypoint", "path length must be > 0");

  Executor ex(renderer, dem, detector, cfg, out);
  ex.set_position(waypoints.front());
  const double report = cfg.verbose ? cfg.planner.weak_threshold : cfg.planner.accept_threshold;
  for (const auto& [s0, s1] : split_segments(total, cfg.segment_length, cfg.min_residue)) {
    const auto plan = plan_path_segment(dem, waypoints, s0, s1, cfg.sa);
    auto flown = ex.fly(plan, s1 - s0, IntegralPurpose::segment, std::nullopt);
    ex.set_position(polyline_point(waypoints, s1));
    const auto& dets = ex.log().integrals.back().detections;
    for (std::size_t k = 0; k < dets.size(); ++k) {
      if (dets[k].confidence < report) continue;
      const auto file = ex.crop(flown.image, flown.integral_id, static_cast<int>(k), dets[k]);
      ex.message(ex.unconfirmed(dets[k], file));
    }
  }
  ex.stop(StopReason::path_complete);
  return std::move(ex.log());
}

MissionLog run_adaptive(ProbabilityGrid grid, const SceneRenderer& renderer, const ElevationModel& dem,
                        const Detector& detector, const MissionConfig& cfg, const MissionOutputs& out) {
  cfg.validate();
  if (grid.positive_cells() == 0) throw ParameterError("probability grid has no positive cell");
  Executor ex(renderer, dem, detector, cfg, out);
  ex.set_position(cfg.start.value_or(grid.origin()));
  const double budget = cfg.planner.max_path_length;

  for (;;) {
    const auto cell = next_cell(grid, ex.position(), cfg.planner);
    if (!cell) {
      ex.stop(StopReason::coverage);
      break;
    }
    const auto plan = scan_plan_for_cell(dem, grid, *cell, ex.position(), cfg.sa);
    if (ex.log().path_length_m + ex.transit_cost(plan.entry) + plan.length > budget) {
      ex.stop(StopReason::budget);
      break;
    }
    ex.transit(plan.entry, cell);
    auto scan = ex.fly(plan, plan.length, IntegralPurpose::scan, cell);
    const std::vector<Detection> initial = ex.log().integrals.back().detections;

    bool found = false, out_of_budget = false;
    for (std::size_t k = 0; k < initial.size() && !out_of_budget; ++k) {
      const auto& d = initial[k];
      if (d.confidence < cfg.planner.weak_threshold) continue;
      const int det_index = static_cast<int>(k);
      if (cfg.verbose) ex.message(ex.unconfirmed(d, ex.crop(scan.image, scan.integral_id, det_index, d)));
      if (!cfg.resample) {
        if (d.confidence >= cfg.planner.accept_threshold && !found) {
          found = true;
          ex.log().found_position = d.world_center;
          if (!cfg.verbose) ex.message(ex.unconfirmed(d, ex.crop(scan.image, scan.integral_id, det_index, d)));
        }
        continue;
      }

      std::optional<SamplingPlan> rp;
      if (!std::isnan(d.world_center.x())) {
        try {
          rp = resample_plan(dem, d.world_center.head<2>(), plan.heading_deg, cfg.sa);
        } catch (const DomainError&) {
        }
      }
      ResampleEvent rev{scan.integral_id, det_index, d.world_center.head<2>(),
                        std::fmod(plan.heading_deg + 90.0, 360.0), -1};
      ConfirmEvent cev{scan.integral_id, det_index, -1, {}, d.world_center};
      if (rp) {
        if (ex.log().path_length_m + ex.transit_cost(rp->entry) + rp->length > budget) {
          out_of_budget = true;
          break;
        }
        ex.transit(rp->entry, cell);
        auto re = ex.fly(*rp, rp->length, IntegralPurpose::resample, cell);
        const auto& redets = ex.log().integrals.back().detections;
        rev.integral_id = re.integral_id;
        cev.resample_integral = re.integral_id;
        cev.record = confirm(d, redets, cfg.planner);
        if (cev.record.matched_index >= 0) cev.world_position = redets[cev.record.matched_index].world_center;
        ex.push(cell, rev);
        ex.push(cell, cev);
        if (cev.record.verdict == Verdict::confirmed_true) {
          const auto& matched = redets[cev.record.matched_index];
          const auto file = ex.crop(re.image, re.integral_id, cev.record.matched_index, matched);
          if (auto m = emit_detection_message(ex.log(), cev, ex.log().flight_time_s, cfg.geo, file)) ex.message(*m);
          if (!found) ex.log().found_position = cev.world_position;
          found = true;
        }
      } else {
        cev.record = confirm(d, {}, cfg.planner);
        ex.push(cell, rev);
        ex.push(cell, cev);
      }
    }
    if (out_of_budget) {
      ex.stop(StopReason::budget);
      break;
    }
    grid.mark_visited(*cell);
    ++ex.log().cells_visited;
    ex.log().visited_cells.push_back(*cell);
    if (found) {
      ex.stop(StopReason::found);
      break;
    }
  }
  return std::move(ex.log());
}

std::optional<DetectionMessage> emit_detection_message(const MissionLog& log, const ConfirmEvent& event,
                                                       double timestamp_s, const std::optional<GeoOrigin>& geo,
                                                       const std::string& crop_file) {
  if (event.record.verdict != Verdict::confirmed_true) return std::nullopt;
  DetectionMessage m;
  m.mission_id = log.mission_id;
  m.timestamp_s = timestamp_s;
  m.world_position = event.world_position;
  if (geo) m.lat_lon = geo->to_geo(event.world_position.head<2>());
  m.confidence = event.record.resampled_confidence;
  m.verdict = to_string(Verdict::confirmed_true);
  m.crop_file = crop_file;
  return m;
}

}  // namespace aos
