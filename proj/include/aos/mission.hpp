#pragma once

// Mission executors: predefined waypoint sampling and adaptive
// potential-field search with re-sampling and confirmation.
//
// Time is simulated: sampling legs are flown at sample_speed, transit legs
// at transit_speed. Integral images are handed to an output sink as they are
// produced; the log only keeps their metadata.

#include "aos/aoscore.hpp"
#include "aos/detect.hpp"
#include "aos/plan.hpp"
#include "aos/scenesim.hpp"

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace aos {

struct MissionConfig {
  std::string mission_id = "mission";
  LineSaOptions sa;
  PoseNoiseModel noise;
  PlannerConfig planner;
  double sample_speed = 1.0;   // m/s
  double transit_speed = 3.0;  // m/s
  double segment_length = 30.0;
  double min_residue = 2.0;  // shorter residues join the previous segment
  int crop_size = 64;
  bool resample = true;  // false = single-pass decisions on the first detection
  bool verbose = false;
  std::optional<Eigen::Vector2d> start;  // adaptive start; default grid south-west corner
  std::optional<GeoOrigin> geo;
  unsigned workers = 0;

  void validate() const;
};

enum class StopReason { found, budget, coverage, path_complete };
const char* to_string(StopReason r);
const char* to_string(Verdict v);

/// Why an integral was computed.
enum class IntegralPurpose { segment, scan, resample };
const char* to_string(IntegralPurpose p);

struct IntegralRecord {
  int id = 0;
  IntegralPurpose purpose = IntegralPurpose::segment;
  std::optional<CellId> cell;
  Pose virtual_pose;
  int frames = 0;
  int valid_pixels = 0;
  /// Mean (measured - true) horizontal pose offset of the integrated frames:
  /// where ground features appear shifted in the integral.
  Eigen::Vector2d registration_shift = Eigen::Vector2d::Zero();
  std::vector<Detection> detections;
};

struct TransitEvent {
  Eigen::Vector2d from, to;
  double length_m = 0.0;
};
struct SampleEvent {
  std::uint64_t sample_index = 0;
  Pose true_pose;
  Pose measured_pose;
};
struct IntegrateEvent {
  int integral_id = 0;
  IntegralPurpose purpose = IntegralPurpose::segment;
  int frames = 0;
  double leg_length_m = 0.0;  // sampling leg flown for this integral
};
struct DetectEvent {
  int integral_id = 0;
  std::vector<Detection> detections;
};
struct ResampleEvent {
  int source_integral = 0;
  int detection_index = 0;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double heading_deg = 0.0;
  int integral_id = -1;  // -1 when the plan left the terrain footprint
};
struct ConfirmEvent {
  int source_integral = 0;
  int detection_index = 0;
  int resample_integral = -1;
  ConfirmationRecord record;
  Eigen::Vector3d world_position = Eigen::Vector3d::Zero();
};
struct StopEvent {
  StopReason reason = StopReason::coverage;
};

using EventPayload =
    std::variant<TransitEvent, SampleEvent, IntegrateEvent, DetectEvent, ResampleEvent, ConfirmEvent, StopEvent>;

struct MissionEvent {
  double timestamp_s = 0.0;
  std::optional<CellId> cell;
  double path_length_m = 0.0;  // cumulative at the end of the event
  EventPayload payload;
};

const char* event_kind(const EventPayload& p);

struct DetectionMessage {
  std::string mission_id;
  double timestamp_s = 0.0;
  Eigen::Vector3d world_position = Eigen::Vector3d::Zero();
  std::optional<Eigen::Vector2d> lat_lon;
  double confidence = 0.0;
  std::string verdict;  // confirmed-true, unconfirmed
  std::string crop_file;
};

struct MissionLog {
  std::string mission_id;
  std::vector<MissionEvent> events;
  std::vector<IntegralRecord> integrals;
  std::vector<DetectionMessage> messages;
  double path_length_m = 0.0;
  double flight_time_s = 0.0;
  int cells_visited = 0;
  std::vector<CellId> visited_cells;  // in scan order
  StopReason stop_reason = StopReason::path_complete;
  /// World position behind the decision to stop with `found`.
  std::optional<Eigen::Vector3d> found_position;
};

struct MissionOutputs {
  std::function<void(const IntegralRecord&, const IntegralImage&)> on_integral;
  std::function<void(const std::string& crop_file, const Image<float>&)> on_crop;
  std::function<void(const DetectionMessage&)> on_message;
};

/// Splits [0, total] into segment_length pieces plus a residue; a residue
/// shorter than min_residue extends the last full piece.
std::vector<std::pair<double, double>> split_segments(double total, double segment_length, double min_residue);

/// Throws ConfigError when a waypoint is outside the terrain footprint.
MissionLog run_predefined(std::span<const Eigen::Vector2d> waypoints, const SceneRenderer& renderer,
                          const ElevationModel& dem, const Detector& detector, const MissionConfig& cfg,
                          const MissionOutputs& out = {});

MissionLog run_adaptive(ProbabilityGrid grid, const SceneRenderer& renderer, const ElevationModel& dem,
                        const Detector& detector, const MissionConfig& cfg, const MissionOutputs& out = {});

/// Message for a confirm event, or nullopt unless confirmed-true.
std::optional<DetectionMessage> emit_detection_message(const MissionLog& log, const ConfirmEvent& event,
                                                       double timestamp_s, const std::optional<GeoOrigin>& geo,
                                                       const std::string& crop_file);

}  // namespace aos
