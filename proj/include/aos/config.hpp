#pragma once

// Scenario files: sectioned "key = value" text.
//
//   [scenario]     seed, id, kind (predefined | adaptive)
//   [terrain]      dem (path) or flat = x0 y0 width height cell_size height
//   [geo]          latitude, longitude (optional origin for messages)
//   [forest]       region = x0 y0 x1 y1, density, radius_min, radius_max,
//                  canopy_height, sensor_noise_std
//   [temperatures] ground, canopy, person, clutter
//   [persons]      radius, count + area = x0 y0 x1 y1, position = x y (repeatable)
//   [clutter]      count, area, half_length_min/max, radius, height_min/max
//   [noise]        sigma_xy, sigma_z, sigma_yaw_deg, yaw_bias_deg
//   [camera]       fov_deg, resolution_px
//   [sampling]     length, spacing, altitude_agl, yaw_deg
//   [detector]     name, intensity_threshold, min_blob_px, max_blob_px,
//                  reference_contrast, expected_area_px
//   [planner]      probability_map, origin = x y, cell_size, distance_scale,
//                  tie_epsilon, weak_threshold, accept_threshold,
//                  max_path_length, match_radius, start = x y, resample
//   [predefined]   waypoint = x y (repeatable, in flight order)
//   [mission]      sample_speed, transit_speed, segment_length, min_residue, crop_size
//   [output]       dir, save_frames
//
// Relative paths are resolved against the scenario file's directory. Every
// key is optional except the terrain source; defaults match the library.

#include "aos/detect.hpp"
#include "aos/mission.hpp"
#include "aos/scenesim.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace aos {

enum class MissionKind { predefined, adaptive };

struct FlatTerrain {
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  Eigen::Vector2d extent = Eigen::Vector2d::Zero();
  double cell_size = 1.0;
  double height = 0.0;
  bool operator==(const FlatTerrain&) const = default;
};

struct ScenarioConfig {
  std::uint64_t seed = 0;
  std::string id = "mission";
  MissionKind kind = MissionKind::predefined;

  std::string dem_path;
  std::optional<FlatTerrain> flat;
  std::optional<GeoOrigin> geo;

  Rect region{{0.0, 0.0}, {90.0, 90.0}};
  ForestParams forest;
  double sensor_noise_std = 0.01;
  Temperatures temperatures;

  double person_radius = 0.4;
  int person_count = 0;
  std::optional<Rect> person_area;  // default: region
  std::vector<Eigen::Vector2d> person_positions;

  int clutter_count = 0;
  std::optional<Rect> clutter_area;
  ClutterParams clutter;

  PoseNoiseModel noise;  // seed is derived, not configured
  CameraIntrinsics camera;
  LineSaOptions sampling;
  std::string detector_name = "blob";
  DetectorConfig detector;

  std::string probability_map;
  Eigen::Vector2d grid_origin = Eigen::Vector2d::Zero();
  double cell_size = 30.0;
  PlannerConfig planner;
  std::optional<Eigen::Vector2d> start;
  bool resample = true;

  std::vector<Eigen::Vector2d> waypoints;

  double sample_speed = 1.0;
  double transit_speed = 3.0;
  double segment_length = 30.0;
  double min_residue = 2.0;
  int crop_size = 64;

  std::string output_dir = "out";
  bool save_frames = false;

  bool operator==(const ScenarioConfig&) const = default;
};

/// `base_dir` resolves relative paths; ConfigError names the offending field.
ScenarioConfig parse_config(std::istream& in, const std::string& base_dir = ".");
ScenarioConfig load_config(const std::string& path);
void write_config(std::ostream& out, const ScenarioConfig& cfg);

/// Checks cross-field rules and that referenced files exist.
void validate(const ScenarioConfig& cfg);

/// Role seeds derived from the global seed.
struct Seeds {
  std::uint64_t forest, persons, clutter, pose_noise;
};
Seeds derive_seeds(std::uint64_t global);

ElevationModel build_terrain(const ScenarioConfig& cfg);
ForestScene build_scene(const ScenarioConfig& cfg);
MissionConfig build_mission_config(const ScenarioConfig& cfg, bool verbose);
ProbabilityGrid build_grid(const ScenarioConfig& cfg);

}  // namespace aos
