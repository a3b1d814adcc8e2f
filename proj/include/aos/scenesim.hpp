#pragma once

// Procedural occluded-forest scenes and synthetic thermal rendering.

#include "aos/terrain.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

namespace aos {

struct Rect {
  Eigen::Vector2d min = Eigen::Vector2d::Zero();
  Eigen::Vector2d max = Eigen::Vector2d::Zero();

  double width() const { return max.x() - min.x(); }
  double height() const { return max.y() - min.y(); }
  double area() const { return width() * height(); }
  Eigen::Vector2d center() const { return 0.5 * (min + max); }
  bool contains(const Eigen::Vector2d& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
  Rect dilated(double margin) const {
    return {min - Eigen::Vector2d::Constant(margin), max + Eigen::Vector2d::Constant(margin)};
  }
  bool operator==(const Rect&) const = default;
};

struct Disk {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
  bool operator==(const Disk&) const = default;
};

/// Elongated warm object above the ground (sun-heated branch, stump top):
/// a capsule of `radius` around a segment of 2 * half_length along
/// `heading_deg`, lying flat at `height_agl` above the local ground.
struct WarmClutter {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double half_length = 0.0;
  double heading_deg = 0.0;
  double radius = 0.0;
  double height_agl = 0.0;
  bool operator==(const WarmClutter&) const = default;
};

/// Normalized scene temperatures.
struct Temperatures {
  double ground = 0.30;
  double canopy = 0.25;
  double person = 0.90;
  double clutter = 0.80;
  bool operator==(const Temperatures&) const = default;
};

struct ForestParams {
  double target_density = 0.5;
  double radius_min = 1.0;
  double radius_max = 3.0;
  double canopy_height = 20.0;
  bool operator==(const ForestParams&) const = default;
};

struct ForestScene {
  Rect region;
  ForestParams params;
  std::vector<Disk> occluders;  // at canopy height above the ground under each center
  std::vector<Disk> persons;    // on the ground
  std::vector<WarmClutter> clutter;
  Temperatures temperatures;
  double sensor_noise_std = 0.01;
  std::uint64_t seed = 0;

  double canopy_height() const { return params.canopy_height; }
  bool operator==(const ForestScene&) const = default;
};

/// Boolean model: Poisson count with intensity -ln(1 - d) / (pi E[r^2]),
/// radii uniform in [r_min, r_max], centers uniform in the region.
ForestScene generate_forest(const Rect& region, const ForestParams& params, std::uint64_t seed);

/// Appends `count` persons of `radius` uniformly inside `area` (must lie in the region).
void place_random_persons(ForestScene& scene, const Rect& area, int count, double radius, std::uint64_t seed);

struct ClutterParams {
  double half_length_min = 1.5;
  double half_length_max = 2.5;
  double radius = 0.25;
  double height_min = 8.0;
  double height_max = 14.0;
  bool operator==(const ClutterParams&) const = default;
};

void place_random_clutter(ForestScene& scene, const Rect& area, int count, const ClutterParams& params,
                          std::uint64_t seed);

/// Checks the scene invariants; throws ParameterError.
void validate(const ForestScene& scene);

struct PoseNoiseModel {
  double sigma_xy = 0.2;
  double sigma_z = 0.2;
  double sigma_yaw_deg = 0.5;
  double yaw_bias_deg = 0.0;
  std::uint64_t seed = 0;

  static PoseNoiseModel none() { return {0.0, 0.0, 0.0, 0.0, 0}; }
  bool operator==(const PoseNoiseModel&) const = default;
};

/// Independent Gaussian offsets keyed by (seed, sample_index), plus yaw bias.
Pose perturb_pose(const Pose& true_pose, const PoseNoiseModel& model, std::uint64_t sample_index);

struct ThermalFrame {
  Image<float> pixels;
  Pose measured_pose;
  Pose true_pose;
  CameraIntrinsics intrinsics;
};

/// Reusable renderer: builds a spatial index over the scene's elevated
/// objects once and renders any number of poses.
class SceneRenderer {
 public:
  SceneRenderer(const ForestScene& scene, const ElevationModel& dem, CameraIntrinsics intr = {});
  ~SceneRenderer();
  SceneRenderer(SceneRenderer&&) noexcept;
  SceneRenderer& operator=(SceneRenderer&&) noexcept;

  /// measured_pose of the result equals true_pose. `workers` = 0 uses all cores.
  ThermalFrame render(const Pose& true_pose, unsigned workers = 0) const;

  /// Noise-free radiance seen along a ray; NaN when the ray misses the terrain.
  double trace(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) const;

  /// True when the straight segment from a ground point up to `eye` passes
  /// through a canopy occluder.
  bool occluded(const Eigen::Vector3d& ground_point, const Eigen::Vector3d& eye) const;

  const ForestScene& scene() const;
  const CameraIntrinsics& intrinsics() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ThermalFrame render_thermal(const ForestScene& scene, const Pose& true_pose, const CameraIntrinsics& intr,
                            const ElevationModel& dem);

/// Scene dump as sectioned key-value text; restore is bit-exact.
void save_scene(std::ostream& out, const ForestScene& scene);
ForestScene load_scene(std::istream& in);

}  // namespace aos
