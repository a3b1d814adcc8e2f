#pragma once

// Synthetic-aperture sampling plans and integral images.
//
// An integral image is rendered from a virtual camera: every virtual pixel is
// cast onto the terrain, the resulting ground point is projected into each
// recorded frame through that frame's measured pose, and the bilinearly
// sampled values are averaged. Points on the focal surface (the terrain)
// line up across frames; occluders above it do not and blur away.

#include "aos/scenesim.hpp"
#include "aos/terrain.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace aos {

enum class PlanKind { line, grid, path };

struct SamplingPlan {
  PlanKind kind = PlanKind::line;
  std::vector<Pose> poses;  // flight order
  double spacing = 1.0;
  double cross_spacing = 0.0;  // grid only
  double length = 0.0;         // along-track extent (line, path) or x extent (grid)
  double width = 0.0;          // grid y extent
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double heading_deg = 0.0;  // compass heading of travel
  Eigen::Vector2d entry = Eigen::Vector2d::Zero();
  Eigen::Vector2d exit = Eigen::Vector2d::Zero();

  /// Median sample, (n - 1) / 2; its pose anchors the virtual view.
  std::size_t central_index() const { return poses.empty() ? 0 : (poses.size() - 1) / 2; }
};

struct LineSaOptions {
  double length_m = 30.0;
  double spacing_m = 1.0;
  double altitude_agl_m = 35.0;
  double yaw_deg = 0.0;  // camera heading, constant along the aperture (north)
  bool operator==(const LineSaOptions&) const = default;
};

/// max(1, round(length / spacing)) nadir poses centered on `center`, spaced
/// `spacing` along compass `heading_deg`, at ground + altitude_agl.
SamplingPlan plan_line_sa(const ElevationModel& dem, const Eigen::Vector2d& center, double heading_deg,
                          const LineSaOptions& opt = {});

/// Boustrophedon grid over `area`: rows run east-west with spacing.x() between
/// samples (line rule per row); rows are spacing.y() apart and include both
/// edges unless the area is no taller than one row spacing.
SamplingPlan plan_grid_sa(const ElevationModel& dem, const Rect& area, const Eigen::Vector2d& spacing = {1.0, 3.0},
                          double altitude_agl_m = 35.0, double yaw_deg = 0.0);

/// Line-rule samples along the arc-length interval [s_begin, s_end] of a polyline.
SamplingPlan plan_path_segment(const ElevationModel& dem, std::span<const Eigen::Vector2d> polyline, double s_begin,
                               double s_end, const LineSaOptions& opt = {});

double polyline_length(std::span<const Eigen::Vector2d> polyline);
Eigen::Vector2d polyline_point(std::span<const Eigen::Vector2d> polyline, double s);

/// Nadir virtual camera at `anchor`'s position with the plan's camera yaw.
Pose virtual_view(const Pose& anchor, double yaw_deg);

struct IntegralImage {
  Image<float> pixels;          // NaN where invalid
  Image<std::int32_t> counts;   // contributing frames per pixel
  Eigen::Matrix3Xd ground_points;  // column = row * res + col; NaN on a terrain miss
  Pose virtual_pose;
  CameraIntrinsics intrinsics;
  int frame_count = 0;

  int resolution() const { return static_cast<int>(pixels.rows()); }
  bool valid(int row, int col) const { return counts(row, col) > 0; }
  Eigen::Vector3d ground_point(int row, int col) const {
    return ground_points.col(static_cast<Eigen::Index>(row) * resolution() + col);
  }
  int valid_count() const { return static_cast<int>((counts > 0).count()); }
  /// Ground points under the four corner pixels: NW, NE, SE, SW in image order.
  std::array<Eigen::Vector3d, 4> footprint() const;
};

struct IntegrateOptions {
  unsigned workers = 0;  // 0 = all cores
};

/// Frames are read through their measured poses and never modified. The
/// virtual intrinsics are those of the first frame.
IntegralImage integrate(std::span<const ThermalFrame> frames, const ElevationModel& dem, const Pose& virtual_pose,
                        const IntegrateOptions& opt = {});

struct VisibilityOptions {
  /// A probe is visible when seen in at least max(1, ceil(min_fraction * N)) frames.
  double min_fraction = 0.0;
  int probes_per_axis = 9;
};

/// Monte Carlo visibility of the scene's persons over the plan's true poses:
/// fraction of ground probe points inside person disks that are in frame and
/// unoccluded often enough.
double estimate_visibility(const SceneRenderer& renderer, const SamplingPlan& plan, const ElevationModel& dem,
                           const VisibilityOptions& opt = {});

/// size x size window centered on `center_px` (continuous pixel coords);
/// NaN outside the image or on invalid pixels.
Image<float> crop(const IntegralImage& img, const Eigen::Vector2d& center_px, int size = 64);

}  // namespace aos
