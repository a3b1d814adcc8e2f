#pragma once

// Elevation model, camera geometry and world <-> image projection.
//
// World frame: local East-North-Up, meters. Camera frame at zero attitude:
// x = east (image columns grow to the right), y = south (image rows grow
// downwards, so image "up" is north), z = down (boresight). Yaw is a compass
// heading of image-up, clockwise positive; pitch rotates about the camera x
// axis, roll about the camera y axis.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>

namespace aos {

template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Bilinear sample at continuous array coordinates (col, row), clamped at the
/// border. Exact at nodes and for constant neighborhoods.
template <typename Derived>
typename Derived::Scalar sample_bilinear(const Eigen::DenseBase<Derived>& img, double col, double row) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index cols = img.cols();
  const Eigen::Index rows = img.rows();
  col = std::clamp(col, 0.0, static_cast<double>(cols - 1));
  row = std::clamp(row, 0.0, static_cast<double>(rows - 1));
  Eigen::Index c0 = static_cast<Eigen::Index>(col);
  Eigen::Index r0 = static_cast<Eigen::Index>(row);
  if (c0 == cols - 1 && cols > 1) --c0;
  if (r0 == rows - 1 && rows > 1) --r0;
  const Eigen::Index c1 = std::min(c0 + 1, cols - 1);
  const Eigen::Index r1 = std::min(r0 + 1, rows - 1);
  const Scalar fx = static_cast<Scalar>(col - static_cast<double>(c0));
  const Scalar fy = static_cast<Scalar>(row - static_cast<double>(r0));
  const Scalar a = img(r0, c0), b = img(r0, c1), c = img(r1, c0), d = img(r1, c1);
  const Scalar top = a + fx * (b - a);
  const Scalar bottom = c + fx * (d - c);
  return top + fy * (bottom - top);
}

double normalize_angle_deg(double deg);  // -> (-180, 180]

/// Node-registered raster: node (col, row) sits at
/// origin + (col * cell_size, row * cell_size), row 0 southernmost.
class ElevationModel {
 public:
  using Heights = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  ElevationModel(Eigen::Vector2d origin, double cell_size, Heights heights, double nodata_value);

  /// Constant-height raster covering [origin, origin + extent].
  static ElevationModel flat(Eigen::Vector2d origin, Eigen::Vector2d extent, double cell_size, double height);

  const Eigen::Vector2d& origin() const { return origin_; }
  double cell_size() const { return cell_size_; }
  int n_cols() const { return static_cast<int>(heights_.cols()); }
  int n_rows() const { return static_cast<int>(heights_.rows()); }
  double nodata_value() const { return nodata_; }
  const Heights& heights() const { return heights_; }
  bool is_nodata(int row, int col) const { return heights_(row, col) == nodata_; }

  Eigen::Vector2d max_corner() const;
  bool contains(double x, double y) const;
  /// Highest non-nodata node; the ray marcher starts at this plane.
  double max_height() const { return max_height_; }
  double min_height() const { return min_height_; }

  /// Bilinear height, or NaN outside the footprint or next to a nodata node
  /// that carries weight. Hot-path variant of ground_height.
  double sample(double x, double y) const;

 private:
  Eigen::Vector2d origin_;
  double cell_size_;
  Heights heights_;
  double nodata_;
  double max_height_;
  double min_height_;
};

/// Parses the ESRI-style ASCII grid: ncols, nrows, xllcorner, yllcorner,
/// cellsize, NODATA_value, then nrows rows, northernmost first.
ElevationModel load_dem(std::istream& in);
ElevationModel load_dem_file(const std::string& path);
void save_dem(std::ostream& out, const ElevationModel& dem);

/// Throws DomainError outside the footprint, NoDataError next to nodata.
double ground_height(const ElevationModel& dem, double x, double y);

struct CameraIntrinsics {
  double fov_deg = 50.82;
  int resolution_px = 512;

  /// Focal length in pixels for the square pinhole.
  double focal_px() const;
  /// Ground sampling distance at `range` meters along the boresight.
  double meters_per_pixel(double range) const { return range / focal_px(); }
  void validate() const;
  bool operator==(const CameraIntrinsics&) const = default;
};

struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double yaw_deg = 0.0;
  double pitch_deg = 0.0;
  double roll_deg = 0.0;

  /// world_from_camera rotation.
  Eigen::Matrix3d rotation() const;
  Eigen::Vector2d xy() const { return position.head<2>(); }
  bool operator==(const Pose&) const = default;
};

/// Stable 64-bit digest of a pose's bit pattern; keys per-frame noise.
std::uint64_t pose_digest(const Pose& pose);

/// Precomputed projection for one pose; reused across many points.
class PinholeCamera {
 public:
  PinholeCamera(const Pose& pose, const CameraIntrinsics& intr);

  /// Continuous pixel coordinates (u = column, v = row; pixel i spans [i, i+1)).
  /// nullopt when behind the camera or outside [0, resolution).
  std::optional<Eigen::Vector2d> project(const Eigen::Vector3d& p) const {
    const Eigen::Vector3d d = camera_from_world_ * (p - center_);
    if (!(d.z() > 1e-9)) return std::nullopt;
    const double u = half_ + focal_ * d.x() / d.z();
    const double v = half_ + focal_ * d.y() / d.z();
    if (!(u >= 0.0 && u < res_ && v >= 0.0 && v < res_)) return std::nullopt;
    return Eigen::Vector2d(u, v);
  }

  /// Unit world-frame direction of the ray through continuous pixel (u, v).
  Eigen::Vector3d ray_direction(double u, double v) const {
    return (world_from_camera_ * Eigen::Vector3d((u - half_) / focal_, (v - half_) / focal_, 1.0)).normalized();
  }

  const Eigen::Vector3d& center() const { return center_; }
  const Eigen::Matrix3d& camera_from_world() const { return camera_from_world_; }
  const Eigen::Matrix3d& world_from_camera() const { return world_from_camera_; }
  double focal() const { return focal_; }
  double half() const { return half_; }
  double resolution() const { return res_; }

 private:
  Eigen::Vector3d center_;
  Eigen::Matrix3d world_from_camera_;
  Eigen::Matrix3d camera_from_world_;
  double focal_;
  double half_;
  double res_;
};

std::optional<Eigen::Vector2d> project_world_to_pixel(const Pose& pose, const CameraIntrinsics& intr,
                                                      const Eigen::Vector3d& p);

/// First crossing of origin + t * dir with the DEM surface: fixed steps of
/// cell_size / 4 from the max-height plane, then bisection to |dz| < 1 cm.
/// Returns the ray parameter t, or nullopt when the ray leaves the footprint,
/// crosses nodata, or never descends.
std::optional<double> intersect_ground(const ElevationModel& dem, const Eigen::Vector3d& origin,
                                       const Eigen::Vector3d& dir);

std::optional<Eigen::Vector3d> pixel_ray_to_ground(const Pose& pose, const CameraIntrinsics& intr,
                                                   const Eigen::Vector2d& pixel, const ElevationModel& dem);

/// Local tangent-plane conversion between WGS84 lat/lon and the ENU frame.
struct GeoOrigin {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;

  Eigen::Vector2d to_local(double latitude_deg, double longitude_deg) const;
  Eigen::Vector2d to_geo(const Eigen::Vector2d& xy) const;  // (lat, lon)
  bool operator==(const GeoOrigin&) const = default;
};

}  // namespace aos
