#include "aos/aoscore.hpp"

#include "aos/error.hpp"
#include "aos/parallel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace aos {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Per-pixel sums are accumulated in 2^-48 fixed point: exact and order-independent.
constexpr double kFixedScale = 0x1.0p48;

Eigen::Vector2d heading_vector(double heading_deg) {
  return {std::sin(heading_deg * kDeg), std::cos(heading_deg * kDeg)};
}

Pose nadir_pose(const ElevationModel& dem, const Eigen::Vector2d& xy, double agl, double yaw_deg) {
  Pose p;
  p.position = {xy.x(), xy.y(), ground_height(dem, xy.x(), xy.y()) + agl};
  p.yaw_deg = normalize_angle_deg(yaw_deg);
  return p;
}

int line_count(double length, double spacing) {
  return std::max(1, static_cast<int>(std::lround(length / spacing)));
}

void check_line(const LineSaOptions& opt) {
  if (!(opt.spacing_m > 0.0)) throw ParameterError("spacing must be > 0");
  if (!(opt.length_m >= opt.spacing_m)) throw ParameterError("length must be >= spacing");
  if (!(opt.altitude_agl_m > 0.0)) throw ParameterError("altitude must be > 0");
}

}  // namespace

SamplingPlan plan_line_sa(const ElevationModel& dem, const Eigen::Vector2d& center, double heading_deg,
                          const LineSaOptions& opt) {
  check_line(opt);
  SamplingPlan plan;
  plan.kind = PlanKind::line;
  plan.spacing = opt.spacing_m;
  plan.length = opt.length_m;
  plan.center = center;
  plan.heading_deg = std::fmod(std::fmod(heading_deg, 360.0) + 360.0, 360.0);
  const Eigen::Vector2d dir = heading_vector(heading_deg);
  plan.entry = center - 0.5 * opt.length_m * dir;
  plan.exit = center + 0.5 * opt.length_m * dir;
  const int n = line_count(opt.length_m, opt.spacing_m);
  plan.poses.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double offset = (k - 0.5 * (n - 1)) * opt.spacing_m;
    plan.poses.push_back(nadir_pose(dem, center + offset * dir, opt.altitude_agl_m, opt.yaw_deg));
  }
  return plan;
}

SamplingPlan plan_grid_sa(const ElevationModel& dem, const Rect& area, const Eigen::Vector2d& spacing,
                          double altitude_agl_m, double yaw_deg) {
  if (!(spacing.x() > 0.0 && spacing.y() > 0.0)) throw ParameterError("grid spacing must be > 0");
  if (!(area.width() >= spacing.x() && area.height() > 0.0)) throw ParameterError("area smaller than one sample");
  SamplingPlan plan;
  plan.kind = PlanKind::grid;
  plan.spacing = spacing.x();
  plan.cross_spacing = spacing.y();
  plan.length = area.width();
  plan.width = area.height();
  plan.center = area.center();
  plan.heading_deg = 90.0;
  const int nx = line_count(area.width(), spacing.x());
  const int ny = area.height() <= spacing.y() ? 1 : static_cast<int>(std::floor(area.height() / spacing.y() + 1e-9)) + 1;
  plan.poses.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    const double y = plan.center.y() + (j - 0.5 * (ny - 1)) * spacing.y();
    for (int i = 0; i < nx; ++i) {
      const int col = (j % 2 == 0) ? i : nx - 1 - i;
      const double x = plan.center.x() + (col - 0.5 * (nx - 1)) * spacing.x();
      plan.poses.push_back(nadir_pose(dem, {x, y}, altitude_agl_m, yaw_deg));
    }
  }
  plan.entry = plan.poses.front().xy();
  plan.exit = plan.poses.back().xy();
  return plan;
}

double polyline_length(std::span<const Eigen::Vector2d> polyline) {
  double s = 0.0;
  for (std::size_t i = 1; i < polyline.size(); ++i) s += (polyline[i] - polyline[i - 1]).norm();
  return s;
}

Eigen::Vector2d polyline_point(std::span<const Eigen::Vector2d> polyline, double s) {
  if (polyline.empty()) throw ParameterError("empty polyline");
  if (s <= 0.0) return polyline.front();
  for (std::size_t i = 1; i < polyline.size(); ++i) {
    const double len = (polyline[i] - polyline[i - 1]).norm();
    if (s <= len && len > 0.0) return polyline[i - 1] + (s / len) * (polyline[i] - polyline[i - 1]);
    s -= len;
  }
  return polyline.back();
}

SamplingPlan plan_path_segment(const ElevationModel& dem, std::span<const Eigen::Vector2d> polyline, double s_begin,
                               double s_end, const LineSaOptions& opt) {
  if (!(opt.spacing_m > 0.0)) throw ParameterError("spacing must be > 0");
  if (!(s_end > s_begin)) throw ParameterError("empty path segment");
  const double total = polyline_length(polyline);
  SamplingPlan plan;
  plan.kind = PlanKind::path;
  plan.spacing = opt.spacing_m;
  plan.length = s_end - s_begin;
  plan.entry = polyline_point(polyline, s_begin);
  plan.exit = polyline_point(polyline, s_end);
  const double s_mid = 0.5 * (s_begin + s_end);
  plan.center = polyline_point(polyline, s_mid);
  const Eigen::Vector2d chord = plan.exit - plan.entry;
  plan.heading_deg = chord.squaredNorm() > 0.0
                         ? std::fmod(std::atan2(chord.x(), chord.y()) / kDeg + 360.0, 360.0)
                         : 0.0;
  const int n = line_count(plan.length, opt.spacing_m);
  for (int k = 0; k < n; ++k) {
    const double s = std::clamp(s_mid + (k - 0.5 * (n - 1)) * opt.spacing_m, 0.0, total);
    plan.poses.push_back(nadir_pose(dem, polyline_point(polyline, s), opt.altitude_agl_m, opt.yaw_deg));
  }
  return plan;
}

Pose virtual_view(const Pose& anchor, double yaw_deg) {
  Pose v;
  v.position = anchor.position;
  v.yaw_deg = normalize_angle_deg(yaw_deg);
  return v;
}

// --- Integration -----------------------------------------------------------------

std::array<Eigen::Vector3d, 4> IntegralImage::footprint() const {
  const int n = resolution() - 1;
  return {ground_point(0, 0), ground_point(0, n), ground_point(n, n), ground_point(n, 0)};
}

IntegralImage integrate(std::span<const ThermalFrame> frames, const ElevationModel& dem, const Pose& virtual_pose,
                        const IntegrateOptions& opt) {
  if (frames.empty()) throw ParameterError("integrate needs at least one frame");
  const CameraIntrinsics intr = frames.front().intrinsics;
  const double ground = dem.sample(virtual_pose.position.x(), virtual_pose.position.y());
  if (!std::isnan(ground) && !(virtual_pose.position.z() > ground)) {
    throw ParameterError("virtual pose must be above the ground");
  }
  const int res = intr.resolution_px;
  const auto n_px = static_cast<Eigen::Index>(res) * res;

  IntegralImage out;
  out.virtual_pose = virtual_pose;
  out.intrinsics = intr;
  out.frame_count = static_cast<int>(frames.size());
  out.ground_points.resize(3, n_px);
  out.counts.setZero(res, res);
  out.pixels.resize(res, res);

  struct FrameView {
    PinholeCamera cam;
    const Image<float>* pixels;
  };
  std::vector<FrameView> views;
  views.reserve(frames.size());
  for (const auto& f : frames) {
    if (f.pixels.rows() != f.intrinsics.resolution_px || f.pixels.cols() != f.intrinsics.resolution_px) {
      throw ParameterError("frame size does not match its intrinsics");
    }
    views.push_back({PinholeCamera(f.measured_pose, f.intrinsics), &f.pixels});
  }

  const PinholeCamera vcam(virtual_pose, intr);
  std::vector<std::int64_t> sums(static_cast<std::size_t>(n_px), 0);

  parallel_for_rows(res, opt.workers, [&](int r0, int r1) {
    for (int r = r0; r < r1; ++r) {
      for (int c = 0; c < res; ++c) {
        const Eigen::Vector3d dir = vcam.ray_direction(c + 0.5, r + 0.5);
        const auto t = intersect_ground(dem, vcam.center(), dir);
        out.ground_points.col(static_cast<Eigen::Index>(r) * res + c) =
            t ? Eigen::Vector3d(vcam.center() + *t * dir) : Eigen::Vector3d::Constant(kNaN);
      }
      for (const auto& view : views) {
        const Eigen::Matrix3d& rot = view.cam.camera_from_world();
        const Eigen::Vector3d& center = view.cam.center();
        const double f = view.cam.focal(), half = view.cam.half(), lim = view.cam.resolution();
        for (int c = 0; c < res; ++c) {
          const auto idx = static_cast<Eigen::Index>(r) * res + c;
          const Eigen::Vector3d g = out.ground_points.col(idx);
          if (std::isnan(g.x())) continue;
          const Eigen::Vector3d d = rot * (g - center);
          if (!(d.z() > 1e-9)) continue;
          const double u = half + f * d.x() / d.z();
          const double v = half + f * d.y() / d.z();
          if (!(u >= 0.0 && u < lim && v >= 0.0 && v < lim)) continue;
          const double sample = sample_bilinear(*view.pixels, u - 0.5, v - 0.5);
          sums[static_cast<std::size_t>(idx)] += static_cast<std::int64_t>(sample * kFixedScale + 0.5);
          ++out.counts(r, c);
        }
      }
      for (int c = 0; c < res; ++c) {
        const auto idx = static_cast<std::size_t>(r) * res + c;
        const int n = out.counts(r, c);
        out.pixels(r, c) = n > 0 ? static_cast<float>(static_cast<double>(sums[idx]) / n / kFixedScale)
                                 : std::numeric_limits<float>::quiet_NaN();
      }
    }
  });
  return out;
}

double estimate_visibility(const SceneRenderer& renderer, const SamplingPlan& plan, const ElevationModel& dem,
                           const VisibilityOptions& opt) {
  if (plan.poses.empty()) throw ParameterError("empty sampling plan");
  const auto& persons = renderer.scene().persons;
  if (persons.empty()) throw ParameterError("scene has no persons to probe");
  const int k = std::max(1, opt.probes_per_axis);
  const auto n_frames = static_cast<int>(plan.poses.size());
  const int needed = std::max(1, static_cast<int>(std::ceil(opt.min_fraction * n_frames - 1e-12)));

  std::vector<PinholeCamera> cams;
  cams.reserve(plan.poses.size());
  for (const auto& p : plan.poses) cams.emplace_back(p, renderer.intrinsics());

  long probes = 0, visible = 0;
  for (const auto& person : persons) {
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        const Eigen::Vector2d off((i + 0.5) / k * 2.0 - 1.0, (j + 0.5) / k * 2.0 - 1.0);
        if (off.squaredNorm() > 1.0) continue;
        const Eigen::Vector2d xy = person.center + person.radius * off;
        const double h = dem.sample(xy.x(), xy.y());
        if (std::isnan(h)) continue;
        const Eigen::Vector3d g(xy.x(), xy.y(), h);
        ++probes;
        int seen = 0;
        for (const auto& cam : cams) {
          if (cam.project(g) && !renderer.occluded(g, cam.center())) ++seen;
          if (seen >= needed) break;
        }
        if (seen >= needed) ++visible;
      }
    }
  }
  if (probes == 0) throw ParameterError("no person probe lies on the terrain");
  return static_cast<double>(visible) / static_cast<double>(probes);
}

Image<float> crop(const IntegralImage& img, const Eigen::Vector2d& center_px, int size) {
  Image<float> out(size, size);
  const int res = img.resolution();
  const int c0 = static_cast<int>(std::floor(center_px.x() - 0.5 * size));
  const int r0 = static_cast<int>(std::floor(center_px.y() - 0.5 * size));
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const int rr = r0 + r, cc = c0 + c;
      const bool inside = rr >= 0 && rr < res && cc >= 0 && cc < res && img.valid(rr, cc);
      out(r, c) = inside ? img.pixels(rr, cc) : std::numeric_limits<float>::quiet_NaN();
    }
  }
  return out;
}

}  // namespace aos
