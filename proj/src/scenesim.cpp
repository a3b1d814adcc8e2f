#include "aos/scenesim.hpp"

#include "aos/error.hpp"
#include "aos/parallel.hpp"
#include "aos/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace aos {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

ForestScene generate_forest(const Rect& region, const ForestParams& params, std::uint64_t seed) {
  if (!(params.target_density >= 0.0 && params.target_density < 1.0)) {
    throw ParameterError("target_density must be in [0, 1)");
  }
  if (!(params.radius_min > 0.0 && params.radius_min <= params.radius_max)) {
    throw ParameterError("radius range must satisfy 0 < r_min <= r_max");
  }
  if (!(params.canopy_height > 0.0)) throw ParameterError("canopy_height must be > 0");
  if (!(region.width() > 0.0 && region.height() > 0.0)) throw ParameterError("region must have positive area");

  ForestScene scene;
  scene.region = region;
  scene.params = params;
  scene.seed = seed;

  const double r0 = params.radius_min, r1 = params.radius_max;
  const double mean_r2 = (r0 * r0 + r0 * r1 + r1 * r1) / 3.0;
  const double intensity = -std::log1p(-params.target_density) / (std::numbers::pi * mean_r2);
  rng::CounterRng rng(rng::derive_seed(seed, "occluders"));
  const auto n = rng.poisson(intensity * region.area());
  scene.occluders.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Disk d;
    d.center = {rng.uniform(region.min.x(), region.max.x()), rng.uniform(region.min.y(), region.max.y())};
    d.radius = rng.uniform(r0, r1);
    scene.occluders.push_back(d);
  }
  return scene;
}

void place_random_persons(ForestScene& scene, const Rect& area, int count, double radius, std::uint64_t seed) {
  if (!(radius > 0.0)) throw ParameterError("person radius must be > 0");
  rng::CounterRng rng(rng::derive_seed(seed, "persons"));
  for (int i = 0; i < count; ++i) {
    Disk d;
    d.center = {rng.uniform(area.min.x(), area.max.x()), rng.uniform(area.min.y(), area.max.y())};
    d.radius = radius;
    if (!scene.region.contains(d.center)) throw ParameterError("person area must lie inside the scene region");
    scene.persons.push_back(d);
  }
}

void place_random_clutter(ForestScene& scene, const Rect& area, int count, const ClutterParams& params,
                          std::uint64_t seed) {
  rng::CounterRng rng(rng::derive_seed(seed, "clutter"));
  for (int i = 0; i < count; ++i) {
    WarmClutter c;
    c.center = {rng.uniform(area.min.x(), area.max.x()), rng.uniform(area.min.y(), area.max.y())};
    c.half_length = rng.uniform(params.half_length_min, params.half_length_max);
    c.heading_deg = rng.uniform(0.0, 180.0);
    c.radius = params.radius;
    c.height_agl = rng.uniform(params.height_min, params.height_max);
    if (!scene.region.contains(c.center)) throw ParameterError("clutter area must lie inside the scene region");
    scene.clutter.push_back(c);
  }
}

void validate(const ForestScene& scene) {
  const auto& t = scene.temperatures;
  for (double v : {t.ground, t.canopy, t.person, t.clutter}) {
    if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("temperatures must lie in [0, 1]");
  }
  if (!(t.person > t.ground)) throw ParameterError("persons must be warmer than the ground");
  if (!(scene.params.canopy_height > 0.0)) throw ParameterError("canopy_height must be > 0");
  if (!(scene.sensor_noise_std >= 0.0)) throw ParameterError("sensor_noise_std must be >= 0");
  for (const auto& d : scene.occluders) {
    if (!scene.region.contains(d.center)) throw ParameterError("occluder center outside region");
    if (!(d.radius > 0.0)) throw ParameterError("occluder radius must be > 0");
  }
  for (const auto& d : scene.persons) {
    if (!scene.region.contains(d.center)) throw ParameterError("person center outside region");
    if (!(d.radius > 0.0)) throw ParameterError("person radius must be > 0");
  }
  for (const auto& c : scene.clutter) {
    if (!scene.region.contains(c.center)) throw ParameterError("clutter center outside region");
    if (!(c.radius > 0.0 && c.half_length >= 0.0)) throw ParameterError("clutter extent must be positive");
    if (!(c.height_agl > 0.0 && c.height_agl < scene.params.canopy_height)) {
      throw ParameterError("clutter height must lie between ground and canopy");
    }
  }
}

Pose perturb_pose(const Pose& true_pose, const PoseNoiseModel& model, std::uint64_t sample_index) {
  rng::CounterRng rng(rng::mix(model.seed, sample_index));
  const double dx = rng.normal(), dy = rng.normal(), dz = rng.normal(), dyaw = rng.normal();
  Pose out = true_pose;
  out.position.x() += model.sigma_xy * dx;
  out.position.y() += model.sigma_xy * dy;
  out.position.z() += model.sigma_z * dz;
  out.yaw_deg = normalize_angle_deg(true_pose.yaw_deg + model.sigma_yaw_deg * dyaw + model.yaw_bias_deg);
  return out;
}

// --- Renderer ------------------------------------------------------------------

namespace {

/// Capsule lying in the horizontal plane z = plane_z; a disk has half_length 0.
struct Slab {
  Eigen::Vector2d center;
  Eigen::Vector2d axis;  // unit
  double half_length;
  double radius_sq;
  double plane_z;
  float temperature;
  bool is_canopy;

  bool covers(const Eigen::Vector2d& p) const {
    const Eigen::Vector2d d = p - center;
    const double along = std::clamp(d.dot(axis), -half_length, half_length);
    return (d - along * axis).squaredNorm() <= radius_sq;
  }
};

class SlabIndex {
 public:
  void build(std::vector<Slab> slabs, double bucket) {
    slabs_ = std::move(slabs);
    z_lo_ = kInf;
    z_hi_ = -kInf;
    if (slabs_.empty()) return;
    Eigen::Vector2d lo = Eigen::Vector2d::Constant(kInf), hi = Eigen::Vector2d::Constant(-kInf);
    for (const auto& s : slabs_) {
      const double reach = s.half_length + std::sqrt(s.radius_sq);
      lo = lo.cwiseMin(s.center - Eigen::Vector2d::Constant(reach));
      hi = hi.cwiseMax(s.center + Eigen::Vector2d::Constant(reach));
      z_lo_ = std::min(z_lo_, s.plane_z);
      z_hi_ = std::max(z_hi_, s.plane_z);
    }
    origin_ = lo;
    bucket_ = bucket;
    nx_ = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / bucket)));
    ny_ = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / bucket)));
    cells_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    for (std::size_t i = 0; i < slabs_.size(); ++i) {
      const auto& s = slabs_[i];
      const double reach = s.half_length + std::sqrt(s.radius_sq);
      const auto [x0, y0] = cell_of(s.center - Eigen::Vector2d::Constant(reach));
      const auto [x1, y1] = cell_of(s.center + Eigen::Vector2d::Constant(reach));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) cells_[static_cast<std::size_t>(y) * nx_ + x].push_back(static_cast<int>(i));
      }
    }
  }

  bool empty() const { return slabs_.empty(); }
  double z_lo() const { return z_lo_; }
  double z_hi() const { return z_hi_; }
  const Slab& slab(int i) const { return slabs_[i]; }

  /// Calls fn(slab) for every slab registered in buckets overlapping the box.
  template <typename Fn>
  void visit(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi, Fn&& fn) const {
    const auto [x0, y0] = cell_of(lo);
    const auto [x1, y1] = cell_of(hi);
    if (lo.x() > origin_.x() + nx_ * bucket_ || lo.y() > origin_.y() + ny_ * bucket_) return;
    if (hi.x() < origin_.x() || hi.y() < origin_.y()) return;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        for (int i : cells_[static_cast<std::size_t>(y) * nx_ + x]) fn(slabs_[i]);
      }
    }
  }

 private:
  std::pair<int, int> cell_of(const Eigen::Vector2d& p) const {
    const int x = static_cast<int>(std::floor((p.x() - origin_.x()) / bucket_));
    const int y = static_cast<int>(std::floor((p.y() - origin_.y()) / bucket_));
    return {std::clamp(x, 0, nx_ - 1), std::clamp(y, 0, ny_ - 1)};
  }

  std::vector<Slab> slabs_;
  std::vector<std::vector<int>> cells_;
  Eigen::Vector2d origin_ = Eigen::Vector2d::Zero();
  double bucket_ = 1.0;
  int nx_ = 0, ny_ = 0;
  double z_lo_ = kInf, z_hi_ = -kInf;
};

}  // namespace

struct SceneRenderer::Impl {
  ForestScene scene;
  const ElevationModel* dem;
  CameraIntrinsics intr;
  SlabIndex canopy;
  SlabIndex clutter;
  std::vector<Disk> persons;

  /// Nearest slab of `index` hit before best_t; updates best_t and value.
  void canopy_or_clutter(const Eigen::Vector3d& o, const Eigen::Vector3d& dir, double& best_t, double& value) const {
    nearest(canopy, o, dir, best_t, value);
    nearest(clutter, o, dir, best_t, value);
  }

  void nearest(const SlabIndex& index, const Eigen::Vector3d& o, const Eigen::Vector3d& dir, double& best_t,
               double& value) const {
    if (index.empty()) return;
    const double t_a = std::max(0.0, (o.z() - index.z_hi()) / -dir.z());
    const double t_b = std::max(0.0, (o.z() - index.z_lo()) / -dir.z());
    if (!(t_a < best_t)) return;
    const Eigen::Vector2d p1 = (o + t_a * dir).head<2>();
    const Eigen::Vector2d p2 = (o + std::min(t_b, best_t) * dir).head<2>();
    index.visit(p1.cwiseMin(p2), p1.cwiseMax(p2), [&](const Slab& s) {
      const double t = (o.z() - s.plane_z) / -dir.z();
      if (!(t > 0.0 && t < best_t)) return;
      if (s.covers((o + t * dir).head<2>())) {
        best_t = t;
        value = s.temperature;
      }
    });
  }

  double person_or_ground(const Eigen::Vector3d& g) const {
    for (const auto& p : persons) {
      if ((g.head<2>() - p.center).squaredNorm() <= p.radius * p.radius) return scene.temperatures.person;
    }
    return scene.temperatures.ground;
  }
};

SceneRenderer::SceneRenderer(const ForestScene& scene, const ElevationModel& dem, CameraIntrinsics intr)
    : impl_(std::make_unique<Impl>()) {
  validate(scene);
  intr.validate();
  impl_->scene = scene;
  impl_->dem = &dem;
  impl_->intr = intr;
  impl_->persons = scene.persons;

  std::vector<Slab> canopy, clutter;
  for (const auto& d : scene.occluders) {
    const double g = dem.sample(d.center.x(), d.center.y());
    if (std::isnan(g)) continue;  // no ground under it: not part of the rendered world
    canopy.push_back({d.center, Eigen::Vector2d::UnitX(), 0.0, d.radius * d.radius, g + scene.params.canopy_height,
                      static_cast<float>(scene.temperatures.canopy), true});
  }
  for (const auto& c : scene.clutter) {
    const double g = dem.sample(c.center.x(), c.center.y());
    if (std::isnan(g)) continue;
    const double h = c.heading_deg * kDeg;
    clutter.push_back({c.center, Eigen::Vector2d(std::sin(h), std::cos(h)), c.half_length, c.radius * c.radius,
                       g + c.height_agl, static_cast<float>(scene.temperatures.clutter), false});
  }
  impl_->canopy.build(std::move(canopy), std::max(0.5, 0.5 * scene.params.radius_max));
  impl_->clutter.build(std::move(clutter), 8.0);
}

SceneRenderer::~SceneRenderer() = default;
SceneRenderer::SceneRenderer(SceneRenderer&&) noexcept = default;
SceneRenderer& SceneRenderer::operator=(SceneRenderer&&) noexcept = default;

const ForestScene& SceneRenderer::scene() const { return impl_->scene; }
const CameraIntrinsics& SceneRenderer::intrinsics() const { return impl_->intr; }

double SceneRenderer::trace(const Eigen::Vector3d& o, const Eigen::Vector3d& dir) const {
  const Impl& m = *impl_;
  const auto t_hit = intersect_ground(*m.dem, o, dir);
  const double t_ground = t_hit ? *t_hit : kInf;

  double best_t = t_ground;
  double value = std::numeric_limits<double>::quiet_NaN();
  if (dir.z() < 0.0) {
    m.canopy_or_clutter(o, dir, best_t, value);
  }
  if (!std::isnan(value)) return value;
  if (!t_hit) return value;
  return m.person_or_ground(o + t_ground * dir);
}

bool SceneRenderer::occluded(const Eigen::Vector3d& g, const Eigen::Vector3d& eye) const {
  const Impl& m = *impl_;
  if (m.canopy.empty()) return false;
  const double dz = eye.z() - g.z();
  if (!(dz > 0.0)) return false;
  const double s_lo = std::clamp((m.canopy.z_lo() - g.z()) / dz, 0.0, 1.0);
  const double s_hi = std::clamp((m.canopy.z_hi() - g.z()) / dz, 0.0, 1.0);
  const Eigen::Vector3d seg = eye - g;
  const Eigen::Vector2d p1 = (g + s_lo * seg).head<2>();
  const Eigen::Vector2d p2 = (g + s_hi * seg).head<2>();
  bool hit = false;
  m.canopy.visit(p1.cwiseMin(p2), p1.cwiseMax(p2), [&](const Slab& s) {
    if (hit) return;
    const double t = (s.plane_z - g.z()) / dz;
    if (!(t > 0.0 && t < 1.0)) return;
    if (s.covers((g + t * seg).head<2>())) hit = true;
  });
  return hit;
}

ThermalFrame SceneRenderer::render(const Pose& true_pose, unsigned workers) const {
  const Impl& m = *impl_;
  const double ground_here = m.dem->sample(true_pose.position.x(), true_pose.position.y());
  if (!std::isnan(ground_here) && !(true_pose.position.z() > ground_here + m.scene.params.canopy_height)) {
    throw ParameterError("camera pose must be above the canopy");
  }
  const int res = m.intr.resolution_px;
  const PinholeCamera cam(true_pose, m.intr);
  const std::uint64_t noise_key = rng::mix(m.scene.seed, pose_digest(true_pose));
  const double sigma = m.scene.sensor_noise_std;
  const double fallback = m.scene.temperatures.ground;

  ThermalFrame frame;
  frame.pixels.resize(res, res);
  frame.measured_pose = true_pose;
  frame.true_pose = true_pose;
  frame.intrinsics = m.intr;

  parallel_for_rows(res, workers, [&](int r0, int r1) {
    for (int r = r0; r < r1; ++r) {
      for (int c = 0; c < res; ++c) {
        const Eigen::Vector3d dir = cam.ray_direction(c + 0.5, r + 0.5);
        double v = trace(cam.center(), dir);
        if (std::isnan(v)) v = fallback;
        if (sigma > 0.0) {
          const auto idx = static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(res) + c;
          v += sigma * rng::irwin_hall_normal(rng::mix(noise_key, idx));
        }
        frame.pixels(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  });
  return frame;
}

ThermalFrame render_thermal(const ForestScene& scene, const Pose& true_pose, const CameraIntrinsics& intr,
                            const ElevationModel& dem) {
  return SceneRenderer(scene, dem, intr).render(true_pose);
}

}  // namespace aos
