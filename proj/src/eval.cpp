#include "aos/eval.hpp"

#include "aos/error.hpp"
#include "aos/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace aos {

double iou(const PixelBox& a, const PixelBox& b) {
  const long iw = std::max(0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const long ih = std::max(0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const long inter = iw * ih;
  const long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

ApResult average_precision(std::span<const ScoredImage> images, double iou_threshold, double count_threshold) {
  struct Ref {
    double confidence;
    int image_id;
    int x_min;
    std::size_t image;
    std::size_t det;
  };
  std::vector<Ref> pool;
  std::vector<std::vector<char>> matched(images.size());
  ApResult res;
  for (std::size_t i = 0; i < images.size(); ++i) {
    matched[i].assign(images[i].labels.size(), 0);
    res.labels += static_cast<int>(images[i].labels.size());
    for (std::size_t k = 0; k < images[i].detections.size(); ++k) {
      const auto& d = images[i].detections[k];
      pool.push_back({d.confidence, images[i].image_id, d.bbox.x_min, i, k});
    }
  }
  std::stable_sort(pool.begin(), pool.end(), [](const Ref& a, const Ref& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.image_id != b.image_id) return a.image_id < b.image_id;
    return a.x_min < b.x_min;
  });

  std::vector<double> precision, recall;
  int tp_all = 0, fp_all = 0;
  for (const auto& ref : pool) {
    const auto& img = images[ref.image];
    const auto& det = img.detections[ref.det];
    double best = -1.0;
    int best_label = -1;
    for (std::size_t l = 0; l < img.labels.size(); ++l) {
      if (matched[ref.image][l]) continue;
      const double o = iou(det.bbox, img.labels[l].bbox);
      if (o > best) {
        best = o;
        best_label = static_cast<int>(l);
      }
    }
    const bool tp = best_label >= 0 && best >= iou_threshold;
    if (tp) matched[ref.image][static_cast<std::size_t>(best_label)] = 1;
    tp ? ++tp_all : ++fp_all;
    if (det.confidence >= count_threshold) tp ? ++res.tp : ++res.fp;
    if (res.labels > 0) {
      precision.push_back(static_cast<double>(tp_all) / (tp_all + fp_all));
      recall.push_back(static_cast<double>(tp_all) / res.labels);
    }
  }
  if (res.labels == 0) return res;

  // Precision envelope, then area over recall steps.
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  res.ap = ap;
  return res;
}

PersonsFound persons_found(std::span<const ScoredImage> images, double iou_threshold, double conf_threshold) {
  PersonsFound out;
  std::set<int> found;
  for (const auto& img : images) {
    for (const auto& d : img.detections) {
      if (d.confidence < conf_threshold) continue;
      bool inside = false;
      for (const auto& l : img.labels) {
        if (iou(d.bbox, l.bbox) >= iou_threshold) {
          inside = true;
          found.insert(l.person_id);
        }
      }
      if (!inside) ++out.pi;
    }
  }
  out.pf = static_cast<int>(found.size());
  return out;
}

std::vector<GroundTruthLabel> label_persons(const ForestScene& scene, const ElevationModel& dem,
                                            const Pose& virtual_pose, const CameraIntrinsics& intr,
                                            const Eigen::Vector2d& registration_shift, int image_id,
                                            const Image<std::int32_t>* counts, int dilate_px) {
  std::vector<GroundTruthLabel> labels;
  const PinholeCamera cam(virtual_pose, intr);
  const int res = intr.resolution_px;
  constexpr int kRim = 32;
  for (std::size_t pid = 0; pid < scene.persons.size(); ++pid) {
    const auto& person = scene.persons[pid];
    const Eigen::Vector2d c = person.center + registration_shift;
    const double h = dem.sample(c.x(), c.y());
    if (std::isnan(h)) continue;
    const auto center_px = cam.project({c.x(), c.y(), h});
    if (!center_px) continue;
    if (counts && (*counts)(static_cast<int>(center_px->y()), static_cast<int>(center_px->x())) == 0) continue;
    double u0 = center_px->x(), u1 = u0, v0 = center_px->y(), v1 = v0;
    for (int k = 0; k < kRim; ++k) {
      const double a = 2.0 * std::numbers::pi * k / kRim;
      const Eigen::Vector3d p(c.x() + person.radius * std::cos(a), c.y() + person.radius * std::sin(a), h);
      const Eigen::Vector3d d = cam.camera_from_world() * (p - cam.center());
      if (!(d.z() > 1e-9)) continue;
      const double u = cam.half() + cam.focal() * d.x() / d.z();
      const double v = cam.half() + cam.focal() * d.y() / d.z();
      u0 = std::min(u0, u), u1 = std::max(u1, u);
      v0 = std::min(v0, v), v1 = std::max(v1, v);
    }
    GroundTruthLabel l;
    l.person_id = static_cast<int>(pid);
    l.image_id = image_id;
    l.bbox.x_min = std::clamp(static_cast<int>(std::floor(u0)) - dilate_px, 0, res);
    l.bbox.y_min = std::clamp(static_cast<int>(std::floor(v0)) - dilate_px, 0, res);
    l.bbox.x_max = std::clamp(static_cast<int>(std::ceil(u1)) + dilate_px, 0, res);
    l.bbox.y_max = std::clamp(static_cast<int>(std::ceil(v1)) + dilate_px, 0, res);
    if (l.bbox.valid()) labels.push_back(l);
  }
  return labels;
}

MissionMetrics score_integrals(std::span<const IntegralRecord> integrals, const ForestScene& scene,
                               const ElevationModel& dem, const CameraIntrinsics& intr) {
  std::vector<ScoredImage> images;
  for (const auto& rec : integrals) {
    ScoredImage img;
    img.image_id = rec.id;
    img.detections = rec.detections;
    img.labels = label_persons(scene, dem, rec.virtual_pose, intr, rec.registration_shift, rec.id);
    images.push_back(std::move(img));
  }
  MissionMetrics m;
  m.integrals = static_cast<int>(integrals.size());
  m.ap = average_precision(images);
  m.persons = static_cast<int>(scene.persons.size());
  m.found = persons_found(images);
  return m;
}

std::vector<ApVsNRow> ap_vs_n_experiment(const ApSuiteConfig& cfg, const Detector& detector) {
  if (cfg.n_values.empty()) throw ParameterError("no N values");
  const int n_max = *std::max_element(cfg.n_values.begin(), cfg.n_values.end());
  if (*std::min_element(cfg.n_values.begin(), cfg.n_values.end()) < 1) throw ParameterError("N must be >= 1");

  const Rect terrain = cfg.region.dilated(20.0);
  const auto dem = ElevationModel::flat(terrain.min, terrain.max - terrain.min, 1.0, 0.0);
  const std::uint64_t suite = rng::derive_seed(cfg.seed, "ap_suite");
  ForestParams forest;
  forest.target_density = cfg.density;

  std::vector<std::vector<ScoredImage>> per_n(cfg.n_values.size());
  for (int s = 0; s < cfg.scenes; ++s) {
    const std::uint64_t scene_seed = rng::mix(suite, static_cast<std::uint64_t>(s));
    ForestScene scene = generate_forest(cfg.region, forest, scene_seed);
    place_random_persons(scene, cfg.person_area, 1, cfg.person_radius, scene_seed);
    const SceneRenderer renderer(scene, dem, cfg.intrinsics);
    const auto plan = plan_line_sa(dem, cfg.region.center(), 90.0, cfg.sa);
    if (static_cast<int>(plan.poses.size()) < n_max) throw ParameterError("N exceeds the plan length");

    PoseNoiseModel noise = cfg.noise;
    noise.seed = rng::mix(rng::derive_seed(cfg.seed, "pose_noise"), static_cast<std::uint64_t>(s));
    std::vector<ThermalFrame> frames;
    for (int k = 0; k < n_max; ++k) {
      ThermalFrame f = renderer.render(plan.poses[k], cfg.workers);
      f.measured_pose = perturb_pose(plan.poses[k], noise, static_cast<std::uint64_t>(k));
      frames.push_back(std::move(f));
    }
    for (std::size_t i = 0; i < cfg.n_values.size(); ++i) {
      const int n = cfg.n_values[i];
      const std::span<const ThermalFrame> subset(frames.data(), static_cast<std::size_t>(n));
      const auto virtual_pose = virtual_view(subset[(n - 1) / 2].measured_pose, cfg.sa.yaw_deg);
      const auto img = integrate(subset, dem, virtual_pose, {cfg.workers});
      Eigen::Vector2d shift = Eigen::Vector2d::Zero();
      for (const auto& f : subset) shift += f.measured_pose.xy() - f.true_pose.xy();
      shift /= n;
      ScoredImage scored;
      scored.image_id = s;
      scored.detections = detector.detect(img).detections;
      scored.labels = label_persons(scene, dem, virtual_pose, cfg.intrinsics, shift, s, &img.counts);
      per_n[i].push_back(std::move(scored));
    }
  }
  std::vector<ApVsNRow> rows;
  for (std::size_t i = 0; i < cfg.n_values.size(); ++i) {
    rows.push_back({cfg.n_values[i], average_precision(per_n[i], cfg.iou_threshold)});
  }
  return rows;
}

}  // namespace aos
