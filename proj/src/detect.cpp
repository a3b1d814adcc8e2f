#include "aos/detect.hpp"

#include "aos/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace aos {

double expected_person_area_px(const CameraIntrinsics& intr, double person_radius_m, double altitude_agl_m) {
  const double r_px = person_radius_m * intr.focal_px() / altitude_agl_m;
  return std::numbers::pi * r_px * r_px;
}

void DetectorConfig::validate() const {
  if (!(intensity_threshold > 0.0 && intensity_threshold < 1.0)) {
    throw ParameterError("intensity_threshold must be in (0, 1)");
  }
  if (!(min_blob_px > 0 && min_blob_px <= max_blob_px)) throw ParameterError("need 0 < min_blob_px <= max_blob_px");
  if (!(reference_contrast > 0.0)) throw ParameterError("reference_contrast must be > 0");
  if (!(expected_area_px > 0.0)) throw ParameterError("expected_area_px must be > 0");
}

namespace {

double median_of(std::vector<float>& v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double upper = *mid;
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

DetectionResult detect(const IntegralImage& image, const DetectorConfig& cfg) {
  cfg.validate();
  DetectionResult result;
  const int res = image.resolution();
  std::vector<float> valid;
  valid.reserve(static_cast<std::size_t>(res) * res);
  for (int r = 0; r < res; ++r) {
    for (int c = 0; c < res; ++c) {
      if (image.valid(r, c)) valid.push_back(image.pixels(r, c));
    }
  }
  if (valid.empty()) {
    result.no_valid_pixels = true;
    return result;
  }
  const double background = median_of(valid);

  // 0 = cold or invalid, 1 = warm and unlabeled, 2 = labeled, 3 = box growth.
  Image<std::uint8_t> mask(res, res);
  for (int r = 0; r < res; ++r) {
    for (int c = 0; c < res; ++c) {
      mask(r, c) = image.valid(r, c) && image.pixels(r, c) - background > cfg.intensity_threshold ? 1 : 0;
    }
  }

  std::vector<std::pair<int, int>> stack;
  std::vector<std::pair<int, int>> component;
  std::vector<std::pair<int, int>> grown;
  for (int r = 0; r < res; ++r) {
    for (int c = 0; c < res; ++c) {
      if (mask(r, c) != 1) continue;
      component.clear();
      stack.assign(1, {r, c});
      mask(r, c) = 2;
      while (!stack.empty()) {
        const auto [pr, pc] = stack.back();
        stack.pop_back();
        component.push_back({pr, pc});
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = pr + dr, nc = pc + dc;
            if (nr < 0 || nr >= res || nc < 0 || nc >= res || mask(nr, nc) != 1) continue;
            mask(nr, nc) = 2;
            stack.push_back({nr, nc});
          }
        }
      }
      const auto area = static_cast<int>(component.size());
      if (area < cfg.min_blob_px || area > cfg.max_blob_px) continue;

      Detection d;
      d.area_px = area;
      d.bbox = {res, res, 0, 0};
      double peak = -1.0;
      Eigen::Vector3d sum = Eigen::Vector3d::Zero();
      int grounded = 0;
      for (const auto& [pr, pc] : component) {
        d.bbox.x_min = std::min(d.bbox.x_min, pc);
        d.bbox.y_min = std::min(d.bbox.y_min, pr);
        d.bbox.x_max = std::max(d.bbox.x_max, pc + 1);
        d.bbox.y_max = std::max(d.bbox.y_max, pr + 1);
        peak = std::max(peak, static_cast<double>(image.pixels(pr, pc)));
        const Eigen::Vector3d g = image.ground_point(pr, pc);
        if (!std::isnan(g.x())) {
          sum += g;
          ++grounded;
        }
      }
      // A blurred edge crosses half the peak contrast at the true edge, so the box
      // also spans the connected half-maximum region around the component.
      const double half_level = background + 0.5 * (peak - background);
      grown.clear();
      for (const auto& [pr, pc] : component) stack.push_back({pr, pc});
      while (!stack.empty()) {
        const auto [pr, pc] = stack.back();
        stack.pop_back();
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = pr + dr, nc = pc + dc;
            if (nr < 0 || nr >= res || nc < 0 || nc >= res || mask(nr, nc) != 0) continue;
            if (!image.valid(nr, nc) || image.pixels(nr, nc) < half_level) continue;
            mask(nr, nc) = 3;
            grown.push_back({nr, nc});
            stack.push_back({nr, nc});
          }
        }
      }
      for (const auto& [pr, pc] : grown) {
        mask(pr, pc) = 0;
        d.bbox.x_min = std::min(d.bbox.x_min, pc);
        d.bbox.y_min = std::min(d.bbox.y_min, pr);
        d.bbox.x_max = std::max(d.bbox.x_max, pc + 1);
        d.bbox.y_max = std::max(d.bbox.y_max, pr + 1);
      }
      d.peak = peak;
      d.world_center = grounded ? Eigen::Vector3d(sum / grounded) : Eigen::Vector3d::Constant(std::nan(""));
      const double contrast = std::clamp((peak - background) / cfg.reference_contrast, 0.0, 1.0);
      d.confidence = contrast * std::min(1.0, area / cfg.expected_area_px);
      result.detections.push_back(d);
    }
  }
  std::sort(result.detections.begin(), result.detections.end(), [](const Detection& a, const Detection& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.bbox.x_min != b.bbox.x_min) return a.bbox.x_min < b.bbox.x_min;
    return a.bbox.y_min < b.bbox.y_min;
  });
  return result;
}

std::vector<Detection> filter_by_confidence(std::span<const Detection> detections, double threshold) {
  std::vector<Detection> out;
  std::copy_if(detections.begin(), detections.end(), std::back_inserter(out),
               [threshold](const Detection& d) { return d.confidence >= threshold; });
  return out;
}

BlobDetector::BlobDetector(DetectorConfig cfg) : cfg_(cfg) { cfg_.validate(); }

namespace {

struct Registry {
  std::mutex mutex;
  std::map<std::string, DetectorFactory> factories{
      {"blob", [](const DetectorConfig& cfg) { return std::make_unique<BlobDetector>(cfg); }}};
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_detector(const std::string& name, DetectorFactory factory) {
  if (name.empty() || !factory) throw ParameterError("detector registration needs a name and a factory");
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  reg.factories[name] = std::move(factory);
}

std::unique_ptr<Detector> make_detector(const std::string& name, const DetectorConfig& cfg) {
  DetectorFactory factory;
  {
    auto& reg = registry();
    std::lock_guard lock(reg.mutex);
    const auto it = reg.factories.find(name);
    if (it == reg.factories.end()) throw ParameterError("unknown detector '" + name + "'");
    factory = it->second;
  }
  auto det = factory(cfg);
  if (!det) throw ParameterError("detector factory '" + name + "' returned nothing");
  if (!det->deterministic()) throw ParameterError("detector '" + name + "' is not deterministic");
  return det;
}

std::vector<std::string> detector_names() {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  std::vector<std::string> names;
  for (const auto& [k, v] : reg.factories) names.push_back(k);
  return names;
}

}  // namespace aos
