#pragma once

// Person detection on integral images.
//
// The reference detector thresholds each image relative to its median,
// labels 8-connected warm blobs and scores each blob by peak contrast and
// area. Other detectors plug in through the Detector interface and the
// name registry.

#include "aos/aoscore.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace aos {

/// Pixel rectangle, inclusive min, exclusive max.
struct PixelBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int width() const { return x_max - x_min; }
  int height() const { return y_max - y_min; }
  long area() const { return static_cast<long>(width()) * height(); }
  bool valid() const { return x_min < x_max && y_min < y_max; }
  Eigen::Vector2d center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
  bool operator==(const PixelBox&) const = default;
};

struct Detection {
  PixelBox bbox;
  double confidence = 0.0;
  Eigen::Vector3d world_center = Eigen::Vector3d::Zero();
  int area_px = 0;
  double peak = 0.0;
  bool operator==(const Detection&) const = default;
};

struct DetectionResult {
  std::vector<Detection> detections;
  bool no_valid_pixels = false;
};

/// Blob area of a person disk seen from `altitude_agl_m` at nadir.
double expected_person_area_px(const CameraIntrinsics& intr, double person_radius_m = 0.4,
                               double altitude_agl_m = 35.0);

struct DetectorConfig {
  double intensity_threshold = 0.15;  // above the median
  int min_blob_px = 4;
  int max_blob_px = 2000;
  double reference_contrast = 0.6;  // person minus ground
  double expected_area_px = expected_person_area_px(CameraIntrinsics{});

  void validate() const;
  bool operator==(const DetectorConfig&) const = default;
};

/// Sorted by confidence descending, then x_min, then y_min.
DetectionResult detect(const IntegralImage& image, const DetectorConfig& cfg = {});

/// Keeps detections with confidence >= threshold, order preserved.
std::vector<Detection> filter_by_confidence(std::span<const Detection> detections, double threshold = 0.10);

class Detector {
 public:
  virtual ~Detector() = default;
  virtual DetectionResult detect(const IntegralImage& image) const = 0;
  virtual bool deterministic() const = 0;
  virtual std::string name() const = 0;
};

class BlobDetector final : public Detector {
 public:
  explicit BlobDetector(DetectorConfig cfg = {});
  DetectionResult detect(const IntegralImage& image) const override { return aos::detect(image, cfg_); }
  bool deterministic() const override { return true; }
  std::string name() const override { return "blob"; }
  const DetectorConfig& config() const { return cfg_; }

 private:
  DetectorConfig cfg_;
};

using DetectorFactory = std::function<std::unique_ptr<Detector>(const DetectorConfig&)>;

/// Registers a factory under `name`. The detector it builds must declare
/// itself deterministic; "blob" is registered by default.
void register_detector(const std::string& name, DetectorFactory factory);
std::unique_ptr<Detector> make_detector(const std::string& name, const DetectorConfig& cfg = {});
std::vector<std::string> detector_names();

}  // namespace aos
