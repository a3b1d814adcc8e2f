#pragma once

// Detection metrics and the hyperbolic AP(N) curve.

#include "aos/aoscore.hpp"
#include "aos/detect.hpp"
#include "aos/mission.hpp"
#include "aos/scenesim.hpp"

#include <optional>
#include <span>
#include <vector>

namespace aos {

double iou(const PixelBox& a, const PixelBox& b);

struct GroundTruthLabel {
  PixelBox bbox;
  int person_id = 0;
  int image_id = 0;
};

struct ScoredImage {
  int image_id = 0;
  std::vector<Detection> detections;
  std::vector<GroundTruthLabel> labels;
};

struct ApResult {
  std::optional<double> ap;  // nullopt when there are no labels
  int tp = 0;                // at confidence >= count_threshold
  int fp = 0;
  int labels = 0;
};

/// Pooled, confidence-sorted greedy matching (best unmatched label by IoU);
/// all-point interpolated area under the precision-recall curve.
ApResult average_precision(std::span<const ScoredImage> images, double iou_threshold = 0.25,
                           double count_threshold = 0.10);

struct PersonsFound {
  int pf = 0;
  int pi = 0;
};

/// PF: distinct persons overlapped (IoU >= iou_threshold) by a detection at
/// >= conf_threshold in any image. PI: such detections outside all labels.
PersonsFound persons_found(std::span<const ScoredImage> images, double iou_threshold = 0.01,
                           double conf_threshold = 0.10);

/// Boxes of persons visible in an integral's footprint: each disk, shifted by
/// `registration_shift`, projected through the virtual pose; bounding box
/// dilated by `dilate_px` and clipped. Persons whose center falls outside
/// the valid area are skipped.
std::vector<GroundTruthLabel> label_persons(const ForestScene& scene, const ElevationModel& dem,
                                            const Pose& virtual_pose, const CameraIntrinsics& intr,
                                            const Eigen::Vector2d& registration_shift, int image_id,
                                            const Image<std::int32_t>* counts = nullptr, int dilate_px = 1);

struct MissionMetrics {
  int integrals = 0;
  ApResult ap;
  int persons = 0;
  PersonsFound found;
};

/// Labels every logged integral from the scene's persons and scores the
/// detections: AP at IoU 0.25, PF/PI at IoU 0.01.
MissionMetrics score_integrals(std::span<const IntegralRecord> integrals, const ForestScene& scene,
                               const ElevationModel& dem, const CameraIntrinsics& intr);

struct ApCurveFit {
  double a = 0.0;
  double b = 0.0;
  double mse = 0.0;
  int iterations = 0;
  double operator()(double n) const { return a * n / (b + n); }
};

struct FitOptions {
  double penalty = 10.0;  // weight on residuals where the curve is below the data
  int max_iterations = 500;
  double tolerance = 1e-15;
};

/// AP(N) = a N / (b + N) by Levenberg-Marquardt on the asymmetrically
/// weighted residuals; mse is over unweighted residuals.
ApCurveFit fit_ap_curve(std::span<const Eigen::Vector2d> points, const FitOptions& opt = {});

struct ApSuiteConfig {
  int scenes = 50;
  std::uint64_t seed = 1;
  double density = 0.5;
  Rect region{{-45.0, -45.0}, {45.0, 45.0}};
  Rect person_area{{-10.0, -8.0}, {10.0, 8.0}};
  double person_radius = 0.4;
  LineSaOptions sa;
  PoseNoiseModel noise;
  CameraIntrinsics intrinsics;
  std::vector<int> n_values{1, 5, 10, 15, 20, 25, 30};
  double iou_threshold = 0.25;
  unsigned workers = 0;
};

struct ApVsNRow {
  int n = 0;
  ApResult result;
};

/// For each scene: one line SA over a fresh forest with one person; for
/// each N, integrate the first N samples, detect and label.
std::vector<ApVsNRow> ap_vs_n_experiment(const ApSuiteConfig& cfg, const Detector& detector);

}  // namespace aos
