#pragma once

// Potential-field adaptive search over a grid of square cells.
//
// f(i) = P(i) * exp(-|x - c_i| / lambda) picks the next cell; exact ties are
// broken by the potential density P_d(i) = sum_j P(j) / |c_i - c_j| over
// growing square rings around each tied cell.

#include "aos/aoscore.hpp"
#include "aos/detect.hpp"

#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace aos {

struct CellId {
  int row = 0;  // 0 = northernmost
  int col = 0;
  bool operator==(const CellId&) const = default;
  auto operator<=>(const CellId&) const = default;
};

class ProbabilityGrid {
 public:
  using Values = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  /// `origin` is the south-west corner; row 0 of `probabilities` is the north edge.
  ProbabilityGrid(Eigen::Vector2d origin, double cell_size, Values probabilities);
  static ProbabilityGrid uniform(Eigen::Vector2d origin, double cell_size, int rows, int cols, double p = 1.0);

  int rows() const { return static_cast<int>(p_.rows()); }
  int cols() const { return static_cast<int>(p_.cols()); }
  int size() const { return rows() * cols(); }
  double cell_size() const { return cell_size_; }
  const Eigen::Vector2d& origin() const { return origin_; }
  const Values& probabilities() const { return p_; }

  double probability(CellId c) const { return p_(c.row, c.col); }
  bool visited(CellId c) const { return visited_[index(c)] != 0; }
  Eigen::Vector2d center(CellId c) const {
    return {origin_.x() + (c.col + 0.5) * cell_size_, origin_.y() + (rows() - c.row - 0.5) * cell_size_};
  }
  Rect bounds(CellId c) const;
  Rect extent() const;
  std::optional<CellId> cell_at(const Eigen::Vector2d& xy) const;

  /// Sets P = 0 and the visited flag.
  void mark_visited(CellId c);
  int positive_cells() const;  // unvisited with P > 0

 private:
  std::size_t index(CellId c) const { return static_cast<std::size_t>(c.row) * cols() + c.col; }
  Eigen::Vector2d origin_;
  double cell_size_;
  Values p_;
  std::vector<char> visited_;
};

/// One row per grid row, north first; comma separated.
ProbabilityGrid load_probability_csv(std::istream& in, Eigen::Vector2d origin, double cell_size);
void save_probability_csv(std::ostream& out, const ProbabilityGrid& grid);

struct PlannerConfig {
  double distance_scale = 0.0;  // lambda in meters; 0 = cell size
  double tie_epsilon = 1e-9;
  double weak_threshold = 0.05;
  double accept_threshold = 0.10;
  double max_path_length = std::numeric_limits<double>::infinity();
  double match_radius = 5.0;

  double lambda(const ProbabilityGrid& grid) const { return distance_scale > 0.0 ? distance_scale : grid.cell_size(); }
  void validate() const;
  bool operator==(const PlannerConfig&) const = default;
};

/// f(i) for every cell; 0 for visited or zero-probability cells.
ProbabilityGrid::Values potential(const ProbabilityGrid& grid, const Eigen::Vector2d& position,
                                  const PlannerConfig& cfg = {});

/// Sum over cells j != i within Chebyshev ring distance `ring` (negative =
/// whole grid) of P(j) / |c_i - c_j|.
double potential_density(const ProbabilityGrid& grid, CellId cell, int ring = -1);

std::optional<CellId> next_cell(const ProbabilityGrid& grid, const Eigen::Vector2d& position,
                                const PlannerConfig& cfg = {});

/// Edge-to-edge line SA through the cell center, horizontal or vertical,
/// whichever has the nearer endpoint (ties: horizontal). Flown from the near
/// endpoint. `opt.length_m` is replaced by the cell size.
SamplingPlan scan_plan_for_cell(const ElevationModel& dem, const ProbabilityGrid& grid, CellId cell,
                                const Eigen::Vector2d& position, LineSaOptions opt = {});

/// Line SA centered on a detection, orthogonal to the previous plan.
SamplingPlan resample_plan(const ElevationModel& dem, const Eigen::Vector2d& detection_xy,
                           double previous_heading_deg, const LineSaOptions& opt = {});

enum class Verdict { confirmed_true, confirmed_false };

struct ConfirmationRecord {
  double initial_confidence = 0.0;
  double resampled_confidence = 0.0;
  double delta() const { return resampled_confidence - initial_confidence; }
  Verdict verdict = Verdict::confirmed_false;
  int matched_index = -1;  // into the resample detections, -1 if none
};

ConfirmationRecord confirm(const Detection& initial, std::span<const Detection> resampled,
                           const PlannerConfig& cfg = {});

}  // namespace aos
