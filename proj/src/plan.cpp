#include "aos/plan.hpp"

#include "aos/error.hpp"
#include "aos/kvtext.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace aos {

ProbabilityGrid::ProbabilityGrid(Eigen::Vector2d origin, double cell_size, Values probabilities)
    : origin_(std::move(origin)), cell_size_(cell_size), p_(std::move(probabilities)) {
  if (!(cell_size_ > 0.0)) throw ParameterError("cell_size must be > 0");
  if (p_.size() == 0) throw ParameterError("probability grid is empty");
  if (!p_.allFinite() || (p_.array() < 0.0).any()) throw ParameterError("probabilities must be finite and >= 0");
  visited_.assign(static_cast<std::size_t>(p_.size()), 0);
}

ProbabilityGrid ProbabilityGrid::uniform(Eigen::Vector2d origin, double cell_size, int rows, int cols, double p) {
  return ProbabilityGrid(std::move(origin), cell_size, Values::Constant(rows, cols, p));
}

Rect ProbabilityGrid::bounds(CellId c) const {
  const Eigen::Vector2d half = Eigen::Vector2d::Constant(0.5 * cell_size_);
  const Eigen::Vector2d ctr = center(c);
  return {ctr - half, ctr + half};
}

Rect ProbabilityGrid::extent() const {
  return {origin_, origin_ + cell_size_ * Eigen::Vector2d(cols(), rows())};
}

std::optional<CellId> ProbabilityGrid::cell_at(const Eigen::Vector2d& xy) const {
  const Eigen::Vector2d rel = (xy - origin_) / cell_size_;
  const int col = static_cast<int>(std::floor(rel.x()));
  const int row_from_south = static_cast<int>(std::floor(rel.y()));
  if (col < 0 || col >= cols() || row_from_south < 0 || row_from_south >= rows()) return std::nullopt;
  return CellId{rows() - 1 - row_from_south, col};
}

void ProbabilityGrid::mark_visited(CellId c) {
  p_(c.row, c.col) = 0.0;
  visited_[index(c)] = 1;
}

int ProbabilityGrid::positive_cells() const {
  int n = 0;
  for (int r = 0; r < rows(); ++r) {
    for (int c = 0; c < cols(); ++c) n += (!visited({r, c}) && p_(r, c) > 0.0) ? 1 : 0;
  }
  return n;
}

ProbabilityGrid load_probability_csv(std::istream& in, Eigen::Vector2d origin, double cell_size) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto values = kv::parse_doubles(line, line_no, 0);
    for (double v : values) {
      if (!(v >= 0.0 && v <= 1.0)) throw ParseError(line_no, "probabilities must lie in [0, 1]");
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw ParseError(line_no, "expected " + std::to_string(rows.front().size()) + " values, got " +
                                    std::to_string(values.size()));
    }
    if (values.empty()) throw ParseError(line_no, "empty row");
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError(0, "probability map is empty");
  ProbabilityGrid::Values p(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) p(r, c) = rows[r][c];
  }
  return ProbabilityGrid(std::move(origin), cell_size, std::move(p));
}

void save_probability_csv(std::ostream& out, const ProbabilityGrid& grid) {
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      if (c) out << ',';
      out << kv::format_double(grid.probability({r, c}));
    }
    out << '\n';
  }
}

void PlannerConfig::validate() const {
  if (!(distance_scale >= 0.0)) throw ParameterError("distance_scale must be >= 0 (0 = cell size)");
  if (!(tie_epsilon >= 0.0 && tie_epsilon < 1.0)) throw ParameterError("tie_epsilon must be in [0, 1)");
  if (!(weak_threshold >= 0.0 && weak_threshold <= accept_threshold && accept_threshold <= 1.0)) {
    throw ParameterError("need 0 <= weak_threshold <= accept_threshold <= 1");
  }
  if (!(max_path_length > 0.0)) throw ParameterError("max_path_length must be > 0");
  if (!(match_radius > 0.0)) throw ParameterError("match_radius must be > 0");
}

ProbabilityGrid::Values potential(const ProbabilityGrid& grid, const Eigen::Vector2d& position,
                                  const PlannerConfig& cfg) {
  const double lambda = cfg.lambda(grid);
  ProbabilityGrid::Values f = ProbabilityGrid::Values::Zero(grid.rows(), grid.cols());
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      const double p = grid.probability({r, c});
      if (grid.visited({r, c}) || !(p > 0.0)) continue;
      f(r, c) = std::exp(std::log(p) - (position - grid.center({r, c})).norm() / lambda);
    }
  }
  return f;
}

double potential_density(const ProbabilityGrid& grid, CellId cell, int ring) {
  const int r0 = ring < 0 ? 0 : std::max(0, cell.row - ring);
  const int r1 = ring < 0 ? grid.rows() - 1 : std::min(grid.rows() - 1, cell.row + ring);
  const int c0 = ring < 0 ? 0 : std::max(0, cell.col - ring);
  const int c1 = ring < 0 ? grid.cols() - 1 : std::min(grid.cols() - 1, cell.col + ring);
  const Eigen::Vector2d ci = grid.center(cell);
  double sum = 0.0;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      if (r == cell.row && c == cell.col) continue;
      const double p = grid.probability({r, c});
      if (p > 0.0) sum += p / (ci - grid.center({r, c})).norm();
    }
  }
  return sum;
}

std::optional<CellId> next_cell(const ProbabilityGrid& grid, const Eigen::Vector2d& position,
                                const PlannerConfig& cfg) {
  const double lambda = cfg.lambda(grid);
  std::vector<std::pair<CellId, double>> scored;
  double best = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      const double p = grid.probability({r, c});
      if (grid.visited({r, c}) || !(p > 0.0)) continue;
      const double log_f = std::log(p) - (position - grid.center({r, c})).norm() / lambda;
      scored.push_back({{r, c}, log_f});
      best = std::max(best, log_f);
    }
  }
  if (scored.empty()) return std::nullopt;

  // f_i >= (1 - eps) * f_max, in log space.
  const double log_keep = std::log1p(-cfg.tie_epsilon);
  std::vector<CellId> tied;
  for (const auto& [id, lf] : scored) {
    if (lf >= best + log_keep) tied.push_back(id);
  }
  const int max_ring = std::max(grid.rows(), grid.cols()) - 1;
  for (int ring = 1; tied.size() > 1 && ring <= max_ring; ++ring) {
    std::vector<double> pd(tied.size());
    double pd_max = 0.0;
    for (std::size_t k = 0; k < tied.size(); ++k) {
      pd[k] = potential_density(grid, tied[k], ring);
      pd_max = std::max(pd_max, pd[k]);
    }
    if (!(pd_max > 0.0)) continue;
    std::vector<CellId> narrowed;
    for (std::size_t k = 0; k < tied.size(); ++k) {
      if (pd[k] >= (1.0 - cfg.tie_epsilon) * pd_max) narrowed.push_back(tied[k]);
    }
    tied = std::move(narrowed);
  }
  return tied.front();  // row-major order: lowest (row, col)
}

SamplingPlan scan_plan_for_cell(const ElevationModel& dem, const ProbabilityGrid& grid, CellId cell,
                                const Eigen::Vector2d& position, LineSaOptions opt) {
  opt.length_m = grid.cell_size();
  const Eigen::Vector2d ctr = grid.center(cell);
  const double half = 0.5 * grid.cell_size();
  const Eigen::Vector2d west = ctr - Eigen::Vector2d(half, 0.0), east = ctr + Eigen::Vector2d(half, 0.0);
  const Eigen::Vector2d south = ctr - Eigen::Vector2d(0.0, half), north = ctr + Eigen::Vector2d(0.0, half);
  const double dw = (position - west).norm(), de = (position - east).norm();
  const double ds = (position - south).norm(), dn = (position - north).norm();
  double heading;
  if (std::min(dw, de) <= std::min(ds, dn)) {
    heading = dw <= de ? 90.0 : 270.0;
  } else {
    heading = ds <= dn ? 0.0 : 180.0;
  }
  return plan_line_sa(dem, ctr, heading, opt);
}

SamplingPlan resample_plan(const ElevationModel& dem, const Eigen::Vector2d& detection_xy,
                           double previous_heading_deg, const LineSaOptions& opt) {
  return plan_line_sa(dem, detection_xy, std::fmod(previous_heading_deg + 90.0, 360.0), opt);
}

ConfirmationRecord confirm(const Detection& initial, std::span<const Detection> resampled, const PlannerConfig& cfg) {
  ConfirmationRecord rec;
  rec.initial_confidence = initial.confidence;
  const Eigen::Vector2d at = initial.world_center.head<2>();
  for (std::size_t k = 0; k < resampled.size(); ++k) {
    const auto& d = resampled[k];
    if (!((d.world_center.head<2>() - at).norm() <= cfg.match_radius)) continue;
    if (rec.matched_index < 0 || d.confidence > rec.resampled_confidence) {
      rec.resampled_confidence = d.confidence;
      rec.matched_index = static_cast<int>(k);
    }
  }
  rec.verdict = rec.resampled_confidence >= cfg.accept_threshold ? Verdict::confirmed_true : Verdict::confirmed_false;
  return rec;
}

}  // namespace aos
