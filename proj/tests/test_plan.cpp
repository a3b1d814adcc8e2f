#include "aos/error.hpp"
#include "aos/plan.hpp"
#include "aos/rng.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace aos;

namespace {

oracle::Grid to_oracle(const ProbabilityGrid& g) {
  oracle::Grid o{g.rows(), g.cols(), g.cell_size(), g.origin(), {}};
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) o.p.push_back(g.probability({r, c}));
  return o;
}

ProbabilityGrid random_grid(std::uint64_t seed, int rows, int cols, double cell) {
  rng::CounterRng r(seed);
  ProbabilityGrid::Values v(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) v(i, j) = r.uniform() < 0.3 ? 0.0 : std::round(r.uniform() * 4.0) / 4.0;
  return ProbabilityGrid({0.0, 0.0}, cell, v);
}

Detection at(double x, double y, double conf) {
  Detection d;
  d.world_center = {x, y, 0.0};
  d.confidence = conf;
  return d;
}

ElevationModel flat() { return ElevationModel::flat({-100.0, -100.0}, {400.0, 400.0}, 5.0, 0.0); }

}  // namespace

TEST(Grid, GeometryAndVisiting) {
  ProbabilityGrid g = ProbabilityGrid::uniform({10.0, 20.0}, 30.0, 2, 3, 0.5);
  EXPECT_EQ(g.center({0, 0}), Eigen::Vector2d(25.0, 65.0));
  EXPECT_EQ(g.center({1, 2}), Eigen::Vector2d(85.0, 35.0));
  EXPECT_EQ(g.cell_at({26.0, 64.0}), (CellId{0, 0}));
  EXPECT_FALSE(g.cell_at({0.0, 0.0}).has_value());
  EXPECT_EQ(g.positive_cells(), 6);
  g.mark_visited({0, 1});
  EXPECT_TRUE(g.visited({0, 1}));
  EXPECT_DOUBLE_EQ(g.probability({0, 1}), 0.0);
  EXPECT_EQ(g.positive_cells(), 5);
  EXPECT_THROW(ProbabilityGrid({0.0, 0.0}, 0.0, ProbabilityGrid::Values::Ones(2, 2)), ParameterError);
  EXPECT_THROW(ProbabilityGrid({0.0, 0.0}, 1.0, ProbabilityGrid::Values::Constant(2, 2, -1.0)), ParameterError);
}

TEST(Potential, Values) {
  ProbabilityGrid::Values v(1, 3);
  v << 0.7, 1.0, 0.0;
  const ProbabilityGrid g({0.0, 0.0}, 30.0, v);
  const auto f = potential(g, g.center({0, 0}));
  EXPECT_DOUBLE_EQ(f(0, 0), 0.7);
  EXPECT_NEAR(f(0, 1), std::exp(-1.0), 1e-12);
  EXPECT_DOUBLE_EQ(f(0, 2), 0.0);
  PlannerConfig raw;
  raw.distance_scale = 1.0;
  const auto tiny = potential(g, {-3000.0, 15.0}, raw);
  EXPECT_GE(tiny(0, 0), 0.0);
}

TEST(PotentialDensity, Values) {
  ProbabilityGrid::Values v(1, 3);
  v << 0.0, 0.4, 0.8;
  const ProbabilityGrid g({0.0, 0.0}, 30.0, v);
  EXPECT_NEAR(potential_density(g, {0, 0}), 0.4 / 30.0 + 0.8 / 60.0, 1e-12);
  EXPECT_NEAR(potential_density(g, {0, 0}, 1), 0.4 / 30.0, 1e-12);
  ProbabilityGrid::Values w(1, 2);
  w << 0.0, 0.5;
  EXPECT_NEAR(potential_density(ProbabilityGrid({0.0, 0.0}, 30.0, w), {0, 0}), 0.5 / 30.0, 1e-12);
  EXPECT_DOUBLE_EQ(potential_density(ProbabilityGrid({0.0, 0.0}, 30.0, w), {0, 1}), 0.0);
}

TEST(NextCell, SinglePositiveCell) {
  ProbabilityGrid::Values v = ProbabilityGrid::Values::Zero(4, 4);
  v(2, 3) = 0.1;
  EXPECT_EQ(next_cell(ProbabilityGrid({0.0, 0.0}, 30.0, v), {0.0, 0.0}), (CellId{2, 3}));
  EXPECT_FALSE(next_cell(ProbabilityGrid({0.0, 0.0}, 30.0, ProbabilityGrid::Values::Zero(3, 3)), {0.0, 0.0}));
}

TEST(NextCell, UniformPicksNearest) {
  const ProbabilityGrid g = ProbabilityGrid::uniform({0.0, 0.0}, 30.0, 5, 5);
  EXPECT_EQ(next_cell(g, {100.0, 20.0}), (CellId{4, 3}));
}

TEST(NextCell, TieBrokenByNeighborhood) {
  ProbabilityGrid::Values v = ProbabilityGrid::Values::Zero(3, 5);
  v(1, 1) = 0.5;
  v(1, 3) = 0.5;
  v(0, 4) = 0.9;  // cluster next to (1, 3)
  v(2, 4) = 0.9;
  ProbabilityGrid g({0.0, 0.0}, 30.0, v);
  g.mark_visited({0, 4});
  g.mark_visited({2, 4});
  // Both tied cells are equidistant from the drone and have no neighbors: lowest index.
  EXPECT_EQ(next_cell(g, g.center({1, 2})), (CellId{1, 1}));
  ProbabilityGrid::Values w = ProbabilityGrid::Values::Zero(5, 5);
  w(2, 1) = 0.5;
  w(2, 3) = 0.5;
  w(4, 4) = 0.01;  // ring 2 of (2, 3) only
  const ProbabilityGrid k({0.0, 0.0}, 30.0, w);
  const Eigen::Vector2d mid = k.center({2, 2});
  const auto f = potential(k, mid);
  ASSERT_GT(f(2, 1), f(4, 4));
  EXPECT_EQ(next_cell(k, mid), (CellId{2, 3}));
}

TEST(NextCell, MatchesBruteForce) {
  for (std::uint64_t s = 0; s < 300; ++s) {
    const ProbabilityGrid g = random_grid(s, 10, 10, 30.0);
    rng::CounterRng r(1000 + s);
    const Eigen::Vector2d pos(r.uniform(-30.0, 330.0), r.uniform(-30.0, 330.0));
    const auto got = next_cell(g, pos);
    const auto want = oracle::next_cell(to_oracle(g), pos, 30.0);
    ASSERT_EQ(got.has_value(), want.has_value()) << s;
    if (got) {
      EXPECT_EQ(std::make_pair(got->row, got->col), *want) << "seed " << s;
    }
  }
}

TEST(NextCell, VisitsEveryPositiveCellOnceAndIsScaleInvariant) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    ProbabilityGrid g = random_grid(50 + s, 10, 10, 30.0);
    ProbabilityGrid scaled({0.0, 0.0}, 30.0, g.probabilities() * 0.3);
    const int positive = g.positive_cells();
    Eigen::Vector2d pos(0.0, 0.0), pos2(0.0, 0.0);
    int steps = 0;
    while (auto c = next_cell(g, pos)) {
      ASSERT_FALSE(g.visited(*c));
      const auto c2 = next_cell(scaled, pos2);
      ASSERT_TRUE(c2.has_value());
      EXPECT_EQ(*c, *c2);
      g.mark_visited(*c);
      scaled.mark_visited(*c2);
      pos = g.center(*c);
      pos2 = scaled.center(*c2);
      ++steps;
      ASSERT_LE(steps, 100);
    }
    EXPECT_EQ(steps, positive);
  }
}

TEST(NextCell, SmallLambdaPicksNearest) {
  PlannerConfig cfg;
  cfg.distance_scale = 1e-3;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const ProbabilityGrid g = random_grid(400 + s, 10, 10, 30.0);
    rng::CounterRng r(7000 + s);
    const Eigen::Vector2d pos(r.uniform(0.0, 300.0), r.uniform(0.0, 300.0));
    const auto got = next_cell(g, pos, cfg);
    if (!got) continue;
    double best = 1e18;
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j)
        if (g.probability({i, j}) > 0.0) best = std::min(best, (g.center({i, j}) - pos).norm());
    EXPECT_NEAR((g.center(*got) - pos).norm(), best, 1e-9);
  }
}

TEST(ScanPlan, OrientationAndEndpoints) {
  const ElevationModel dem = flat();
  const ProbabilityGrid g = ProbabilityGrid::uniform({0.0, 0.0}, 30.0, 3, 3);
  const CellId cell{1, 1};
  const Eigen::Vector2d c = g.center(cell);
  const SamplingPlan west = scan_plan_for_cell(dem, g, cell, {-50.0, 45.0});
  EXPECT_DOUBLE_EQ(west.heading_deg, 90.0);
  EXPECT_NEAR((west.entry - Eigen::Vector2d(30.0, 45.0)).norm(), 0.0, 1e-9);
  EXPECT_NEAR((west.exit - Eigen::Vector2d(60.0, 45.0)).norm(), 0.0, 1e-9);
  EXPECT_EQ(west.poses.size(), 30u);
  const SamplingPlan centered = scan_plan_for_cell(dem, g, cell, c);
  EXPECT_TRUE(centered.heading_deg == 90.0 || centered.heading_deg == 270.0);
  const SamplingPlan north = scan_plan_for_cell(dem, g, cell, {45.0, 200.0});
  EXPECT_DOUBLE_EQ(north.heading_deg, 180.0);
  EXPECT_NEAR(north.entry.y(), 60.0, 1e-9);
  const SamplingPlan east = scan_plan_for_cell(dem, g, cell, {300.0, 40.0});
  EXPECT_DOUBLE_EQ(east.heading_deg, 270.0);
}

TEST(ResamplePlan, OrthogonalAndCentered) {
  const ElevationModel dem = flat();
  const SamplingPlan p = resample_plan(dem, {12.0, 7.0}, 0.0);
  EXPECT_DOUBLE_EQ(p.heading_deg, 90.0);
  EXPECT_EQ(p.center, Eigen::Vector2d(12.0, 7.0));
  EXPECT_EQ(p.poses.size(), 30u);
  EXPECT_DOUBLE_EQ(resample_plan(dem, {0.0, 0.0}, 270.0).heading_deg, 0.0);
  const SamplingPlan corner = resample_plan(dem, {30.0, 30.0}, 0.0);
  EXPECT_LT(corner.poses.front().position.x(), 30.0);
  EXPECT_GT(corner.poses.back().position.x(), 30.0);
}

TEST(Confirm, ExamplesFromTheField) {
  const auto up = confirm(at(10.0, 10.0, 0.27), std::vector<Detection>{at(11.0, 9.0, 0.51)});
  EXPECT_DOUBLE_EQ(up.resampled_confidence, 0.51);
  EXPECT_NEAR(up.delta(), 0.24, 1e-12);
  EXPECT_EQ(up.verdict, Verdict::confirmed_true);
  EXPECT_EQ(up.matched_index, 0);

  const auto gone = confirm(at(10.0, 10.0, 0.11), std::vector<Detection>{at(40.0, 10.0, 0.8)});
  EXPECT_DOUBLE_EQ(gone.resampled_confidence, 0.0);
  EXPECT_NEAR(gone.delta(), -0.11, 1e-12);
  EXPECT_EQ(gone.verdict, Verdict::confirmed_false);
  EXPECT_EQ(gone.matched_index, -1);

  const auto weak = confirm(at(10.0, 10.0, 0.07), {});
  EXPECT_EQ(weak.verdict, Verdict::confirmed_false);
}

TEST(Confirm, VerdictDependsOnlyOnFinalScore) {
  const auto drop = confirm(at(0.0, 0.0, 0.9), std::vector<Detection>{at(1.0, 0.0, 0.10)});
  EXPECT_LT(drop.delta(), 0.0);
  EXPECT_EQ(drop.verdict, Verdict::confirmed_true);
  const auto best = confirm(at(0.0, 0.0, 0.2), std::vector<Detection>{at(1.0, 0.0, 0.05), at(0.0, 4.9, 0.3)});
  EXPECT_EQ(best.matched_index, 1);
  const auto rise = confirm(at(0.0, 0.0, 0.05), std::vector<Detection>{at(1.0, 0.0, 0.09)});
  EXPECT_GT(rise.delta(), 0.0);
  EXPECT_EQ(rise.verdict, Verdict::confirmed_false);
}

TEST(ProbabilityCsv, RoundTripAndErrors) {
  std::istringstream in("0.1,0.2,0.3\n0,1,0.5\n");
  const ProbabilityGrid g = load_probability_csv(in, {5.0, 6.0}, 30.0);
  EXPECT_EQ(g.rows(), 2);
  EXPECT_EQ(g.cols(), 3);
  EXPECT_DOUBLE_EQ(g.probability({1, 1}), 1.0);
  std::stringstream out;
  save_probability_csv(out, g);
  const ProbabilityGrid h = load_probability_csv(out, {5.0, 6.0}, 30.0);
  EXPECT_EQ(g.probabilities(), h.probabilities());

  auto line_of = [](const std::string& text) {
    std::istringstream s(text);
    try {
      load_probability_csv(s, {0.0, 0.0}, 1.0);
    } catch (const ParseError& e) {
      return static_cast<long>(e.line);
    }
    return -1L;
  };
  EXPECT_EQ(line_of("0.1,0.2\n0.3\n"), 2);
  EXPECT_EQ(line_of("0.1,1.2\n"), 1);
  EXPECT_EQ(line_of("0.1,abc\n"), 1);
  EXPECT_EQ(line_of(""), 0);
}

TEST(PlannerConfig, Validation) {
  PlannerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.weak_threshold = 0.2;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.match_radius = 0.0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  EXPECT_DOUBLE_EQ(c.lambda(ProbabilityGrid::uniform({0.0, 0.0}, 25.0, 1, 1)), 25.0);
}
