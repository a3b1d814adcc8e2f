#include "aos/error.hpp"
#include "aos/terrain.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace aos;

namespace {

const char* kSmallDem =
    "ncols 3\n"
    "nrows 2\n"
    "xllcorner 10\n"
    "yllcorner 20\n"
    "cellsize 5\n"
    "NODATA_value -9999\n"
    "7 8 9\n"
    "1 2 3\n";

ElevationModel sloped() {
  ElevationModel::Heights h(11, 11);
  for (int r = 0; r < 11; ++r)
    for (int c = 0; c < 11; ++c) h(r, c) = 0.1 * (c * 10.0) + 0.05 * (r * 10.0);
  return ElevationModel({0.0, 0.0}, 10.0, h, -9999.0);
}

}  // namespace

TEST(Dem, LoadsRowsNorthFirst) {
  std::istringstream in(kSmallDem);
  const ElevationModel dem = load_dem(in);
  EXPECT_EQ(dem.n_cols(), 3);
  EXPECT_EQ(dem.n_rows(), 2);
  EXPECT_DOUBLE_EQ(dem.heights()(0, 0), 1.0);  // southern row
  EXPECT_DOUBLE_EQ(dem.heights()(1, 2), 9.0);
  EXPECT_DOUBLE_EQ(ground_height(dem, 10.0, 20.0), 1.0);
  EXPECT_DOUBLE_EQ(ground_height(dem, 20.0, 25.0), 9.0);
  EXPECT_DOUBLE_EQ(ground_height(dem, 12.5, 22.5), 4.5);
  EXPECT_EQ(dem.max_corner(), Eigen::Vector2d(20.0, 25.0));
}

TEST(Dem, RoundTripIsExact) {
  const ElevationModel a = sloped();
  std::stringstream buf;
  save_dem(buf, a);
  const ElevationModel b = load_dem(buf);
  EXPECT_EQ(a.origin(), b.origin());
  EXPECT_EQ(a.cell_size(), b.cell_size());
  EXPECT_TRUE((a.heights().array() == b.heights().array()).all());
}

TEST(Dem, ParseErrorsCarryLine) {
  auto line_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      load_dem(in);
    } catch (const ParseError& e) {
      return static_cast<long>(e.line);
    }
    return -1L;
  };
  std::string short_row = kSmallDem;
  short_row.replace(short_row.find("1 2 3"), 5, "1 2");
  EXPECT_EQ(line_of(short_row), 8);
  EXPECT_EQ(line_of("ncols 3\nnrows 2\n"), 3);
  std::string dup = kSmallDem;
  dup.replace(dup.find("nrows"), 5, "ncols");
  EXPECT_EQ(line_of(dup), 2);
  std::string bad_cell = kSmallDem;
  bad_cell.replace(bad_cell.find("cellsize 5"), 10, "cellsize 0");
  EXPECT_GT(line_of(bad_cell), 0);
}

TEST(Dem, DomainAndNoData) {
  ElevationModel::Heights h = ElevationModel::Heights::Constant(3, 3, 2.0);
  h(2, 2) = -1.0;
  const ElevationModel dem({0.0, 0.0}, 1.0, h, -1.0);
  EXPECT_THROW(ground_height(dem, -0.1, 0.5), DomainError);
  EXPECT_THROW(ground_height(dem, 1.5, 1.5), NoDataError);
  EXPECT_DOUBLE_EQ(ground_height(dem, 0.5, 0.5), 2.0);
  EXPECT_TRUE(std::isnan(dem.sample(1.5, 1.5)));
  EXPECT_DOUBLE_EQ(dem.max_height(), 2.0);
}

TEST(Camera, FocalLength) {
  CameraIntrinsics intr;
  EXPECT_NEAR(intr.focal_px(), 256.0 / std::tan(0.5 * 50.82 * std::numbers::pi / 180.0), 1e-9);
  EXPECT_NEAR(intr.meters_per_pixel(35.0), 35.0 / intr.focal_px(), 1e-12);
  EXPECT_THROW((CameraIntrinsics{0.0, 512}.validate()), ParameterError);
  EXPECT_THROW((CameraIntrinsics{50.0, 0}.validate()), ParameterError);
}

TEST(Camera, NadirProjectionMatchesOracle) {
  const CameraIntrinsics intr;
  for (double yaw : {0.0, 30.0, -90.0, 135.0}) {
    Pose pose;
    pose.position = {5.0, -3.0, 40.0};
    pose.yaw_deg = yaw;
    const PinholeCamera cam(pose, intr);
    for (const Eigen::Vector3d& p : {Eigen::Vector3d(5.0, -3.0, 0.0), Eigen::Vector3d(12.0, 4.0, 1.0),
                                    Eigen::Vector3d(-4.0, 2.0, -2.0)}) {
      const auto uv = cam.project(p);
      ASSERT_TRUE(uv.has_value());
      const Eigen::Vector2d ref = oracle::nadir_project(pose.position, yaw, intr.focal_px(), 256.0, p);
      EXPECT_NEAR(uv->x(), ref.x(), 1e-9);
      EXPECT_NEAR(uv->y(), ref.y(), 1e-9);
    }
  }
}

TEST(Camera, NorthIsUpAtZeroYaw) {
  Pose pose;
  pose.position = {0.0, 0.0, 30.0};
  const auto north = project_world_to_pixel(pose, {}, {0.0, 5.0, 0.0});
  const auto east = project_world_to_pixel(pose, {}, {5.0, 0.0, 0.0});
  ASSERT_TRUE(north && east);
  EXPECT_LT(north->y(), 256.0);
  EXPECT_NEAR(north->x(), 256.0, 1e-9);
  EXPECT_GT(east->x(), 256.0);
  EXPECT_FALSE(project_world_to_pixel(pose, {}, {0.0, 0.0, 40.0}).has_value());
  EXPECT_FALSE(project_world_to_pixel(pose, {}, {500.0, 0.0, 0.0}).has_value());
}

TEST(Camera, RayAndProjectionAreInverse) {
  Pose pose;
  pose.position = {50.0, 50.0, 60.0};
  pose.yaw_deg = 20.0;
  pose.pitch_deg = 5.0;
  pose.roll_deg = -3.0;
  const CameraIntrinsics intr;
  const ElevationModel dem = sloped();
  for (const Eigen::Vector2d& px : {Eigen::Vector2d(256.5, 256.5), Eigen::Vector2d(10.25, 400.5),
                                   Eigen::Vector2d(500.0, 30.0)}) {
    const auto g = pixel_ray_to_ground(pose, intr, px, dem);
    ASSERT_TRUE(g.has_value());
    EXPECT_NEAR(g->z(), dem.sample(g->x(), g->y()), 0.011);
    const auto back = project_world_to_pixel(pose, intr, *g);
    ASSERT_TRUE(back.has_value());
    EXPECT_NEAR(back->x(), px.x(), 1e-6);
    EXPECT_NEAR(back->y(), px.y(), 1e-6);
  }
}

TEST(Intersect, FlatAndMiss) {
  const ElevationModel dem = ElevationModel::flat({-50.0, -50.0}, {100.0, 100.0}, 1.0, 3.0);
  const auto t = intersect_ground(dem, {0.0, 0.0, 33.0}, {0.0, 0.0, -1.0});
  ASSERT_TRUE(t.has_value());
  EXPECT_NEAR(*t, 30.0, 0.01);
  EXPECT_FALSE(intersect_ground(dem, {0.0, 0.0, 33.0}, {0.0, 0.0, 1.0}).has_value());
  EXPECT_FALSE(intersect_ground(dem, {0.0, 0.0, 33.0}, Eigen::Vector3d(1.0, 0.0, -0.1).normalized()).has_value());
}

TEST(Angles, Normalize) {
  EXPECT_DOUBLE_EQ(normalize_angle_deg(180.0), 180.0);
  EXPECT_DOUBLE_EQ(normalize_angle_deg(-180.0), 180.0);
  EXPECT_DOUBLE_EQ(normalize_angle_deg(370.0), 10.0);
  EXPECT_DOUBLE_EQ(normalize_angle_deg(-190.0), 170.0);
}

TEST(Geo, RoundTripAndScale) {
  const GeoOrigin origin{48.3, 14.3};
  const Eigen::Vector2d xy = origin.to_local(48.301, 14.302);
  EXPECT_NEAR(xy.y(), 0.001 * std::numbers::pi / 180.0 * 6378137.0, 1e-6);
  EXPECT_GT(xy.x(), 0.0);
  const Eigen::Vector2d ll = origin.to_geo(xy);
  EXPECT_NEAR(ll.x(), 48.301, 1e-12);
  EXPECT_NEAR(ll.y(), 14.302, 1e-12);
}

TEST(Dem, NodeAndCellMidpointValues) {
  ElevationModel::Heights h(3, 3);
  for (int i = 0; i < 9; ++i) h(i / 3, i % 3) = i;
  const ElevationModel dem({0.0, 0.0}, 1.0, h, -9999.0);
  EXPECT_DOUBLE_EQ(ground_height(dem, 1.0, 1.0), 4.0);
  ElevationModel::Heights g(2, 2);
  g << 0, 0, 2, 2;
  EXPECT_DOUBLE_EQ(ground_height(ElevationModel({0.0, 0.0}, 1.0, g, -9999.0), 0.5, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(ground_height(ElevationModel::flat({0.0, 0.0}, {10.0, 10.0}, 1.0, 240.0), 3.3, 7.1), 240.0);
}

TEST(Dem, ContinuousAcrossCellBoundaries) {
  const ElevationModel dem = sloped();
  for (double x = 5.0; x < 100.0; x += 10.0) {
    EXPECT_NEAR(dem.sample(x, 9.999999), dem.sample(x, 10.000001), 1e-6);
    EXPECT_NEAR(dem.sample(9.999999, x), dem.sample(10.000001, x), 1e-6);
  }
}

TEST(Camera, FootprintEdgeIsOutOfFrame) {
  Pose pose;
  pose.position = {0.0, 0.0, 35.0};
  const double half_fov = 0.5 * 50.82 * std::numbers::pi / 180.0;
  const double x = 35.0 * std::tan(half_fov);
  EXPECT_FALSE(project_world_to_pixel(pose, {}, {x, 0.0, 0.0}).has_value());
  const auto inside = project_world_to_pixel(pose, {}, {x - 1e-3, 0.0, 0.0});
  ASSERT_TRUE(inside.has_value());
  EXPECT_NEAR(inside->x(), 512.0, 0.02);
  const auto center = project_world_to_pixel(pose, {}, {0.0, 0.0, 0.0});
  EXPECT_EQ(*center, Eigen::Vector2d(256.0, 256.0));
}

TEST(Camera, DoublingAltitudeHalvesDisplacement) {
  Pose low, high;
  low.position = {0.0, 0.0, 30.0};
  high.position = {0.0, 0.0, 60.0};
  const auto a = project_world_to_pixel(low, {}, {4.0, 0.0, 0.0});
  const auto b = project_world_to_pixel(high, {}, {4.0, 0.0, 0.0});
  ASSERT_TRUE(a && b);
  EXPECT_NEAR(b->x() - 256.0, 0.5 * (a->x() - 256.0), 1e-9);
}

TEST(Camera, RoundTripOnFlatTerrain) {
  const ElevationModel dem = ElevationModel::flat({-50.0, -50.0}, {100.0, 100.0}, 1.0, 0.0);
  Pose pose;
  pose.position = {1.0, -2.0, 35.0};
  pose.yaw_deg = 40.0;
  for (const Eigen::Vector3d& p : {Eigen::Vector3d(1.0, -2.0, 0.0), Eigen::Vector3d(10.0, 3.0, 0.0),
                                  Eigen::Vector3d(-7.5, -12.0, 0.0)}) {
    const auto uv = project_world_to_pixel(pose, {}, p);
    ASSERT_TRUE(uv.has_value());
    const auto g = pixel_ray_to_ground(pose, {}, *uv, dem);
    ASSERT_TRUE(g.has_value());
    EXPECT_LT((*g - p).norm(), 0.02);
  }
}

TEST(Camera, OffCenterPixelOnFlatGround) {
  const ElevationModel dem = ElevationModel::flat({-50.0, -50.0}, {100.0, 100.0}, 1.0, 0.0);
  Pose pose;
  pose.position = {0.0, 0.0, 35.0};
  const CameraIntrinsics intr;
  const auto g = pixel_ray_to_ground(pose, intr, {356.0, 256.0}, dem);
  ASSERT_TRUE(g.has_value());
  EXPECT_NEAR(g->x(), 35.0 * 100.0 / intr.focal_px(), 0.01);
  EXPECT_NEAR(g->y(), 0.0, 1e-6);
}

TEST(Camera, NoDataHoleIsMiss) {
  ElevationModel::Heights h = ElevationModel::Heights::Zero(21, 21);
  for (int r = 8; r <= 12; ++r)
    for (int c = 8; c <= 12; ++c) h(r, c) = -9999.0;
  const ElevationModel dem({-10.0, -10.0}, 1.0, h, -9999.0);
  Pose pose;
  pose.position = {0.0, 0.0, 35.0};
  EXPECT_FALSE(pixel_ray_to_ground(pose, {}, {256.0, 256.0}, dem).has_value());
}
