#include "aos/config.hpp"
#include "aos/error.hpp"
#include "aos/rng.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace aos;

namespace {

const char* kAdaptive = R"(# comment
[scenario]
seed = 7
id = unit
kind = adaptive

[terrain]
flat = -10 -10 120 120 2 5

[forest]
region = 0 0 90 90
density = 0.3

[persons]
radius = 0.5
position = 10 20
position = 30.5 40

[noise]
sigma_xy = 0

[camera]
resolution_px = 128

[planner]
probability_map = map.csv
cell_size = 30
start = 1 2
resample = false
)";

ScenarioConfig parse(const std::string& text, const std::string& base = "/data/sc") {
  std::istringstream in(text);
  return parse_config(in, base);
}

std::string field_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.field;
  }
  return "";
}

}  // namespace

TEST(Config, ParsesSections) {
  const ScenarioConfig c = parse(kAdaptive);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.id, "unit");
  EXPECT_EQ(c.kind, MissionKind::adaptive);
  ASSERT_TRUE(c.flat.has_value());
  EXPECT_EQ(c.flat->extent, Eigen::Vector2d(120.0, 120.0));
  EXPECT_DOUBLE_EQ(c.flat->height, 5.0);
  EXPECT_DOUBLE_EQ(c.forest.target_density, 0.3);
  ASSERT_EQ(c.person_positions.size(), 2u);
  EXPECT_EQ(c.person_positions[1], Eigen::Vector2d(30.5, 40.0));
  EXPECT_DOUBLE_EQ(c.noise.sigma_xy, 0.0);
  EXPECT_DOUBLE_EQ(c.noise.sigma_z, PoseNoiseModel{}.sigma_z);
  EXPECT_EQ(c.camera.resolution_px, 128);
  EXPECT_EQ(c.probability_map, "/data/sc/map.csv");
  EXPECT_EQ(c.start, Eigen::Vector2d(1.0, 2.0));
  EXPECT_FALSE(c.resample);
}

TEST(Config, DefaultsMatchLibrary) {
  const ScenarioConfig c = parse("[terrain]\nflat = 0 0 10 10 1 0\n");
  EXPECT_EQ(c.detector, DetectorConfig{});
  EXPECT_EQ(c.planner, PlannerConfig{});
  EXPECT_EQ(c.sampling, LineSaOptions{});
  EXPECT_EQ(c.camera, CameraIntrinsics{});
  EXPECT_EQ(c.kind, MissionKind::predefined);
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(field_of("[forest]\ndensity = abc\n"), "forest.density");
  EXPECT_EQ(field_of("[forest]\nbogus = 1\n"), "forest.bogus");
  EXPECT_EQ(field_of("[nowhere]\nx = 1\n"), "nowhere");
  EXPECT_EQ(field_of("[forest]\nregion = 10 10 0 0\n"), "forest.region");
  EXPECT_EQ(field_of("[scenario]\nkind = sideways\n"), "scenario.kind");
  EXPECT_EQ(field_of("[forest\n"), "config");
}

TEST(Config, WriteParseRoundTrip) {
  ScenarioConfig c = parse(kAdaptive);
  c.planner.max_path_length = 1234.5;
  c.waypoints = {{1.0, 2.0}, {3.0, 4.0}};
  c.geo = GeoOrigin{48.25, 14.125};
  c.clutter_area = Rect{{1.0, 1.0}, {2.0, 2.0}};
  c.clutter_count = 3;
  c.detector.expected_area_px = 0.1 + 0.2;
  std::stringstream buf;
  write_config(buf, c);
  const ScenarioConfig d = parse_config(buf, "/data/sc");
  EXPECT_EQ(c, d);
}

TEST(Config, RelativeAndAbsolutePaths) {
  const ScenarioConfig a = parse("[terrain]\ndem = ../t/terrain.asc\n", "/data/sc");
  EXPECT_EQ(a.dem_path, "/data/t/terrain.asc");
  const ScenarioConfig b = parse("[terrain]\ndem = /x/y.asc\n", "/data/sc");
  EXPECT_EQ(b.dem_path, "/x/y.asc");
}

TEST(Config, ValidateRules) {
  auto field = [](const ScenarioConfig& c) {
    try {
      validate(c);
    } catch (const ConfigError& e) {
      return e.field;
    }
    return std::string();
  };
  ScenarioConfig c = parse("[terrain]\nflat = 0 0 10 10 1 0\n[predefined]\nwaypoint = 1 1\nwaypoint = 5 5\n");
  EXPECT_EQ(field(c), "");
  ScenarioConfig none = c;
  none.flat.reset();
  EXPECT_EQ(field(none), "terrain.dem");
  ScenarioConfig missing = none;
  missing.dem_path = "/definitely/not/here.asc";
  EXPECT_EQ(field(missing), "terrain.dem");
  ScenarioConfig one_wp = c;
  one_wp.waypoints.pop_back();
  EXPECT_EQ(field(one_wp), "predefined.waypoint");
  ScenarioConfig adaptive = c;
  adaptive.kind = MissionKind::adaptive;
  EXPECT_EQ(field(adaptive), "planner.probability_map");
  ScenarioConfig cam = c;
  cam.camera.fov_deg = 0.0;
  EXPECT_EQ(field(cam), "camera");
  ScenarioConfig neg = c;
  neg.person_count = -1;
  EXPECT_EQ(field(neg), "persons.count");
}

TEST(Config, BundledScenariosValidate) {
  for (const char* name : {"adaptive.cfg", "predefined.cfg"}) {
    const ScenarioConfig c = load_config(std::string(AOS_DATA_DIR) + "/scenarios/" + name);
    EXPECT_NO_THROW(validate(c)) << name;
  }
  EXPECT_THROW(load_config("/no/such/file.cfg"), ConfigError);
}

TEST(Config, SeedsFanOutByRole) {
  const Seeds s = derive_seeds(42);
  EXPECT_EQ(s.forest, rng::derive_seed(42, "forest"));
  EXPECT_EQ(s.pose_noise, rng::derive_seed(42, "pose_noise"));
  EXPECT_NE(s.persons, s.clutter);
}

TEST(Config, BuildsSceneFromConfig) {
  ScenarioConfig c = parse(kAdaptive);
  const ForestScene s = build_scene(c);
  ASSERT_EQ(s.persons.size(), 2u);
  EXPECT_EQ(s.persons[0].center, Eigen::Vector2d(10.0, 20.0));
  EXPECT_DOUBLE_EQ(s.persons[0].radius, 0.5);
  EXPECT_EQ(s, build_scene(c));
  const ElevationModel dem = build_terrain(c);
  EXPECT_DOUBLE_EQ(ground_height(dem, 0.0, 0.0), 5.0);
  const MissionConfig mc = build_mission_config(c, true);
  EXPECT_TRUE(mc.verbose);
  EXPECT_FALSE(mc.resample);
  EXPECT_EQ(mc.noise.seed, derive_seeds(7).pose_noise);
}
