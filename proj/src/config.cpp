#include "aos/config.hpp"

#include "aos/error.hpp"
#include "aos/kvtext.hpp"
#include "aos/rng.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

namespace aos {

namespace fs = std::filesystem;

namespace {

using kv::format_double;
using kv::format_doubles;

const std::map<std::string, std::set<std::string>, std::less<>> kSchema{
    {"scenario", {"seed", "id", "kind"}},
    {"terrain", {"dem", "flat"}},
    {"geo", {"latitude", "longitude"}},
    {"forest", {"region", "density", "radius_min", "radius_max", "canopy_height", "sensor_noise_std"}},
    {"temperatures", {"ground", "canopy", "person", "clutter"}},
    {"persons", {"radius", "count", "area", "position"}},
    {"clutter", {"count", "area", "half_length_min", "half_length_max", "radius", "height_min", "height_max"}},
    {"noise", {"sigma_xy", "sigma_z", "sigma_yaw_deg", "yaw_bias_deg"}},
    {"camera", {"fov_deg", "resolution_px"}},
    {"sampling", {"length", "spacing", "altitude_agl", "yaw_deg"}},
    {"detector",
     {"name", "intensity_threshold", "min_blob_px", "max_blob_px", "reference_contrast", "expected_area_px"}},
    {"planner",
     {"probability_map", "origin", "cell_size", "distance_scale", "tie_epsilon", "weak_threshold",
      "accept_threshold", "max_path_length", "match_radius", "start", "resample"}},
    {"predefined", {"waypoint"}},
    {"mission", {"sample_speed", "transit_speed", "segment_length", "min_residue", "crop_size"}},
    {"output", {"dir", "save_frames"}},
};

/// Typed access to one section; every failure names "section.key".
class Reader {
 public:
  Reader(const kv::Document& doc, std::string section) : section_(std::move(section)) {
    s_ = doc.section(section_);
  }

  template <typename T, typename Parse>
  void read(std::string_view key, T& target, Parse parse) const {
    if (!s_) return;
    if (const auto* e = s_->find(key)) {
      try {
        target = parse(*e);
      } catch (const Error& ex) {
        throw ConfigError(field(key), ex.what());
      }
    }
  }

  void number(std::string_view key, double& v) const {
    read(key, v, [](const kv::Entry& e) { return kv::parse_double(e.value, e.line); });
  }
  void integer(std::string_view key, int& v) const {
    read(key, v, [](const kv::Entry& e) { return static_cast<int>(kv::parse_int(e.value, e.line)); });
  }
  void boolean(std::string_view key, bool& v) const {
    read(key, v, [](const kv::Entry& e) { return kv::parse_bool(e.value, e.line); });
  }
  void text(std::string_view key, std::string& v) const {
    read(key, v, [](const kv::Entry& e) { return e.value; });
  }
  void point(std::string_view key, Eigen::Vector2d& v) const {
    read(key, v, [](const kv::Entry& e) {
      const auto x = kv::parse_doubles(e.value, e.line, 2);
      return Eigen::Vector2d(x[0], x[1]);
    });
  }
  void rect(std::string_view key, Rect& v) const {
    read(key, v, [this, key](const kv::Entry& e) {
      const auto x = kv::parse_doubles(e.value, e.line, 4);
      if (!(x[2] > x[0] && x[3] > x[1])) throw ConfigError(field(key), "expected x0 y0 x1 y1 with x1 > x0, y1 > y0");
      return Rect{{x[0], x[1]}, {x[2], x[3]}};
    });
  }
  std::vector<Eigen::Vector2d> points(std::string_view key) const {
    std::vector<Eigen::Vector2d> out;
    if (!s_) return out;
    for (const auto* e : s_->find_all(key)) {
      try {
        const auto x = kv::parse_doubles(e->value, e->line, 2);
        out.push_back({x[0], x[1]});
      } catch (const Error& ex) {
        throw ConfigError(field(key), ex.what());
      }
    }
    return out;
  }
  bool has(std::string_view key) const { return s_ && s_->find(key); }
  bool present() const { return s_ != nullptr; }
  std::string field(std::string_view key) const { return section_ + "." + std::string(key); }

 private:
  std::string section_;
  const kv::Section* s_ = nullptr;
};

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty()) return path;
  const fs::path p(path);
  if (p.is_absolute()) return p.lexically_normal().string();
  return (fs::path(base) / p).lexically_normal().string();
}

std::string rect_text(const Rect& r) { return format_doubles({r.min.x(), r.min.y(), r.max.x(), r.max.y()}); }

}  // namespace

ScenarioConfig parse_config(std::istream& in, const std::string& base_dir) {
  kv::Document doc;
  try {
    doc = kv::Document::parse(in);
  } catch (const ParseError& e) {
    throw ConfigError("config", e.what());
  }
  for (const auto& s : doc.all()) {
    const auto it = kSchema.find(s.name);
    if (it == kSchema.end()) throw ConfigError(s.name, "unknown section (line " + std::to_string(s.line) + ")");
    for (const auto& e : s.entries) {
      if (!it->second.count(e.key)) {
        throw ConfigError(s.name + "." + e.key, "unknown key (line " + std::to_string(e.line) + ")");
      }
    }
  }

  ScenarioConfig c;
  {
    Reader r(doc, "scenario");
    r.read("seed", c.seed, [](const kv::Entry& e) { return kv::parse_u64(e.value, e.line); });
    r.text("id", c.id);
    r.read("kind", c.kind, [](const kv::Entry& e) {
      if (e.value == "predefined") return MissionKind::predefined;
      if (e.value == "adaptive") return MissionKind::adaptive;
      throw Error("expected predefined or adaptive, got '" + e.value + "'");
    });
  }
  {
    Reader r(doc, "terrain");
    r.text("dem", c.dem_path);
    c.dem_path = resolve(base_dir, c.dem_path);
    if (r.has("flat")) {
      FlatTerrain f;
      r.read("flat", f, [](const kv::Entry& e) {
        const auto x = kv::parse_doubles(e.value, e.line, 6);
        return FlatTerrain{{x[0], x[1]}, {x[2], x[3]}, x[4], x[5]};
      });
      c.flat = f;
    }
  }
  {
    Reader r(doc, "geo");
    if (r.present()) {
      GeoOrigin g;
      r.number("latitude", g.latitude_deg);
      r.number("longitude", g.longitude_deg);
      c.geo = g;
    }
  }
  {
    Reader r(doc, "forest");
    r.rect("region", c.region);
    r.number("density", c.forest.target_density);
    r.number("radius_min", c.forest.radius_min);
    r.number("radius_max", c.forest.radius_max);
    r.number("canopy_height", c.forest.canopy_height);
    r.number("sensor_noise_std", c.sensor_noise_std);
  }
  {
    Reader r(doc, "temperatures");
    r.number("ground", c.temperatures.ground);
    r.number("canopy", c.temperatures.canopy);
    r.number("person", c.temperatures.person);
    r.number("clutter", c.temperatures.clutter);
  }
  {
    Reader r(doc, "persons");
    r.number("radius", c.person_radius);
    r.integer("count", c.person_count);
    if (r.has("area")) {
      Rect a;
      r.rect("area", a);
      c.person_area = a;
    }
    c.person_positions = r.points("position");
  }
  {
    Reader r(doc, "clutter");
    r.integer("count", c.clutter_count);
    if (r.has("area")) {
      Rect a;
      r.rect("area", a);
      c.clutter_area = a;
    }
    r.number("half_length_min", c.clutter.half_length_min);
    r.number("half_length_max", c.clutter.half_length_max);
    r.number("radius", c.clutter.radius);
    r.number("height_min", c.clutter.height_min);
    r.number("height_max", c.clutter.height_max);
  }
  {
    Reader r(doc, "noise");
    r.number("sigma_xy", c.noise.sigma_xy);
    r.number("sigma_z", c.noise.sigma_z);
    r.number("sigma_yaw_deg", c.noise.sigma_yaw_deg);
    r.number("yaw_bias_deg", c.noise.yaw_bias_deg);
  }
  {
    Reader r(doc, "camera");
    r.number("fov_deg", c.camera.fov_deg);
    r.integer("resolution_px", c.camera.resolution_px);
  }
  {
    Reader r(doc, "sampling");
    r.number("length", c.sampling.length_m);
    r.number("spacing", c.sampling.spacing_m);
    r.number("altitude_agl", c.sampling.altitude_agl_m);
    r.number("yaw_deg", c.sampling.yaw_deg);
  }
  {
    Reader r(doc, "detector");
    r.text("name", c.detector_name);
    r.number("intensity_threshold", c.detector.intensity_threshold);
    r.integer("min_blob_px", c.detector.min_blob_px);
    r.integer("max_blob_px", c.detector.max_blob_px);
    r.number("reference_contrast", c.detector.reference_contrast);
    r.number("expected_area_px", c.detector.expected_area_px);
  }
  {
    Reader r(doc, "planner");
    r.text("probability_map", c.probability_map);
    c.probability_map = resolve(base_dir, c.probability_map);
    r.point("origin", c.grid_origin);
    r.number("cell_size", c.cell_size);
    r.number("distance_scale", c.planner.distance_scale);
    r.number("tie_epsilon", c.planner.tie_epsilon);
    r.number("weak_threshold", c.planner.weak_threshold);
    r.number("accept_threshold", c.planner.accept_threshold);
    r.number("max_path_length", c.planner.max_path_length);
    r.number("match_radius", c.planner.match_radius);
    if (r.has("start")) {
      Eigen::Vector2d s;
      r.point("start", s);
      c.start = s;
    }
    r.boolean("resample", c.resample);
  }
  c.waypoints = Reader(doc, "predefined").points("waypoint");
  {
    Reader r(doc, "mission");
    r.number("sample_speed", c.sample_speed);
    r.number("transit_speed", c.transit_speed);
    r.number("segment_length", c.segment_length);
    r.number("min_residue", c.min_residue);
    r.integer("crop_size", c.crop_size);
  }
  {
    Reader r(doc, "output");
    r.text("dir", c.output_dir);
    r.boolean("save_frames", c.save_frames);
  }
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  auto base = fs::path(path).parent_path().string();
  return parse_config(in, base.empty() ? "." : base);
}

void write_config(std::ostream& out, const ScenarioConfig& c) {
  kv::Document doc;
  auto& sc = doc.add_section("scenario");
  sc.add("seed", std::to_string(c.seed));
  sc.add("id", c.id);
  sc.add("kind", c.kind == MissionKind::adaptive ? "adaptive" : "predefined");

  auto& te = doc.add_section("terrain");
  if (!c.dem_path.empty()) te.add("dem", c.dem_path);
  if (c.flat) {
    te.add("flat", format_doubles({c.flat->origin.x(), c.flat->origin.y(), c.flat->extent.x(), c.flat->extent.y(),
                                   c.flat->cell_size, c.flat->height}));
  }
  if (c.geo) {
    auto& g = doc.add_section("geo");
    g.add("latitude", format_double(c.geo->latitude_deg));
    g.add("longitude", format_double(c.geo->longitude_deg));
  }

  auto& fo = doc.add_section("forest");
  fo.add("region", rect_text(c.region));
  fo.add("density", format_double(c.forest.target_density));
  fo.add("radius_min", format_double(c.forest.radius_min));
  fo.add("radius_max", format_double(c.forest.radius_max));
  fo.add("canopy_height", format_double(c.forest.canopy_height));
  fo.add("sensor_noise_std", format_double(c.sensor_noise_std));

  auto& t = doc.add_section("temperatures");
  t.add("ground", format_double(c.temperatures.ground));
  t.add("canopy", format_double(c.temperatures.canopy));
  t.add("person", format_double(c.temperatures.person));
  t.add("clutter", format_double(c.temperatures.clutter));

  auto& pe = doc.add_section("persons");
  pe.add("radius", format_double(c.person_radius));
  pe.add("count", std::to_string(c.person_count));
  if (c.person_area) pe.add("area", rect_text(*c.person_area));
  for (const auto& p : c.person_positions) pe.add("position", format_doubles({p.x(), p.y()}));

  auto& cl = doc.add_section("clutter");
  cl.add("count", std::to_string(c.clutter_count));
  if (c.clutter_area) cl.add("area", rect_text(*c.clutter_area));
  cl.add("half_length_min", format_double(c.clutter.half_length_min));
  cl.add("half_length_max", format_double(c.clutter.half_length_max));
  cl.add("radius", format_double(c.clutter.radius));
  cl.add("height_min", format_double(c.clutter.height_min));
  cl.add("height_max", format_double(c.clutter.height_max));

  auto& no = doc.add_section("noise");
  no.add("sigma_xy", format_double(c.noise.sigma_xy));
  no.add("sigma_z", format_double(c.noise.sigma_z));
  no.add("sigma_yaw_deg", format_double(c.noise.sigma_yaw_deg));
  no.add("yaw_bias_deg", format_double(c.noise.yaw_bias_deg));

  auto& ca = doc.add_section("camera");
  ca.add("fov_deg", format_double(c.camera.fov_deg));
  ca.add("resolution_px", std::to_string(c.camera.resolution_px));

  auto& sa = doc.add_section("sampling");
  sa.add("length", format_double(c.sampling.length_m));
  sa.add("spacing", format_double(c.sampling.spacing_m));
  sa.add("altitude_agl", format_double(c.sampling.altitude_agl_m));
  sa.add("yaw_deg", format_double(c.sampling.yaw_deg));

  auto& de = doc.add_section("detector");
  de.add("name", c.detector_name);
  de.add("intensity_threshold", format_double(c.detector.intensity_threshold));
  de.add("min_blob_px", std::to_string(c.detector.min_blob_px));
  de.add("max_blob_px", std::to_string(c.detector.max_blob_px));
  de.add("reference_contrast", format_double(c.detector.reference_contrast));
  de.add("expected_area_px", format_double(c.detector.expected_area_px));

  auto& pl = doc.add_section("planner");
  if (!c.probability_map.empty()) pl.add("probability_map", c.probability_map);
  pl.add("origin", format_doubles({c.grid_origin.x(), c.grid_origin.y()}));
  pl.add("cell_size", format_double(c.cell_size));
  pl.add("distance_scale", format_double(c.planner.distance_scale));
  pl.add("tie_epsilon", format_double(c.planner.tie_epsilon));
  pl.add("weak_threshold", format_double(c.planner.weak_threshold));
  pl.add("accept_threshold", format_double(c.planner.accept_threshold));
  pl.add("max_path_length", format_double(c.planner.max_path_length));
  pl.add("match_radius", format_double(c.planner.match_radius));
  if (c.start) pl.add("start", format_doubles({c.start->x(), c.start->y()}));
  pl.add("resample", c.resample ? "true" : "false");

  auto& pr = doc.add_section("predefined");
  for (const auto& w : c.waypoints) pr.add("waypoint", format_doubles({w.x(), w.y()}));

  auto& mi = doc.add_section("mission");
  mi.add("sample_speed", format_double(c.sample_speed));
  mi.add("transit_speed", format_double(c.transit_speed));
  mi.add("segment_length", format_double(c.segment_length));
  mi.add("min_residue", format_double(c.min_residue));
  mi.add("crop_size", std::to_string(c.crop_size));

  auto& ou = doc.add_section("output");
  ou.add("dir", c.output_dir);
  ou.add("save_frames", c.save_frames ? "true" : "false");
  doc.write(out);
}

void validate(const ScenarioConfig& c) {
  if (c.dem_path.empty() == !c.flat) throw ConfigError("terrain.dem", "set exactly one of terrain.dem and terrain.flat");
  if (!c.dem_path.empty() && !fs::exists(c.dem_path)) {
    throw ConfigError("terrain.dem", "file '" + c.dem_path + "' does not exist");
  }
  if (c.flat && !(c.flat->cell_size > 0.0 && c.flat->extent.x() > 0.0 && c.flat->extent.y() > 0.0)) {
    throw ConfigError("terrain.flat", "extent and cell size must be > 0");
  }
  if (c.person_count < 0) throw ConfigError("persons.count", "must be >= 0");
  if (c.clutter_count < 0) throw ConfigError("clutter.count", "must be >= 0");
  try {
    c.camera.validate();
  } catch (const Error& e) {
    throw ConfigError("camera", e.what());
  }
  try {
    c.detector.validate();
  } catch (const Error& e) {
    throw ConfigError("detector", e.what());
  }
  try {
    c.planner.validate();
  } catch (const Error& e) {
    throw ConfigError("planner", e.what());
  }
  if (c.kind == MissionKind::predefined && c.waypoints.size() < 2) {
    throw ConfigError("predefined.waypoint", "a predefined mission needs at least two waypoints");
  }
  if (c.kind == MissionKind::adaptive) {
    if (c.probability_map.empty()) throw ConfigError("planner.probability_map", "required for adaptive missions");
    if (!fs::exists(c.probability_map)) {
      throw ConfigError("planner.probability_map", "file '" + c.probability_map + "' does not exist");
    }
    if (!(c.cell_size > 0.0)) throw ConfigError("planner.cell_size", "must be > 0");
  }
  if (c.crop_size < 1) throw ConfigError("mission.crop_size", "must be >= 1");
}

Seeds derive_seeds(std::uint64_t global) {
  return {rng::derive_seed(global, "forest"), rng::derive_seed(global, "persons"),
          rng::derive_seed(global, "clutter"), rng::derive_seed(global, "pose_noise")};
}

ElevationModel build_terrain(const ScenarioConfig& c) {
  if (c.flat) return ElevationModel::flat(c.flat->origin, c.flat->extent, c.flat->cell_size, c.flat->height);
  try {
    return load_dem_file(c.dem_path);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("terrain.dem", e.what());
  }
}

ForestScene build_scene(const ScenarioConfig& c) {
  const auto seeds = derive_seeds(c.seed);
  try {
    ForestScene scene = generate_forest(c.region, c.forest, seeds.forest);
    scene.temperatures = c.temperatures;
    scene.sensor_noise_std = c.sensor_noise_std;
    for (const auto& p : c.person_positions) scene.persons.push_back({p, c.person_radius});
    if (c.person_count > 0) {
      place_random_persons(scene, c.person_area.value_or(c.region), c.person_count, c.person_radius, seeds.persons);
    }
    if (c.clutter_count > 0) {
      place_random_clutter(scene, c.clutter_area.value_or(c.region), c.clutter_count, c.clutter, seeds.clutter);
    }
    validate(scene);
    return scene;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("forest", e.what());
  }
}

MissionConfig build_mission_config(const ScenarioConfig& c, bool verbose) {
  MissionConfig m;
  m.mission_id = c.id;
  m.sa = c.sampling;
  m.noise = c.noise;
  m.noise.seed = derive_seeds(c.seed).pose_noise;
  m.planner = c.planner;
  m.sample_speed = c.sample_speed;
  m.transit_speed = c.transit_speed;
  m.segment_length = c.segment_length;
  m.min_residue = c.min_residue;
  m.crop_size = c.crop_size;
  m.resample = c.resample;
  m.verbose = verbose;
  m.start = c.start;
  m.geo = c.geo;
  return m;
}

ProbabilityGrid build_grid(const ScenarioConfig& c) {
  std::ifstream in(c.probability_map);
  if (!in) throw ConfigError("planner.probability_map", "cannot open '" + c.probability_map + "'");
  try {
    return load_probability_csv(in, c.grid_origin, c.cell_size);
  } catch (const Error& e) {
    throw ConfigError("planner.probability_map", e.what());
  }
}

}  // namespace aos
