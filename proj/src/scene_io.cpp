#include "aos/error.hpp"
#include "aos/kvtext.hpp"
#include "aos/scenesim.hpp"

#include <istream>
#include <ostream>

namespace aos {

namespace {

using kv::format_double;
using kv::format_doubles;

const kv::Entry& require(const kv::Section& s, std::string_view key) {
  const auto* e = s.find(key);
  if (!e) throw ParseError(s.line, "[" + s.name + "] is missing '" + std::string(key) + "'");
  return *e;
}

double number(const kv::Section& s, std::string_view key) {
  const auto& e = require(s, key);
  return kv::parse_double(e.value, e.line);
}

}  // namespace

void save_scene(std::ostream& out, const ForestScene& scene) {
  kv::Document doc;
  auto& head = doc.add_section("scene");
  head.add("seed", std::to_string(scene.seed));
  head.add("region", format_doubles({scene.region.min.x(), scene.region.min.y(), scene.region.max.x(), scene.region.max.y()}));
  head.add("target_density", format_double(scene.params.target_density));
  head.add("radius_min", format_double(scene.params.radius_min));
  head.add("radius_max", format_double(scene.params.radius_max));
  head.add("canopy_height", format_double(scene.params.canopy_height));
  head.add("sensor_noise_std", format_double(scene.sensor_noise_std));

  auto& temps = doc.add_section("temperatures");
  temps.add("ground", format_double(scene.temperatures.ground));
  temps.add("canopy", format_double(scene.temperatures.canopy));
  temps.add("person", format_double(scene.temperatures.person));
  temps.add("clutter", format_double(scene.temperatures.clutter));

  auto& occ = doc.add_section("occluders");
  for (const auto& d : scene.occluders) occ.add("disk", format_doubles({d.center.x(), d.center.y(), d.radius}));
  auto& per = doc.add_section("persons");
  for (const auto& d : scene.persons) per.add("disk", format_doubles({d.center.x(), d.center.y(), d.radius}));
  auto& clu = doc.add_section("clutter");
  for (const auto& c : scene.clutter) {
    clu.add("capsule", format_doubles({c.center.x(), c.center.y(), c.half_length, c.heading_deg, c.radius, c.height_agl}));
  }
  doc.write(out);
}

ForestScene load_scene(std::istream& in) {
  const auto doc = kv::Document::parse(in);
  const auto* head = doc.section("scene");
  if (!head) throw ParseError(0, "missing [scene] section");

  ForestScene scene;
  {
    const auto& e = require(*head, "seed");
    scene.seed = kv::parse_u64(e.value, e.line);
  }
  {
    const auto& e = require(*head, "region");
    const auto v = kv::parse_doubles(e.value, e.line, 4);
    scene.region = {{v[0], v[1]}, {v[2], v[3]}};
  }
  scene.params.target_density = number(*head, "target_density");
  scene.params.radius_min = number(*head, "radius_min");
  scene.params.radius_max = number(*head, "radius_max");
  scene.params.canopy_height = number(*head, "canopy_height");
  scene.sensor_noise_std = number(*head, "sensor_noise_std");

  if (const auto* t = doc.section("temperatures")) {
    scene.temperatures.ground = number(*t, "ground");
    scene.temperatures.canopy = number(*t, "canopy");
    scene.temperatures.person = number(*t, "person");
    scene.temperatures.clutter = number(*t, "clutter");
  }
  auto disks = [&](std::string_view section, std::vector<Disk>& out) {
    if (const auto* s = doc.section(section)) {
      for (const auto* e : s->find_all("disk")) {
        const auto v = kv::parse_doubles(e->value, e->line, 3);
        out.push_back({{v[0], v[1]}, v[2]});
      }
    }
  };
  disks("occluders", scene.occluders);
  disks("persons", scene.persons);
  if (const auto* s = doc.section("clutter")) {
    for (const auto* e : s->find_all("capsule")) {
      const auto v = kv::parse_doubles(e->value, e->line, 6);
      scene.clutter.push_back({{v[0], v[1]}, v[2], v[3], v[4], v[5]});
    }
  }
  validate(scene);
  return scene;
}

}  // namespace aos
