// aos: scenario simulation, search missions, evaluation and reporting.
//
// Exit codes: 0 success (person confirmed, or path flown), 1 error, 2 usage,
// 3 stopped on the path-length budget, 4 every positive cell scanned
// without a confirmed find.

#include "aos/config.hpp"
#include "aos/error.hpp"
#include "aos/eval.hpp"
#include "aos/kvtext.hpp"
#include "aos/mission_io.hpp"
#include "aos/raster_io.hpp"
#include "aos/rng.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <cctype>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace aos;

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBudget = 3;
constexpr int kExitCoverage = 4;

struct UsageError : Error {
  using Error::Error;
};

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "scenario file");
  cmd->add_option("--out", f.out, "output directory or file");
  cmd->add_option("--seed", f.seed, "override the scenario's global seed");
  cmd->add_flag("--verbose", f.verbose, "also report unconfirmed detections");
}

/// Records every file written below the output root for the manifest.
class OutputTree {
 public:
  explicit OutputTree(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  const fs::path& root() const { return root_; }
  fs::path path(const std::string& rel) {
    const fs::path p = root_ / rel;
    fs::create_directories(p.parent_path());
    files_.insert(rel);
    return p;
  }
  std::ofstream open(const std::string& rel) {
    std::ofstream out(path(rel), std::ios::binary);
    if (!out) throw Error("cannot write " + (root_ / rel).string());
    return out;
  }

  void write_manifest(const ScenarioConfig& cfg, const std::string& command) {
    kv::Document doc;
    auto& run = doc.add_section("run");
    run.add("command", command);
    run.add("scenario_id", cfg.id);
    auto& seeds = doc.add_section("seeds");
    const auto s = derive_seeds(cfg.seed);
    seeds.add("global", std::to_string(cfg.seed));
    seeds.add("forest", std::to_string(s.forest));
    seeds.add("persons", std::to_string(s.persons));
    seeds.add("clutter", std::to_string(s.clutter));
    seeds.add("pose_noise", std::to_string(s.pose_noise));
    seeds.add("derivation", "splitmix64(global ^ fnv1a64(role))");
    auto& files = doc.add_section("files");
    for (const auto& rel : files_) {
      std::ifstream in(root_ / rel, std::ios::binary);
      std::ostringstream buf;
      buf << in.rdbuf();
      const std::string bytes = buf.str();
      char hash[17];
      std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(rng::tag_hash(bytes)));
      files.add("file", rel + " " + std::to_string(bytes.size()) + " " + hash);
    }
    std::ofstream out(root_ / "manifest.txt");
    doc.write(out);
  }

 private:
  fs::path root_;
  std::set<std::string> files_;
};

ScenarioConfig load_scenario(const CommonFlags& f) {
  if (f.config.empty()) throw UsageError("--config is required");
  ScenarioConfig cfg = load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.output_dir = f.out;
  validate(cfg);
  return cfg;
}

void write_common(OutputTree& tree, const ScenarioConfig& cfg, const ForestScene& scene, const ElevationModel& dem) {
  {
    // The copy lives in the output tree, so its output dir is the tree itself.
    ScenarioConfig copy = cfg;
    copy.output_dir = ".";
    auto out = tree.open("scenario.cfg");
    write_config(out, copy);
  }
  {
    auto out = tree.open("scene.txt");
    save_scene(out, scene);
  }
  auto out = tree.open("terrain.asc");
  save_dem(out, dem);
}

SamplingPlan first_plan(const ScenarioConfig& cfg, const ElevationModel& dem) {
  if (cfg.kind == MissionKind::predefined) {
    const double total = polyline_length(cfg.waypoints);
    const auto seg = split_segments(total, cfg.segment_length, cfg.min_residue).front();
    return plan_path_segment(dem, cfg.waypoints, seg.first, seg.second, cfg.sampling);
  }
  const auto grid = build_grid(cfg);
  const Eigen::Vector2d start = cfg.start.value_or(grid.origin());
  const auto cell = next_cell(grid, start, cfg.planner);
  if (!cell) throw ConfigError("planner.probability_map", "no cell with positive probability");
  return scan_plan_for_cell(dem, grid, *cell, start, cfg.sampling);
}

int cmd_simulate(const CommonFlags& f) {
  const auto cfg = load_scenario(f);
  const auto dem = build_terrain(cfg);
  const auto scene = build_scene(cfg);
  OutputTree tree(cfg.output_dir);
  write_common(tree, cfg, scene, dem);
  if (cfg.save_frames) {
    const SceneRenderer renderer(scene, dem, cfg.camera);
    const auto plan = first_plan(cfg, dem);
    for (std::size_t k = 0; k < plan.poses.size(); ++k) {
      char name[48];
      std::snprintf(name, sizeof name, "frames/frame_%03zu.pgm", k);
      const auto frame = renderer.render(plan.poses[k]);
      auto out = tree.open(name);
      write_pgm16(out, frame.pixels);
    }
  }
  tree.write_manifest(cfg, "simulate");
  if (f.verbose) {
    std::cerr << "scene: " << scene.occluders.size() << " occluders, " << scene.persons.size() << " persons, "
              << scene.clutter.size() << " clutter objects -> " << tree.root().string() << "\n";
  }
  return 0;
}

void write_metrics_csv(std::ostream& out, const std::string& scenario, const MissionMetrics& m, double path,
                       double time, const std::string& stop) {
  out << "scenario,integrals,labels,AP,TP,FP,persons,PF,PI,path_length_m,flight_time_s,stop_reason\n";
  out << scenario << ',' << m.integrals << ',' << m.ap.labels << ','
      << (m.ap.ap ? kv::format_double(*m.ap.ap) : std::string("n/a")) << ',' << m.ap.tp << ',' << m.ap.fp << ','
      << m.persons << ',' << m.found.pf << ',' << m.found.pi << ',' << kv::format_double(path) << ','
      << kv::format_double(time) << ',' << stop << '\n';
}

int cmd_search(const CommonFlags& f) {
  const auto cfg = load_scenario(f);
  const auto dem = build_terrain(cfg);
  const auto scene = build_scene(cfg);
  const auto detector = make_detector(cfg.detector_name, cfg.detector);
  const auto mcfg = build_mission_config(cfg, f.verbose);
  const SceneRenderer renderer(scene, dem, cfg.camera);

  OutputTree tree(cfg.output_dir);
  write_common(tree, cfg, scene, dem);
  auto messages = tree.open("messages.jsonl");
  MissionOutputs outputs;
  outputs.on_integral = [&](const IntegralRecord& rec, const IntegralImage& img) {
    write_integral_files(tree.path(integral_file_name(rec.id)).string(),
                         tree.path(integral_sidecar_name(rec.id)).string(), img);
  };
  outputs.on_crop = [&](const std::string& name, const Image<float>& crop) {
    auto out = tree.open(name);
    write_pgm16(out, crop);
  };
  outputs.on_message = [&](const DetectionMessage& m) {
    write_message(messages, m);
    if (f.verbose) write_message(std::cout, m);
  };

  MissionLog log;
  if (cfg.kind == MissionKind::predefined) {
    log = run_predefined(cfg.waypoints, renderer, dem, *detector, mcfg, outputs);
  } else {
    log = run_adaptive(build_grid(cfg), renderer, dem, *detector, mcfg, outputs);
  }
  messages.close();
  {
    auto out = tree.open("mission.jsonl");
    write_mission_log(out, log);
  }
  {
    const auto metrics = score_integrals(log.integrals, scene, dem, cfg.camera);
    auto out = tree.open("metrics.csv");
    write_metrics_csv(out, cfg.id, metrics, log.path_length_m, log.flight_time_s, to_string(log.stop_reason));
  }
  tree.write_manifest(cfg, "search");

  std::cerr << "stop: " << to_string(log.stop_reason) << ", path " << log.path_length_m << " m, "
            << log.integrals.size() << " integrals, " << log.messages.size() << " messages\n";
  switch (log.stop_reason) {
    case StopReason::found:
    case StopReason::path_complete: return 0;
    case StopReason::budget: return kExitBudget;
    case StopReason::coverage: return kExitCoverage;
  }
  return 0;
}

MissionSummary read_summary(const fs::path& run) {
  std::ifstream in(run / "mission.jsonl");
  if (!in) throw UsageError("no mission.jsonl in " + run.string());
  return read_mission_log(in);
}

int cmd_eval(const CommonFlags& f, const std::string& run_dir) {
  if (run_dir.empty()) throw UsageError("eval needs a run directory");
  const fs::path run(run_dir);
  const auto summary = read_summary(run);
  const auto cfg = load_config((run / "scenario.cfg").string());
  std::ifstream scene_in(run / "scene.txt");
  if (!scene_in) throw UsageError("no scene.txt in " + run.string());
  const auto scene = load_scene(scene_in);
  const auto dem = load_dem_file((run / "terrain.asc").string());
  const auto metrics = score_integrals(summary.integrals, scene, dem, cfg.camera);

  const fs::path out_path = f.out.empty() ? run / "metrics.csv" : fs::path(f.out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  std::ofstream out(out_path);
  if (!out) throw Error("cannot write " + out_path.string());
  write_metrics_csv(out, summary.mission_id, metrics, summary.path_length_m, summary.flight_time_s,
                    summary.stop_reason);
  if (f.verbose) {
    write_metrics_csv(std::cout, summary.mission_id, metrics, summary.path_length_m, summary.flight_time_s,
                      summary.stop_reason);
  }
  return 0;
}

std::vector<Eigen::Vector2d> read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open points file '" + path + "'");
  std::vector<Eigen::Vector2d> pts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    const auto first = line.find_first_not_of(" \t");
    if (line_no == 1 && std::isalpha(static_cast<unsigned char>(line[first]))) continue;  // header row
    const auto v = kv::parse_doubles(line, line_no, 2);
    pts.push_back({v[0], v[1]});
  }
  if (pts.empty()) throw UsageError("points file '" + path + "' has no data rows");
  return pts;
}

int cmd_fit(const CommonFlags& f, const std::string& points_path, double penalty) {
  if (points_path.empty()) throw UsageError("fit-curve needs a points CSV (N,AP)");
  const auto pts = read_points_csv(points_path);
  if (pts.size() < 2) throw UsageError("fit-curve needs at least two points");
  FitOptions opt;
  opt.penalty = penalty;
  const auto fit = fit_ap_curve(pts, opt);
  std::ostringstream line;
  line << "a=" << kv::format_double(fit.a) << " b=" << kv::format_double(fit.b)
       << " mse=" << kv::format_double(fit.mse) << "\n";
  std::cout << line.str();
  if (!f.out.empty()) {
    std::ofstream out(f.out);
    if (!out) throw Error("cannot write " + f.out);
    out << "a,b,mse,iterations,penalty\n"
        << kv::format_double(fit.a) << ',' << kv::format_double(fit.b) << ',' << kv::format_double(fit.mse) << ','
        << fit.iterations << ',' << kv::format_double(penalty) << '\n';
  }
  return 0;
}

int cmd_report(const CommonFlags& f, const std::string& run_dir) {
  if (run_dir.empty()) throw UsageError("render-report needs a run directory");
  const fs::path run(run_dir);
  const auto summary = read_summary(run);
  const fs::path out_dir = f.out.empty() ? run / "report" : fs::path(f.out);
  fs::create_directories(out_dir / "gallery");

  std::ofstream md(out_dir / "report.md");
  md << "# Mission " << summary.mission_id << "\n\n";
  md << "stop reason: " << summary.stop_reason << ", path " << kv::format_double(summary.path_length_m)
     << " m, flight time " << kv::format_double(summary.flight_time_s) << " s, cells visited "
     << summary.cells_visited << "\n\n";
  md << "| integral | purpose | cell | frames | valid px | detections | max confidence | gallery |\n";
  md << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& rec : summary.integrals) {
    std::ifstream in(run / integral_file_name(rec.id), std::ios::binary);
    std::string gallery = "-";
    if (in) {
      const auto raw = read_pgm16(in);
      Image<float> img = raw.cast<float>() / 65535.0f;
      float lo = 1.0f, hi = 0.0f;
      for (Eigen::Index i = 0; i < img.size(); ++i) {
        if (raw.data()[i] == 0) {
          img.data()[i] = std::nanf("");
          continue;
        }
        lo = std::min(lo, img.data()[i]);
        hi = std::max(hi, img.data()[i]);
      }
      char name[48];
      std::snprintf(name, sizeof name, "gallery/integral_%03d.pgm", rec.id);
      std::ofstream g(out_dir / name, std::ios::binary);
      write_pgm8(g, img, lo, hi);
      gallery = name;
    }
    double max_conf = 0.0;
    for (const auto& d : rec.detections) max_conf = std::max(max_conf, d.confidence);
    md << "| " << rec.id << " | " << to_string(rec.purpose) << " | "
       << (rec.cell ? std::to_string(rec.cell->row) + "," + std::to_string(rec.cell->col) : std::string("-"))
       << " | " << rec.frames << " | " << rec.valid_pixels << " | " << rec.detections.size() << " | "
       << kv::format_double(max_conf) << " | " << gallery << " |\n";
  }
  if (!summary.confirmations.empty()) {
    md << "\n| source integral | detection | C0 | C1 | delta C | verdict |\n|---|---|---|---|---|---|\n";
    for (const auto& c : summary.confirmations) {
      md << "| " << c.source_integral << " | " << c.detection_index << " | "
         << kv::format_double(c.record.initial_confidence) << " | "
         << kv::format_double(c.record.resampled_confidence) << " | " << kv::format_double(c.record.delta())
         << " | " << to_string(c.record.verdict) << " |\n";
    }
  }
  if (f.verbose) std::cout << "report written to " << (out_dir / "report.md").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Airborne optical sectioning search simulator"};
  app.require_subcommand(1);

  CommonFlags sim_f, search_f, eval_f, fit_f, report_f;
  std::string eval_run, report_run, points;
  double penalty = 10.0;

  auto* sim = app.add_subcommand("simulate", "generate a scene and optional frames");
  add_common(sim, sim_f);
  auto* search = app.add_subcommand("search", "run a predefined or adaptive mission");
  add_common(search, search_f);
  auto* eval = app.add_subcommand("eval", "score a mission run against its scene");
  add_common(eval, eval_f);
  eval->add_option("run", eval_run, "run directory written by search");
  auto* fit = app.add_subcommand("fit-curve", "fit AP(N) = aN/(b+N) to an N,AP CSV");
  add_common(fit, fit_f);
  fit->add_option("points", points, "CSV with N,AP rows");
  fit->add_option("--penalty", penalty, "weight on residuals above the curve");
  auto* report = app.add_subcommand("render-report", "summary table and integral gallery");
  add_common(report, report_f);
  report->add_option("run", report_run, "run directory written by search");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sim) return cmd_simulate(sim_f);
    if (*search) return cmd_search(search_f);
    if (*eval) return cmd_eval(eval_f, eval_run);
    if (*fit) return cmd_fit(fit_f, points, penalty);
    if (*report) return cmd_report(report_f, report_run);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}
