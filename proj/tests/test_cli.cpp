#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("aos_cli_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args, const fs::path& capture = {}) {
  std::string cmd = std::string(AOS_CLI_PATH) + " " + args;
  cmd += capture.empty() ? " > /dev/null 2>&1" : " > '" + capture.string() + "' 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kBase = R"([terrain]
flat = -40 -40 200 200 2 0
[forest]
region = -30 -30 150 150
density = 0
[camera]
resolution_px = 128
[sampling]
spacing = 3
[noise]
sigma_xy = 0
sigma_z = 0
sigma_yaw_deg = 0
[detector]
expected_area_px = 7.4
)";

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& extra) {
  const fs::path p = dir / name;
  std::ofstream(p) << kBase << extra;
  return p;
}

std::string predefined(bool with_person) {
  std::string s = "[scenario]\nseed = 3\nid = cli-pre\nkind = predefined\n[predefined]\nwaypoint = 0 10\nwaypoint = 60 10\n";
  if (with_person) s += "[persons]\nradius = 0.6\nposition = 30 10\n";
  return s;
}

std::string adaptive(const std::string& planner_extra, bool with_person) {
  std::string s = "[scenario]\nseed = 4\nid = cli-ada\nkind = adaptive\n[planner]\nprobability_map = map.csv\ncell_size = 30\nstart = 0 0\n" +
                  planner_extra;
  if (with_person) s += "[persons]\nradius = 0.6\nposition = 45 15\n";
  return s;
}

}  // namespace

TEST(Cli, FitCurveOnBundledTable) {
  TempDir t;
  const fs::path out = t.path / "fit.txt";
  ASSERT_EQ(run("fit-curve " + std::string(AOS_DATA_DIR) + "/ap_points.csv", out), 0);
  double a = 0, b = 0, mse = 0;
  ASSERT_EQ(std::sscanf(slurp(out).c_str(), "a=%lf b=%lf mse=%lf", &a, &b, &mse), 3);
  EXPECT_NEAR(a, 0.943, 0.02);
  EXPECT_NEAR(b, 0.516, 0.10);
}

TEST(Cli, FitCurveNoiselessFileAndCsvOut) {
  TempDir t;
  std::ofstream(t.path / "pts.csv") << "N,AP\n1,0.5\n4,0.8\n9,0.9\n";  // a = 1, b = 1
  ASSERT_EQ(run("fit-curve " + (t.path / "pts.csv").string() + " --out " + (t.path / "fit.csv").string()), 0);
  const std::string csv = slurp(t.path / "fit.csv");
  EXPECT_EQ(csv.rfind("a,b,mse,iterations,penalty\n", 0), 0u);
  double a = 0, b = 0;
  ASSERT_EQ(std::sscanf(csv.c_str() + csv.find('\n') + 1, "%lf,%lf", &a, &b), 2);
  EXPECT_NEAR(a, 1.0, 1e-6);
  EXPECT_NEAR(b, 1.0, 1e-6);
}

TEST(Cli, UsageErrors) {
  TempDir t;
  std::ofstream(t.path / "empty.csv") << "N,AP\n";
  EXPECT_EQ(run("fit-curve " + (t.path / "empty.csv").string()), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("fly-away"), 2);
  EXPECT_EQ(run("search"), 2);
  EXPECT_EQ(run("eval " + (t.path / "nothing").string()), 2);
}

TEST(Cli, ConfigErrorExitsOne) {
  TempDir t;
  const fs::path cfg = t.path / "bad.cfg";
  std::ofstream(cfg) << "[terrain]\ndem = missing.asc\n";
  EXPECT_EQ(run("simulate --config " + cfg.string() + " --out " + (t.path / "o").string()), 1);
}

TEST(Cli, SimulateWritesManifestAndIsDeterministic) {
  TempDir t;
  const fs::path cfg = write_config(t.path, "pre.cfg", predefined(true) + "[output]\nsave_frames = true\n");
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + (t.path / "a").string()), 0);
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + (t.path / "b").string()), 0);
  for (const char* f : {"manifest.txt", "scene.txt", "scenario.cfg", "terrain.asc", "frames/frame_000.pgm"}) {
    ASSERT_TRUE(fs::exists(t.path / "a" / f)) << f;
    EXPECT_EQ(slurp(t.path / "a" / f), slurp(t.path / "b" / f)) << f;
  }
  const std::string manifest = slurp(t.path / "a" / "manifest.txt");
  EXPECT_NE(manifest.find("scene.txt"), std::string::npos);
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --seed 99 --out " + (t.path / "c").string()), 0);
  EXPECT_NE(slurp(t.path / "a" / "manifest.txt"), slurp(t.path / "c" / "manifest.txt"));
}

TEST(Cli, PredefinedSearchEvalAndReport) {
  TempDir t;
  const fs::path cfg = write_config(t.path, "pre.cfg", predefined(true));
  const fs::path run_dir = t.path / "run";
  ASSERT_EQ(run("search --config " + cfg.string() + " --out " + run_dir.string()), 0);
  for (const char* f : {"mission.jsonl", "messages.jsonl", "metrics.csv", "integrals/integral_000.pgm"}) {
    EXPECT_TRUE(fs::exists(run_dir / f)) << f;
  }
  EXPECT_NE(slurp(run_dir / "messages.jsonl").find("unconfirmed"), std::string::npos);
  const std::string metrics = slurp(run_dir / "metrics.csv");
  EXPECT_EQ(metrics.rfind("scenario,integrals,labels,AP,TP,FP,persons,PF,PI,", 0), 0u);
  EXPECT_NE(metrics.find("cli-pre,2,"), std::string::npos);

  const fs::path re = t.path / "re.csv";
  ASSERT_EQ(run("eval " + run_dir.string() + " --out " + re.string()), 0);
  EXPECT_EQ(slurp(re), metrics);

  ASSERT_EQ(run("render-report " + run_dir.string() + " --out " + (t.path / "rep").string()), 0);
  const std::string md = slurp(t.path / "rep" / "report.md");
  EXPECT_NE(md.find("| integral | purpose"), std::string::npos);
  EXPECT_TRUE(fs::exists(t.path / "rep" / "gallery" / "integral_000.pgm"));
}

TEST(Cli, PredefinedEmptySceneHasNoFinds) {
  TempDir t;
  const fs::path cfg = write_config(t.path, "pre.cfg", predefined(false));
  ASSERT_EQ(run("search --config " + cfg.string() + " --out " + (t.path / "r").string()), 0);
  const std::string metrics = slurp(t.path / "r" / "metrics.csv");
  const std::string row = metrics.substr(metrics.find('\n') + 1);
  // persons, PF, PI
  EXPECT_NE(row.find(",0,0,0,"), std::string::npos) << row;
}

TEST(Cli, AdaptiveExitCodes) {
  TempDir t;
  std::ofstream(t.path / "map.csv") << "0.2,0.5\n0.9,0.1\n";
  const fs::path found = write_config(t.path, "found.cfg", adaptive("", true));
  EXPECT_EQ(run("search --config " + found.string() + " --out " + (t.path / "f").string()), 0);
  EXPECT_NE(slurp(t.path / "f" / "messages.jsonl").find("confirmed-true"), std::string::npos);

  const fs::path empty = write_config(t.path, "empty.cfg", adaptive("", false));
  EXPECT_EQ(run("search --config " + empty.string() + " --out " + (t.path / "e").string()), 4);

  const fs::path budget = write_config(t.path, "budget.cfg", adaptive("max_path_length = 70\n", false));
  EXPECT_EQ(run("search --config " + budget.string() + " --out " + (t.path / "b").string()), 3);
}

TEST(Cli, VerboseStreamsUnconfirmed) {
  TempDir t;
  std::ofstream(t.path / "map.csv") << "0.2,0.5\n0.9,0.1\n";
  const fs::path cfg = write_config(t.path, "found.cfg", adaptive("", true));
  const fs::path out = t.path / "stdout.txt";
  ASSERT_EQ(run("search --verbose --config " + cfg.string() + " --out " + (t.path / "v").string(), out), 0);
  EXPECT_NE(slurp(out).find("unconfirmed"), std::string::npos);
  EXPECT_NE(slurp(t.path / "v" / "messages.jsonl").find("unconfirmed"), std::string::npos);
}
