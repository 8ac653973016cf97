#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "shocklab/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shocklab::cli;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("shocklab_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

int run_args(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

std::vector<std::vector<std::string>> csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

int spawn(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" SHOCKLAB_BINARY "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("numbers keep 17 significant digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  for (double v : {-2.5e-300, 6.02214076e23, 0.1 + 0.2, 1e-7 / 3}) CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("zero couplings give u = x") {
  const auto dir = scratch("zero");
  const auto cfg = dir / "cfg.json";
  write(cfg, R"({"couplings": {"T2": 0.0}, "scale_N": 50, "solver": {"M": 60}})");
  REQUIRE(run_args({"solve", "--config", cfg.string(), "--out", (dir / "o").string()}) == 0);
  const auto rows = csv(dir / "o" / "solve.csv");
  REQUIRE(rows.size() > 2);
  CHECK(rows[0] == std::vector<std::string>{"x", "u_lattice", "u_branch1", "u_branch2", "u_branch3", "deviation"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 6);
    CHECK(std::abs(std::stod(rows[i][1]) - std::stod(rows[i][0])) < 1e-12);
    CHECK(rows[i][3].empty());
    CHECK(rows[i][4].empty());
  }
  const auto summary = load(dir / "o" / "summary.json");
  CHECK(summary["command"] == "solve");
  CHECK(summary["provenance"]["version"] == kToolVersion);
  CHECK(summary["results"]["oscillation"]["flag"] == false);
}

TEST_CASE("configuration errors exit with code 2") {
  const auto dir = scratch("bad");
  write(dir / "unknown.json", R"({"couplings": {"T4": 0.1}, "colour": "blue"})");
  write(dir / "mixed.json", R"({"couplings": {"T4": 0.1, "t6": -0.001}})");
  write(dir / "broken.json", R"({"couplings": )");
  write(dir / "type.json", R"({"scale_N": "many"})");
  for (const char* name : {"unknown.json", "mixed.json", "broken.json", "type.json"}) {
    std::string err;
    CHECK(run_args({"solve", "--config", (dir / name).string(), "--out", (dir / "o").string()}, &err) == 2);
    const auto j = json::parse(err);
    CHECK(j["error"]["kind"] == "config");
    CHECK(j["error"]["exit_code"] == 2);
  }
  CHECK(run_args({"reproduce", "fig9z", "--out", (dir / "o").string()}) == 2);
  CHECK(run_args({"solve", "--no-such-flag"}) == 2);
  CHECK(run_args({"solve", "--config", (dir / "missing.json").string()}) == 2);
}

TEST_CASE("an inadmissible weight exits with code 3") {
  const auto dir = scratch("oracle_bad");
  write(dir / "cfg.json", R"({"couplings": {"t4": 0.01}, "scale_N": 10})");
  std::string err;
  CHECK(run_args({"oracle", "--config", (dir / "cfg.json").string(), "--out", dir.string()}, &err) == 3);
  CHECK(json::parse(err)["error"]["kind"] == "invalid-input");
  CHECK(load(dir / "error.json") == json::parse(err));
}

TEST_CASE("Gaussian oracle table") {
  const auto dir = scratch("oracle");
  write(dir / "cfg.json", R"({"couplings": {"t2": 0.0}, "scale_N": 10, "oracle": {"n_max": 15}})");
  REQUIRE(run_args({"oracle", "--config", (dir / "cfg.json").string(), "--out", dir.string()}) == 0);
  const auto rows = csv(dir / "oracle.csv");
  REQUIRE(rows.size() == 16);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::stod(rows[i][1]) == doctest::Approx(static_cast<double>(i)).epsilon(1e-12));
    const double lt = std::stod(rows[i][6]), lg = std::stod(rows[i][7]);
    CHECK(std::abs(lt - lg) <= 1e-10 * std::abs(lg));
  }
}

TEST_CASE("flow command") {
  const auto dir = scratch("flow");
  SUBCASE("empty schedule echoes the start") {
    write(dir / "cfg.json", R"({"couplings": {"t2": 0.0}, "scale_N": 50, "flow": {"M": 40, "legs": []}})");
    REQUIRE(run_args({"flow", "--config", (dir / "cfg.json").string(), "--out", dir.string()}) == 0);
    const auto rows = csv(dir / "flow.csv");
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][2] == rows[i][3]);
  }
  SUBCASE("quartic leg matches the string solution") {
    write(dir / "cfg.json",
          R"({"couplings": {"t2": 0.0}, "scale_N": 50,
              "flow": {"M": 100, "legs": [{"coupling": "t4", "target": -0.01}]}})");
    REQUIRE(run_args({"flow", "--config", (dir / "cfg.json").string(), "--out", dir.string()}) == 0);
    const auto rows = csv(dir / "flow.csv");
    REQUIRE(rows[0][5] == "deviation");
    for (std::size_t i = 1; i <= 20; ++i) CHECK(std::stod(rows[i][5]) < 1e-6 * std::stod(rows[i][4]));
  }
  SUBCASE("blow-up reports its time") {
    write(dir / "cfg.json",
          R"({"couplings": {"t2": 0.0}, "scale_N": 20,
              "flow": {"start": "values", "values": [1, 1, 1, -0.1, 1, 1, 1, 1],
                       "legs": [{"coupling": "t2", "target": 0.1}], "compare_string": false}})");
    std::string err;
    CHECK(run_args({"flow", "--config", (dir / "cfg.json").string(), "--out", dir.string()}, &err) == 3);
    const auto j = json::parse(err);
    CHECK(j["error"]["kind"] == "blow-up");
    CHECK(j["error"]["time"].get<double>() > 0.0);
  }
  SUBCASE("matrix mode reports spectrum drift") {
    write(dir / "cfg.json",
          R"({"couplings": {"t2": 0.0}, "scale_N": 20,
              "flow": {"mode": "matrix", "M": 20, "legs": [{"coupling": "t2", "target": 0.1}]}})");
    REQUIRE(run_args({"flow", "--config", (dir / "cfg.json").string(), "--out", dir.string()}) == 0);
    CHECK(load(dir / "summary.json")["results"]["spectrum_drift"].get<double>() < 1e-10);
  }
}

TEST_CASE("phase preset puts the critical point on the contour") {
  const auto dir = scratch("phase");
  REQUIRE(run_args({"reproduce", "fig2a", "--out", dir.string()}) == 0);
  const auto s = load(dir / "summary.json");
  CHECK(fs::exists(dir / "critical_set.csv"));
  CHECK(fs::exists(dir / "phase.csv"));
  bool found = false;
  for (const auto& p : s["results"]["critical_points"])
    found = found || p["contour_distance_cells"].get<double>() < 1.0;
  CHECK(found);
}

TEST_CASE("echoed config reproduces the payload bit for bit") {
  const auto dir = scratch("echo");
  REQUIRE(run_args({"reproduce", "fig1b", "--scale-N", "100", "--out", (dir / "a").string()}) == 0);
  REQUIRE(run_args({"reproduce", "--config", (dir / "a" / "config.echo.json").string(), "--out",
                    (dir / "b").string()}) == 0);
  CHECK(slurp(dir / "a" / "fig1b.csv") == slurp(dir / "b" / "fig1b.csv"));
  const auto a = load(dir / "a" / "summary.json"), b = load(dir / "b" / "summary.json");
  CHECK(a["results"].dump() == b["results"].dump());
  auto ca = a["config"], cb = b["config"];
  ca.erase("output_dir");
  cb.erase("output_dir");
  CHECK(ca == cb);
}

TEST_CASE("every preset runs") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const auto dir = scratch("preset_" + name);
    CHECK(run_args({"reproduce", name, "--scale-N", "100", "--out", dir.string()}) == 0);
    CHECK(fs::exists(dir / "summary.json"));
  }
}

TEST_CASE("spawned binary exit codes and output override") {
  const auto dir = scratch("spawn");
  CHECK(spawn("--help") == 0);
  CHECK(spawn("reproduce fig1a --scale-N 100 --out \"" + (dir / "a").string() + "\"") == 0);
  CHECK(fs::exists(dir / "a" / "fig1a.csv"));
  CHECK(spawn("reproduce nothing --out \"" + (dir / "a").string() + "\"") == 2);
  write(dir / "bad.json", R"({"couplings": {"t4": 0.01}, "scale_N": 10})");
  CHECK(spawn("oracle --config \"" + (dir / "bad.json").string() + "\" --out \"" + (dir / "a").string() + "\"") == 3);
  CHECK(spawn("reproduce fig1a --scale-N 100 --out \"" + (dir / "ignored").string() + "\"",
              "SHOCKLAB_OUT=\"" + (dir / "env").string() + "\"") == 0);
  CHECK(fs::exists(dir / "env" / "summary.json"));
  CHECK_FALSE(fs::exists(dir / "ignored"));
}
