#pragma once

#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shocklab/couplings.hpp"
#include "shocklab/flow.hpp"
#include "shocklab/lattice.hpp"
#include "shocklab/shock.hpp"

namespace shocklab::cli {

inline constexpr const char* kToolVersion = "0.1.0";

struct CouplingSpec {
  bool rescaled = true;           // "T2j" keys; false for raw "t2j"
  std::map<int, double> values;   // keyed by j
};

struct SolverConfig {
  int M = 0;  // 0 picks the window from x_max
  double x_max = 1.0;
  int continuation_steps = 50;
  int max_continuation_steps = 800;
  double newton_tol = 1e-12;
  int max_iterations = 50;
  int max_halvings = 30;
  std::string closure = "clamp";  // clamp | extrapolate
  int buffer_width = -1;
};

struct LegSpec {
  int k = 1;
  bool rescaled = true;
  double target = 0.0;
  double h = 0.0;
};

struct FlowConfig {
  std::string mode = "lattice";  // lattice | matrix
  std::string start = "gaussian";  // gaussian | string | values
  int M = 100;
  std::vector<double> values;  // B_1..B_M when start = values
  std::vector<LegSpec> legs;
  bool compare_string = true;
  int snapshot_every = 10;
  double growth_limit = 1e6;
};

struct OracleConfig {
  int n_max = 20;
  int hankel_max = 12;
  double agreement_tol = 1e-8;
};

struct PhaseConfig {
  std::array<double, 2> x_range{0.0, 0.6};
  std::array<double, 2> T6_range{-0.012, -0.002};
  int nx = 121;
  int nT6 = 101;
};

struct FreeEnergyConfig {
  double x = 0.22;
  std::vector<double> T6_values;
  std::array<double, 2> u_range{0.0, 3.0};
  int nu = 601;
};

struct BranchConfig {
  std::array<double, 2> x_range{-0.3, 1.0};
  int nx = 261;
};

// Everything a run depends on. Its JSON form is the config echo written to
// summary.json; feeding the echo back reproduces the numeric payload.
struct RunConfig {
  std::string command;  // solve | flow | oracle | phase | reproduce
  std::string task;     // what reproduce runs: solve | phase | free_energy | branches
  std::optional<std::string> preset;
  CouplingSpec couplings;
  int N = 200;
  SolverConfig solver;
  shock::OscillationOptions oscillation;
  FlowConfig flow;
  OracleConfig oracle;
  PhaseConfig phase;
  FreeEnergyConfig free_energy;
  BranchConfig branches;
  std::string output_dir = "shocklab_out";
  int threads = 1;
  int seed = 0;  // reserved; echoed but unused
};

const std::vector<std::string>& preset_names();
// Applies a named preset on top of cfg; throws Config for unknown names.
void apply_preset(RunConfig& cfg, const std::string& name);

// Validates and merges a JSON config into cfg; throws Config on any schema
// violation (unknown keys, wrong types, out-of-range values).
void merge_config(RunConfig& cfg, const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);

CouplingVector coupling_vector(const RunConfig& cfg);
lattice::SolveOptions solve_options(const RunConfig& cfg);
// Smallest window whose reported sites reach x_max at scale N.
int window_for_range(double x_max, int N, int q);

// Shortest text with 17 significant digits, locale independent.
std::string format_double(double v);

// Runs one command line (argv[0] excluded); returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace shocklab::cli
