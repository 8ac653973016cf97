#include "shocklab/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <fstream>
#include <limits>
#include <regex>
#include <set>
#include <sstream>

#include "shocklab/continuum.hpp"
#include "shocklab/errors.hpp"
#include "shocklab/oracle.hpp"

namespace shocklab::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::Config, path + ": " + msg);
}

void allow_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) config_error(path, "expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) config_error(path + "." + key, "unknown key");
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) config_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) config_error(path, "must be finite");
  return v;
}

int integer(const json& j, const std::string& path, int lo, int hi = std::numeric_limits<int>::max()) {
  if (!j.is_number_integer()) config_error(path, "expected an integer");
  const long long v = j.get<long long>();
  if (v < lo || v > hi) config_error(path, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

std::string text(const json& j, const std::string& path, const std::set<std::string>& choices = {}) {
  if (!j.is_string()) config_error(path, "expected a string");
  std::string s = j.get<std::string>();
  if (!choices.empty() && !choices.count(s)) {
    std::string list;
    for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
    config_error(path, "must be one of " + list);
  }
  return s;
}

std::array<double, 2> range(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) config_error(path, "expected [lo, hi]");
  std::array<double, 2> r{number(j[0], path + "[0]"), number(j[1], path + "[1]")};
  if (!(r[0] < r[1])) config_error(path, "lo must be below hi");
  return r;
}

// "T4" -> (rescaled, j = 2); throws on anything else.
std::pair<bool, int> coupling_key(const std::string& key, const std::string& path) {
  static const std::regex pattern("^([tT])([1-9][0-9]*)$");
  std::smatch m;
  if (!std::regex_match(key, m, pattern)) config_error(path, "coupling keys look like t4 (raw) or T4 (rescaled)");
  const int power = std::stoi(m[2].str());
  if (power % 2 != 0 || power > 2 * 64) config_error(path, "coupling index must be an even power");
  return {m[1].str() == "T", power / 2};
}

std::string coupling_name(bool rescaled, int j) { return (rescaled ? "T" : "t") + std::to_string(2 * j); }

CouplingSpec parse_couplings(const json& j, const std::string& path) {
  if (!j.is_object()) config_error(path, "expected an object of couplings");
  CouplingSpec spec;
  std::optional<bool> convention;
  for (const auto& [key, value] : j.items()) {
    const auto [rescaled, index] = coupling_key(key, path + "." + key);
    if (convention && *convention != rescaled)
      config_error(path, "give either raw t couplings or rescaled T couplings, not both");
    convention = rescaled;
    spec.values[index] = number(value, path + "." + key);
  }
  spec.rescaled = convention.value_or(true);
  return spec;
}

json couplings_json(const CouplingSpec& c) {
  json j = json::object();
  for (const auto& [index, value] : c.values) j[coupling_name(c.rescaled, index)] = value;
  return j;
}

std::string now_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error(ErrorKind::Config, "cannot write " + path.string());
    row_.clear();
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }
  CsvWriter& operator<<(double v) { return field(format_double(v)); }
  CsvWriter& operator<<(std::optional<double> v) { return field(v ? format_double(*v) : std::string()); }
  CsvWriter& operator<<(long v) { return field(std::to_string(v)); }
  CsvWriter& operator<<(int v) { return field(std::to_string(v)); }
  CsvWriter& operator<<(const std::string& v) { return field(v); }
  void end_row() {
    out_ << row_ << '\n';
    row_.clear();
    first_ = true;
  }

 private:
  CsvWriter& field(const std::string& s) {
    if (!first_) row_ += ',';
    row_ += s;
    first_ = false;
    return *this;
  }
  std::ofstream out_;
  std::string row_;
  bool first_ = true;
};

struct Outcome {
  json results = json::object();
  std::vector<std::string> files;
};

std::vector<std::optional<double>> first_three(const std::vector<double>& roots) {
  std::vector<std::optional<double>> out(3);
  for (std::size_t i = 0; i < roots.size() && i < 3; ++i) out[i] = roots[i];
  return out;
}

// Root statistics of the equation of state over a set of x values.
json root_census(const CouplingVector& c, const std::vector<double>& xs) {
  std::map<int, int> by_count, by_accessible;
  int max_negative = 0, max_negative_minima = 0, min_accessible_pos = std::numeric_limits<int>::max(),
      max_accessible_pos = 0, multivalued_pos = 0;
  double mv_lo = std::numeric_limits<double>::quiet_NaN(), mv_hi = mv_lo;
  for (double x : xs) {
    const continuum::RootSet rs = continuum::solve_eos(continuum::eos_coefficients(c, x));
    ++by_count[rs.count()];
    ++by_accessible[rs.accessible_count()];
    if (rs.count() > 1) {
      if (!(mv_lo <= x)) mv_lo = x;
      if (!(mv_hi >= x)) mv_hi = x;
    }
    if (x <= 0.0) continue;
    int negative = 0, negative_minima = 0;
    for (const auto& r : rs.roots) {
      if (r.accessible) continue;
      ++negative;
      if (r.kind == continuum::RootKind::LocalMin) ++negative_minima;
    }
    if (rs.count() > 1) ++multivalued_pos;
    max_negative = std::max(max_negative, negative);
    max_negative_minima = std::max(max_negative_minima, negative_minima);
    min_accessible_pos = std::min(min_accessible_pos, rs.accessible_count());
    max_accessible_pos = std::max(max_accessible_pos, rs.accessible_count());
  }
  json j;
  j["samples_by_real_root_count"] = json::object();
  for (const auto& [k, v] : by_count) j["samples_by_real_root_count"][std::to_string(k)] = v;
  j["samples_by_accessible_root_count"] = json::object();
  for (const auto& [k, v] : by_accessible) j["samples_by_accessible_root_count"][std::to_string(k)] = v;
  j["multivalued_x_range"] = json::array({nullable(mv_lo), nullable(mv_hi)});
  j["positive_x"] = {{"multivalued_samples", multivalued_pos},
                     {"max_negative_roots", max_negative},
                     {"max_negative_minima", max_negative_minima},
                     {"min_accessible_roots", min_accessible_pos == std::numeric_limits<int>::max() ? 0 : min_accessible_pos},
                     {"max_accessible_roots", max_accessible_pos}};
  return j;
}

json discriminant_info(const CouplingVector& c) {
  json j = json::object();
  if (c.order() > 3) return j;
  const std::vector<double> xs = continuum::discriminant_roots_in_x(c.T(1), c.T(2), c.T(3));
  j["zeros_in_x"] = xs;
  return j;
}

Outcome run_solve(const RunConfig& cfg, const fs::path& dir, const std::string& stem) {
  const CouplingVector c = coupling_vector(cfg);
  const int q = std::max(c.order(), 1);
  const int M = cfg.solver.M > 0 ? cfg.solver.M : window_for_range(cfg.solver.x_max, cfg.N, q);
  const auto sol = lattice::solve_string(c, M, solve_options(cfg));
  const auto trace = lattice::order_parameter(sol.window, cfg.N);
  const auto rep = shock::compare(trace, c, cfg.oscillation);

  Outcome o;
  const std::string file = stem + ".csv";
  {
    CsvWriter csv(dir / file, {"x", "u_lattice", "u_branch1", "u_branch2", "u_branch3", "deviation"});
    for (std::size_t i = 0; i < trace.size(); ++i) {
      csv << trace.x[i] << trace.u[i];
      for (const auto& r : first_three(rep.roots[i])) csv << r;
      csv << rep.deviation[i];
      csv.end_row();
    }
  }
  o.files.push_back(file);
  json extrema = json::array();
  for (const auto& e : rep.oscillations.envelope)
    extrema.push_back({{"x", e.x}, {"deviation", e.u}, {"kind", e.maximum ? "max" : "min"}});
  json& r = o.results;
  r["window"] = {{"M", M}, {"reported_sites", sol.window.reported_size()}, {"buffer", sol.window.buffer_width()},
                 {"closure", sol.window.closure() == lattice::RightClosure::ClampToContinuum ? "clamp" : "extrapolate"}};
  r["residual"] = sol.residual;
  r["newton_iterations"] = sol.newton_iterations;
  r["continuation_stages"] = sol.continuation_stages;
  r["max_deviation"] = rep.max_deviation;
  r["smooth_max_deviation"] = rep.smooth_max_deviation;
  r["oscillation"] = {{"flag", rep.oscillations.flag},
                      {"onset", nullable(rep.oscillations.onset)},
                      {"window", cfg.oscillation.window},
                      {"amp_tol", cfg.oscillation.amp_tol},
                      {"envelope", extrema},
                      {"lattice_extrema", rep.lattice_envelope.size()}};
  r["roots"] = root_census(c, trace.x);
  r["discriminant"] = discriminant_info(c);
  return o;
}

Outcome run_flow(const RunConfig& cfg, const fs::path& dir) {
  const FlowConfig& fc = cfg.flow;
  const CouplingVector c = coupling_vector(cfg);
  flow::FlowSchedule sched;
  int kmax = std::max(c.order(), 1);
  for (const auto& leg : fc.legs) {
    const double target = leg.rescaled ? leg.target / std::pow(static_cast<double>(cfg.N), leg.k - 1) : leg.target;
    sched.push_back({leg.k, target, leg.h});
    kmax = std::max(kmax, leg.k);
  }
  const int buffer = cfg.solver.buffer_width >= 0 ? cfg.solver.buffer_width : lattice::default_buffer_width(fc.M, kmax);

  lattice::LatticeWindow start;
  CouplingVector times = CouplingVector::raw({}, cfg.N);
  if (fc.start == "gaussian") {
    start = lattice::LatticeWindow::gaussian(fc.M, buffer);
  } else if (fc.start == "string") {
    lattice::SolveOptions opts = solve_options(cfg);
    opts.buffer_width = buffer;
    start = lattice::solve_string(c, fc.M, opts).window;
    times = c;
  } else {
    start = lattice::close_window(fc.values, c, lattice::RightClosure::LinearExtrapolation, 0, buffer);
    times = c;
  }

  Outcome o;
  json& r = o.results;
  if (fc.mode == "matrix") {
    const auto traj = flow::integrate_matrix_flow(flow::LaxMatrix::from_window(start), sched, fc.snapshot_every);
    const auto& first = traj.snapshots.front();
    const auto& last = traj.snapshots.back();
    CsvWriter csv(dir / "flow.csv", {"n", "b_start", "b_end", "B_end"});
    for (int n = 1; n <= first.size(); ++n) {
      const double b = last.b()[n - 1];
      csv << n << first.b()[n - 1] << b << b * b;
      csv.end_row();
    }
    o.files.push_back("flow.csv");
    r["mode"] = "matrix";
    r["steps"] = traj.steps;
    r["snapshots"] = traj.snapshots.size();
    r["spectrum_drift"] = flow::spectrum_drift(traj.snapshots);
    return o;
  }

  flow::FlowOptions fo;
  fo.closure = cfg.solver.closure == "clamp" ? lattice::RightClosure::ClampToContinuum
                                             : lattice::RightClosure::LinearExtrapolation;
  fo.growth_limit = fc.growth_limit;
  const auto res = flow::integrate_flow(start, times, sched, fo);
  const int reported = res.window.reported_size();

  std::optional<lattice::StringSolution> reference;
  if (fc.compare_string && !res.times.is_zero() && res.times.convergent()) {
    lattice::SolveOptions opts = solve_options(cfg);
    opts.buffer_width = buffer;
    reference = lattice::solve_string(res.times, fc.M, opts);
  }
  const auto residual = lattice::string_residual(res.window, res.times);
  double max_residual = 0.0, max_dev = 0.0;
  {
    CsvWriter csv(dir / "flow.csv", {"n", "x", "B_start", "B_end", "B_string", "deviation", "string_residual"});
    for (int n = 1; n <= reported; ++n) {
      std::optional<double> ref, dev;
      if (reference) {
        ref = reference->window(n);
        dev = std::abs(res.window(n) - *ref) / std::max(1.0, std::abs(*ref));
        max_dev = std::max(max_dev, *dev);
      }
      max_residual = std::max(max_residual, std::abs(residual[n - 1]));
      csv << n << static_cast<double>(n) / cfg.N << start(n) << res.window(n) << ref << dev << residual[n - 1];
      csv.end_row();
    }
  }
  o.files.push_back("flow.csv");
  r["mode"] = "lattice";
  r["steps"] = res.steps;
  r["min_positivity_margin"] = res.min_margin;
  r["final_times_raw"] = json::object();
  for (const auto& [j, v] : res.times.raw_map()) r["final_times_raw"][coupling_name(false, j)] = v;
  r["reported_sites"] = reported;
  r["max_string_residual"] = max_residual;
  r["max_relative_deviation_from_string_solve"] = reference ? json(max_dev) : json(nullptr);
  return o;
}

Outcome run_oracle(const RunConfig& cfg, const fs::path& dir) {
  const OracleConfig& oc = cfg.oracle;
  const oracle::WeightSpec w(coupling_vector(cfg));
  const auto st = oracle::stieltjes_recurrence(w, oc.n_max);
  std::optional<oracle::OracleResult> hk;
  std::string hankel_note;
  const int hn = std::min(oc.hankel_max, oc.n_max);
  if (hn >= 1) {
    try {
      hk = oracle::hankel_recurrence(w, hn);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Precision && e.kind() != ErrorKind::Quadrature) throw;
      hankel_note = e.what();
    }
  }
  int disagreements = 0;
  double worst = 0.0;
  {
    CsvWriter csv(dir / "oracle.csv", {"n", "B_stieltjes", "B_hankel", "relative_difference", "disagree", "tau",
                                       "log_tau", "log_tau_gaussian"});
    for (int n = 1; n <= oc.n_max; ++n) {
      const double b = st.B[n - 1];
      std::optional<double> bh, diff;
      std::string flag;
      if (hk && n <= static_cast<int>(hk->B.size())) {
        bh = hk->B[n - 1];
        diff = std::abs(*bh - b) / std::abs(b);
        worst = std::max(worst, *diff);
        const bool bad = *diff > oc.agreement_tol;
        disagreements += bad;
        flag = bad ? "1" : "0";
      }
      std::optional<double> gauss;
      if (w.gaussian()) gauss = oracle::gaussian_log_tau(n);
      csv << n << b << bh << diff << flag << st.tau[n] << st.log_tau[n] << gauss;
      csv.end_row();
    }
  }
  {
    CsvWriter csv(dir / "moments.csv", {"k", "m_k"});
    for (std::size_t k = 0; k < st.moments.size(); ++k) {
      csv << static_cast<long>(k) << st.moments[k];
      csv.end_row();
    }
  }
  Outcome o;
  o.files = {"oracle.csv", "moments.csv"};
  json& r = o.results;
  r["n_max"] = oc.n_max;
  r["quadrature_change"] = st.quadrature_change;
  r["panels"] = st.panels;
  r["hankel_rows"] = hk ? static_cast<int>(hk->B.size()) : 0;
  if (!hankel_note.empty()) r["hankel_failure"] = hankel_note;
  r["max_route_difference"] = worst;
  r["route_disagreements"] = disagreements;
  r["agreement_tol"] = oc.agreement_tol;
  return o;
}

const char* phase_label(continuum::Phase p) {
  switch (p) {
    case continuum::Phase::SingleMinimum: return "single-minimum";
    case continuum::Phase::Coexistence: return "coexistence";
    case continuum::Phase::Critical: return "critical";
  }
  return "";
}

double grid_value(const std::array<double, 2>& r, int i, int n) { return r[0] + (r[1] - r[0]) * i / (n - 1); }

Outcome run_phase(const RunConfig& cfg, const fs::path& dir) {
  const CouplingVector c = coupling_vector(cfg);
  if (c.order() > 3) throw Error(ErrorKind::InvalidInput, "phase diagrams need couplings up to T6");
  const double T2 = c.T(1), T4 = c.T(2);
  const PhaseConfig& pc = cfg.phase;
  std::map<std::string, int> counts;
  {
    CsvWriter csv(dir / "phase.csv", {"x", "T6", "delta", "phase", "real_roots", "accessible_roots"});
    for (int i = 0; i < pc.nT6; ++i) {
      const double T6 = grid_value(pc.T6_range, i, pc.nT6);
      const CouplingVector ci = CouplingVector::rescaled({{1, T2}, {2, T4}, {3, T6}}, cfg.N);
      for (int k = 0; k < pc.nx; ++k) {
        const double x = grid_value(pc.x_range, k, pc.nx);
        const auto p = continuum::classify(x, ci);
        ++counts[phase_label(p.phase)];
        csv << x << T6 << p.delta << std::string(phase_label(p.phase)) << p.real_roots << p.accessible_roots;
        csv.end_row();
      }
    }
  }
  continuum::CriticalSetGrid grid;
  grid.T2 = T2;
  grid.T4 = T4;
  grid.x_range = pc.x_range;
  grid.T6_range = pc.T6_range;
  grid.nx = pc.nx;
  grid.nT6 = pc.nT6;
  grid.threads = cfg.threads;
  const auto lines = continuum::critical_set(grid);
  std::size_t points = 0;
  {
    CsvWriter csv(dir / "critical_set.csv", {"polyline", "x", "T6"});
    for (std::size_t l = 0; l < lines.size(); ++l)
      for (const auto& p : lines[l].points) {
        csv << static_cast<long>(l) << p[0] << p[1];
        csv.end_row();
        ++points;
      }
  }
  Outcome o;
  o.files = {"phase.csv", "critical_set.csv"};
  json& r = o.results;
  r["grid"] = {{"nx", pc.nx}, {"nT6", pc.nT6}};
  r["phase_counts"] = counts;
  r["polylines"] = lines.size();
  r["contour_points"] = points;
  // Distance from the contour to the critical points of the configured T6,
  // measured in grid cells.
  if (c.order() == 3) {
    const double hx = (pc.x_range[1] - pc.x_range[0]) / (pc.nx - 1);
    const double hT = (pc.T6_range[1] - pc.T6_range[0]) / (pc.nT6 - 1);
    json marks = json::array();
    for (double x : continuum::discriminant_roots_in_x(T2, T4, c.T(3))) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& line : lines)
        for (std::size_t i = 0; i < line.points.size(); ++i) {
          const auto& a = line.points[i];
          const auto& b = line.points[i + 1 < line.points.size() ? i + 1 : i];
          const double ax = (a[0] - x) / hx, ay = (a[1] - c.T(3)) / hT;
          const double dx = (b[0] - a[0]) / hx, dy = (b[1] - a[1]) / hT;
          const double len = dx * dx + dy * dy;
          const double s = len > 0.0 ? std::clamp(-(ax * dx + ay * dy) / len, 0.0, 1.0) : 0.0;
          best = std::min(best, std::hypot(ax + s * dx, ay + s * dy));
        }
      marks.push_back({{"x", x}, {"T6", c.T(3)}, {"contour_distance_cells", nullable(best)}});
    }
    r["critical_points"] = marks;
  }
  return o;
}

Outcome run_free_energy(const RunConfig& cfg, const fs::path& dir) {
  const CouplingVector c = coupling_vector(cfg);
  const FreeEnergyConfig& fe = cfg.free_energy;
  std::vector<CouplingVector> variants;
  std::vector<std::string> header{"u"};
  if (fe.T6_values.empty()) {
    variants.push_back(c);
    header.push_back("F_1");
  }
  for (std::size_t i = 0; i < fe.T6_values.size(); ++i) {
    variants.push_back(CouplingVector::rescaled({{1, c.T(1)}, {2, c.T(2)}, {3, fe.T6_values[i]}}, cfg.N));
    header.push_back("F_" + std::to_string(i + 1));
  }
  {
    CsvWriter csv(dir / "free_energy.csv", header);
    for (int i = 0; i < fe.nu; ++i) {
      const double u = grid_value(fe.u_range, i, fe.nu);
      csv << u;
      for (const auto& v : variants) csv << continuum::free_energy(u, fe.x, v);
      csv.end_row();
    }
  }
  Outcome o;
  o.files = {"free_energy.csv"};
  json curves = json::array();
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const auto rs = continuum::solve_eos(continuum::eos_coefficients(variants[i], fe.x));
    json pts = json::array();
    for (const auto& root : rs.roots)
      pts.push_back({{"u", root.u},
                     {"F", continuum::free_energy(root.u, fe.x, variants[i])},
                     {"kind", root.kind == continuum::RootKind::LocalMin   ? "min"
                              : root.kind == continuum::RootKind::LocalMax ? "max"
                                                                           : "inflection"},
                     {"accessible", root.accessible}});
    curves.push_back({{"column", header[i + 1]},
                      {"T6", variants[i].T(3)},
                      {"local_minima", rs.accessible_minima()},
                      {"stationary_points", pts}});
  }
  o.results["x"] = fe.x;
  o.results["curves"] = curves;
  return o;
}

Outcome run_branches(const RunConfig& cfg, const fs::path& dir) {
  const CouplingVector c = coupling_vector(cfg);
  const BranchConfig& bc = cfg.branches;
  std::vector<double> xs;
  {
    CsvWriter csv(dir / "branches.csv", {"x", "u_branch1", "u_branch2", "u_branch3", "accessible_roots"});
    for (int i = 0; i < bc.nx; ++i) {
      const double x = grid_value(bc.x_range, i, bc.nx);
      xs.push_back(x);
      const auto rs = continuum::solve_eos(continuum::eos_coefficients(c, x));
      std::vector<double> roots;
      for (const auto& r : rs.roots) roots.push_back(r.u);
      csv << x;
      for (const auto& r : first_three(roots)) csv << r;
      csv << rs.accessible_count();
      csv.end_row();
    }
  }
  Outcome o;
  o.files = {"branches.csv"};
  o.results["roots"] = root_census(c, xs);
  o.results["discriminant"] = discriminant_info(c);
  return o;
}

struct PresetDef {
  std::string task;
  std::map<int, double> T;
  std::function<void(RunConfig&)> extra;
};

const std::map<std::string, PresetDef>& presets() {
  static const std::map<std::string, PresetDef> table = {
      {"fig1a", {"solve", {{1, 0.0}, {2, 0.1}, {3, -0.01}}, nullptr}},
      {"fig1b", {"solve", {{1, 0.0}, {2, 0.1}, {3, -0.008}}, nullptr}},
      {"fig2a", {"phase", {{1, 0.0}, {2, 0.1}, {3, -0.008}}, nullptr}},
      {"fig2b",
       {"free_energy", {{1, 0.0}, {2, 0.1}}, [](RunConfig& c) {
          c.free_energy.x = 0.22;
          c.free_energy.T6_values = {-0.0067, -0.0051};
        }}},
      {"fig3a", {"branches", {{1, 1.0}, {2, -0.25}, {3, -0.25}}, nullptr}},
      {"fig3b", {"solve", {{1, 1.0}, {2, -0.25}, {3, -0.25}}, nullptr}},
      {"fig3c", {"branches", {{1, 1.0}, {2, 0.25}, {3, -0.25}}, nullptr}},
      {"fig3d", {"solve", {{1, 1.0}, {2, 0.25}, {3, -0.25}}, nullptr}},
      {"fig4a", {"branches", {{1, 0.25}, {2, -1.0}, {3, -0.5}}, nullptr}},
      {"fig4b", {"solve", {{1, 0.25}, {2, -1.0}, {3, -0.5}}, nullptr}},
  };
  return table;
}

Outcome dispatch(const RunConfig& cfg, const fs::path& dir) {
  if (cfg.command == "solve") return run_solve(cfg, dir, "solve");
  if (cfg.command == "flow") return run_flow(cfg, dir);
  if (cfg.command == "oracle") return run_oracle(cfg, dir);
  if (cfg.command == "phase") return run_phase(cfg, dir);
  const std::string stem = cfg.preset.value_or("reproduce");
  if (cfg.task == "solve") return run_solve(cfg, dir, stem);
  if (cfg.task == "phase") return run_phase(cfg, dir);
  if (cfg.task == "free_energy") return run_free_energy(cfg, dir);
  if (cfg.task == "branches") return run_branches(cfg, dir);
  throw Error(ErrorKind::Config, "reproduce needs a preset");
}

json error_json(const std::exception& e) {
  json j;
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    j["kind"] = std::string(to_string(err->kind()));
    j["exit_code"] = exit_code(err->kind());
    if (const auto* b = dynamic_cast<const BlowUpError*>(&e)) j["time"] = b->time();
    if (const auto* n = dynamic_cast<const NoConvergenceError*>(&e)) j["last_residual"] = nullable(n->last_residual());
  } else {
    j["kind"] = "internal";
    j["exit_code"] = 3;
  }
  j["message"] = e.what();
  return json{{"error", j}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Config, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, v] : presets()) n.push_back(k);
    return n;
  }();
  return names;
}

void apply_preset(RunConfig& cfg, const std::string& name) {
  const auto it = presets().find(name);
  if (it == presets().end()) throw Error(ErrorKind::Config, "unknown preset '" + name + "'");
  cfg.preset = name;
  cfg.task = it->second.task;
  cfg.couplings.rescaled = true;
  cfg.couplings.values = it->second.T;
  if (it->second.extra) it->second.extra(cfg);
}

void merge_config(RunConfig& cfg, const json& j) {
  allow_keys(j, "config",
             {"command", "task", "preset", "couplings", "scale_N", "solver", "oscillation", "flow", "oracle", "phase",
              "free_energy", "branches", "output_dir", "threads", "seed"});
  if (j.contains("command"))
    cfg.command = text(j["command"], "config.command", {"solve", "flow", "oracle", "phase", "reproduce"});
  if (j.contains("preset")) apply_preset(cfg, text(j["preset"], "config.preset"));
  if (j.contains("task"))
    cfg.task = text(j["task"], "config.task", {"solve", "phase", "free_energy", "branches"});
  if (j.contains("couplings")) cfg.couplings = parse_couplings(j["couplings"], "config.couplings");
  if (j.contains("scale_N")) cfg.N = integer(j["scale_N"], "config.scale_N", 1, 1000000);
  if (j.contains("output_dir")) cfg.output_dir = text(j["output_dir"], "config.output_dir");
  if (j.contains("threads")) cfg.threads = integer(j["threads"], "config.threads", 1, 1024);
  if (j.contains("seed")) cfg.seed = integer(j["seed"], "config.seed", 0);

  if (j.contains("solver")) {
    const json& s = j["solver"];
    const std::string p = "config.solver";
    allow_keys(s, p,
               {"M", "x_max", "continuation_steps", "max_continuation_steps", "newton_tol", "max_iterations",
                "max_halvings", "closure", "buffer_width"});
    SolverConfig& o = cfg.solver;
    if (s.contains("M")) o.M = integer(s["M"], p + ".M", 0, 10000000);
    if (s.contains("x_max")) o.x_max = number(s["x_max"], p + ".x_max");
    if (s.contains("continuation_steps")) o.continuation_steps = integer(s["continuation_steps"], p + ".continuation_steps", 1);
    if (s.contains("max_continuation_steps"))
      o.max_continuation_steps = integer(s["max_continuation_steps"], p + ".max_continuation_steps", 1);
    if (s.contains("newton_tol")) o.newton_tol = number(s["newton_tol"], p + ".newton_tol");
    if (s.contains("max_iterations")) o.max_iterations = integer(s["max_iterations"], p + ".max_iterations", 1);
    if (s.contains("max_halvings")) o.max_halvings = integer(s["max_halvings"], p + ".max_halvings", 0, 60);
    if (s.contains("closure")) o.closure = text(s["closure"], p + ".closure", {"clamp", "extrapolate"});
    if (s.contains("buffer_width")) o.buffer_width = integer(s["buffer_width"], p + ".buffer_width", -1);
    if (!(o.x_max > 0.0)) config_error(p + ".x_max", "must be positive");
    if (!(o.newton_tol > 0.0)) config_error(p + ".newton_tol", "must be positive");
    if (o.max_continuation_steps < o.continuation_steps)
      config_error(p + ".max_continuation_steps", "must be at least continuation_steps");
  }
  if (j.contains("oscillation")) {
    const json& s = j["oscillation"];
    allow_keys(s, "config.oscillation", {"window", "amp_tol"});
    if (s.contains("window")) cfg.oscillation.window = integer(s["window"], "config.oscillation.window", 3);
    if (s.contains("amp_tol")) cfg.oscillation.amp_tol = number(s["amp_tol"], "config.oscillation.amp_tol");
    if (cfg.oscillation.amp_tol < 0.0) config_error("config.oscillation.amp_tol", "must be non-negative");
  }
  if (j.contains("flow")) {
    const json& s = j["flow"];
    const std::string p = "config.flow";
    allow_keys(s, p, {"mode", "start", "M", "values", "legs", "compare_string", "snapshot_every", "growth_limit"});
    FlowConfig& f = cfg.flow;
    if (s.contains("mode")) f.mode = text(s["mode"], p + ".mode", {"lattice", "matrix"});
    if (s.contains("start")) f.start = text(s["start"], p + ".start", {"gaussian", "string", "values"});
    if (s.contains("M")) f.M = integer(s["M"], p + ".M", 1, 10000000);
    if (s.contains("values")) {
      if (!s["values"].is_array()) config_error(p + ".values", "expected an array");
      f.values.clear();
      for (std::size_t i = 0; i < s["values"].size(); ++i)
        f.values.push_back(number(s["values"][i], p + ".values[" + std::to_string(i) + "]"));
    }
    if (s.contains("legs")) {
      if (!s["legs"].is_array()) config_error(p + ".legs", "expected an array");
      f.legs.clear();
      for (std::size_t i = 0; i < s["legs"].size(); ++i) {
        const json& l = s["legs"][i];
        const std::string lp = p + ".legs[" + std::to_string(i) + "]";
        allow_keys(l, lp, {"coupling", "target", "h"});
        if (!l.contains("coupling") || !l.contains("target")) config_error(lp, "needs coupling and target");
        LegSpec leg;
        const auto [rescaled, k] = coupling_key(text(l["coupling"], lp + ".coupling"), lp + ".coupling");
        leg.rescaled = rescaled;
        leg.k = k;
        leg.target = number(l["target"], lp + ".target");
        if (l.contains("h")) leg.h = number(l["h"], lp + ".h");
        if (leg.h < 0.0) config_error(lp + ".h", "must be non-negative (0 selects the default)");
        f.legs.push_back(leg);
      }
    }
    if (s.contains("compare_string")) {
      if (!s["compare_string"].is_boolean()) config_error(p + ".compare_string", "expected a boolean");
      f.compare_string = s["compare_string"].get<bool>();
    }
    if (s.contains("snapshot_every")) f.snapshot_every = integer(s["snapshot_every"], p + ".snapshot_every", 1);
    if (s.contains("growth_limit")) f.growth_limit = number(s["growth_limit"], p + ".growth_limit");
    if (f.start == "values") {
      if (f.values.empty()) config_error(p + ".values", "start = values needs B_1..B_M");
      f.M = static_cast<int>(f.values.size());
    }
    if (f.mode == "matrix" && f.M > flow::kMatrixModeMaxSize) config_error(p + ".M", "matrix mode allows M <= 200");
  }
  if (j.contains("oracle")) {
    const json& s = j["oracle"];
    allow_keys(s, "config.oracle", {"n_max", "hankel_max", "agreement_tol"});
    if (s.contains("n_max")) cfg.oracle.n_max = integer(s["n_max"], "config.oracle.n_max", 1, 400);
    if (s.contains("hankel_max")) cfg.oracle.hankel_max = integer(s["hankel_max"], "config.oracle.hankel_max", 0, 30);
    if (s.contains("agreement_tol")) cfg.oracle.agreement_tol = number(s["agreement_tol"], "config.oracle.agreement_tol");
  }
  if (j.contains("phase")) {
    const json& s = j["phase"];
    allow_keys(s, "config.phase", {"x_range", "T6_range", "nx", "nT6"});
    if (s.contains("x_range")) cfg.phase.x_range = range(s["x_range"], "config.phase.x_range");
    if (s.contains("T6_range")) cfg.phase.T6_range = range(s["T6_range"], "config.phase.T6_range");
    if (s.contains("nx")) cfg.phase.nx = integer(s["nx"], "config.phase.nx", 2, 10000);
    if (s.contains("nT6")) cfg.phase.nT6 = integer(s["nT6"], "config.phase.nT6", 2, 10000);
  }
  if (j.contains("free_energy")) {
    const json& s = j["free_energy"];
    allow_keys(s, "config.free_energy", {"x", "T6_values", "u_range", "nu"});
    if (s.contains("x")) cfg.free_energy.x = number(s["x"], "config.free_energy.x");
    if (s.contains("T6_values")) {
      if (!s["T6_values"].is_array()) config_error("config.free_energy.T6_values", "expected an array");
      cfg.free_energy.T6_values.clear();
      for (const auto& v : s["T6_values"]) cfg.free_energy.T6_values.push_back(number(v, "config.free_energy.T6_values"));
    }
    if (s.contains("u_range")) cfg.free_energy.u_range = range(s["u_range"], "config.free_energy.u_range");
    if (s.contains("nu")) cfg.free_energy.nu = integer(s["nu"], "config.free_energy.nu", 2, 1000000);
  }
  if (j.contains("branches")) {
    const json& s = j["branches"];
    allow_keys(s, "config.branches", {"x_range", "nx"});
    if (s.contains("x_range")) cfg.branches.x_range = range(s["x_range"], "config.branches.x_range");
    if (s.contains("nx")) cfg.branches.nx = integer(s["nx"], "config.branches.nx", 2, 1000000);
  }
}

json to_json(const RunConfig& cfg) {
  json j;
  j["command"] = cfg.command;
  if (cfg.preset) j["preset"] = *cfg.preset;
  if (!cfg.task.empty()) j["task"] = cfg.task;
  j["couplings"] = couplings_json(cfg.couplings);
  j["scale_N"] = cfg.N;
  const SolverConfig& s = cfg.solver;
  j["solver"] = {{"M", s.M},
                 {"x_max", s.x_max},
                 {"continuation_steps", s.continuation_steps},
                 {"max_continuation_steps", s.max_continuation_steps},
                 {"newton_tol", s.newton_tol},
                 {"max_iterations", s.max_iterations},
                 {"max_halvings", s.max_halvings},
                 {"closure", s.closure},
                 {"buffer_width", s.buffer_width}};
  j["oscillation"] = {{"window", cfg.oscillation.window}, {"amp_tol", cfg.oscillation.amp_tol}};
  json legs = json::array();
  for (const auto& l : cfg.flow.legs)
    legs.push_back({{"coupling", coupling_name(l.rescaled, l.k)}, {"target", l.target}, {"h", l.h}});
  j["flow"] = {{"mode", cfg.flow.mode},           {"start", cfg.flow.start},
               {"M", cfg.flow.M},                 {"values", cfg.flow.values},
               {"legs", legs},                    {"compare_string", cfg.flow.compare_string},
               {"snapshot_every", cfg.flow.snapshot_every}, {"growth_limit", cfg.flow.growth_limit}};
  j["oracle"] = {{"n_max", cfg.oracle.n_max}, {"hankel_max", cfg.oracle.hankel_max},
                 {"agreement_tol", cfg.oracle.agreement_tol}};
  j["phase"] = {{"x_range", cfg.phase.x_range}, {"T6_range", cfg.phase.T6_range}, {"nx", cfg.phase.nx},
                {"nT6", cfg.phase.nT6}};
  j["free_energy"] = {{"x", cfg.free_energy.x}, {"T6_values", cfg.free_energy.T6_values},
                      {"u_range", cfg.free_energy.u_range}, {"nu", cfg.free_energy.nu}};
  j["branches"] = {{"x_range", cfg.branches.x_range}, {"nx", cfg.branches.nx}};
  j["output_dir"] = cfg.output_dir;
  j["threads"] = cfg.threads;
  j["seed"] = cfg.seed;
  return j;
}

CouplingVector coupling_vector(const RunConfig& cfg) {
  return cfg.couplings.rescaled ? CouplingVector::rescaled(cfg.couplings.values, cfg.N)
                                : CouplingVector::raw(cfg.couplings.values, cfg.N);
}

lattice::SolveOptions solve_options(const RunConfig& cfg) {
  lattice::SolveOptions o;
  o.continuation_steps = cfg.solver.continuation_steps;
  o.max_continuation_steps = cfg.solver.max_continuation_steps;
  o.newton_tol = cfg.solver.newton_tol;
  o.max_iterations = cfg.solver.max_iterations;
  o.max_halvings = cfg.solver.max_halvings;
  o.closure = cfg.solver.closure == "clamp" ? lattice::RightClosure::ClampToContinuum
                                            : lattice::RightClosure::LinearExtrapolation;
  o.buffer_width = cfg.solver.buffer_width;
  return o;
}

int window_for_range(double x_max, int N, int q) {
  const int need = static_cast<int>(std::ceil(x_max * N - 1e-9));
  int M = std::max(need, 4 * std::max(q, 1));
  while (M - lattice::default_buffer_width(M, std::max(q, 1)) < need) ++M;
  return M;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lattice string equation, hierarchy flows and continuum phase analysis", "shocklab"};
  app.require_subcommand(1);
  std::string config_path, out_dir, preset;
  int scale_N = 0, seed = -1, threads = 0;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_dir, "output directory (SHOCKLAB_OUT overrides)");
  app.add_option("--scale-N", scale_N, "scale N")->check(CLI::PositiveNumber);
  app.add_option("--preset", preset, "named figure preset");
  app.add_option("--seed", seed, "reserved")->check(CLI::NonNegativeNumber);
  app.add_option("--threads", threads, "worker threads for grid sweeps")->check(CLI::PositiveNumber);
  for (const char* name : {"solve", "flow", "oracle", "phase"}) app.add_subcommand(name)->fallthrough();
  auto* reproduce = app.add_subcommand("reproduce", "figure presets")->fallthrough();
  std::string positional;
  reproduce->add_option("name", positional, "preset name");

  fs::path dir;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
      out << app.help();
      return 0;
    } catch (const CLI::ParseError& e) {
      throw Error(ErrorKind::Config, e.what());
    }
    RunConfig cfg;
    cfg.command = app.get_subcommands().front()->get_name();
    if (!positional.empty()) {
      if (!preset.empty() && preset != positional) throw Error(ErrorKind::Config, "conflicting preset names");
      preset = positional;
    }
    if (!preset.empty()) apply_preset(cfg, preset);
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw Error(ErrorKind::Config, "cannot read config " + config_path);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
      }
      const std::string command = cfg.command;
      merge_config(cfg, j);
      if (cfg.command != command)
        throw Error(ErrorKind::Config, "config was written for '" + cfg.command + "', not '" + command + "'");
    }
    if (scale_N > 0) cfg.N = scale_N;
    if (seed >= 0) cfg.seed = seed;
    if (threads > 0) cfg.threads = threads;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (const char* env = std::getenv("SHOCKLAB_OUT"); env && *env) cfg.output_dir = env;
    if (cfg.command == "reproduce" && !cfg.preset) throw Error(ErrorKind::Config, "reproduce needs a preset name");
    if (cfg.command != "reproduce") cfg.task.clear();

    dir = cfg.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Config, "cannot create output directory " + dir.string());

    const Outcome o = dispatch(cfg, dir);
    json summary;
    summary["command"] = cfg.command;
    summary["config"] = to_json(cfg);
    summary["results"] = o.results;
    summary["files"] = o.files;
    summary["provenance"] = {{"tool", "shocklab"},
                             {"version", kToolVersion},
                             {"timestamp", now_utc()},
                             {"preset", cfg.preset ? json(*cfg.preset) : json(nullptr)},
                             {"arguments", args}};
    write_json(dir / "summary.json", summary);
    write_json(dir / "config.echo.json", summary["config"]);
    out << dir.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    const json j = error_json(e);
    err << j.dump() << '\n';
    if (!dir.empty()) {
      try {
        write_json(dir / "error.json", j);
      } catch (...) {
      }
    }
    return j["error"]["exit_code"].get<int>();
  }
}

}  // namespace shocklab::cli
