// Acceptance run: one PASS/FAIL line per criterion, measured values alongside.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "shocklab/cli.hpp"
#include "shocklab/continuum.hpp"
#include "shocklab/flow.hpp"
#include "shocklab/lattice.hpp"
#include "shocklab/oracle.hpp"
#include "shocklab/shock.hpp"

namespace fs = std::filesystem;
using namespace shocklab;
using lattice::LatticeWindow;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome critical_point() {
  const auto xs = continuum::discriminant_roots_in_x(0.0, 0.1, -0.008);
  double dx = INFINITY;
  for (double x : xs) dx = std::min(dx, std::abs(x - 5.0 / 18));
  const auto c = CouplingVector::rescaled({{1, 0.0}, {2, 0.1}, {3, -0.008}}, 200);
  const auto rs = continuum::solve_eos(continuum::eos_coefficients(c, 5.0 / 18));
  double du = INFINITY;
  int mult = 0;
  for (const auto& r : rs.roots)
    if (std::abs(r.u - 5.0 / 6) < du) {
      du = std::abs(r.u - 5.0 / 6);
      mult = r.multiplicity;
    }
  return {dx < 1e-9 && du < 1e-9 && mult >= 2,
          fmt("|x-5/18| = %.2e, |u-5/6| = %.2e, multiplicity %d", dx, du, mult)};
}

Outcome gaussian_exactness() {
  const auto sol = lattice::solve_string(CouplingVector::raw({}, 500), 500);
  double dev = 0.0;
  for (int n = 1; n <= 500; ++n) dev = std::max(dev, std::abs(sol.window(n) - n));
  const auto h = oracle::hankel_recurrence(oracle::WeightSpec(CouplingVector::raw({}, 1)), 15);
  double tau = 0.0;
  for (int n = 1; n <= 15; ++n) tau = std::max(tau, std::abs(std::expm1(h.log_tau[n] - oracle::gaussian_log_tau(n))));
  return {sol.residual < 1e-13 && dev < 1e-13 && tau < 1e-10,
          fmt("residual %.2e, max|B_n - n| %.2e, tau relative error %.2e (n <= 15)", sol.residual, dev, tau)};
}

Outcome triangle() {
  const int N = 50, M = 100;
  const auto c = CouplingVector::raw({{2, -0.01}}, N);
  const auto sol = lattice::solve_string(c, M);
  const auto fr = flow::integrate_flow(LatticeWindow::gaussian(M), CouplingVector::raw({}, N), {{2, -0.01, 0.0}});
  const auto orc = oracle::stieltjes_recurrence(oracle::WeightSpec(c), 20);
  double sf = 0.0, so = 0.0, fo = 0.0;
  for (int n = 1; n <= 20; ++n) {
    const double a = sol.window(n), b = fr.window(n), o = orc.B[n - 1];
    sf = std::max(sf, std::abs(a - b) / std::abs(a));
    so = std::max(so, std::abs(a - o) / std::abs(o));
    fo = std::max(fo, std::abs(b - o) / std::abs(o));
  }
  return {std::max({sf, so, fo}) < 1e-6,
          fmt("string/flow %.2e, string/oracle %.2e, flow/oracle %.2e", sf, so, fo)};
}

Outcome conjecture() {
  // Gaussian start on a window of 100 sites at N = 100; the last 20 sites
  // are a discard buffer against the right edge.
  const int N = 100, M = 100, kept = 80;
  std::string detail;
  bool pass = true;
  for (int k = 1; k <= 6; ++k) {
    const double t = -0.05 / (2 * k * continuum::chi(k)) / std::pow(N, k - 1);
    const auto fr = flow::integrate_flow(LatticeWindow::gaussian(M), CouplingVector::raw({}, N), {{k, t, 0.0}});
    const auto R = lattice::string_residual(fr.window, CouplingVector::raw({{k, t}}, N));
    double r = 0.0;
    for (int n = 1; n <= kept; ++n) r = std::max(r, std::abs(R[n - 1]));
    if (k <= 5) pass = pass && r < 1e-6;
    detail += fmt("k=%d %.1e%s, ", k, r, k == 6 ? " (probe)" : "");
  }
  const double hs[3] = {4e-5, 2e-5, 1e-5};
  std::vector<double> ends[3];
  for (int i = 0; i < 3; ++i) {
    const auto r = flow::integrate_flow(LatticeWindow::gaussian(40), CouplingVector::raw({}, 50), {{2, -0.01, hs[i]}});
    ends[i].assign(r.window.values().begin(), r.window.values().end());
  }
  double e1 = 0.0, e2 = 0.0;
  for (std::size_t n = 0; n < ends[0].size(); ++n) {
    e1 = std::max(e1, std::abs(ends[0][n] - ends[1][n]));
    e2 = std::max(e2, std::abs(ends[1][n] - ends[2][n]));
  }
  const double order = std::log2(e1 / e2);
  return {pass && order >= 3.5, detail + fmt("order %.2f", order)};
}

Outcome isospectrality() {
  std::vector<double> b(100);
  for (int n = 1; n <= 100; ++n) b[n - 1] = 1.0 + 0.1 * std::exp(-(n - 50.0) * (n - 50.0) / 20.0);
  const auto tr = flow::integrate_matrix_flow(flow::LaxMatrix(b), {{1, 1.0, 1e-3}}, 10);
  const double drift = flow::spectrum_drift(tr.snapshots);
  return {drift < 1e-8, fmt("drift %.2e over %ld steps", drift, tr.steps)};
}

Outcome commutativity() {
  const int N = 100, M = 100, kept = 80;
  const double t4 = -0.002 / N, t6 = -0.0005 / (N * N);
  const auto z = CouplingVector::raw({}, N);
  const auto a = flow::integrate_flow(LatticeWindow::gaussian(M), z, {{2, t4, 0.0}, {3, t6, 0.0}});
  const auto b = flow::integrate_flow(LatticeWindow::gaussian(M), z, {{3, t6, 0.0}, {2, t4, 0.0}});
  double d = 0.0;
  for (int n = 1; n <= kept; ++n) d = std::max(d, std::abs(a.window(n) - b.window(n)));
  return {d < 5e-8, fmt("max-norm difference %.2e (n <= %d)", d, kept)};
}

json reproduce(const std::string& preset, const fs::path& root) {
  const fs::path dir = root / preset;
  std::ostringstream out, err;
  if (cli::run({"reproduce", preset, "--out", dir.string()}, out, err) != 0)
    throw std::runtime_error(preset + ": " + err.str());
  std::ifstream in(dir / "summary.json");
  return json::parse(in)["results"];
}

Outcome phenomenology() {
  const fs::path root = fs::temp_directory_path() / ("shocklab_acceptance_" + std::to_string(::getpid()));
  bool pass = true;
  std::string detail;
  for (const char* p : {"fig1a", "fig4b"}) {
    const bool flag = reproduce(p, root)["oscillation"]["flag"];
    pass = pass && !flag;
    detail += fmt("%s flag %s; ", p, flag ? "true" : "false");
  }
  {
    const auto r = reproduce("fig1b", root);
    const auto& o = r["oscillation"];
    const bool flag = o["flag"];
    // Delta <= 0 along fig1b and touches zero only at x = 5/18, so the
    // window is that point widened by one detection window.
    const double onset = flag ? o["onset"].get<double>() : NAN;
    const double reach = o["window"].get<double>() / 200.0;
    const bool inside = flag && std::abs(onset - 5.0 / 18) <= reach;
    pass = pass && inside;
    detail += fmt("fig1b flag %s x* %.4f (|x*-5/18| <= %.3f); ", flag ? "true" : "false", onset, reach);
  }
  for (const char* p : {"fig3b", "fig3d"}) {
    const auto r = reproduce(p, root);
    const auto& o = r["oscillation"];
    const bool flag = o["flag"];
    const auto& range = r["roots"]["multivalued_x_range"];
    const double onset = flag ? o["onset"].get<double>() : NAN;
    const bool inside = flag && !range[0].is_null() && onset >= range[0].get<double>() &&
                        onset <= range[1].get<double>();
    const auto& px = r["roots"]["positive_x"];
    const bool one_negative = px["max_negative_minima"] == 1 && px["max_accessible_roots"] == 1 &&
                              px["min_accessible_roots"] == 1;
    pass = pass && inside && one_negative;
    detail += fmt("%s flag %s x* %.4f in [%.3f, %.3f], negative minima %d, negative roots %d; ", p,
                  flag ? "true" : "false", onset, range[0].is_null() ? NAN : range[0].get<double>(),
                  range[1].is_null() ? NAN : range[1].get<double>(), px["max_negative_minima"].get<int>(),
                  px["max_negative_roots"].get<int>());
  }
  fs::remove_all(root);
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

Outcome convergence() {
  const auto c = CouplingVector::rescaled({{1, 0.0}, {2, 0.1}, {3, -0.01}}, 200);
  const auto s = shock::convergence_study(c, {100, 200, 400}, 0.25);
  std::string detail;
  for (const auto& r : s.rows) detail += fmt("N=%d %.2e, ", r.N, r.deviation);
  return {s.strictly_decreasing && s.order >= 1.5, detail + fmt("p %.2f", s.order)};
}

Outcome coherence() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(0.2, 3.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> B(16);
    for (auto& v : B) v = d(rng);
    const LatticeWindow w(B, lattice::RightClosure::LinearExtrapolation);
    for (int k = 1; k <= 3; ++k)
      for (long n = 1; n <= 16; ++n) {
        const double e = lattice::v_explicit(w, n, k);
        worst = std::max(worst, std::abs(lattice::v_general(w, n, k) - e) / std::abs(e));
      }
  }
  const double c = 1.7;
  const LatticeWindow flat(std::vector<double>(40, c), lattice::RightClosure::LinearExtrapolation);
  const double expect[4] = {1, 3, 10, 35};
  double chi_err = 0.0;
  std::string chis;
  for (int j = 1; j <= 4; ++j) {
    const double chi = lattice::v_general(flat, 20, j) / std::pow(c, j);
    chi_err = std::max(chi_err, std::abs(chi - expect[j - 1]));
    chis += fmt("%s%.12g", j > 1 ? ", " : "", chi);
  }
  return {worst < 1e-12 && chi_err < 1e-12, fmt("max relative gap %.2e, chi = %s", worst, chis.c_str())};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit;  // seconds
    std::function<Outcome()> check;
  };
  const Criterion criteria[] = {
      {"critical point", 1, critical_point},   {"Gaussian exactness", 5, gaussian_exactness},
      {"correctness triangle", 60, triangle},  {"conjecture probe", 300, conjecture},
      {"isospectrality", 60, isospectrality},  {"flow commutativity", 120, commutativity},
      {"figure regimes", 300, phenomenology},  {"convergence", 300, convergence},
      {"V-function coherence", 10, coherence},
  };
  int failed = 0;
  int i = 0;
  for (const auto& c : criteria) {
    ++i;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < c.limit;
    failed += !pass;
    std::printf("criterion %d %s: %s  %s  [%.2fs, limit %.0fs]\n", i, c.name, pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs, c.limit);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
