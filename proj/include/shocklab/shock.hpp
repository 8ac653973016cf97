#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "shocklab/couplings.hpp"
#include "shocklab/lattice.hpp"

namespace shocklab::shock {

struct Extremum {
  std::size_t index = 0;
  double x = 0.0;
  double u = 0.0;
  bool maximum = false;
};

struct OscillationOptions {
  int window = 12;        // samples
  double amp_tol = 1e-3;  // peak-to-trough, u units
};

struct OscillationReport {
  bool flag = false;
  double onset = std::numeric_limits<double>::quiet_NaN();  // x*, NaN when not flagged
  std::vector<Extremum> envelope;                            // alternating max/min
};

// Strict discrete extrema of the samples. A window of `window` samples that
// opens at an extremum is flagged when it holds at least three alternating
// extrema and two neighbours among them differ by more than amp_tol; x* is
// the left end of the first flagged window.
OscillationReport detect_oscillations(const lattice::OrderParameterTrace& samples, const OscillationOptions& opts = {});

struct ComparisonReport {
  std::vector<double> x;
  std::vector<double> u_lattice;
  std::vector<std::vector<double>> roots;          // real roots of the equation of state, ascending
  std::vector<std::optional<double>> u_continuum;  // selected branch
  std::vector<std::optional<double>> deviation;
  std::vector<bool> single_valued;                 // exactly one real root
  double smooth_max_deviation = 0.0;               // over single-valued samples
  double max_deviation = 0.0;
  // Detection runs on the signed deviation u_lattice - u_continuum over the
  // samples that have a branch, so the smooth trend of u does not mask the
  // dispersive wiggles riding on it. Extremum::u holds the signed deviation.
  OscillationReport oscillations;
  std::vector<Extremum> lattice_envelope;  // strict extrema of u_lattice itself
};

// Strict discrete extrema, merged so that maxima and minima alternate.
std::vector<Extremum> envelope(const lattice::OrderParameterTrace& samples);

// Selected branch: the unique accessible root where there is one; in
// multivalued stretches the accessible root continuing the branch from the
// left, or the equilibrium branch where nothing lies to the left.
ComparisonReport compare(const lattice::OrderParameterTrace& trace, const CouplingVector& c,
                         const OscillationOptions& opts = {});

struct ConvergenceRow {
  int N = 0;
  int site = 0;
  double x = 0.0;
  double u_lattice = 0.0;
  double u_continuum = 0.0;
  double deviation = 0.0;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  double order = std::numeric_limits<double>::quiet_NaN();  // p in deviation ~ N^-p
  bool strictly_decreasing = false;
};

// Window length used for a probe at x: the reported range reaches 1.25 x + 0.1.
int window_for_probe(double x, int N, int q);

// Couplings are taken as rescaled T and re-scaled to every N. Each row
// compares the site nearest to x_probe.
ConvergenceStudy convergence_study(const CouplingVector& c, const std::vector<int>& Ns, double x_probe,
                                   const lattice::SolveOptions& opts = {});

}  // namespace shocklab::shock
