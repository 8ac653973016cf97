#include "shocklab/shock.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shocklab/continuum.hpp"
#include "shocklab/errors.hpp"

namespace shocklab::shock {

std::vector<Extremum> envelope(const lattice::OrderParameterTrace& s) {
  std::vector<Extremum> out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const double a = s.u[i - 1], b = s.u[i], c = s.u[i + 1];
    const bool maximum = b > a && b > c;
    const bool minimum = b < a && b < c;
    if (!maximum && !minimum) continue;
    Extremum e{i, s.x[i], b, maximum};
    // A run of equal values between two same-kind extrema hides the opposite
    // one; keep the more extreme of the pair so the list alternates.
    if (!out.empty() && out.back().maximum == maximum) {
      if (maximum ? b > out.back().u : b < out.back().u) out.back() = e;
      continue;
    }
    out.push_back(e);
  }
  return out;
}

OscillationReport detect_oscillations(const lattice::OrderParameterTrace& samples, const OscillationOptions& opts) {
  if (opts.window < 3) throw Error(ErrorKind::InvalidInput, "oscillation window must span at least 3 samples");
  if (!(opts.amp_tol >= 0.0)) throw Error(ErrorKind::InvalidInput, "amplitude tolerance must be non-negative");
  if (samples.x.size() != samples.u.size()) throw Error(ErrorKind::InvalidInput, "trace columns differ in length");
  if (samples.size() < static_cast<std::size_t>(2 * opts.window + 1))
    throw Error(ErrorKind::InvalidInput, "oscillation detection needs at least 2w+1 samples");
  OscillationReport rep;
  rep.envelope = envelope(samples);
  const auto& env = rep.envelope;
  for (std::size_t i = 0; i < env.size(); ++i) {
    const std::size_t end = env[i].index + static_cast<std::size_t>(opts.window);
    std::size_t j = i;
    double amplitude = 0.0;
    while (j + 1 < env.size() && env[j + 1].index < end) {
      amplitude = std::max(amplitude, std::abs(env[j + 1].u - env[j].u));
      ++j;
    }
    if (j - i + 1 >= 3 && amplitude > opts.amp_tol) {
      rep.flag = true;
      rep.onset = env[i].x;
      break;
    }
  }
  return rep;
}

ComparisonReport compare(const lattice::OrderParameterTrace& trace, const CouplingVector& c,
                         const OscillationOptions& opts) {
  ComparisonReport rep;
  rep.x = trace.x;
  rep.u_lattice = trace.u;
  const std::size_t n = trace.size();
  rep.roots.resize(n);
  rep.u_continuum.resize(n);
  rep.deviation.resize(n);
  rep.single_valued.resize(n);
  std::optional<double> previous;
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = trace.x[i];
    const continuum::RootSet roots = continuum::solve_eos(continuum::eos_coefficients(c, x));
    std::vector<double> accessible;
    for (const auto& r : roots.roots) {
      rep.roots[i].push_back(r.u);
      if (r.accessible) accessible.push_back(r.u);
    }
    rep.single_valued[i] = roots.count() == 1;
    std::optional<double> chosen;
    if (accessible.size() == 1) {
      chosen = accessible.front();
    } else if (accessible.size() > 1) {
      if (previous) {
        chosen = *std::min_element(accessible.begin(), accessible.end(), [&](double a, double b) {
          return std::abs(a - *previous) < std::abs(b - *previous);
        });
      } else {
        chosen = continuum::equilibrium_branch(roots, x, c);
        if (!chosen) chosen = accessible.front();
      }
    }
    previous = chosen;
    rep.u_continuum[i] = chosen;
    if (chosen) {
      any = true;
      const double d = std::abs(trace.u[i] - *chosen);
      rep.deviation[i] = d;
      rep.max_deviation = std::max(rep.max_deviation, d);
      if (rep.single_valued[i]) rep.smooth_max_deviation = std::max(rep.smooth_max_deviation, d);
    }
  }
  if (!any) throw Error(ErrorKind::NoBranch, "no accessible continuum branch on the trace grid");
  lattice::OrderParameterTrace signal;
  signal.N = trace.N;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < n; ++i) {
    if (!rep.u_continuum[i]) continue;
    signal.x.push_back(trace.x[i]);
    signal.u.push_back(trace.u[i] - *rep.u_continuum[i]);
    where.push_back(i);
  }
  rep.lattice_envelope = envelope(trace);
  if (signal.size() >= static_cast<std::size_t>(2 * opts.window + 1)) {
    rep.oscillations = detect_oscillations(signal, opts);
    for (auto& e : rep.oscillations.envelope) e.index = where[e.index];
  }
  return rep;
}

int window_for_probe(double x, int N, int q) {
  const double reach = 1.25 * x + 0.1;
  int M = static_cast<int>(std::ceil(reach * N));
  while (M - lattice::default_buffer_width(M, std::max(q, 1)) < static_cast<int>(std::ceil(reach * N))) ++M;
  return std::max(M, 4 * std::max(q, 1));
}

ConvergenceStudy convergence_study(const CouplingVector& c, const std::vector<int>& Ns, double x_probe,
                                   const lattice::SolveOptions& opts) {
  if (Ns.empty()) throw Error(ErrorKind::InvalidInput, "convergence study needs at least one N");
  if (!(x_probe > 0.0)) throw Error(ErrorKind::InvalidProbe, "probe must lie at positive x");
  ConvergenceStudy study;
  for (int N : Ns) {
    if (N < 1) throw Error(ErrorKind::InvalidInput, "scale N must be positive");
    const CouplingVector cN = c.at_scale(N);
    const int site = std::max(1, static_cast<int>(std::lround(x_probe * N)));
    const double x = static_cast<double>(site) / N;
    const continuum::RootSet roots = continuum::solve_eos(continuum::eos_coefficients(cN, x));
    if (roots.count() != 1 || roots.accessible_count() != 1)
      throw Error(ErrorKind::InvalidProbe, "probe x = " + std::to_string(x) + " is not in a single-valued region");
    const auto sol = lattice::solve_string(cN, window_for_probe(x_probe, N, cN.order()), opts);
    ConvergenceRow row;
    row.N = N;
    row.site = site;
    row.x = x;
    row.u_lattice = sol.window(site) / N;
    row.u_continuum = roots.roots.front().u;
    row.deviation = std::abs(row.u_lattice - row.u_continuum);
    study.rows.push_back(row);
  }
  study.strictly_decreasing = true;
  for (std::size_t i = 1; i < study.rows.size(); ++i)
    study.strictly_decreasing = study.strictly_decreasing && study.rows[i].deviation < study.rows[i - 1].deviation;
  if (study.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& r : study.rows) {
      if (!(r.deviation > 0.0)) continue;
      const double lx = std::log(static_cast<double>(r.N)), ly = std::log(r.deviation);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++m;
    }
    if (m >= 2) study.order = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return study;
}

}  // namespace shocklab::shock
