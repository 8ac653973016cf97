#include "shocklab/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <thread>

#include "shocklab/errors.hpp"

namespace shocklab::continuum {

namespace {

using Poly = std::vector<double>;  // ascending coefficients

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

void trim(Poly& p) {
  while (!p.empty() && p.back() == 0.0) p.pop_back();
}

double horner(const Poly& p, double u) {
  double acc = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * u + *it;
  return acc;
}

Poly derivative_of(const Poly& p) {
  Poly d;
  for (std::size_t i = 1; i < p.size(); ++i) d.push_back(static_cast<double>(i) * p[i]);
  return d;
}

double polish(const Poly& p, double u) {
  const Poly dp = derivative_of(p);
  for (int it = 0; it < 4; ++it) {
    const double f = horner(p, u);
    const double df = horner(dp, u);
    if (df == 0.0) break;
    const double next = u - f / df;
    if (!(std::abs(horner(p, next)) < std::abs(f))) break;
    u = next;
  }
  return u;
}

// Remainder of a / b (ascending coefficients).
Poly remainder(Poly a, const Poly& b) {
  const int db = static_cast<int>(b.size()) - 1;
  while (static_cast<int>(a.size()) - 1 >= db && !a.empty()) {
    const int da = static_cast<int>(a.size()) - 1;
    const double factor = a.back() / b.back();
    for (int i = 0; i <= db; ++i) a[da - db + i] -= factor * b[i];
    a.pop_back();
  }
  return a;
}

struct Sturm {
  std::vector<Poly> chain;

  explicit Sturm(const Poly& p) {
    chain.push_back(p);
    chain.push_back(derivative_of(p));
    const double ref = max_abs(p);
    while (chain.back().size() > 1) {
      Poly r = remainder(chain[chain.size() - 2], chain.back());
      for (double& a : r) a = -a;
      // Relative cut: a remainder at round-off level means the previous
      // element is the gcd (repeated root present).
      const double lead = max_abs(chain.back());
      while (!r.empty() && std::abs(r.back()) <= 1e-11 * std::max(lead, ref)) r.pop_back();
      if (r.empty()) break;
      chain.push_back(std::move(r));
    }
  }

  int variations(double u) const {
    int count = 0;
    double prev = 0.0;
    for (const Poly& q : chain) {
      const double v = horner(q, u);
      if (v == 0.0) continue;
      if (prev != 0.0 && (v > 0) != (prev > 0)) ++count;
      prev = v;
    }
    return count;
  }

  int roots_in(double a, double b) const { return variations(a) - variations(b); }
};

int multiplicity_at(const Poly& p, double u) {
  Poly d = p;
  int m = 0;
  const double ref = max_abs(p);
  while (d.size() > 1) {
    double tol = 1e-7 * ref * std::max(1.0, std::pow(std::abs(u), static_cast<double>(d.size() - 1)));
    if (std::abs(horner(d, u)) > tol) break;
    ++m;
    d = derivative_of(d);
    for (double& a : d) a /= static_cast<double>(m);
  }
  return std::max(m, 1);
}

std::vector<std::pair<double, int>> sturm_roots(const Poly& p) {
  const int n = static_cast<int>(p.size()) - 1;
  double bound = 0.0;
  for (int i = 0; i < n; ++i) bound = std::max(bound, std::abs(p[i] / p[n]));
  bound += 1.0;
  const Sturm sturm(p);

  std::vector<std::pair<double, double>> work{{-bound, bound}};
  std::vector<std::pair<double, double>> isolated;
  while (!work.empty()) {
    auto [a, b] = work.back();
    work.pop_back();
    const int count = sturm.roots_in(a, b);
    if (count == 0) continue;
    if (count == 1 || b - a < 1e-13 * bound) {
      isolated.emplace_back(a, b);
      continue;
    }
    const double mid = 0.5 * (a + b);
    work.emplace_back(mid, b);
    work.emplace_back(a, mid);
  }

  std::vector<std::pair<double, int>> out;
  for (auto [a, b] : isolated) {
    const double fa = horner(p, a);
    const double fb = horner(p, b);
    for (int it = 0; it < 200 && b - a > 4e-16 * std::max(1.0, std::abs(a)); ++it) {
      const double mid = 0.5 * (a + b);
      if (fa != 0.0 && fb != 0.0 && (fa > 0) != (fb > 0)) {
        const double fm = horner(p, mid);
        if (fm == 0.0) { a = b = mid; break; }
        if ((fm > 0) == (fa > 0)) a = mid; else b = mid;
      } else {
        if (sturm.roots_in(a, mid) >= 1) b = mid; else a = mid;
      }
    }
    double u = 0.5 * (a + b);
    const int m = multiplicity_at(p, u);
    if (m == 1) u = polish(p, u);
    out.emplace_back(u, m);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Closed-form real roots with multiplicities for degree <= 3 (normalised
// coefficients).
std::vector<std::pair<double, int>> closed_form_roots(const Poly& p) {
  const int deg = static_cast<int>(p.size()) - 1;
  std::vector<std::pair<double, int>> out;
  if (deg == 1) {
    out.emplace_back(-p[0] / p[1], 1);
    return out;
  }
  if (deg == 2) {
    const double a = p[2], b = p[1], c = p[0];
    const double disc = b * b - 4.0 * a * c;
    if (disc > kDiscriminantTie) {
      const double qq = -0.5 * (b + std::copysign(std::sqrt(disc), b));
      double r1 = qq / a;
      double r2 = c / qq;
      if (r1 > r2) std::swap(r1, r2);
      out.emplace_back(polish(p, r1), 1);
      out.emplace_back(polish(p, r2), 1);
    } else if (disc >= -kDiscriminantTie) {
      out.emplace_back(-b / (2.0 * a), 2);
    }
    return out;
  }
  const double a = p[3], b = p[2], c = p[1], d = p[0];
  const double delta = 18 * a * b * c * d - 4 * b * b * b * d + b * b * c * c - 4 * a * c * c * c - 27 * a * a * d * d;
  const double shift = -b / (3.0 * a);
  const double p3 = (3 * a * c - b * b) / (3 * a * a);
  const double q3 = (2 * b * b * b - 9 * a * b * c + 27 * a * a * d) / (27 * a * a * a);
  if (delta > kDiscriminantTie) {
    const double r = 2.0 * std::sqrt(-p3 / 3.0);
    const double arg = std::clamp(3.0 * q3 / (p3 * r), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) {
      const double s = r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0);
      out.emplace_back(polish(p, s + shift), 1);
    }
    std::sort(out.begin(), out.end());
  } else if (delta < -kDiscriminantTie) {
    const double disc = q3 * q3 / 4.0 + p3 * p3 * p3 / 27.0;
    const double A = -std::copysign(std::cbrt(std::abs(q3) / 2.0 + std::sqrt(std::max(disc, 0.0))), q3);
    const double B = A == 0.0 ? 0.0 : -p3 / (3.0 * A);
    out.emplace_back(polish(p, A + B + shift), 1);
  } else if (std::abs(3 * a * c - b * b) <= kDiscriminantTie) {
    out.emplace_back(shift, 3);
  } else {
    const double simple = 3.0 * q3 / p3 + shift;
    const double twice = -1.5 * q3 / p3 + shift;
    out.emplace_back(polish(p, simple), 1);
    out.emplace_back(twice, 2);
    std::sort(out.begin(), out.end());
  }
  return out;
}

RootKind kind_of(const Poly& p, double u, int multiplicity) {
  if (multiplicity % 2 == 0) return RootKind::Inflection;
  double slope;
  if (multiplicity == 1) {
    slope = horner(derivative_of(p), u);
  } else {
    Poly d = p;
    for (int i = 0; i < multiplicity; ++i) d = derivative_of(d);
    slope = horner(d, u);
  }
  if (slope > 0) return RootKind::LocalMin;
  if (slope < 0) return RootKind::LocalMax;
  return RootKind::Inflection;
}

}  // namespace

double chi(int j) {
  if (j < 1) throw Error(ErrorKind::InvalidInput, "chi_j needs j >= 1");
  // C(2j-1, j-1) by the multiplicative formula; exact in double for j <= 30.
  double value = 1.0;
  for (int i = 1; i <= j - 1; ++i) value = value * (j + i) / i;
  return std::round(value);
}

int EquationOfState::degree() const noexcept {
  for (int i = static_cast<int>(coefficients.size()) - 1; i >= 0; --i)
    if (coefficients[i] != 0.0) return i;
  return coefficients.empty() ? -1 : 0;
}

double EquationOfState::operator()(double u) const noexcept { return horner(coefficients, u); }

double EquationOfState::derivative(double u) const noexcept { return horner(derivative_of(coefficients), u); }

EquationOfState eos_coefficients(const CouplingVector& c, double x) {
  EquationOfState e;
  e.x = x;
  const int q = std::max(c.size(), 1);
  e.coefficients.assign(q + 1, 0.0);
  e.coefficients[0] = -x;
  e.coefficients[1] = 1.0;
  for (int j = 1; j <= c.size(); ++j) {
    const double T = c.T(j);
    if (T == 0.0) continue;
    if (j == 1)
      e.coefficients[1] = 1.0 - 2.0 * T;
    else
      e.coefficients[j] = -2.0 * j * chi(j) * T;
  }
  return e;
}

int RootSet::accessible_count() const noexcept {
  return static_cast<int>(std::count_if(roots.begin(), roots.end(), [](const Root& r) { return r.accessible; }));
}

int RootSet::accessible_minima() const noexcept {
  return static_cast<int>(std::count_if(roots.begin(), roots.end(), [](const Root& r) {
    return r.accessible && r.kind == RootKind::LocalMin;
  }));
}

RootSet solve_eos(const EquationOfState& eos) {
  Poly p = eos.coefficients;
  trim(p);
  if (p.size() < 2) throw Error(ErrorKind::InvalidInput, "equation of state has degree < 1");
  const double scale = max_abs(p);
  for (double& a : p) a /= scale;

  const auto found = p.size() <= 4 ? closed_form_roots(p) : sturm_roots(p);
  RootSet set;
  for (auto [u, m] : found) {
    Root r;
    r.u = u;
    r.multiplicity = m;
    r.accessible = u >= 0.0;
    r.kind = kind_of(p, u, m);
    set.roots.push_back(r);
  }
  return set;
}

Discriminant discriminant(double x, double T2, double T4, double T6) {
  const double a = -60.0 * T6, b = -12.0 * T4, c = 1.0 - 2.0 * T2, d = -x;
  Discriminant out;
  if (a != 0.0) {
    out.value = 18 * a * b * c * d - 4 * b * b * b * d + b * b * c * c - 4 * a * c * c * c - 27 * a * a * d * d;
    out.degree = 3;
    return out;
  }
  out.degenerate = true;
  if (b != 0.0) {
    out.value = c * c - 4.0 * b * d;
    out.degree = 2;
  } else {
    out.value = 0.0;
    out.degree = c != 0.0 ? 1 : 0;
  }
  return out;
}

double normalized_discriminant(double x, double T2, double T4, double T6) {
  const Discriminant d = discriminant(x, T2, T4, T6);
  const double coeffs[] = {-60.0 * T6, -12.0 * T4, 1.0 - 2.0 * T2, -x};
  const double m = max_abs(coeffs);
  if (m == 0.0) return 0.0;
  const double power = d.degree == 3 ? 4.0 : 2.0;
  return d.value / std::pow(m, power);
}

std::vector<double> discriminant_roots_in_x(double T2, double T4, double T6) {
  const double a = -60.0 * T6, b = -12.0 * T4, c = 1.0 - 2.0 * T2;
  if (a == 0.0) {
    if (b == 0.0) return {};
    return {-c * c / (4.0 * b)};
  }
  const double A = -27.0 * a * a;
  const double B = 4.0 * b * b * b - 18.0 * a * b * c;
  const double C = b * b * c * c - 4.0 * a * c * c * c;
  const double m = std::max({std::abs(A), std::abs(B), std::abs(C)});
  const double disc = B * B - 4.0 * A * C;
  if (std::abs(disc) <= kDiscriminantTie * m * m) return {-B / (2.0 * A)};
  if (disc < 0.0) return {};
  const double qq = -0.5 * (B + std::copysign(std::sqrt(disc), B));
  std::vector<double> out{qq / A, C / qq};
  std::sort(out.begin(), out.end());
  return out;
}

double free_energy(double u, double x, const CouplingVector& c) {
  double F = -x * u + 0.5 * u * u;
  for (int j = 1; j <= c.size(); ++j) {
    const double T = c.T(j);
    if (T == 0.0) continue;
    F -= (2.0 * j / (j + 1.0)) * chi(j) * T * std::pow(u, j + 1);
  }
  return F;
}

PhasePoint classify(double x, const CouplingVector& c) {
  if (c.order() > 3) throw Error(ErrorKind::InvalidInput, "discriminant classification needs couplings up to T6");
  PhasePoint pt;
  pt.x = x;
  pt.T2 = c.T(1);
  pt.T4 = c.T(2);
  pt.T6 = c.T(3);
  const Discriminant d = discriminant(x, pt.T2, pt.T4, pt.T6);
  pt.delta = d.value;
  pt.degenerate = d.degenerate;
  const RootSet roots = solve_eos(eos_coefficients(c, x));
  pt.real_roots = roots.count();
  pt.accessible_roots = roots.accessible_count();
  if (!d.degenerate) {
    const double nd = normalized_discriminant(x, pt.T2, pt.T4, pt.T6);
    pt.phase = nd > kDiscriminantTie ? Phase::Coexistence : nd < -kDiscriminantTie ? Phase::SingleMinimum : Phase::Critical;
  } else {
    const bool repeated = std::any_of(roots.roots.begin(), roots.roots.end(), [](const Root& r) { return r.multiplicity > 1; });
    int minima = 0;
    for (const Root& r : roots.roots) minima += r.kind == RootKind::LocalMin;
    pt.phase = repeated ? Phase::Critical : minima >= 2 ? Phase::Coexistence : Phase::SingleMinimum;
  }
  return pt;
}

std::optional<double> equilibrium_branch(const RootSet& roots, double x, const CouplingVector& c) {
  std::optional<double> best;
  double best_F = 0.0;
  for (const Root& r : roots.roots) {
    if (!r.accessible || r.kind != RootKind::LocalMin) continue;
    const double F = free_energy(r.u, x, c);
    if (!best || F < best_F - 1e-14 * std::max(1.0, std::abs(best_F))) {
      best = r.u;
      best_F = F;
    }
  }
  return best;
}

std::vector<Polyline> critical_set(const CriticalSetGrid& g) {
  if (g.nx < 2 || g.nT6 < 2) throw Error(ErrorKind::InvalidInput, "critical-set grid needs at least 2 points per axis");
  const int nx = g.nx, ny = g.nT6;
  auto xs = [&](int i) { return g.x_range[0] + (g.x_range[1] - g.x_range[0]) * i / (nx - 1); };
  auto ys = [&](int j) { return g.T6_range[0] + (g.T6_range[1] - g.T6_range[0]) * j / (ny - 1); };
  auto inside = [&](double x, double T6) { return normalized_discriminant(x, g.T2, g.T4, T6) > kDiscriminantTie; };

  std::vector<char> node(static_cast<std::size_t>(nx) * ny);
  {
    const int workers = std::clamp(g.threads, 1, ny);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int j = w; j < ny; j += workers)
          for (int i = 0; i < nx; ++i) node[static_cast<std::size_t>(j) * nx + i] = inside(xs(i), ys(j));
      });
    }
    for (auto& t : pool) t.join();
  }
  auto at = [&](int i, int j) { return node[static_cast<std::size_t>(j) * nx + i] != 0; };

  const long horizontal = static_cast<long>(ny) * (nx - 1);
  auto h_edge = [&](int i, int j) { return static_cast<long>(j) * (nx - 1) + i; };
  auto v_edge = [&](int i, int j) { return horizontal + static_cast<long>(j) * nx + i; };

  std::map<long, std::array<double, 2>> crossing;
  auto bisect = [&](double x0, double y0, double x1, double y1) {
    const bool s0 = inside(x0, y0);
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (inside(x0 + mid * (x1 - x0), y0 + mid * (y1 - y0)) == s0) lo = mid; else hi = mid;
    }
    const double s = 0.5 * (lo + hi);
    return std::array<double, 2>{x0 + s * (x1 - x0), y0 + s * (y1 - y0)};
  };
  auto edge_point = [&](long id) -> const std::array<double, 2>& {
    auto it = crossing.find(id);
    if (it != crossing.end()) return it->second;
    std::array<double, 2> pt;
    if (id < horizontal) {
      const int j = static_cast<int>(id / (nx - 1)), i = static_cast<int>(id % (nx - 1));
      pt = bisect(xs(i), ys(j), xs(i + 1), ys(j));
    } else {
      const long r = id - horizontal;
      const int j = static_cast<int>(r / nx), i = static_cast<int>(r % nx);
      pt = bisect(xs(i), ys(j), xs(i), ys(j + 1));
    }
    return crossing.emplace(id, pt).first->second;
  };

  std::map<long, std::vector<long>> links;
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const bool c[4] = {at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)};
      const long e[4] = {h_edge(i, j), v_edge(i + 1, j), h_edge(i, j + 1), v_edge(i, j)};
      std::vector<int> cut;
      for (int s = 0; s < 4; ++s)
        if (c[s] != c[(s + 1) % 4]) cut.push_back(s);
      if (cut.empty()) continue;
      std::vector<std::pair<int, int>> segs;
      if (cut.size() == 2) {
        segs.emplace_back(cut[0], cut[1]);
      } else {
        // Saddle: isolate the corners that disagree with the cell centre.
        const bool centre = inside(0.5 * (xs(i) + xs(i + 1)), 0.5 * (ys(j) + ys(j + 1)));
        for (int s = 0; s < 4; ++s)
          if (c[s] != centre) segs.emplace_back((s + 3) % 4, s);
      }
      for (auto [a, b] : segs) {
        edge_point(e[a]);
        edge_point(e[b]);
        links[e[a]].push_back(e[b]);
        links[e[b]].push_back(e[a]);
      }
    }
  }

  std::vector<Polyline> out;
  std::map<long, bool> used;
  auto walk = [&](long start) {
    Polyline line;
    long prev = -1, cur = start;
    while (true) {
      used[cur] = true;
      line.points.push_back(crossing.at(cur));
      long next = -1;
      for (long n : links[cur])
        if (n != prev && !used[n]) { next = n; break; }
      if (next < 0) {
        // Close loops explicitly.
        for (long n : links[cur])
          if (n == start && n != prev && line.points.size() > 2) line.points.push_back(crossing.at(start));
        break;
      }
      prev = cur;
      cur = next;
    }
    out.push_back(std::move(line));
  };
  for (const auto& [id, nbrs] : links)
    if (nbrs.size() == 1 && !used[id]) walk(id);
  for (const auto& [id, nbrs] : links)
    if (!used[id]) walk(id);

  // Cusps, where the coexistence wedge closes, are thinner than any grid
  // cell. Locate them on the T6 axis, where the discriminant's own quadratic
  // in x has a double root, and splice them into the nearest polyline.
  auto tip_gap = [&](double T6) {
    const double a = -60.0 * T6, b = -12.0 * g.T4, c = 1.0 - 2.0 * g.T2;
    const double A = -27.0 * a * a, B = 4.0 * b * b * b - 18.0 * a * b * c, C = b * b * c * c - 4.0 * a * c * c * c;
    const double m = std::max({std::abs(A), std::abs(B), std::abs(C)});
    if (m == 0.0 || a == 0.0) return std::pair<double, double>{std::numeric_limits<double>::quiet_NaN(), 0.0};
    const double gap = (B * B - 4.0 * A * C) / (m * m);
    return std::pair<double, double>{std::abs(gap) <= kDiscriminantTie ? 0.0 : gap, -B / (2.0 * A)};
  };
  std::vector<std::array<double, 2>> tips;
  const int scan = 8 * (ny - 1);
  auto scan_T6 = [&](int k) { return g.T6_range[0] + (g.T6_range[1] - g.T6_range[0]) * k / scan; };
  for (int k = 0; k <= scan; ++k) {
    const auto [gk, xk] = tip_gap(scan_T6(k));
    if (gk == 0.0) {
      tips.push_back({xk, scan_T6(k)});
      continue;
    }
    if (k == scan) break;
    const auto [gn, xn] = tip_gap(scan_T6(k + 1));
    if (!(gk * gn < 0.0)) continue;
    double lo = scan_T6(k), hi = scan_T6(k + 1);
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double gm = tip_gap(mid).first;
      if (gm == 0.0) lo = hi = mid;
      if ((gm > 0.0) == (gk > 0.0)) lo = mid; else hi = mid;
    }
    const double T6 = 0.5 * (lo + hi);
    tips.push_back({tip_gap(T6).second, T6});
  }
  const double hx = (g.x_range[1] - g.x_range[0]) / (nx - 1), hy = (g.T6_range[1] - g.T6_range[0]) / (ny - 1);
  for (const auto& tip : tips) {
    if (tip[0] < g.x_range[0] || tip[0] > g.x_range[1]) continue;
    double best = std::numeric_limits<double>::infinity();
    std::size_t line = 0, slot = 0;
    for (std::size_t l = 0; l < out.size(); ++l)
      for (std::size_t i = 0; i + 1 < out[l].points.size(); ++i) {
        const auto& p = out[l].points[i];
        const auto& q = out[l].points[i + 1];
        const double mx = 0.5 * (p[0] + q[0]) - tip[0], my = 0.5 * (p[1] + q[1]) - tip[1];
        const double d = std::hypot(mx / hx, my / hy);
        if (d < best) {
          best = d;
          line = l;
          slot = i + 1;
        }
      }
    if (best <= 4.0 * std::sqrt(static_cast<double>(ny)))
      out[line].points.insert(out[line].points.begin() + static_cast<long>(slot), tip);
    else
      out.push_back(Polyline{{tip}});
  }
  return out;
}

TransportReport transport_consistency(const CouplingVector& c, int k, std::span<const double> xs, double delta) {
  if (k < 1) throw Error(ErrorKind::InvalidInput, "flow index must be positive");
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidInput, "perturbation delta must be positive");
  const std::map<int, double> base = c.rescaled_map();
  auto perturbed = [&](double dT) {
    auto m = base;
    m[k] += dT;
    return CouplingVector::rescaled(m, c.scale());
  };
  auto nearest_root = [](const RootSet& roots, double target) {
    double best = roots.roots.front().u;
    for (const Root& r : roots.roots)
      if (std::abs(r.u - target) < std::abs(best - target)) best = r.u;
    return best;
  };
  const CouplingVector plus = perturbed(delta), minus = perturbed(-delta);

  TransportReport rep;
  std::vector<double> us;
  for (double x : xs) {
    const RootSet roots = solve_eos(eos_coefficients(c, x));
    if (roots.accessible_count() != 1 || roots.accessible_minima() != 1)
      throw Error(ErrorKind::MultivaluedRegion, "branch is not single-valued at x=" + std::to_string(x));
    const auto root = std::find_if(roots.roots.begin(), roots.roots.end(), [](const Root& r) { return r.accessible; });
    if (root->multiplicity != 1)
      throw Error(ErrorKind::MultivaluedRegion, "gradient catastrophe at x=" + std::to_string(x));
    const double u = root->u;
    const double uT = (nearest_root(solve_eos(eos_coefficients(plus, x)), u) -
                       nearest_root(solve_eos(eos_coefficients(minus, x)), u)) / (2.0 * delta);
    const double ux = (nearest_root(solve_eos(eos_coefficients(c, x + delta)), u) -
                       nearest_root(solve_eos(eos_coefficients(c, x - delta)), u)) / (2.0 * delta);
    if (std::abs(ux) < 1e-14)
      throw Error(ErrorKind::InvalidInput, "u_x vanishes at x=" + std::to_string(x) + "; transport ratio undefined");
    const double ratio = uT / ux;
    rep.ratios.push_back(ratio);
    us.push_back(u);
    rep.max_defect = std::max(rep.max_defect, std::abs(ratio - 2.0 * k * chi(k) * std::pow(u, k)));
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < us.size(); ++i) {
    const double basis = std::pow(us[i], 2 * k - 1);
    num += rep.ratios[i] * basis;
    den += basis * basis;
  }
  rep.fitted_coefficient = den > 0.0 ? num / den : 0.0;
  for (std::size_t i = 0; i < us.size(); ++i)
    rep.power_law_defect = std::max(rep.power_law_defect,
                                    std::abs(rep.ratios[i] - rep.fitted_coefficient * std::pow(us[i], 2 * k - 1)));
  return rep;
}

}  // namespace shocklab::continuum
