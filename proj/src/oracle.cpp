#include "shocklab/oracle.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "shocklab/errors.hpp"

namespace shocklab::oracle {

namespace {

constexpr double kLogTailRatio = 69.07755278982137;  // ln(1e30)
constexpr int kMaxDoublings = 20;

struct GaussLegendreRule {
  std::array<double, kNodesPerPanel> x{};
  std::array<double, kNodesPerPanel> w{};

  GaussLegendreRule() {
    const int n = kNodesPerPanel;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p1 = 1.0, p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
        }
        pp = n * (z * p1 - p2) / (z * z - 1.0);
        const double dz = p1 / pp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[i] = -z;
      x[n - 1 - i] = z;
      w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
  }
};

const GaussLegendreRule& gauss_legendre() {
  static const GaussLegendreRule rule;
  return rule;
}

// log weight as a polynomial in s = lambda^2
double log_weight_s(const CouplingVector& c, double s) {
  double h = -0.5 * s;
  double power = 1.0;
  for (int j = 1; j <= c.size(); ++j) {
    power *= s;
    h += c.t(j) * power;
  }
  return h;
}

// Bound beyond which d/ds log w < 0 (Cauchy bound on the derivative's roots).
double critical_bound(const CouplingVector& c) {
  const int q = c.order();
  if (q <= 1) return 0.0;
  const double lead = q * c.t(q);
  double bound = std::abs(-0.5 + c.t(1)) / std::abs(lead);
  for (int j = 2; j < q; ++j) bound = std::max(bound, std::abs(j * c.t(j) / lead));
  return 1.0 + bound;
}

double relative_change(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ref = std::max(std::abs(a[i]), std::abs(b[i]));
    if (ref == 0.0) continue;
    worst = std::max(worst, std::abs(a[i] - b[i]) / ref);
  }
  return worst;
}

std::vector<double> grid_moments(const QuadratureGrid& g, int max_order) {
  std::vector<double> m(max_order + 1, 0.0);
  const double scale = std::exp(g.log_scale);
  for (int k = 0; k <= max_order; k += 2) {
    double acc = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) acc += g.weights[i] * std::pow(g.nodes[i], k);
    m[k] = acc * scale;
  }
  return m;
}

int starting_panels(double radius) { return std::max(4, static_cast<int>(std::ceil(radius / 4.0))); }

}  // namespace

WeightSpec::WeightSpec(CouplingVector couplings) : couplings_(std::move(couplings)) {
  if (!couplings_.convergent())
    throw Error(ErrorKind::InvalidInput, "inadmissible weight: top nonzero coupling must be negative");
}

double WeightSpec::log_weight(double lambda) const noexcept { return log_weight_s(couplings_, lambda * lambda); }

namespace {

// log(lambda^degree w(lambda)) as a function of s = lambda^2.
double log_density(const CouplingVector& c, double s, int degree) {
  const double h = log_weight_s(c, s);
  return degree > 0 ? h + 0.5 * degree * std::log(s) : h;
}

struct Peak {
  double s = 0.0;
  double value = 0.0;
  double upper = 1.0;  // the density decreases beyond this s
};

Peak density_peak(const CouplingVector& c, int degree) {
  double hi = std::max({1.0, critical_bound(c), static_cast<double>(degree)});
  while (log_density(c, 2.0 * hi, degree) >= log_density(c, hi, degree)) hi *= 2.0;
  hi *= 2.0;
  constexpr int samples = 20000;
  Peak p;
  p.upper = hi;
  p.s = degree > 0 ? hi / samples : 0.0;
  p.value = log_density(c, p.s, degree);
  for (int i = 1; i <= samples; ++i) {
    const double s = hi * i / samples;
    const double v = log_density(c, s, degree);
    if (v > p.value) { p.value = v; p.s = s; }
  }
  double a = std::max(0.0, p.s - hi / samples), b = p.s + hi / samples;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 100; ++it) {
    const double m1 = b - g * (b - a), m2 = a + g * (b - a);
    if (log_density(c, m1, degree) > log_density(c, m2, degree)) b = m2; else a = m1;
  }
  const double polished = log_density(c, 0.5 * (a + b), degree);
  if (polished > p.value) { p.value = polished; p.s = 0.5 * (a + b); }
  return p;
}

}  // namespace

double log_weight_max(const WeightSpec& w) {
  if (w.gaussian()) return 0.0;
  return density_peak(w.couplings(), 0).value;
}

double truncation_radius(const WeightSpec& w, int degree) {
  const double base = w.gaussian() ? 14.0 : 0.0;
  const CouplingVector& c = w.couplings();
  const Peak peak = density_peak(c, degree);
  const double threshold = peak.value - kLogTailRatio;
  double hi = std::max(peak.upper, 2.0 * peak.s + 1.0);
  while (log_density(c, hi, degree) >= threshold) hi *= 2.0;
  constexpr int samples = 20000;
  double lo = 0.0;
  for (int i = samples; i >= 1; --i) {
    const double s = hi * i / samples;
    if (log_density(c, s, degree) >= threshold) { lo = s; break; }
  }
  double top = std::min(hi, lo + hi / samples);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + top);
    if (log_density(c, mid, degree) >= threshold) lo = mid; else top = mid;
  }
  return std::max(base, std::sqrt(top));
}

QuadratureGrid discretize(const WeightSpec& w, int panels, double radius) {
  if (panels < 1) throw Error(ErrorKind::InvalidInput, "panel count must be positive");
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidInput, "truncation radius must be positive");
  const GaussLegendreRule& rule = gauss_legendre();
  QuadratureGrid g;
  g.radius = radius;
  g.log_scale = log_weight_max(w);
  g.panels = panels;
  const double width = 2.0 * g.radius / panels;
  g.nodes.reserve(static_cast<std::size_t>(panels) * kNodesPerPanel);
  g.weights.reserve(g.nodes.capacity());
  for (int p = 0; p < panels; ++p) {
    const double mid = -g.radius + (p + 0.5) * width;
    for (int i = 0; i < kNodesPerPanel; ++i) {
      const double lambda = mid + 0.5 * width * rule.x[i];
      g.nodes.push_back(lambda);
      g.weights.push_back(0.5 * width * rule.w[i] * std::exp(w.log_weight(lambda) - g.log_scale));
    }
  }
  return g;
}

MomentTable moment_table(const WeightSpec& w, int max_order) {
  if (max_order < 0) throw Error(ErrorKind::InvalidInput, "moment order must be non-negative");
  const double radius = truncation_radius(w, max_order);
  int panels = starting_panels(radius);
  QuadratureGrid grid = discretize(w, panels, radius);
  std::vector<double> prev = grid_moments(grid, max_order);
  for (int d = 0; d < kMaxDoublings; ++d) {
    panels *= 2;
    QuadratureGrid finer = discretize(w, panels, radius);
    std::vector<double> next = grid_moments(finer, max_order);
    const double change = relative_change(prev, next);
    if (change < 1e-13) return MomentTable{std::move(next), std::move(finer), change};
    prev = std::move(next);
    grid = std::move(finer);
  }
  throw Error(ErrorKind::Quadrature, "moment quadrature did not converge after 20 panel doublings");
}

std::vector<double> moments(const WeightSpec& w, int max_order) { return moment_table(w, max_order).values; }

double hankel_tau(std::span<const double> m, int n) {
  if (n < 0) throw Error(ErrorKind::InvalidInput, "tau index must be non-negative");
  if (n == 0) return 1.0;
  if (static_cast<int>(m.size()) < 2 * n - 1)
    throw Error(ErrorKind::InvalidInput, "Hankel determinant needs moments up to order 2n-2");
  // Symmetric diagonal scaling by 1/sqrt(m_{2i}) before Cholesky.
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) {
    if (!(m[2 * i] > 0.0)) throw Error(ErrorKind::Precision, "nonpositive even moment");
    d[i] = 1.0 / std::sqrt(m[2 * i]);
  }
  Eigen::MatrixXd H(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) H(i, j) = m[i + j] * d[i] * d[j];
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::Precision, "Hankel matrix lost positive definiteness at n=" + std::to_string(n) +
                                          "; use the stieltjes route");
  double log_det = 0.0;
  for (int i = 0; i < n; ++i) {
    const double l = llt.matrixLLT()(i, i);
    if (!(l > 0.0)) throw Error(ErrorKind::Precision, "nonpositive Hankel pivot; use the stieltjes route");
    log_det += 2.0 * std::log(l) - 2.0 * std::log(d[i]);
  }
  return std::exp(log_det);
}

OracleResult hankel_recurrence(const WeightSpec& w, int n_max) {
  if (n_max < 1) throw Error(ErrorKind::InvalidInput, "n_max must be positive");
  const MomentTable table = moment_table(w, 2 * n_max + 2);
  OracleResult r;
  r.method = "hankel";
  r.moments.assign(table.values.begin(), table.values.begin() + 2 * n_max + 1);
  r.quadrature_change = table.relative_change;
  r.panels = table.grid.panels;
  for (int n = 0; n <= n_max + 1; ++n) {
    const double tau = hankel_tau(table.values, n);
    if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorKind::Precision, "nonpositive tau from Hankel route");
    r.tau.push_back(tau);
    r.log_tau.push_back(std::log(tau));
  }
  for (int n = 1; n <= n_max; ++n) {
    const double B = std::exp(r.log_tau[n + 1] + r.log_tau[n - 1] - 2.0 * r.log_tau[n]);
    r.B.push_back(B);
  }
  return r;
}

std::vector<double> lanczos_coefficients(std::span<const double> nodes, std::span<const double> weights, int n_max) {
  const Eigen::Index K = static_cast<Eigen::Index>(nodes.size());
  if (K <= n_max) throw Error(ErrorKind::Precision, "discrete measure has too few nodes for the requested degree");
  const Eigen::Map<const Eigen::VectorXd> x(nodes.data(), K);
  Eigen::VectorXd q(K);
  for (Eigen::Index i = 0; i < K; ++i) q[i] = std::sqrt(weights[static_cast<std::size_t>(i)]);
  q /= q.norm();
  Eigen::MatrixXd basis(K, n_max + 1);
  basis.col(0) = q;
  Eigen::VectorXd q_prev = Eigen::VectorXd::Zero(K);
  double beta_prev = 0.0;
  std::vector<double> B;
  B.reserve(n_max);
  for (int j = 0; j < n_max; ++j) {
    Eigen::VectorXd v = x.cwiseProduct(basis.col(j)) - beta_prev * q_prev;
    v -= basis.col(j).dot(v) * basis.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      const auto Q = basis.leftCols(j + 1);
      v -= Q * (Q.transpose() * v);
    }
    const double beta = v.norm();
    if (!(beta > 0.0) || !std::isfinite(beta))
      throw Error(ErrorKind::Precision, "Lanczos lost positivity at B_" + std::to_string(j + 1));
    B.push_back(beta * beta);
    q_prev = basis.col(j);
    basis.col(j + 1) = v / beta;
    beta_prev = beta;
  }
  return B;
}

OracleResult stieltjes_recurrence(const WeightSpec& w, int n_max) {
  if (n_max < 1) throw Error(ErrorKind::InvalidInput, "n_max must be positive");
  const double radius = truncation_radius(w, 2 * n_max);
  int panels = std::max(starting_panels(radius), (n_max + kNodesPerPanel) / kNodesPerPanel * 2);
  QuadratureGrid grid = discretize(w, panels, radius);
  std::vector<double> prev = lanczos_coefficients(grid.nodes, grid.weights, n_max);
  double change = 1.0;
  for (int d = 0; d < kMaxDoublings; ++d) {
    panels *= 2;
    QuadratureGrid finer = discretize(w, panels, radius);
    std::vector<double> next = lanczos_coefficients(finer.nodes, finer.weights, n_max);
    change = relative_change(prev, next);
    prev = std::move(next);
    grid = std::move(finer);
    if (change < 1e-13) break;
    if (d + 1 == kMaxDoublings)
      throw Error(ErrorKind::Quadrature, "Stieltjes recurrence did not converge after 20 panel doublings");
  }

  OracleResult r;
  r.method = "stieltjes";
  r.B = std::move(prev);
  r.quadrature_change = change;
  r.panels = grid.panels;
  const int moment_order = 2 * std::min(n_max, 30);
  r.moments = grid_moments(grid, moment_order);
  const double log_m0 = std::log(r.moments[0]);
  // tau_n = prod_{k<n} h_k with h_0 = m_0, h_k = h_{k-1} B_k.
  double log_h = log_m0, log_tau = 0.0;
  r.log_tau.push_back(0.0);
  for (int n = 1; n <= n_max + 1; ++n) {
    log_tau += log_h;
    r.log_tau.push_back(log_tau);
    if (n <= n_max) log_h += std::log(r.B[n - 1]);
  }
  for (double lt : r.log_tau) r.tau.push_back(std::exp(lt));
  return r;
}

double gaussian_log_tau(int n) {
  double value = 0.5 * n * std::log(2.0 * std::numbers::pi);
  for (int j = 1; j <= n; ++j) value += std::lgamma(j + 1.0);
  return value - std::lgamma(n + 1.0);
}

}  // namespace shocklab::oracle
