#pragma once

// Parameter selection, Born-approximate inversion from data, Fourier tails,
// and the fitting helpers used by the stability sweeps.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nfis/common.hpp"
#include "nfis/faddeev.hpp"
#include "nfis/fft.hpp"
#include "nfis/forward.hpp"
#include "nfis/grid.hpp"
#include "nfis/phi.hpp"
#include "nfis/specfun.hpp"

namespace nfis {

struct ParameterChoice {
  double beta = 0.0;
  double rho = 0.0;    // rho (d = 3) or |lambda| (d = 2)
  double kappa = 0.0;
  double log_term = 0.0;  // ln(3 + 1/delta)
};

/// beta = (1 - tau) / (2 (r + 1)) for d >= 3, (1 - tau) / (8 r^2 + 8 r) for d = 2;
/// rho = beta ln(3 + 1/delta); kappa = eps (E + rho^2)^{1/(2d)}.
inline ParameterChoice choose_parameters(double delta, double E, double tau, double r, int d, double eps = 0.5) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("choose_parameters: tau must lie in (0, 1)");
  require(delta > 0.0, "choose_parameters: delta must be positive");
  require(r > 0.0 && (d == 2 || d == 3), "choose_parameters: invalid geometry");
  ParameterChoice c;
  c.beta = d >= 3 ? (1.0 - tau) / (2.0 * (r + 1.0)) : (1.0 - tau) / (8.0 * r * r + 8.0 * r);
  c.log_term = std::log(3.0 + 1.0 / delta);
  c.rho = c.beta * c.log_term;
  c.kappa = eps * std::pow(E + c.rho * c.rho, 1.0 / (2.0 * d));
  return c;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares fit of log y = slope log x + intercept.
inline LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "fit_loglog: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, "fit_loglog: values must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  LineFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

/// (ln(3 + 1/delta))^{-3/4} (ln(3 ln(3 + 1/delta)))^2
inline double log_envelope_2d(double delta) {
  const double L = std::log(3.0 + 1.0 / delta);
  return std::pow(L, -0.75) * std::pow(std::log(3.0 * L), 2);
}

struct EnvelopeFit {
  double constant = 0.0;
  int anchor = -1;          // index of the largest delta
  bool holds = true;        // every point under constant * shape
  double worst_ratio = 0.0; // max value / (constant * shape)
};

/// One multiplicative constant fitted at the largest-delta point, then
/// checked on all the others.
inline EnvelopeFit fit_envelope(const std::vector<double>& delta, const std::vector<double>& value,
                                const std::function<double(double)>& shape) {
  require(delta.size() == value.size() && !delta.empty(), "fit_envelope: size mismatch");
  EnvelopeFit f;
  for (std::size_t i = 0; i < delta.size(); ++i)
    if (delta[i] > 0.0 && (f.anchor < 0 || delta[i] > delta[f.anchor])) f.anchor = static_cast<int>(i);
  require(f.anchor >= 0, "fit_envelope: no positive delta");
  f.constant = value[f.anchor] / shape(delta[f.anchor]);
  for (std::size_t i = 0; i < delta.size(); ++i) {
    if (delta[i] <= 0.0) {
      if (value[i] != 0.0) f.holds = false;
      continue;
    }
    const double ratio = value[i] / (f.constant * shape(delta[i]));
    f.worst_ratio = std::max(f.worst_ratio, ratio);
    if (ratio > 1.0 + 1e-12) f.holds = false;
  }
  return f;
}

/// Polar quadrature for |p| <= kappa in R^3: Gauss-Legendre in |p| and in
/// cos(theta), uniform in azimuth.
struct FrequencyRule {
  std::vector<Point> p;
  std::vector<double> w;
};

inline FrequencyRule polar_frequency_rule(double kappa, int n_rad, int n_polar, int n_azimuth) {
  FrequencyRule rule;
  auto [tx, tw] = specfun::gauss_legendre(n_rad);
  auto [cx, cw] = specfun::gauss_legendre(n_polar);
  for (int a = 0; a < n_rad; ++a) {
    const double t = 0.5 * kappa * (tx[a] + 1.0);
    const double wt = 0.5 * kappa * tw[a] * t * t;
    for (int b = 0; b < n_polar; ++b) {
      const double st = std::sqrt(1.0 - cx[b] * cx[b]);
      for (int c = 0; c < n_azimuth; ++c) {
        const double ph = 2.0 * kPi * (c + 0.5) / n_azimuth;
        rule.p.push_back({t * st * std::cos(ph), t * st * std::sin(ph), t * cx[b]});
        rule.w.push_back(wt * cw[b] * 2.0 * kPi / n_azimuth);
      }
    }
  }
  return rule;
}

struct BornInversionOptions {
  int n_rad = 10;
  int n_polar = 12;
  int n_azimuth = 24;
  int J = -1;
  double noise_floor = 1e-12;  // data-norm difference below which the output is flagged
};

/// Real field on the cells of a potential grid.
struct ReconGrid {
  int dim = 3;
  int n = 0;
  double r1 = 0.5, r = 1.0;
  std::vector<double> values;
  double kappa = 0.0, rho = 0.0;
  bool below_noise = false;
  int frequencies = 0;

  double sup() const {
    double m = 0.0;
    for (double x : values) m = std::max(m, std::fabs(x));
    return m;
  }
};

/// Synthesis sum_p w_p c_p e^{-i p.x} on the cells of `geom`, real part.
inline ReconGrid synthesize_lowpass(const GridPotential& geom, const FrequencyRule& rule, const std::vector<Complex>& c) {
  ReconGrid g;
  g.dim = geom.dim();
  g.n = geom.n();
  g.r1 = geom.r1();
  g.r = geom.r();
  g.values.assign(static_cast<std::size_t>(geom.size()), 0.0);
  g.frequencies = static_cast<int>(rule.p.size());
  for (int i = 0; i < geom.size(); ++i) {
    const Point x = geom.center(i);
    Complex s = 0.0;
    for (std::size_t q = 0; q < rule.p.size(); ++q) s += rule.w[q] * c[q] * std::polar(1.0, -dot(rule.p[q], x));
    g.values[i] = s.real();
  }
  return g;
}

/// Band-limited estimate of v2 - v1 from two data matrices: Born probes
/// (mu = 1) at each p of a polar grid with |p| <= kappa, the data-side
/// estimate of h2 - h1 there, and the inverse Fourier synthesis.
inline ReconGrid born_invert_difference(const NearFieldMatrix& S1, const NearFieldMatrix& S2, double E, double rho,
                                        double kappa, const GridPotential& geom, const BornInversionOptions& opt = {}) {
  require(geom.dim() == 3 && S1.mesh.dim() == 3, "born_invert_difference: implemented for d = 3");
  if (!S1.mesh.same_as(S2.mesh)) throw DomainError("born_invert_difference: meshes differ");
  if (S1.E != E || S2.E != E) throw DomainError("born_invert_difference: data energy differs from E");
  if (kappa * kappa > 4.0 * (E + rho * rho))
    throw ConstraintError("born_invert_difference: kappa^2 > 4 (E + rho^2)");
  const auto rule = polar_frequency_rule(kappa, opt.n_rad, opt.n_polar, opt.n_azimuth);
  PhiOptions po;
  po.J = opt.J;
  std::vector<Complex> c(rule.p.size());
  for (std::size_t q = 0; q < rule.p.size(); ++q) {
    const auto pair = make_theta_pair(E, rule.p[q], rho);
    std::array<Complex, 3> ml;
    for (int a = 0; a < 3; ++a) ml[a] = -pair.l.k[a];
    const auto phi1 = build_phi(exponential_field(ml), E, S1.mesh, geom.r1(), po);
    const auto phi2 = build_phi(exponential_field(pair.k.k), E, S1.mesh, geom.r1(), po);
    c[q] = estimate_hdiff_from_data(S1, S2, phi1, phi2);
  }
  auto g = synthesize_lowpass(geom, rule, c);
  g.kappa = kappa;
  g.rho = rho;
  g.below_noise = data_norm_diff(S1, S2) < opt.noise_floor;
  return g;
}

/// The true v2 - v1 low-passed with the same rule (oracle for the inversion).
inline ReconGrid lowpass_difference(const GridPotential& v1, const GridPotential& v2, double kappa,
                                    const BornInversionOptions& opt = {}) {
  const auto rule = polar_frequency_rule(kappa, opt.n_rad, opt.n_polar, opt.n_azimuth);
  const auto dv = v2.minus(v1);
  std::vector<Complex> c(rule.p.size());
  for (std::size_t q = 0; q < rule.p.size(); ++q) c[q] = hat_v(dv, rule.p[q]);
  auto g = synthesize_lowpass(v1, rule, c);
  g.kappa = kappa;
  return g;
}

struct TailTable {
  std::vector<double> kappa, I2;
  double exponent = 0.0;      // fitted over the mid-range of kappa
  double max_frequency = 0.0;  // Nyquist of the quadrature grid
};

/// I2(kappa) = int_{|p| >= kappa} |hat v1 - hat v2| dp by FFT quadrature on a
/// zero-padded grid; the exponent is fitted over the middle half of the
/// kappa list.
inline TailTable tail_bound_check(const GridPotential& v1, const GridPotential& v2, const std::vector<double>& kappas,
                                  int pad = 4) {
  require(v1.same_grid(v2), "tail_bound_check: potentials must share a grid");
  require(!kappas.empty(), "tail_bound_check: empty kappa list");
  const int d = v1.dim(), n = v1.n(), N = pad * n;
  const double h = v1.h();
  const auto dv = v2.minus(v1);
  std::vector<int> shape(d, N);
  FftPlan plan(shape);
  std::vector<Complex> buf(plan.size(), Complex(0.0));
  for (int idx = 0; idx < dv.size(); ++idx) {
    if (dv[idx] == 0.0) continue;
    std::size_t flat = 0;
    int rem = idx;
    std::array<int, 3> ii{0, 0, 0};
    for (int a = d - 1; a >= 0; --a) {
      ii[a] = rem % n;
      rem /= n;
    }
    for (int a = 0; a < d; ++a) flat = flat * N + ii[a];
    buf[flat] = dv[idx];
  }
  plan.backward(buf);  // sum f e^{+i 2 pi m j / N}
  const double dp = 2.0 * kPi / (N * h);
  const double scale = std::pow(h, d) / std::pow(2.0 * kPi, d);
  TailTable t;
  t.kappa = kappas;
  t.max_frequency = kPi / h;
  std::vector<std::pair<double, double>> spectrum;  // (|p|, |hat dv| dp^d)
  spectrum.reserve(buf.size());
  for (std::size_t flat = 0; flat < buf.size(); ++flat) {
    std::size_t rem = flat;
    double p2 = 0.0;
    for (int a = d - 1; a >= 0; --a) {
      const int m = static_cast<int>(rem % N);
      rem /= N;
      const int s = m < N / 2 ? m : m - N;
      p2 += (s * dp) * (s * dp);
    }
    spectrum.push_back({std::sqrt(p2), std::abs(buf[flat]) * scale * std::pow(dp, d)});
  }
  std::sort(spectrum.begin(), spectrum.end());
  std::vector<double> tail(spectrum.size() + 1, 0.0);
  for (std::size_t i = spectrum.size(); i-- > 0;) tail[i] = tail[i + 1] + spectrum[i].second;
  for (double k : kappas) {
    const auto it = std::lower_bound(spectrum.begin(), spectrum.end(), std::make_pair(k, -1.0));
    t.I2.push_back(tail[static_cast<std::size_t>(it - spectrum.begin())]);
  }
  const std::size_t a = kappas.size() / 4, b = std::max(a + 2, (3 * kappas.size() + 3) / 4);
  std::vector<double> fx, fy;
  for (std::size_t i = a; i < std::min(b, kappas.size()); ++i)
    if (t.I2[i] > 0.0) {
      fx.push_back(kappas[i]);
      fy.push_back(t.I2[i]);
    }
  if (fx.size() >= 2) t.exponent = fit_loglog(fx, fy).slope;
  return t;
}

}  // namespace nfis
