#pragma once

// Faddeev functions in three dimensions. Complex momenta k with k.k = E,
// the Green's function g(x, k) of Delta + 2i k.grad, the bounded factor
// mu(x, k) of psi = e^{ikx} mu, and the generalized amplitude h(k, l).
//
// g is synthesized on a lattice of frequencies (2 pi / L)(m + a), with a
// fractional offset a that keeps the lattice off the zero set of
// xi^2 + 2 k.xi. The resulting kernel lives on the cell-offset grid of a box
// of side L = 2 x (potential box) and is applied by FFT convolution.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nfis/common.hpp"
#include "nfis/fft.hpp"
#include "nfis/grid.hpp"
#include "nfis/linalg.hpp"

namespace nfis {

using CPoint = std::array<Complex, 3>;

inline Complex cdot(const CPoint& a, const CPoint& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Complex cdot(const CPoint& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

struct ComplexMomentum {
  CPoint k{};

  Point re() const { return {k[0].real(), k[1].real(), k[2].real()}; }
  Point im() const { return {k[0].imag(), k[1].imag(), k[2].imag()}; }
  double rho() const { return norm(im()); }
  double modulus() const { return std::sqrt(dot(re(), re()) + dot(im(), im())); }
  /// k.k (bilinear, no conjugation).
  Complex square() const { return cdot(k, k); }
  ComplexMomentum negated() const { return {{-k[0], -k[1], -k[2]}}; }
  bool on_sigma(double E, double tol = 1e-12) const {
    const Complex s = square();
    return std::fabs(s.imag()) <= tol * std::max(1.0, E) && std::fabs(s.real() - E) <= tol * std::max(1.0, E);
  }
};

struct ThetaPair {
  double E = 1.0;
  ComplexMomentum k;
  ComplexMomentum l;
  Point p{};
  double rho = 0.0;
};

/// Orthonormal (theta, eta), both orthogonal to p, by Gram-Schmidt on the two
/// coordinate axes least aligned with p (ties broken by axis index).
inline std::pair<Point, Point> default_frame(const Point& p) {
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return std::fabs(p[a]) < std::fabs(p[b]); });
  const double pn = norm(p);
  const Point u = pn > 0.0 ? (1.0 / pn) * p : Point{0.0, 0.0, 0.0};
  Point e0{0.0, 0.0, 0.0}, e1{0.0, 0.0, 0.0};
  e0[order[0]] = 1.0;
  e1[order[1]] = 1.0;
  Point theta = e0 - dot(e0, u) * u;
  theta = (1.0 / norm(theta)) * theta;
  Point eta = e1 - dot(e1, u) * u - dot(e1, theta) * theta;
  eta = (1.0 / norm(eta)) * eta;
  return {theta, eta};
}

/// k = p/2 + s theta + i rho eta, l = -p/2 + s theta + i rho eta,
/// s = sqrt(E + rho^2 - p^2/4).
inline ThetaPair make_theta_pair(double E, const Point& p, double rho, const Point& theta, const Point& eta) {
  require(E > 0.0 && rho >= 0.0, "make_theta_pair: need E > 0 and rho >= 0");
  const double p2 = dot(p, p);
  if (p2 > 4.0 * (E + rho * rho))
    throw ConstraintError("make_theta_pair: p^2 = " + std::to_string(p2) + " exceeds 4(E + rho^2) = " +
                          std::to_string(4.0 * (E + rho * rho)));
  const double tol = 1e-12;
  const double pn = std::sqrt(p2);
  if (std::fabs(norm(theta) - 1.0) > tol || std::fabs(norm(eta) - 1.0) > tol || std::fabs(dot(theta, eta)) > tol ||
      std::fabs(dot(theta, p)) > tol * std::max(1.0, pn) || std::fabs(dot(eta, p)) > tol * std::max(1.0, pn))
    throw DomainError("make_theta_pair: frame must be orthonormal and orthogonal to p");
  const double s = std::sqrt(std::max(0.0, E + rho * rho - 0.25 * p2));
  ThetaPair out;
  out.E = E;
  out.p = p;
  out.rho = rho;
  for (int a = 0; a < 3; ++a) {
    out.k.k[a] = Complex(0.5 * p[a] + s * theta[a], rho * eta[a]);
    out.l.k[a] = Complex(-0.5 * p[a] + s * theta[a], rho * eta[a]);
  }
  return out;
}

inline ThetaPair make_theta_pair(double E, const Point& p, double rho) {
  const auto [theta, eta] = default_frame(p);
  return make_theta_pair(E, p, rho, theta, eta);
}

namespace detail {
inline int wrap(int j, int n) { return ((j % n) + n) % n; }
inline int signed_index(int i, int n) { return i < n / 2 ? i : i - n; }
}  // namespace detail

/// g(x, k) on the offsets x = h j, j in [-n/2, n/2)^3, h = L / n, stored with
/// j taken modulo n along each axis.
struct FaddeevGreen {
  ComplexMomentum k;
  double L = 0.0;
  int n = 0;
  Point offset{};        // fractional lattice shift a
  double min_symbol = 0.0;  // min over the lattice of |xi^2 + 2 k.xi|
  int retries = 0;
  std::vector<Complex> values;

  double h() const { return L / n; }
  Complex at(int i, int j, int l) const {
    return values[(static_cast<std::size_t>(detail::wrap(i, n)) * n + detail::wrap(j, n)) * n + detail::wrap(l, n)];
  }

  /// Lattice frequency of DFT index (m0, m1, m2).
  Point xi(int m0, int m1, int m2) const {
    const double c = 2.0 * kPi / L;
    return {c * (detail::signed_index(m0, n) + offset[0]), c * (detail::signed_index(m1, n) + offset[1]),
            c * (detail::signed_index(m2, n) + offset[2])};
  }

  /// The sampled symbol -1 / (xi^2 + 2 k.xi) recovered from the grid values.
  std::vector<Complex> symbol_from_values() const {
    std::vector<Complex> buf(values.size());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
          const Point x = h() * Point{double(detail::signed_index(i, n)), double(detail::signed_index(j, n)),
                                      double(detail::signed_index(l, n))};
          const Point a = (2.0 * kPi / L) * offset;
          const std::size_t idx = (static_cast<std::size_t>(i) * n + j) * n + l;
          buf[idx] = values[idx] * std::polar(1.0, -dot(a, x));
        }
    FftPlan plan({n, n, n});
    plan.forward(buf);
    for (auto& b : buf) b *= L * L * L / (double(n) * n * n);
    return buf;
  }

  /// The kernel for -l, given k - l = p: g(z, -l) = e^{-ipz} g(-z, k).
  FaddeevGreen reflected(const Point& p) const {
    FaddeevGreen out = *this;
    for (int a = 0; a < 3; ++a) out.k.k[a] = k.k[a] - p[a];
    out.k = out.k.negated();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
          const int si = detail::signed_index(i, n), sj = detail::signed_index(j, n), sl = detail::signed_index(l, n);
          const Point z = h() * Point{double(si), double(sj), double(sl)};
          out.values[(static_cast<std::size_t>(i) * n + j) * n + l] = std::polar(1.0, -dot(p, z)) * at(-si, -sj, -sl);
        }
    return out;
  }
};

/// Lattice synthesis of g(., k) on a box of side L with n points per axis.
inline FaddeevGreen faddeev_green_grid(const ComplexMomentum& k, double L, int n) {
  require(k.rho() > 0.0, "faddeev_green_grid: Im k must be nonzero");
  require(L > 0.0 && n >= 2 && n % 2 == 0, "faddeev_green_grid: need L > 0 and even n");
  static const Point kOffsets[] = {{0.5, 0.5, 0.5}, {0.37, 0.61, 0.23}, {0.29, 0.43, 0.71}, {0.13, 0.83, 0.47}};
  const double c = 2.0 * kPi / L;
  const double guard = 1e-8 * c * c;
  FaddeevGreen g;
  g.k = k;
  g.L = L;
  g.n = n;
  const std::size_t total = static_cast<std::size_t>(n) * n * n;
  for (int attempt = 0; attempt < 4; ++attempt) {
    g.offset = kOffsets[attempt];
    g.retries = attempt;
    g.values.assign(total, Complex(0.0));
    double min_sym = 1e300;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
          const Point x = g.xi(i, j, l);
          const Complex sym = dot(x, x) + 2.0 * cdot(k.k, x);
          min_sym = std::min(min_sym, std::abs(sym));
          g.values[(static_cast<std::size_t>(i) * n + j) * n + l] = -1.0 / sym;
        }
    g.min_symbol = min_sym;
    if (min_sym < guard) continue;
    FftPlan plan({n, n, n});
    plan.backward(g.values);
    const Point a = c * g.offset;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
          const Point x = g.h() * Point{double(detail::signed_index(i, n)), double(detail::signed_index(j, n)),
                                        double(detail::signed_index(l, n))};
          g.values[(static_cast<std::size_t>(i) * n + j) * n + l] *= std::polar(1.0, dot(a, x)) / (L * L * L);
        }
    return g;
  }
  throw DomainError("faddeev_green_grid: lattice hits the zero set of the symbol for every offset");
}

enum class FaddeevMode { Born, Series, Direct };

inline std::string to_string(FaddeevMode m) {
  switch (m) {
    case FaddeevMode::Born: return "born";
    case FaddeevMode::Series: return "series";
    default: return "direct";
  }
}

inline FaddeevMode faddeev_mode_from_string(const std::string& s) {
  if (s == "born") return FaddeevMode::Born;
  if (s == "series") return FaddeevMode::Series;
  if (s == "direct") return FaddeevMode::Direct;
  throw DomainError("unknown Faddeev mode '" + s + "'");
}

struct FaddeevOptions {
  double series_tol = 1e-8;
  int series_max_iter = 50;
  int direct_max_n = 16;
};

/// mu on every cell of the potential grid.
struct FaddeevField {
  ComplexMomentum k;
  FaddeevMode mode = FaddeevMode::Born;
  std::vector<Complex> mu;
  int iterations = 0;
  double contraction = 0.0;
  std::vector<double> history;

  double sup_deviation() const {
    double m = 0.0;
    for (const auto& z : mu) m = std::max(m, std::abs(z - 1.0));
    return m;
  }
};

/// f -> sum_j g(x_i - x_j) v_j f_j h^3 on the potential grid, via zero-padded
/// FFT convolution on the kernel's (2n)^3 grid.
class FaddeevOperator {
 public:
  FaddeevOperator(const GridPotential& v, const FaddeevGreen& g) : v_(v), g_(g), plan_({g.n, g.n, g.n}) {
    require(v.dim() == 3, "FaddeevOperator: d = 3 only");
    require(g.n >= 2 * v.n() - 1, "FaddeevOperator: kernel grid too small for the potential grid");
    require(std::fabs(g.h() - v.h()) <= 1e-12 * v.h(), "FaddeevOperator: kernel spacing must match the grid");
    khat_ = g.values;
    plan_.forward(khat_);
  }

  std::vector<Complex> apply(const std::vector<Complex>& f) const {
    const int n = v_.n(), N = g_.n;
    std::vector<Complex> buf(plan_.size(), Complex(0.0));
    const double vol = v_.cell_volume();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
          const int idx = v_.index(i, j, l);
          buf[(static_cast<std::size_t>(i) * N + j) * N + l] = v_[idx] * vol * f[idx];
        }
    plan_.forward(buf);
    for (std::size_t q = 0; q < buf.size(); ++q) buf[q] *= khat_[q];
    plan_.backward(buf);
    const double scale = 1.0 / static_cast<double>(buf.size());
    std::vector<Complex> out(static_cast<std::size_t>(v_.size()));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) out[v_.index(i, j, l)] = buf[(static_cast<std::size_t>(i) * N + j) * N + l] * scale;
    return out;
  }

  const FaddeevGreen& green() const { return g_; }

 private:
  const GridPotential& v_;
  const FaddeevGreen& g_;
  mutable FftPlan plan_;
  std::vector<Complex> khat_;
};

/// Standard kernel grid for a potential: box side 2 x 2 r1, 2n points per axis.
inline FaddeevGreen faddeev_green_for(const GridPotential& v, const ComplexMomentum& k) {
  return faddeev_green_grid(k, 4.0 * v.r1(), 2 * v.n());
}

/// mu = 1 + g * (v mu) with a precomputed kernel.
inline FaddeevField solve_mu(const GridPotential& v, const FaddeevGreen& g, FaddeevMode mode,
                             const FaddeevOptions& opt = {}) {
  require(v.dim() == 3, "solve_mu: d = 3 only");
  FaddeevField out;
  out.k = g.k;
  out.mode = mode;
  out.mu.assign(static_cast<std::size_t>(v.size()), Complex(1.0));
  if (mode == FaddeevMode::Born || v.active_cells().empty()) return out;
  FaddeevOperator K(v, g);
  if (mode == FaddeevMode::Series) {
    double prev = 0.0;
    for (int it = 1; it <= opt.series_max_iter; ++it) {
      auto next = K.apply(out.mu);
      double diff = 0.0, sup = 0.0;
      for (std::size_t q = 0; q < next.size(); ++q) {
        next[q] += 1.0;
        diff = std::max(diff, std::abs(next[q] - out.mu[q]));
        sup = std::max(sup, std::abs(next[q]));
      }
      out.mu.swap(next);
      out.history.push_back(diff);
      out.iterations = it;
      if (it > 1) out.contraction = diff / prev;
      if (diff <= opt.series_tol * std::max(1.0, sup)) return out;
      if (!std::isfinite(diff) || (it > 3 && out.contraction >= 1.0 && diff > 1.0)) break;
      prev = diff;
    }
    throw ConvergenceError("solve_mu: Neumann series did not converge (contraction estimate " +
                               std::to_string(out.contraction) + ", |k| = " + std::to_string(g.k.modulus()) + ")",
                           out.history, out.contraction);
  }
  // Direct: dense solve on the active cells, then extend by the operator.
  if (v.n() > opt.direct_max_n)
    throw DomainError("solve_mu: direct mode is limited to n <= " + std::to_string(opt.direct_max_n));
  const auto cells = v.active_cells();
  const int m = static_cast<int>(cells.size());
  CMat A(m, m);
  std::vector<std::array<int, 3>> ijk(m);
  for (int a = 0; a < m; ++a) {
    int rem = cells[a];
    for (int ax = 2; ax >= 0; --ax) {
      ijk[a][ax] = rem % v.n();
      rem /= v.n();
    }
  }
  const double vol = v.cell_volume();
  for (int b = 0; b < m; ++b) {
    const double w = v[cells[b]] * vol;
    for (int a = 0; a < m; ++a)
      A(a, b) = (a == b ? 1.0 : 0.0) -
                g.at(ijk[a][0] - ijk[b][0], ijk[a][1] - ijk[b][1], ijk[a][2] - ijk[b][2]) * w;
  }
  Eigen::PartialPivLU<CMat> lu(A);
  CVec mu_active = lu.solve(CVec::Ones(m));
  const double res = (A * mu_active - CVec::Ones(m)).norm() / std::sqrt(double(m));
  out.history.push_back(res);
  if (!(res <= 1e-10)) throw ConvergenceError("solve_mu: direct solve residual " + std::to_string(res), out.history);
  std::vector<Complex> f(static_cast<std::size_t>(v.size()), Complex(0.0));
  for (int a = 0; a < m; ++a) f[cells[a]] = mu_active(a);
  auto Kf = K.apply(f);
  for (std::size_t q = 0; q < Kf.size(); ++q) out.mu[q] = 1.0 + Kf[q];
  return out;
}

inline FaddeevField solve_mu(const GridPotential& v, const ComplexMomentum& k, FaddeevMode mode,
                             const FaddeevOptions& opt = {}) {
  if (mode == FaddeevMode::Born || v.active_cells().empty()) {
    FaddeevField out;
    out.k = k;
    out.mode = mode;
    out.mu.assign(static_cast<std::size_t>(v.size()), Complex(1.0));
    return out;
  }
  const auto g = faddeev_green_for(v, k);
  return solve_mu(v, g, mode, opt);
}

/// max |mu| + max |grad mu| over the grid, centred differences inside and
/// second-order one-sided stencils at the grid faces.
inline double mu_bound(const GridPotential& v, const FaddeevField& f) {
  const int n = v.n();
  const double h = v.h();
  double sup = 0.0, grad = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        const std::array<int, 3> c{i, j, l};
        sup = std::max(sup, std::abs(f.mu[v.index(i, j, l)]));
        double g2 = 0.0;
        for (int a = 0; a < 3; ++a) {
          auto at = [&](int off) {
            auto q = c;
            q[a] += off;
            return f.mu[v.index(q[0], q[1], q[2])];
          };
          Complex d;
          if (n < 3) {
            d = 0.0;
          } else if (c[a] == 0) {
            d = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
          } else if (c[a] == n - 1) {
            d = (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h);
          } else {
            d = (at(1) - at(-1)) / (2.0 * h);
          }
          g2 += std::norm(d);
        }
        grad = std::max(grad, std::sqrt(g2));
      }
  return sup + grad;
}

/// (2 pi)^{-d} h^d sum e^{ipx} v(x).
inline Complex hat_v(const GridPotential& v, const Point& p) {
  Complex s = 0.0;
  for (int idx : v.active_cells()) s += std::polar(v[idx], dot(p, v.center(idx)));
  return s * v.cell_volume() / std::pow(2.0 * kPi, v.dim());
}

/// (2 pi)^{-3} h^3 sum e^{ipx} v mu(x, k).
inline Complex amplitude_from_mu(const GridPotential& v, const Point& p, const FaddeevField& f) {
  Complex s = 0.0;
  for (int idx : v.active_cells()) s += std::polar(v[idx], dot(p, v.center(idx))) * f.mu[idx];
  return s * v.cell_volume() / std::pow(2.0 * kPi, 3);
}

inline Complex scattering_amplitude(const GridPotential& v, const ThetaPair& pair, FaddeevMode mode,
                                    const FaddeevOptions& opt = {}) {
  return amplitude_from_mu(v, pair.p, solve_mu(v, pair.k, mode, opt));
}

/// (2 pi)^{-3} int psi_1(x, -l) (v2 - v1) psi_2(x, k) dx; the kernel for -l
/// is the reflection of the kernel for k, so the discrete identity with the
/// amplitude difference holds to solver precision.
inline Complex difference_h(const GridPotential& v1, const GridPotential& v2, const ThetaPair& pair,
                            FaddeevMode mode = FaddeevMode::Series, const FaddeevOptions& opt = {}) {
  require(v1.same_grid(v2), "difference_h: potentials must share a grid");
  FaddeevField mu1, mu2;
  if (mode == FaddeevMode::Born) {
    mu1 = solve_mu(v1, pair.l.negated(), mode, opt);
    mu2 = solve_mu(v2, pair.k, mode, opt);
  } else {
    const auto gk = faddeev_green_for(v2, pair.k);
    const auto gml = gk.reflected(pair.p);
    mu2 = solve_mu(v2, gk, mode, opt);
    mu1 = solve_mu(v1, gml, mode, opt);
  }
  Complex s = 0.0;
  for (int idx = 0; idx < v1.size(); ++idx) {
    const double dv = v2[idx] - v1[idx];
    if (dv == 0.0) continue;
    s += std::polar(dv, dot(pair.p, v1.center(idx))) * mu1.mu[idx] * mu2.mu[idx];
  }
  return s * v1.cell_volume() / std::pow(2.0 * kPi, 3);
}

}  // namespace nfis
