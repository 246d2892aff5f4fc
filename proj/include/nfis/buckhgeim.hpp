#pragma once

// Two-dimensional Buckhgeim-type analogs of the Faddeev functions and the
// pointwise reconstruction of v2 - v1 from delta h.
//
// With w = z - z0 and phi(z) = 2 Im(lambda w^2), the Green's function is
//     G(z, zeta) = e^{lambda w_z^2} I(z, zeta) e^{-conj(lambda) conj(w_zeta)^2},
//     I(z, zeta) = (1 / 4 pi^2) int_{B_r} e^{-i phi(eta)} / ((z - eta)(conj(eta) - conj(zeta))),
// which satisfies 4 d^2 G / dz dzbar = delta(z - zeta). Writing
// psi = e^{lambda w^2} mu turns the integral equation into
//     mu = 1 + (1/4) T[chi_B e^{-i phi} Tbar(e^{i phi} q mu)],
// with the Cauchy transforms T f(z) = (1/pi) int f / (z - eta) and
// Tbar f(eta) = (1/pi) int f / (conj(eta) - conj(zeta)). Both are applied by
// FFT convolution on a grid that extends the potential grid to cover B_r.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "nfis/common.hpp"
#include "nfis/fft.hpp"
#include "nfis/grid.hpp"
#include "nfis/linalg.hpp"
#include "nfis/specfun.hpp"

namespace nfis {

struct BuckhgeimProbe {
  Complex z0{0.0, 0.0};
  Complex lambda{8.0, 0.0};
  double E = 0.0;  // potentials enter as v - E on B_r
};

inline double buckhgeim_phase(const Complex& lambda, const Complex& z0, const Complex& z) {
  const Complex w = z - z0;
  return 2.0 * std::imag(lambda * w * w);
}

enum class PsiVariant { Psi, PsiTilde };

/// Point evaluation of G by quadrature over B_r, for reference and tests.
/// The integrand is split by a partition of unity into two pieces, each
/// singular at one point only and integrated in polar coordinates about it
/// (Gauss-Legendre in the radius, trapezoid in the angle).
inline Complex buckhgeim_green(const BuckhgeimProbe& probe, double r, const Complex& z, const Complex& zeta,
                               int quad) {
  if (z == zeta) throw SingularityError("buckhgeim_green: z = zeta");
  require(std::abs(z) < r && std::abs(zeta) < r, "buckhgeim_green: points must lie in B_r");
  require(quad >= 4, "buckhgeim_green: quadrature resolution too small");
  auto [gx, gw] = specfun::gauss_legendre(quad);
  const int nt = 2 * quad;
  auto piece = [&](const Complex& c, bool around_z) {
    Complex s = 0.0;
    for (int t = 0; t < nt; ++t) {
      const double th = 2.0 * kPi * (t + 0.5) / nt;
      const Complex e = std::polar(1.0, th);
      // Ray c + rho e leaves B_r at rho_max.
      const double b = std::real(std::conj(c) * e);
      const double rho_max = -b + std::sqrt(b * b + r * r - std::norm(c));
      Complex ray = 0.0;
      for (std::size_t q = 0; q < gx.size(); ++q) {
        const double rho = 0.5 * rho_max * (gx[q] + 1.0);
        const Complex eta = c + rho * e;
        const double dz = std::norm(eta - z), dzeta = std::norm(eta - zeta);
        const double chi = around_z ? dzeta / (dz + dzeta) : dz / (dz + dzeta);
        const Complex f = std::polar(1.0, -buckhgeim_phase(probe.lambda, probe.z0, eta)) * chi /
                          ((z - eta) * (std::conj(eta) - std::conj(zeta)));
        ray += gw[q] * rho * f;
      }
      s += ray * (0.5 * rho_max);
    }
    return s * (2.0 * kPi / nt);
  };
  const Complex I = (piece(z, true) + piece(zeta, false)) / (4.0 * kPi * kPi);
  const Complex wz = z - probe.z0, wzeta = zeta - probe.z0;
  return std::exp(probe.lambda * wz * wz) * I * std::exp(-std::conj(probe.lambda) * std::conj(wzeta * wzeta));
}

/// Extended grid over [-R, R]^2 (R >= r) with the spacing of a potential grid,
/// the disc mask of B_r, and the FFTs of the two Cauchy kernels.
class BuckhgeimGrid {
 public:
  explicit BuckhgeimGrid(const GridPotential& v) : n_(v.n()), h_(v.h()), r_(v.r()) {
    require(v.dim() == 2, "BuckhgeimGrid: d = 2 only");
    pad_ = static_cast<int>(std::ceil((v.r() - v.r1()) / h_)) + 1;
    ne_ = n_ + 2 * pad_;
    R_ = v.r1() + pad_ * h_;
    N_ = 2 * ne_;
    plan_ = std::make_unique<FftPlan>(std::vector<int>{N_, N_});
    kT_.assign(static_cast<std::size_t>(N_) * N_, Complex(0.0));
    kTbar_ = kT_;
    for (int a = 0; a < N_; ++a)
      for (int b = 0; b < N_; ++b) {
        const int sa = a < N_ / 2 ? a : a - N_;
        const int sb = b < N_ / 2 ? b : b - N_;
        if (sa == 0 && sb == 0) continue;  // principal value over the cell
        const Complex d = h_ * Complex(sa, sb);
        kT_[static_cast<std::size_t>(a) * N_ + b] = h_ * h_ / (kPi * d);
        kTbar_[static_cast<std::size_t>(a) * N_ + b] = h_ * h_ / (kPi * std::conj(d));
      }
    plan_->forward(kT_);
    plan_->forward(kTbar_);
    mask_.assign(static_cast<std::size_t>(ne_) * ne_, 0.0);
    for (int i = 0; i < ne_; ++i)
      for (int j = 0; j < ne_; ++j) mask_[i * ne_ + j] = std::abs(point(i * ne_ + j)) < r_ ? 1.0 : 0.0;
  }

  int n() const { return n_; }
  int extended() const { return ne_; }
  int pad() const { return pad_; }
  double h() const { return h_; }
  double r() const { return r_; }
  int size() const { return ne_ * ne_; }
  bool in_disc(int idx) const { return mask_[idx] != 0.0; }

  /// Complex coordinate of an extended-grid cell center.
  Complex point(int idx) const {
    const int i = idx / ne_, j = idx % ne_;
    return {-R_ + (i + 0.5) * h_, -R_ + (j + 0.5) * h_};
  }
  /// Extended index of potential-grid cell idx.
  int from_potential(int idx) const { return (idx / n_ + pad_) * ne_ + (idx % n_ + pad_); }

  std::vector<Complex> cauchy(const std::vector<Complex>& f, bool conjugate_kernel) const {
    std::vector<Complex> buf(static_cast<std::size_t>(N_) * N_, Complex(0.0));
    for (int i = 0; i < ne_; ++i)
      for (int j = 0; j < ne_; ++j) buf[static_cast<std::size_t>(i) * N_ + j] = f[i * ne_ + j];
    plan_->forward(buf);
    const auto& k = conjugate_kernel ? kTbar_ : kT_;
    for (std::size_t q = 0; q < buf.size(); ++q) buf[q] *= k[q];
    plan_->backward(buf);
    const double scale = 1.0 / static_cast<double>(buf.size());
    std::vector<Complex> out(static_cast<std::size_t>(size()));
    for (int i = 0; i < ne_; ++i)
      for (int j = 0; j < ne_; ++j) out[i * ne_ + j] = buf[static_cast<std::size_t>(i) * N_ + j] * scale;
    return out;
  }

 private:
  int n_, pad_ = 0, ne_ = 0, N_ = 0;
  double h_, r_, R_ = 0.0;
  std::unique_ptr<FftPlan> plan_;
  std::vector<Complex> kT_, kTbar_;
  std::vector<double> mask_;
};

struct BuckhgeimField {
  BuckhgeimProbe probe;
  PsiVariant variant = PsiVariant::Psi;
  std::vector<Complex> mu;   // on the extended grid
  std::vector<Complex> psi;  // e^{lambda w^2} mu, or e^{conj(lambda w^2)} mu for the tilde variant
  std::vector<double> history;
  int iterations = 0;

  /// max |mu - 1| over cells of B_r.
  double sup_deviation(const BuckhgeimGrid& g) const {
    double m = 0.0;
    for (int i = 0; i < g.size(); ++i)
      if (g.in_disc(i)) m = std::max(m, std::abs(mu[i] - 1.0));
    return m;
  }
};

struct BuckhgeimOptions {
  double tol = 1e-10;
  int restart = 60;
  int max_iter = 600;
};

/// Potential values q = v - E on B_r, on the extended grid.
inline std::vector<double> shifted_potential(const BuckhgeimGrid& g, const GridPotential& v, double E) {
  std::vector<double> q(static_cast<std::size_t>(g.size()), 0.0);
  for (int i = 0; i < g.size(); ++i)
    if (g.in_disc(i)) q[i] = -E;
  for (int idx = 0; idx < v.size(); ++idx) q[g.from_potential(idx)] += v[idx];
  return q;
}

namespace detail {

/// (1/4) T[chi_B e^{-i phi} Tbar(e^{i phi} q u)] on the extended grid.
inline std::vector<Complex> buckhgeim_apply(const BuckhgeimGrid& g, const std::vector<double>& q,
                                            const std::vector<Complex>& phase, const std::vector<Complex>& u) {
  std::vector<Complex> f(static_cast<std::size_t>(g.size()));
  for (int i = 0; i < g.size(); ++i) f[i] = phase[i] * q[i] * u[i];
  auto inner = g.cauchy(f, true);
  for (int i = 0; i < g.size(); ++i) inner[i] = g.in_disc(i) ? std::conj(phase[i]) * inner[i] : Complex(0.0);
  auto out = g.cauchy(inner, false);
  for (auto& z : out) z *= 0.25;
  return out;
}

}  // namespace detail

/// Solve for mu (variant Psi) or mu-tilde (variant PsiTilde, conjugate kernel)
/// on the extended grid, with psi = e^{lambda w^2} mu.
inline BuckhgeimField solve_psi(const BuckhgeimGrid& g, const std::vector<double>& q, const BuckhgeimProbe& probe,
                                PsiVariant variant, const BuckhgeimOptions& opt = {}) {
  require(std::abs(probe.z0) < g.r(), "solve_psi: z0 must lie in B_r");
  BuckhgeimField out;
  out.probe = probe;
  out.variant = variant;
  const int m = g.size();
  std::vector<Complex> phase(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) phase[i] = std::polar(1.0, buckhgeim_phase(probe.lambda, probe.z0, g.point(i)));
  const bool tilde = variant == PsiVariant::PsiTilde;
  auto A = [&](const std::vector<Complex>& u) {
    if (!tilde) return detail::buckhgeim_apply(g, q, phase, u);
    std::vector<Complex> cu(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) cu[i] = std::conj(u[i]);
    auto r = detail::buckhgeim_apply(g, q, phase, cu);
    for (auto& z : r) z = std::conj(z);
    return r;
  };
  // Unknowns: cells where q != 0.
  std::vector<int> support;
  for (int i = 0; i < m; ++i)
    if (q[i] != 0.0) support.push_back(i);
  out.mu.assign(static_cast<std::size_t>(m), Complex(1.0));
  if (!support.empty()) {
    const int s = static_cast<int>(support.size());
    auto apply = [&](const CVec& x) {
      std::vector<Complex> full(static_cast<std::size_t>(m), Complex(0.0));
      for (int a = 0; a < s; ++a) full[support[a]] = x(a);
      auto Ax = A(full);
      CVec y(s);
      for (int a = 0; a < s; ++a) y(a) = x(a) - Ax[support[a]];
      return y;
    };
    auto res = gmres(apply, CVec::Ones(s), opt.tol, opt.restart, opt.max_iter);
    out.history = res.history;
    out.iterations = res.iterations;
    std::vector<Complex> full(static_cast<std::size_t>(m), Complex(0.0));
    for (int a = 0; a < s; ++a) full[support[a]] = res.x(a);
    auto Ax = A(full);
    for (int i = 0; i < m; ++i) out.mu[i] = 1.0 + Ax[i];
  }
  out.psi.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const Complex w = g.point(i) - probe.z0;
    const Complex e = probe.lambda * w * w;
    out.psi[i] = (tilde ? std::exp(std::conj(e)) : std::exp(e)) * out.mu[i];
  }
  return out;
}

inline BuckhgeimField solve_psi(const GridPotential& v, const BuckhgeimProbe& probe, PsiVariant variant,
                                const BuckhgeimOptions& opt = {}) {
  BuckhgeimGrid g(v);
  return solve_psi(g, shifted_potential(g, v, probe.E), probe, variant, opt);
}

/// One Born step: mu = 1 + A 1.
inline std::vector<Complex> born_mu(const BuckhgeimGrid& g, const std::vector<double>& q, const BuckhgeimProbe& probe) {
  std::vector<Complex> phase(static_cast<std::size_t>(g.size()));
  for (int i = 0; i < g.size(); ++i) phase[i] = std::polar(1.0, buckhgeim_phase(probe.lambda, probe.z0, g.point(i)));
  auto a = detail::buckhgeim_apply(g, q, phase, std::vector<Complex>(static_cast<std::size_t>(g.size()), Complex(1.0)));
  for (auto& z : a) z += 1.0;
  return a;
}

/// max |mu| + max |grad mu| over the cells of B_r (centred differences).
inline double mu_bound(const BuckhgeimGrid& g, const BuckhgeimField& f) {
  const int ne = g.extended();
  double sup = 0.0, grad = 0.0;
  for (int i = 1; i + 1 < ne; ++i)
    for (int j = 1; j + 1 < ne; ++j) {
      const int idx = i * ne + j;
      if (!g.in_disc(idx)) continue;
      sup = std::max(sup, std::abs(f.mu[idx]));
      const Complex dx = (f.mu[idx + ne] - f.mu[idx - ne]) / (2.0 * g.h());
      const Complex dy = (f.mu[idx + 1] - f.mu[idx - 1]) / (2.0 * g.h());
      grad = std::max(grad, std::sqrt(std::norm(dx) + std::norm(dy)));
    }
  return sup + grad;
}

/// int psi~_1(z, -lambda) (v2 - v1) psi_2(z, lambda), grid quadrature.
inline Complex delta_h(const BuckhgeimGrid& g, const GridPotential& v1, const GridPotential& v2,
                       const BuckhgeimProbe& probe, const BuckhgeimOptions& opt = {}) {
  require(v1.same_grid(v2), "delta_h: potentials must share a grid");
  bool equal = true;
  for (int i = 0; i < v1.size() && equal; ++i) equal = v1[i] == v2[i];
  if (equal) return 0.0;
  BuckhgeimProbe minus = probe;
  minus.lambda = -probe.lambda;
  const auto mu1 = solve_psi(g, shifted_potential(g, v1, probe.E), minus, PsiVariant::PsiTilde, opt);
  const auto mu2 = solve_psi(g, shifted_potential(g, v2, probe.E), probe, PsiVariant::Psi, opt);
  Complex s = 0.0;
  for (int idx = 0; idx < v1.size(); ++idx) {
    const double dv = v2[idx] - v1[idx];
    if (dv == 0.0) continue;
    const int e = g.from_potential(idx);
    s += std::polar(dv, buckhgeim_phase(probe.lambda, probe.z0, g.point(e))) * mu1.mu[e] * mu2.mu[e];
  }
  return s * g.h() * g.h();
}

inline Complex delta_h(const GridPotential& v1, const GridPotential& v2, const BuckhgeimProbe& probe,
                       const BuckhgeimOptions& opt = {}) {
  BuckhgeimGrid g(v1);
  return delta_h(g, v1, v2, probe, opt);
}

/// int e^{2 i Im(lambda w^2)} (v2 - v1): delta h with mu = mu~ = 1.
inline Complex delta_h_born(const GridPotential& v1, const GridPotential& v2, const BuckhgeimProbe& probe) {
  require(v1.same_grid(v2), "delta_h_born: potentials must share a grid");
  Complex s = 0.0;
  for (int idx = 0; idx < v1.size(); ++idx) {
    const double dv = v2[idx] - v1[idx];
    if (dv == 0.0) continue;
    const Point c = v1.center(idx);
    s += std::polar(dv, buckhgeim_phase(probe.lambda, probe.z0, Complex(c[0], c[1])));
  }
  return s * v1.cell_volume();
}

struct ReconstructionPoint {
  Complex z0;
  double estimate = 0.0;   // (2/pi)|lambda| Re delta h
  double imag_residue = 0.0;
  double truth = 0.0;      // (v2 - v1)(z0) by bilinear interpolation
};

/// Bilinear interpolation of grid values at a point of the support box.
inline double interpolate(const GridPotential& v, const Complex& z) {
  const double h = v.h();
  const double x = (z.real() + v.r1()) / h - 0.5, y = (z.imag() + v.r1()) / h - 0.5;
  const int i = std::clamp(static_cast<int>(std::floor(x)), 0, v.n() - 2);
  const int j = std::clamp(static_cast<int>(std::floor(y)), 0, v.n() - 2);
  const double fx = x - i, fy = y - j;
  return (1 - fx) * (1 - fy) * v[v.index(i, j)] + fx * (1 - fy) * v[v.index(i + 1, j)] +
         (1 - fx) * fy * v[v.index(i, j + 1)] + fx * fy * v[v.index(i + 1, j + 1)];
}

/// (2/pi)|lambda| Re delta h at each z0.
inline std::vector<ReconstructionPoint> reconstruct_diff(const GridPotential& v1, const GridPotential& v2,
                                                         const std::vector<Complex>& z0s, const Complex& lambda,
                                                         double E = 0.0, const BuckhgeimOptions& opt = {}) {
  require(std::abs(lambda) > 0.0, "reconstruct_diff: lambda must be nonzero");
  BuckhgeimGrid g(v1);
  auto diff = v2.minus(v1);
  std::vector<ReconstructionPoint> out;
  for (const auto& z0 : z0s) {
    const Complex dh = delta_h(g, v1, v2, {z0, lambda, E}, opt);
    ReconstructionPoint p;
    p.z0 = z0;
    p.estimate = (2.0 / kPi) * std::abs(lambda) * dh.real();
    p.imag_residue = (2.0 / kPi) * std::abs(lambda) * dh.imag();
    p.truth = std::norm(z0) <= v1.r1() * v1.r1() ? interpolate(diff, z0) : 0.0;
    out.push_back(p);
  }
  return out;
}

/// (ln(3|lambda|))^2 / |lambda|^{3/4}
inline double buckhgeim_envelope(double lam) { return std::pow(std::log(3.0 * lam), 2) / std::pow(lam, 0.75); }

}  // namespace nfis
