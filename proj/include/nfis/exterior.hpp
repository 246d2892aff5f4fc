#pragma once

// Exterior Dirichlet problem for Delta + E with the outgoing radiation
// condition, solved mode by mode in real spherical harmonics on dB_r.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nfis/common.hpp"
#include "nfis/grid.hpp"
#include "nfis/specfun.hpp"

namespace nfis {

/// Coefficients of a boundary trace in the harmonics f_jp, orthonormal on
/// the sphere of radius r: f_jp(x) = Y_jp(x / |x|) r^{-(d-1)/2}.
struct HarmonicExpansion {
  int dim = 2;
  double r = 1.0;
  double E = 1.0;
  int J = 0;
  std::vector<Complex> coeffs;
  BoundaryMesh mesh;  // where the trace was sampled

  specfun::HarmonicBasisSpec basis() const { return {dim, J}; }
  Complex coeff(int j, int p) const { return coeffs[basis().index(j, p)]; }

  /// sum (1 + j)^{2s} |c_jp|^2, square-rooted.
  double sobolev_norm(int s) const {
    const auto b = basis();
    double acc = 0.0;
    for (int i = 0; i < b.size(); ++i) acc += std::pow(1.0 + b.degree_of(i), 2 * s) * std::norm(coeffs[i]);
    return std::sqrt(acc);
  }
};

namespace detail {

inline double harmonic_scale(int d, double r) { return std::pow(r, -0.5 * (d - 1)); }

inline std::vector<double> scaled_harmonics(int d, int J, double r, const Point& x) {
  auto vals = specfun::harmonic_values(d, J, (1.0 / norm(x)) * x);
  const double s = harmonic_scale(d, r);
  for (double& v : vals) v *= s;
  return vals;
}

}  // namespace detail

/// c_jp = sum_i w_i u(x_i) f_jp(x_i).
inline HarmonicExpansion expand_trace(const ComplexVector& u, const BoundaryMesh& mesh, int J, double E = 1.0) {
  require(static_cast<int>(u.size()) == mesh.size(), "expand_trace: sample count does not match the mesh");
  require(J >= 0, "expand_trace: negative cutoff");
  if (J > mesh.max_exact_degree())
    throw DomainError("expand_trace: cutoff J = " + std::to_string(J) + " aliases on this mesh (max " +
                      std::to_string(mesh.max_exact_degree()) + ")");
  HarmonicExpansion e;
  e.dim = mesh.dim();
  e.r = mesh.r();
  e.E = E;
  e.J = J;
  e.mesh = mesh;
  e.coeffs.assign(static_cast<std::size_t>(e.basis().size()), Complex(0.0));
  for (int i = 0; i < mesh.size(); ++i) {
    const auto f = detail::scaled_harmonics(e.dim, J, e.r, mesh.node(i));
    const Complex wu = mesh.weight(i) * u[i];
    for (std::size_t q = 0; q < f.size(); ++q) e.coeffs[q] += wu * f[q];
  }
  return e;
}

/// Values of the expansion at the nodes of a mesh of the same radius.
inline ComplexVector synthesize(const HarmonicExpansion& e, const BoundaryMesh& mesh) {
  ComplexVector out(static_cast<std::size_t>(mesh.size()), Complex(0.0));
  for (int i = 0; i < mesh.size(); ++i) {
    const auto f = detail::scaled_harmonics(e.dim, e.J, e.r, mesh.node(i));
    for (std::size_t q = 0; q < f.size(); ++q) out[i] += e.coeffs[q] * f[q];
  }
  return out;
}

/// h_j'(r) / h_j(r) for the radiating radial factor
///   h_j(t) = t^{-(d-2)/2} H_nu(sqrt(E) t),  nu = j + (d-2)/2.
inline Complex dtn_multiplier(int d, int j, double E, double r) {
  require(d == 2 || d == 3, "dtn_multiplier: dimension must be 2 or 3");
  require(E > 0.0 && r > 0.0, "dtn_multiplier: E and r must be positive");
  require(j >= 0, "dtn_multiplier: negative degree");
  const double nu = j + 0.5 * (d - 2);
  const double k = std::sqrt(E);
  const Complex H = specfun::hankel1(nu, k * r);
  const Complex dH = specfun::hankel1_deriv(nu, k * r);
  return -0.5 * (d - 2) / r + k * dH / H;
}

/// sqrt(E) H_1 / H_0 at sqrt(E) r: the d = 2, j = 0 ratio written without the
/// minus sign of H_0' = -H_1. Same modulus as dtn_multiplier(2, 0, E, r),
/// opposite sign; kept for comparison only.
inline Complex unsigned_degree_zero_ratio_2d(double E, double r) {
  const double k = std::sqrt(E);
  return k * specfun::hankel1(1.0, k * r) / specfun::hankel1(0.0, k * r);
}

/// Exterior normal derivative of the radiating extension at the mesh nodes.
inline ComplexVector exterior_normal_derivative(const HarmonicExpansion& e, const BoundaryMesh& mesh) {
  HarmonicExpansion d = e;
  const auto b = e.basis();
  std::vector<Complex> mult(static_cast<std::size_t>(e.J + 1));
  for (int j = 0; j <= e.J; ++j) mult[j] = dtn_multiplier(e.dim, j, e.E, e.r);
  for (int i = 0; i < b.size(); ++i) d.coeffs[i] *= mult[b.degree_of(i)];
  return synthesize(d, mesh);
}

inline ComplexVector exterior_normal_derivative(const HarmonicExpansion& e) {
  return exterior_normal_derivative(e, e.mesh);
}

/// sum c_jp h_j(|x|) / h_j(r) f_jp(x) for |x| > r.
inline Complex radiating_extension_eval(const HarmonicExpansion& e, const Point& x) {
  const double t = norm(x);
  if (!(t > e.r)) throw DomainError("radiating_extension_eval: point must satisfy |x| > r");
  const double k = std::sqrt(e.E);
  const double first = e.dim == 2 ? 0.0 : 0.5;
  const auto Ht = specfun::hankel1_sequence(first, e.J + 1, k * t);
  const auto Hr = specfun::hankel1_sequence(first, e.J + 1, k * e.r);
  const double radial = std::pow(t / e.r, -0.5 * (e.dim - 2));
  const auto f = detail::scaled_harmonics(e.dim, e.J, e.r, x);
  const auto b = e.basis();
  Complex s = 0.0;
  for (int i = 0; i < b.size(); ++i) {
    const int j = b.degree_of(i);
    s += e.coeffs[i] * (radial * Ht[j] / Hr[j]) * f[i];
  }
  return s;
}

struct DtnRatioReport {
  double worst_random_ratio = 0.0;  // over the sampled H^1 traces
  double c7 = 0.0;                  // sup over single modes
  int worst_degree = 0;
  std::vector<double> mode_ratio;   // |m_j| / ((1 + E)(1 + j))
};

/// ||d phi / d nu+||_{L2} / ((1 + E) ||phi||_{H^1}) over random traces with
/// coefficient variance (1 + j)^{-2 - 2 eps}, and its diagonal supremum.
inline DtnRatioReport verify_dtn_ratio_bound(int d, double E, double r, int J, int trials = 100,
                                          std::uint64_t seed = 1, double eps = 0.1) {
  require(J >= 0 && J + 0.5 * (d - 2) + 1.0 <= specfun::kMaxHankelOrder, "verify_dtn_ratio_bound: J unsupported");
  DtnRatioReport rep;
  std::vector<double> mult(static_cast<std::size_t>(J + 1));
  for (int j = 0; j <= J; ++j) {
    mult[j] = std::abs(dtn_multiplier(d, j, E, r));
    rep.mode_ratio.push_back(mult[j] / ((1.0 + E) * (1.0 + j)));
    if (rep.mode_ratio.back() > rep.c7) {
      rep.c7 = rep.mode_ratio.back();
      rep.worst_degree = j;
    }
  }
  specfun::HarmonicBasisSpec b(d, J);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int t = 0; t < trials; ++t) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < b.size(); ++i) {
      const int j = b.degree_of(i);
      const double sd = std::pow(1.0 + j, -1.0 - eps);
      const double c2 = std::norm(Complex(gauss(rng), gauss(rng))) * sd * sd;
      num += mult[j] * mult[j] * c2;
      den += (1.0 + j) * (1.0 + j) * c2;
    }
    rep.worst_random_ratio = std::max(rep.worst_random_ratio, std::sqrt(num / den) / (1.0 + E));
  }
  return rep;
}

}  // namespace nfis
