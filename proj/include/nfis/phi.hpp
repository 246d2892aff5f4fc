#pragma once

// Global solutions phi: an interior solution of -Delta phi + v phi = E phi in
// B_r glued to the radiating exterior extension of its trace, with the jump
// of the normal derivative across dB_r. The boundary pairing of two jumps
// against S1 - S2 reproduces the interior pairing int (v2 - v1) phi1 phi2.

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "nfis/common.hpp"
#include "nfis/exterior.hpp"
#include "nfis/forward.hpp"
#include "nfis/grid.hpp"

namespace nfis {

/// An interior field: point evaluation anywhere in B_r, plus (optionally) its
/// value on a potential-grid cell where point evaluation would be singular.
struct InteriorField {
  std::function<Complex(const Point&)> eval;
  std::function<Complex(int cell, const Point& center)> at_cell;

  Complex cell_value(int cell, const Point& center) const { return at_cell ? at_cell(cell, center) : eval(center); }
};

/// e^{i k.x} for complex k (k = sqrt(E) omega gives a plane wave).
inline InteriorField exponential_field(const std::array<Complex, 3>& k) {
  return {[k](const Point& x) { return std::exp(kI * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2])); }, {}};
}

/// Total field phi = u_inc + int R0 v phi for an incident field solving the
/// free equation. Cell values come from the discrete solve.
inline InteriorField total_field(const GridPotential& v, double E, const InteriorField& incident,
                                 ForwardOptions opt = {}) {
  auto solver = std::make_shared<ForwardSolver>(v, E, opt);
  auto T = std::make_shared<CVec>(CVec(solver->active()));
  auto pos = std::make_shared<std::vector<int>>(static_cast<std::size_t>(v.size()), -1);
  if (solver->active() > 0) {
    CMat B(solver->active(), 1);
    for (int a = 0; a < solver->active(); ++a) {
      B(a, 0) = incident.eval(solver->centers()[a]);
      (*pos)[solver->cells()[a]] = a;
    }
    *T = solver->solve(B).col(0);
  }
  InteriorField f;
  f.eval = [solver, T, incident](const Point& x) {
    return incident.eval(x) + (solver->active() ? solver->represent(x, *T) : Complex(0.0));
  };
  f.at_cell = [solver, T, pos, f_eval = f.eval](int cell, const Point& c) {
    const int a = cell >= 0 && cell < static_cast<int>(pos->size()) ? (*pos)[cell] : -1;
    return a >= 0 ? (*T)(a) : f_eval(c);
  };
  return f;
}

struct GlobalSolution {
  double E = 1.0;
  double r1 = 0.5;
  BoundaryMesh mesh;
  std::vector<Complex> interior;  // potential-grid cell values (may be empty)
  ComplexVector trace;
  HarmonicExpansion expansion;
  ComplexVector dnu_plus, dnu_minus, jump;
  double trace_residual = 0.0;  // max |resynthesized trace - trace| / max |trace|
  double pde_residual = 0.0;    // worst relative residual in the annulus r1 < |x| < r

  double jump_norm() const { return boundary_l2(mesh, jump); }
};

/// Interior residual above threshold: carries the sampled residual map.
class PhiRejected : public DomainError {
 public:
  PhiRejected(const std::string& what, std::vector<std::pair<Point, double>> map)
      : DomainError(what), map_(std::move(map)) {}
  const std::vector<std::pair<Point, double>>& residual_map() const { return map_; }

 private:
  std::vector<std::pair<Point, double>> map_;
};

struct PhiOptions {
  int J = -1;                 // harmonic cutoff; -1 = mesh.max_exact_degree()
  double fd_step = 0.02;      // relative to r; coarsest one-sided stencil depth
  double residual_tol = 1e-4;
  bool check_residual = true;
};

namespace detail {

inline std::vector<Point> annulus_samples(int d, double radius) {
  std::vector<Point> pts;
  if (d == 2) {
    for (int i = 0; i < 16; ++i) {
      const double t = 2.0 * kPi * (i + 0.25) / 16;
      pts.push_back({radius * std::cos(t), radius * std::sin(t), 0.0});
    }
  } else {
    const double s = radius / std::sqrt(3.0);
    for (int a = 0; a < 3; ++a)
      for (double sg : {-1.0, 1.0}) {
        Point p{0, 0, 0};
        p[a] = sg * radius;
        pts.push_back(p);
      }
    for (int m = 0; m < 8; ++m) pts.push_back({(m & 1 ? s : -s), (m & 2 ? s : -s), (m & 4 ? s : -s)});
  }
  return pts;
}

/// Scaled harmonics at the mesh nodes (rows) and DtN multipliers per
/// degree, cached per (mesh, J, E).
struct BoundaryBasis {
  Eigen::MatrixXd Y;
  std::vector<int> degree;
  Eigen::VectorXcd mult;  // per column
};

inline std::shared_ptr<const BoundaryBasis> boundary_basis(const BoundaryMesh& mesh, int J, double E) {
  using Key = std::tuple<int, double, int, int, int, double>;
  static std::mutex mu;
  static std::map<Key, std::shared_ptr<const BoundaryBasis>> cache;
  const Key key{mesh.dim(), mesh.r(), mesh.n_polar(), mesh.n_azimuth(), J, E};
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto b = std::make_shared<BoundaryBasis>();
  const specfun::HarmonicBasisSpec spec(mesh.dim(), J);
  b->Y.resize(mesh.size(), spec.size());
  for (int i = 0; i < mesh.size(); ++i) {
    const auto f = scaled_harmonics(mesh.dim(), J, mesh.r(), mesh.node(i));
    for (int q = 0; q < spec.size(); ++q) b->Y(i, q) = f[q];
  }
  std::vector<Complex> m(static_cast<std::size_t>(J + 1));
  for (int j = 0; j <= J; ++j) m[j] = dtn_multiplier(mesh.dim(), j, E, mesh.r());
  b->mult.resize(spec.size());
  for (int q = 0; q < spec.size(); ++q) {
    b->degree.push_back(spec.degree_of(q));
    b->mult(q) = m[spec.degree_of(q)];
  }
  std::lock_guard<std::mutex> lock(mu);
  if (cache.size() > 64) cache.clear();
  cache.emplace(key, b);
  return b;
}

}  // namespace detail

/// Builds phi from an interior field using boundary geometry only (no
/// potential needed: v vanishes in the annulus r1 < |x| < r).
inline GlobalSolution build_phi(const InteriorField& f, double E, const BoundaryMesh& mesh, double r1,
                                const PhiOptions& opt = {}) {
  const int d = mesh.dim();
  const double r = mesh.r();
  require(r1 < r, "build_phi: support radius must be below r");
  GlobalSolution g;
  g.E = E;
  g.r1 = r1;
  g.mesh = mesh;
  if (opt.check_residual) {
    // 4th-order Laplacian in the annulus, where the equation is Delta phi + E phi = 0.
    const double s = (r - r1) / 16.0;
    std::vector<std::pair<Point, double>> map;
    for (const auto& x : detail::annulus_samples(d, 0.5 * (r + r1))) {
      const Complex c = f.eval(x);
      Complex lap = -30.0 * d * c;
      double mag = std::abs(c);
      for (int a = 0; a < d; ++a)
        for (int m : {-2, -1, 1, 2}) {
          Point y = x;
          y[a] += m * s;
          const Complex fy = f.eval(y);
          lap += (std::abs(m) == 1 ? 16.0 : -1.0) * fy;
          mag = std::max(mag, std::abs(fy));
        }
      lap /= 12.0 * s * s;
      const double res = mag > 0.0 ? std::abs(lap + E * c) / (std::max(E, 1.0) * mag) : 0.0;
      map.push_back({x, res});
      g.pde_residual = std::max(g.pde_residual, res);
    }
    if (g.pde_residual > opt.residual_tol)
      throw PhiRejected("build_phi: interior residual " + std::to_string(g.pde_residual) + " exceeds " +
                            std::to_string(opt.residual_tol),
                        std::move(map));
  }
  const int M = mesh.size();
  const int J = opt.J < 0 ? mesh.max_exact_degree() : opt.J;
  const double s = opt.fd_step * r;
  g.trace.resize(M);
  g.dnu_minus.resize(M);
  for (int i = 0; i < M; ++i) {
    const Point x = mesh.node(i), nu = mesh.normal(i);
    g.trace[i] = f.eval(x);
    // One-sided second-order differences at depths s, s/2, s/4, Richardson-combined.
    auto D = [&](double t) {
      return (3.0 * g.trace[i] - 4.0 * f.eval(x - t * nu) + f.eval(x - 2.0 * t * nu)) / (2.0 * t);
    };
    g.dnu_minus[i] = (D(s) - 12.0 * D(0.5 * s) + 32.0 * D(0.25 * s)) / 21.0;
  }
  if (J > mesh.max_exact_degree())
    throw DomainError("build_phi: cutoff J = " + std::to_string(J) + " aliases on this mesh");
  const auto basis = detail::boundary_basis(mesh, J, E);
  Eigen::VectorXcd wu(M);
  for (int i = 0; i < M; ++i) wu(i) = mesh.weight(i) * g.trace[i];
  const Eigen::VectorXcd c = basis->Y.transpose() * wu;
  g.expansion.dim = d;
  g.expansion.r = r;
  g.expansion.E = E;
  g.expansion.J = J;
  g.expansion.mesh = mesh;
  g.expansion.coeffs.assign(c.data(), c.data() + c.size());
  const Eigen::VectorXcd dplus = basis->Y * c.cwiseProduct(basis->mult);
  const Eigen::VectorXcd resynth = basis->Y * c;
  g.dnu_plus.assign(dplus.data(), dplus.data() + M);
  double tmax = 0.0, dmax = 0.0;
  g.jump.resize(M);
  for (int i = 0; i < M; ++i) {
    g.jump[i] = g.dnu_plus[i] - g.dnu_minus[i];
    tmax = std::max(tmax, std::abs(g.trace[i]));
    dmax = std::max(dmax, std::abs(resynth(i) - g.trace[i]));
  }
  g.trace_residual = tmax > 0.0 ? dmax / tmax : 0.0;
  return g;
}

/// As above, also storing the interior field on the cells of v.
inline GlobalSolution build_phi(const GridPotential& v, const InteriorField& f, double E, const BoundaryMesh& mesh,
                                const PhiOptions& opt = {}) {
  require(mesh.dim() == v.dim() && mesh.r() == v.r(), "build_phi: mesh does not match the potential geometry");
  auto g = build_phi(f, E, mesh, v.r1(), opt);
  g.interior.resize(static_cast<std::size_t>(v.size()));
  for (int i = 0; i < v.size(); ++i) g.interior[i] = f.cell_value(i, v.center(i));
  return g;
}

/// sum_ij w_i w_j a_i (S1 - S2)_ij b_j
inline Complex boundary_pairing(const ComplexVector& a, const NearFieldMatrix& S1, const NearFieldMatrix& S2,
                                const ComplexVector& b) {
  if (!S1.mesh.same_as(S2.mesh)) throw DomainError("boundary_pairing: meshes differ");
  const auto& w = S1.mesh.weights();
  const int M = S1.mesh.size();
  require(static_cast<int>(a.size()) == M && static_cast<int>(b.size()) == M, "boundary_pairing: size mismatch");
  CVec wb(M);
  for (int j = 0; j < M; ++j) wb(j) = w[j] * b[j];
  const CVec Sb = (S1.S - S2.S) * wb;
  Complex s = 0.0;
  for (int i = 0; i < M; ++i) s += w[i] * a[i] * Sb(i);
  return s;
}

struct IdentityReport {
  Complex lhs, rhs;
  double relative_error = 0.0;
};

/// lhs = int_{B_r} (v2 - v1) phi1 phi2 by grid quadrature; rhs = boundary
/// pairing of the jumps against S1 - S2.
inline IdentityReport alessandrini_check(const GridPotential& v1, const GridPotential& v2, const GlobalSolution& p1,
                                         const GlobalSolution& p2, const NearFieldMatrix& S1,
                                         const NearFieldMatrix& S2) {
  if (!v1.same_grid(v2)) throw DomainError("alessandrini_check: potentials on different grids");
  if (!p1.mesh.same_as(p2.mesh) || !p1.mesh.same_as(S1.mesh) || !S1.mesh.same_as(S2.mesh))
    throw DomainError("alessandrini_check: boundary meshes differ");
  if (p1.E != p2.E || p1.E != S1.E || S1.E != S2.E) throw DomainError("alessandrini_check: energies differ");
  if (static_cast<int>(p1.interior.size()) != v1.size() || static_cast<int>(p2.interior.size()) != v1.size())
    throw DomainError("alessandrini_check: interior fields not sampled on the potential grid");
  IdentityReport rep;
  for (int i = 0; i < v1.size(); ++i) {
    const double dv = v2[i] - v1[i];
    if (dv != 0.0) rep.lhs += dv * p1.interior[i] * p2.interior[i];
  }
  rep.lhs *= v1.cell_volume();
  rep.rhs = boundary_pairing(p1.jump, S1, S2, p2.jump);
  const double scale = std::abs(rep.lhs);
  rep.relative_error = scale > 0.0 ? std::abs(rep.lhs - rep.rhs) / scale : std::abs(rep.rhs);
  return rep;
}

/// Data-side estimate of h2 - h1 (d = 3, scaled by (2 pi)^{-3}) or of
/// delta h (d = 2, unscaled) from the two data matrices and probe solutions.
inline Complex estimate_hdiff_from_data(const NearFieldMatrix& S1, const NearFieldMatrix& S2, const GlobalSolution& p1,
                                        const GlobalSolution& p2) {
  if (!p1.mesh.same_as(S1.mesh) || !p2.mesh.same_as(S1.mesh)) throw DomainError("estimate_hdiff_from_data: meshes differ");
  const Complex rhs = boundary_pairing(p1.jump, S1, S2, p2.jump);
  return S1.mesh.dim() == 3 ? rhs / std::pow(2.0 * kPi, 3) : rhs;
}

}  // namespace nfis
