#pragma once

// Nystrom solver for the scattering of point sources by a compactly
// supported potential, and assembly of the near-field data matrix on the
// measurement sphere.
//
// Sign conventions. R0 is the outgoing kernel with (Delta + E) R0 = delta.
// The total Green's function T(., y) of Delta + E - v solves
//     T = R0(., y) + R0 v T.
// Near-field data are S(x, y) = -(T(x, y) - R0(x, y)), so that the data
// vanish for v = 0, the first-order term is -(R0 v R0), and the boundary
// identity pairs S1 - S2 with the jumps of solutions of -Delta + v - E.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nfis/common.hpp"
#include "nfis/grid.hpp"
#include "nfis/linalg.hpp"
#include "nfis/specfun.hpp"

namespace nfis {

namespace kernel {

/// R0+(t) for d in {2, 3} and wavenumber k = sqrt(E).
inline Complex outgoing(int d, double k, double t) {
  if (d == 3) return specfun::free_green_3d(k, t);
  return -0.25 * kI * specfun::hankel1(0.0, k * t);
}

/// Gradient of R0+(x - z) with respect to x.
inline std::array<Complex, 3> outgoing_grad(int d, double k, const Point& x, const Point& z) {
  const Point diff = x - z;
  const double t = norm(diff);
  Complex dr;
  if (d == 3) {
    dr = -std::polar(1.0, k * t) * (kI * k * t - 1.0) / (4.0 * kPi * t * t);
  } else {
    dr = 0.25 * kI * k * specfun::hankel1(1.0, k * t);  // d/dt of -(i/4) H0(kt)
  }
  return {dr * diff[0] / t, dr * diff[1] / t, dr * diff[2] / t};
}

/// Integral of R0+(0, z) over the cell [-h/2, h/2]^d.
///   d = 2: equal-area disc in closed form, plus the exact log-singular
///          difference between square and disc.
///   d = 3: exact 1/|z| integral plus the first two Taylor terms of the
///          smooth remainder (e^{ikt} - 1)/t.
inline Complex singular_cell(int d, double k, double h) {
  if (d == 2) {
    const double R = h / std::sqrt(kPi);
    const Complex disc = -0.25 * kI * (2.0 * kPi / (k * k)) *
                         (k * R * specfun::hankel1(1.0, k * R) + 2.0 * kI / kPi);
    const double a = 0.5 * h;
    const double log_square = 2.0 * a * a * (2.0 * std::log(a) + std::log(2.0) - 3.0 + 0.5 * kPi);
    const double log_disc = kPi * R * R * (std::log(R) - 0.5);
    return disc + (log_square - log_disc) / (2.0 * kPi);
  }
  constexpr double inv_r_unit_cube = 2.38007736397955;   // int_{[-1/2,1/2]^3} 1/|z|
  constexpr double r_unit_cube = 0.480295978247272;      // int_{[-1/2,1/2]^3} |z|
  const Complex smooth = kI * k * h * h * h - 0.5 * k * k * r_unit_cube * std::pow(h, 4);
  return -(inv_r_unit_cube * h * h + smooth) / (4.0 * kPi);
}

}  // namespace kernel

/// Complex matrix S[i][j] ~ S+(x_i, y_j, E) on a boundary mesh.
struct NearFieldMatrix {
  double E = 1.0;
  BoundaryMesh mesh;
  CMat S;
  // Provenance of the potential; written to the file header.
  double r1 = 0.0;
  int n = 0;
  Regularity meta{};

  double max_abs() const { return S.size() ? S.cwiseAbs().maxCoeff() : 0.0; }
  /// max |S_ij - S_ji| / max |S|
  double reciprocity_defect() const {
    const double m = max_abs();
    if (m == 0.0) return 0.0;
    return (S - S.transpose()).cwiseAbs().maxCoeff() / m;
  }
};

struct ForwardOptions {
  /// Active-cell count above which the restarted GMRES path is used.
  int dense_limit = 4500;
  double residual_tol = 1e-10;
  int gmres_restart = 80;
  int gmres_max_iter = 2000;
  bool force_iterative = false;
};

/// Discretized operator I - K V on the active cells of a potential, where
/// (K f)(z_i) = sum_j R0(z_i, z_j) h^d f_j with the integrated kernel on the
/// diagonal. Factorized once; shared read-only between sources.
class ForwardSolver {
 public:
  ForwardSolver(const GridPotential& v, double E, ForwardOptions opt = {})
      : dim_(v.dim()), E_(E), k_(std::sqrt(E)), h_(v.h()), vol_(v.cell_volume()), opt_(opt) {
    require(E > 0.0, "ForwardSolver: energy must be positive");
    for (int idx : v.active_cells()) {
      cells_.push_back(idx);
      centers_.push_back(v.center(idx));
      vw_.push_back(v[idx] * v.cell_volume());
      vals_.push_back(v[idx]);
    }
    diag_ = kernel::singular_cell(dim_, k_, h_);
    build_table(v.n());
    iterative_ = opt_.force_iterative || active() > opt_.dense_limit;
    if (active() > 0 && !iterative_) factorize();
  }

  int dim() const { return dim_; }
  double energy() const { return E_; }
  int active() const { return static_cast<int>(cells_.size()); }
  bool iterative() const { return iterative_; }
  const std::vector<int>& cells() const { return cells_; }
  const std::vector<Point>& centers() const { return centers_; }
  /// v(z_j) h^d on the active cells.
  const std::vector<double>& weights() const { return vw_; }

  /// Kernel R0(z_i, z_j) h^d between active cells (integrated cell on i == j).
  Complex cell_kernel(int i, int j) const {
    if (i == j) return diag_;
    return table_[table_index(i, j)] * vol_;
  }

  /// f - K V f on the active cells.
  CVec apply(const CVec& f) const {
    CVec out = f;
    const int n = active();
    for (int i = 0; i < n; ++i) {
      Complex s = 0.0;
      for (int j = 0; j < n; ++j) s += cell_kernel(i, j) * vals_[j] * f(j);
      out(i) -= s;
    }
    return out;
  }

  /// Solve (I - K V) X = B column by column.
  CMat solve(const CMat& B) const {
    if (active() == 0) return B;
    CMat X(B.rows(), B.cols());
    if (!iterative_) {
      X = lu_->solve(B);
      const double bn = B.norm();
      if (bn > 0.0) {
        const double rel = (dense_ * X - B).norm() / bn;
        if (!(rel <= opt_.residual_tol))
          throw ConvergenceError("forward solve residual " + std::to_string(rel) +
                                 " exceeds tolerance at E = " + std::to_string(E_));
      }
      return X;
    }
    for (Eigen::Index c = 0; c < B.cols(); ++c) {
      auto res = gmres([this](const CVec& f) { return apply(f); }, B.col(c), opt_.residual_tol * 0.1,
                       opt_.gmres_restart, opt_.gmres_max_iter);
      X.col(c) = res.x;
    }
    return X;
  }

  /// R0(z_i, y) for each active cell: the incident field of a point source.
  CVec source_column(const Point& y) const {
    CVec b(active());
    for (int i = 0; i < active(); ++i) b(i) = kernel::outgoing(dim_, k_, distance(centers_[i], y));
    return b;
  }

  /// sum_j R0(x, z_j) v_j h^d f_j for x away from the active cells.
  Complex represent(const Point& x, const CVec& f) const {
    Complex s = 0.0;
    for (int j = 0; j < active(); ++j) s += kernel::outgoing(dim_, k_, distance(x, centers_[j])) * vw_[j] * f(j);
    return s;
  }

  /// Gradient in x of represent(x, f).
  std::array<Complex, 3> represent_grad(const Point& x, const CVec& f) const {
    std::array<Complex, 3> g{0.0, 0.0, 0.0};
    for (int j = 0; j < active(); ++j) {
      const auto d = kernel::outgoing_grad(dim_, k_, x, centers_[j]);
      for (int a = 0; a < 3; ++a) g[a] += d[a] * vw_[j] * f(j);
    }
    return g;
  }

 private:
  void build_table(int n) {
    // The off-diagonal kernel depends only on the absolute index offsets.
    n_ = n;
    const int cnt = dim_ == 2 ? n * n : n * n * n;
    table_.assign(static_cast<std::size_t>(cnt), Complex(0.0));
    for (int t = 1; t < cnt; ++t) {
      int a = t / (dim_ == 2 ? n : n * n);
      int b = (t / (dim_ == 2 ? 1 : n)) % n;
      int c = dim_ == 2 ? 0 : t % n;
      const double dist = h_ * std::sqrt(double(a) * a + double(b) * b + double(c) * c);
      table_[t] = kernel::outgoing(dim_, k_, dist);
    }
    idx_.clear();
    for (int cell : cells_) {
      std::array<int, 3> ii{0, 0, 0};
      int rem = cell;
      for (int a = dim_ - 1; a >= 0; --a) {
        ii[a] = rem % n;
        rem /= n;
      }
      idx_.push_back(ii);
    }
  }

  int table_index(int i, int j) const {
    const int a = std::abs(idx_[i][0] - idx_[j][0]);
    const int b = std::abs(idx_[i][1] - idx_[j][1]);
    const int c = std::abs(idx_[i][2] - idx_[j][2]);
    return dim_ == 2 ? a * n_ + b : (a * n_ + b) * n_ + c;
  }

  void factorize() {
    const int n = active();
    dense_.resize(n, n);
    for (int j = 0; j < n; ++j) {
      const double vj = vals_[j];
      for (int i = 0; i < n; ++i) dense_(i, j) = (i == j ? 1.0 : 0.0) - cell_kernel(i, j) * vj;
    }
    lu_ = std::make_unique<Eigen::PartialPivLU<CMat>>(dense_);
    const double rc = lu_->rcond();
    if (!(rc > 1e-13))
      throw ConvergenceError("forward operator is numerically singular (rcond " + std::to_string(rc) +
                             ") at E = " + std::to_string(E_));
  }

  int dim_;
  double E_;
  double k_;
  double h_;
  double vol_;
  int n_ = 0;
  ForwardOptions opt_;
  std::vector<int> cells_;
  std::vector<Point> centers_;
  std::vector<double> vw_;
  std::vector<double> vals_;
  std::vector<std::array<int, 3>> idx_;
  std::vector<Complex> table_;
  Complex diag_;
  bool iterative_ = false;
  CMat dense_;
  std::unique_ptr<Eigen::PartialPivLU<CMat>> lu_;
};

/// S+(., y, E) on every cell of the potential grid.
inline ComplexVector scattered_field(const GridPotential& v, double E, const Point& y,
                                     ForwardOptions opt = {}) {
  require(E > 0.0, "scattered_field: energy must be positive");
  require(std::fabs(norm(y) - v.r()) <= 1e-9 * v.r(), "scattered_field: source must lie on the sphere |y| = r");
  ComplexVector out(static_cast<std::size_t>(v.size()), Complex(0.0));
  ForwardSolver solver(v, E, opt);
  if (solver.active() == 0) return out;
  CMat B = solver.source_column(y);
  CVec T = solver.solve(B).col(0);
  // Inside the support, T - R0 = K V T; elsewhere evaluate the representation.
  CVec KVT = CVec(T.size());
  {
    CVec f = T;
    CVec applied = solver.apply(f);  // T - K V T
    KVT = T - applied;
  }
  std::vector<int> pos(static_cast<std::size_t>(v.size()), -1);
  for (int a = 0; a < solver.active(); ++a) pos[solver.cells()[a]] = a;
  for (int i = 0; i < v.size(); ++i) {
    if (pos[i] >= 0) {
      out[i] = -KVT(pos[i]);
    } else {
      out[i] = -solver.represent(v.center(i), T);
    }
  }
  return out;
}

/// Near-field data matrix: one solve per source, evaluation at the receivers
/// by the same cell quadrature.
inline NearFieldMatrix near_field_data(const GridPotential& v, double E, const BoundaryMesh& mesh,
                                       ForwardOptions opt = {}) {
  require(mesh.dim() == v.dim(), "near_field_data: mesh dimension mismatch");
  require(mesh.r() > v.r1(), "near_field_data: mesh radius must exceed the support radius");
  NearFieldMatrix out;
  out.E = E;
  out.mesh = mesh;
  out.r1 = v.r1();
  out.n = v.n();
  out.meta = v.regularity();
  const int M = mesh.size();
  out.S = CMat::Zero(M, M);
  ForwardSolver solver(v, E, opt);
  if (solver.active() == 0) return out;
  CMat B(solver.active(), M);
  for (int j = 0; j < M; ++j) B.col(j) = solver.source_column(mesh.node(j));
  CMat T = solver.solve(B);
  // S(x_i, y_j) = -sum_z R0(x_i, z) v(z) h^d T(z, y_j), and R0(x_i, z) = B(z, i).
  Eigen::VectorXd w(solver.active());
  for (int a = 0; a < solver.active(); ++a) w(a) = solver.weights()[a];
  out.S = -(B.transpose() * (w.asDiagonal() * T));
  return out;
}

/// Quadrature-weighted L2(dB_r x dB_r) norm of S1 - S2.
inline double data_norm_diff(const NearFieldMatrix& S1, const NearFieldMatrix& S2) {
  if (!S1.mesh.same_as(S2.mesh) || S1.S.rows() != S2.S.rows() || S1.S.cols() != S2.S.cols())
    throw DomainError("data_norm_diff: meshes differ");
  if (S1.E != S2.E) throw DomainError("data_norm_diff: energies differ");
  const auto& w = S1.mesh.weights();
  double s = 0.0;
  for (Eigen::Index i = 0; i < S1.S.rows(); ++i)
    for (Eigen::Index j = 0; j < S1.S.cols(); ++j) s += w[i] * w[j] * std::norm(S1.S(i, j) - S2.S(i, j));
  return std::sqrt(s);
}

/// Weighted matrix W^{1/2} (S1 - S2) W^{1/2}: its spectral norm is the
/// operator norm of the boundary integral operator with kernel S1 - S2.
inline CMat weighted_difference(const NearFieldMatrix& S1, const NearFieldMatrix& S2) {
  if (!S1.mesh.same_as(S2.mesh)) throw DomainError("weighted_difference: meshes differ");
  const auto& w = S1.mesh.weights();
  CMat D = S1.S - S2.S;
  for (Eigen::Index i = 0; i < D.rows(); ++i)
    for (Eigen::Index j = 0; j < D.cols(); ++j) D(i, j) *= std::sqrt(w[i] * w[j]);
  return D;
}

}  // namespace nfis
