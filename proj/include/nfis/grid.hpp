#pragma once

// Potentials sampled on uniform cell-centered box grids, and quadrature
// meshes on the sphere boundary.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "nfis/common.hpp"
#include "nfis/specfun.hpp"

namespace nfis {

/// Regularity metadata carried by a potential: Sobolev order m, norm bound N
/// and the boundary flatness order (number of vanishing derivatives at the
/// edge of the support; 0 if unknown, -1 for infinitely flat).
struct Regularity {
  double m = 0.0;
  double N = 1.0;
  int flatness = 0;
};

/// Real potential on the cell centers of [-r1, r1]^d, n cells per axis,
/// vanishing at centers outside B_{r1}. The ambient radius r > r1 is the
/// radius of the measurement sphere.
class GridPotential {
 public:
  GridPotential() = default;

  GridPotential(int dim, int n, double r1, double r, std::vector<double> values, Regularity meta)
      : dim_(dim), n_(n), r1_(r1), r_(r), values_(std::move(values)), meta_(meta) {
    require(dim == 2 || dim == 3, "GridPotential: dimension must be 2 or 3");
    require(n >= 1, "GridPotential: grid size must be positive");
    require(r1 > 0.0 && r > r1, "GridPotential: radii must satisfy 0 < r1 < r");
    require(values_.size() == static_cast<std::size_t>(size()), "GridPotential: value count mismatch");
    if (dim == 3) require(meta_.m > 3.0, "GridPotential: d = 3 requires Sobolev order m > d");
    for (int i = 0; i < size(); ++i) {
      require(std::isfinite(values_[i]), "GridPotential: non-finite value");
      if (values_[i] != 0.0 && norm(center(i)) > r1_)
        throw DomainError("GridPotential: nonzero value outside the support ball B_r1");
    }
    require(sup_norm() <= meta_.N * (1.0 + 1e-12), "GridPotential: sup norm exceeds declared bound N");
  }

  /// Sample f at cell centers; centers outside B_{r1} are set to zero.
  static GridPotential sample(int dim, int n, double r1, double r,
                              const std::function<double(const Point&)>& f, Regularity meta) {
    GridPotential probe(dim, n, r1, r);
    std::vector<double> vals(static_cast<std::size_t>(probe.size()), 0.0);
    for (int i = 0; i < probe.size(); ++i) {
      const Point c = probe.center(i);
      if (norm(c) <= r1) vals[i] = f(c);
    }
    return GridPotential(dim, n, r1, r, std::move(vals), meta);
  }

  static GridPotential zero(int dim, int n, double r1, double r, Regularity meta = {6.0, 1.0, -1}) {
    GridPotential probe(dim, n, r1, r);
    return GridPotential(dim, n, r1, r, std::vector<double>(static_cast<std::size_t>(probe.size()), 0.0),
                         meta);
  }

  int dim() const { return dim_; }
  int n() const { return n_; }
  double r1() const { return r1_; }
  double r() const { return r_; }
  double h() const { return 2.0 * r1_ / n_; }
  double cell_volume() const { return std::pow(h(), dim_); }
  int size() const { return dim_ == 2 ? n_ * n_ : n_ * n_ * n_; }
  const Regularity& regularity() const { return meta_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](int i) const { return values_[i]; }

  int index(int i, int j, int k = 0) const { return dim_ == 2 ? i * n_ + j : (i * n_ + j) * n_ + k; }

  /// Cell center of the flattened index (row-major, first axis slowest).
  Point center(int idx) const {
    const double hh = h();
    Point p{0.0, 0.0, 0.0};
    int rem = idx;
    for (int a = dim_ - 1; a >= 0; --a) {
      const int ia = rem % n_;
      rem /= n_;
      p[a] = -r1_ + (ia + 0.5) * hh;
    }
    return p;
  }

  double sup_norm() const {
    double m = 0.0;
    for (double x : values_) m = std::max(m, std::fabs(x));
    return m;
  }

  /// Flattened indices of cells with nonzero value.
  std::vector<int> active_cells() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
      if (values_[i] != 0.0) out.push_back(i);
    return out;
  }

  bool same_grid(const GridPotential& o) const {
    return dim_ == o.dim_ && n_ == o.n_ && r1_ == o.r1_ && r_ == o.r_;
  }

  /// Pointwise difference this - other, with metadata of the larger bound.
  GridPotential minus(const GridPotential& other) const {
    require(same_grid(other), "GridPotential::minus: grid mismatch");
    std::vector<double> d(values_.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = values_[i] - other.values_[i];
    Regularity meta{std::min(meta_.m, other.meta_.m), meta_.N + other.meta_.N,
                    std::min(meta_.flatness, other.meta_.flatness)};
    return GridPotential(dim_, n_, r1_, r_, std::move(d), meta);
  }

  double max_abs_difference(const GridPotential& other) const {
    require(same_grid(other), "max_abs_difference: grid mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) m = std::max(m, std::fabs(values_[i] - other.values_[i]));
    return m;
  }

 private:
  GridPotential(int dim, int n, double r1, double r) : dim_(dim), n_(n), r1_(r1), r_(r) {
    require(dim == 2 || dim == 3, "GridPotential: dimension must be 2 or 3");
    require(n >= 1, "GridPotential: grid size must be positive");
    require(r1 > 0.0 && r > r1, "GridPotential: radii must satisfy 0 < r1 < r");
  }

  int dim_ = 2;
  int n_ = 1;
  double r1_ = 0.5;
  double r_ = 1.0;
  std::vector<double> values_;
  Regularity meta_{};
};

/// Quadrature nodes on the sphere of radius r. Circle: uniform trapezoid.
/// Sphere: Gauss-Legendre in cos(theta) times uniform azimuth.
class BoundaryMesh {
 public:
  BoundaryMesh() = default;

  static BoundaryMesh circle(double r, int nodes) {
    require(r > 0.0 && nodes >= 1, "BoundaryMesh::circle: invalid parameters");
    BoundaryMesh m;
    m.dim_ = 2;
    m.r_ = r;
    m.n_polar_ = nodes;
    m.n_azimuth_ = 1;
    const double w = 2.0 * kPi * r / nodes;
    for (int i = 0; i < nodes; ++i) {
      const double t = 2.0 * kPi * i / nodes;
      m.nodes_.push_back({r * std::cos(t), r * std::sin(t), 0.0});
      m.weights_.push_back(w);
    }
    return m;
  }

  static BoundaryMesh sphere(double r, int n_polar, int n_azimuth) {
    require(r > 0.0 && n_polar >= 1 && n_azimuth >= 1, "BoundaryMesh::sphere: invalid parameters");
    BoundaryMesh m;
    m.dim_ = 3;
    m.r_ = r;
    m.n_polar_ = n_polar;
    m.n_azimuth_ = n_azimuth;
    auto [x, w] = specfun::gauss_legendre(n_polar);
    for (int i = 0; i < n_polar; ++i) {
      const double ct = x[i];
      const double st = std::sqrt(1.0 - ct * ct);
      for (int j = 0; j < n_azimuth; ++j) {
        const double phi = 2.0 * kPi * j / n_azimuth;
        m.nodes_.push_back({r * st * std::cos(phi), r * st * std::sin(phi), r * ct});
        m.weights_.push_back(r * r * w[i] * 2.0 * kPi / n_azimuth);
      }
    }
    return m;
  }

  /// 128 nodes on the circle; 16 x 32 on the sphere.
  static BoundaryMesh default_for(int dim, double r) {
    return dim == 2 ? circle(r, 128) : sphere(r, 16, 32);
  }

  static BoundaryMesh make(int dim, double r, int n_polar, int n_azimuth) {
    return dim == 2 ? circle(r, n_polar) : sphere(r, n_polar, n_azimuth);
  }

  int dim() const { return dim_; }
  double r() const { return r_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int n_polar() const { return n_polar_; }
  int n_azimuth() const { return n_azimuth_; }
  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  const Point& node(int i) const { return nodes_[i]; }
  double weight(int i) const { return weights_[i]; }
  Point normal(int i) const { return (1.0 / r_) * nodes_[i]; }

  /// Largest harmonic degree J whose pairwise products the rule integrates exactly.
  int max_exact_degree() const {
    if (dim_ == 2) return (n_polar_ - 1) / 2;
    return std::min(n_polar_ - 1, (n_azimuth_ - 1) / 2);
  }

  bool same_as(const BoundaryMesh& o) const {
    return dim_ == o.dim_ && r_ == o.r_ && n_polar_ == o.n_polar_ && n_azimuth_ == o.n_azimuth_;
  }

 private:
  int dim_ = 2;
  double r_ = 1.0;
  int n_polar_ = 0;
  int n_azimuth_ = 0;
  std::vector<Point> nodes_;
  std::vector<double> weights_;
};

/// Surface measure |dB_r|.
inline double sphere_area(int dim, double r) { return dim == 2 ? 2.0 * kPi * r : 4.0 * kPi * r * r; }

/// Weighted L2 norm of boundary samples.
inline double boundary_l2(const BoundaryMesh& mesh, const ComplexVector& u) {
  double s = 0.0;
  for (int i = 0; i < mesh.size(); ++i) s += mesh.weight(i) * std::norm(u[i]);
  return std::sqrt(s);
}

}  // namespace nfis
