#pragma once

// Potential families used by the experiments: a C-infinity bump, a
// polynomial bump with prescribed boundary flatness, and a two-bump sum.

#include <cmath>
#include <string>
#include <vector>

#include "nfis/common.hpp"
#include "nfis/grid.hpp"

namespace nfis {

enum class BumpKind { Smooth, Polynomial };

/// One radially symmetric bump centred at `center` with support radius `radius`.
///   Smooth:     amplitude * exp(1 - 1 / (1 - s^2)),  s = |x - c| / radius
///   Polynomial: amplitude * (1 - s^2)^q
struct Bump {
  BumpKind kind = BumpKind::Smooth;
  Point center{0.0, 0.0, 0.0};
  double radius = 0.5;
  double amplitude = 1.0;
  int q = 4;

  double operator()(const Point& x) const {
    const double s2 = dot(x - center, x - center) / (radius * radius);
    if (s2 >= 1.0) return 0.0;
    if (kind == BumpKind::Smooth) return amplitude * std::exp(1.0 - 1.0 / (1.0 - s2));
    return amplitude * std::pow(1.0 - s2, q);
  }
};

/// A sum of bumps (one bump, or the two-bump family).
struct PotentialFamily {
  std::vector<Bump> bumps;

  double operator()(const Point& x) const {
    double s = 0.0;
    for (const auto& b : bumps) s += b(x);
    return s;
  }

  /// Sobolev order realized by the family: q for polynomial bumps (the q-th
  /// derivative jumps at the support edge), `smooth_order` for C-infinity bumps.
  double sobolev_order(double smooth_order = 6.0) const {
    double m = smooth_order;
    for (const auto& b : bumps)
      if (b.kind == BumpKind::Polynomial) m = std::min(m, static_cast<double>(b.q));
    return m;
  }

  int flatness() const {
    int f = -1;
    for (const auto& b : bumps)
      if (b.kind == BumpKind::Polynomial) f = (f < 0) ? b.q : std::min(f, b.q);
    return f;
  }

  PotentialFamily scaled(double factor) const {
    PotentialFamily out = *this;
    for (auto& b : out.bumps) b.amplitude *= factor;
    return out;
  }

  PotentialFamily plus(const PotentialFamily& other) const {
    PotentialFamily out = *this;
    out.bumps.insert(out.bumps.end(), other.bumps.begin(), other.bumps.end());
    return out;
  }
};

/// Max over the grid of |v| + |grad v| + |Hessian v| (centred differences):
/// a proxy for the C^2 norm.
inline double c2_norm_proxy(const PotentialFamily& f, int dim, double r1, int n) {
  const double h = 2.0 * r1 / n;
  const double e = 1e-4;
  double best = 0.0;
  const int total = dim == 2 ? n * n : n * n * n;
  for (int idx = 0; idx < total; ++idx) {
    Point x{0.0, 0.0, 0.0};
    int rem = idx;
    for (int a = dim - 1; a >= 0; --a) {
      x[a] = -r1 + ((rem % n) + 0.5) * h;
      rem /= n;
    }
    if (norm(x) > r1) continue;
    const double f0 = f(x);
    double g2 = 0.0;
    double hmax = 0.0;
    for (int a = 0; a < dim; ++a) {
      Point xp = x;
      Point xm = x;
      xp[a] += e;
      xm[a] -= e;
      const double fp = f(xp);
      const double fm = f(xm);
      g2 += std::pow((fp - fm) / (2 * e), 2);
      hmax = std::max(hmax, std::fabs(fp - 2 * f0 + fm) / (e * e));
    }
    best = std::max(best, std::fabs(f0) + std::sqrt(g2) + hmax);
  }
  return best;
}

/// Sample a family onto a grid, with metadata N >= the C^2 proxy and >= sup.
inline GridPotential generate_potential(const PotentialFamily& family, int dim, int n, double r1,
                                        double r, double smooth_order = 6.0) {
  for (const auto& b : family.bumps) {
    require(b.radius > 0.0, "generate_potential: bump radius must be positive");
    if (norm(b.center) + b.radius > r1 * (1.0 + 1e-12))
      throw DomainError("generate_potential: bump support leaves the ball B_r1");
    if (r1 >= r) throw DomainError("generate_potential: support radius must be smaller than r");
  }
  const double proxy = c2_norm_proxy(family, dim, r1, n);
  Regularity meta{family.sobolev_order(smooth_order), std::max(proxy * 1.05, 1e-300), family.flatness()};
  if (dim == 3 && meta.m <= 3.0)
    throw DomainError("generate_potential: d = 3 needs Sobolev order m > 3");
  return GridPotential::sample(dim, n, r1, r, family, meta);
}

}  // namespace nfis
