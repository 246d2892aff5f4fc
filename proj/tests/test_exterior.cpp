#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nfis/exterior.hpp"

using namespace nfis;

namespace {

ComplexVector mode_samples(const BoundaryMesh& mesh, int j, int p) {
  ComplexVector u;
  for (const auto& x : mesh.nodes())
    u.push_back(specfun::eval_harmonic(mesh.dim(), j, p, (1.0 / norm(x)) * x) * std::pow(mesh.r(), -0.5 * (mesh.dim() - 1)));
  return u;
}

ComplexVector random_bandlimited(const BoundaryMesh& mesh, int J, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  HarmonicExpansion e;
  e.dim = mesh.dim();
  e.r = mesh.r();
  e.J = J;
  for (int i = 0; i < e.basis().size(); ++i) e.coeffs.push_back({g(rng), g(rng)});
  return synthesize(e, mesh);
}

}  // namespace

TEST(ExpandTrace, ConstantTraceHasOnlyDegreeZero) {
  for (const auto& mesh : {BoundaryMesh::circle(1.2, 64), BoundaryMesh::sphere(0.8, 12, 24)}) {
    auto e = expand_trace(ComplexVector(mesh.size(), Complex(2.0, -1.0)), mesh, 8);
    EXPECT_GT(std::abs(e.coeffs[0]), 1.0);
    for (std::size_t i = 1; i < e.coeffs.size(); ++i) EXPECT_LT(std::abs(e.coeffs[i]), 1e-12);
  }
}

TEST(ExpandTrace, SingleModeIsOrthonormal) {
  for (const auto& mesh : {BoundaryMesh::circle(1.0, 64), BoundaryMesh::sphere(1.5, 12, 24)}) {
    const int J = 10;
    specfun::HarmonicBasisSpec b(mesh.dim(), J);
    for (int j : {0, 3, 10}) {
      for (int p = 1; p <= specfun::harmonic_dim(mesh.dim(), j); p += 2) {
        auto e = expand_trace(mode_samples(mesh, j, p), mesh, J);
        for (int i = 0; i < b.size(); ++i)
          EXPECT_NEAR(std::abs(e.coeffs[i] - (i == b.index(j, p) ? 1.0 : 0.0)), 0.0, 1e-10);
      }
    }
  }
}

TEST(ExpandTrace, ParsevalForSmoothTrace) {
  auto mesh = BoundaryMesh::circle(1.0, 128);
  ComplexVector u;
  for (const auto& x : mesh.nodes()) u.push_back(std::exp(Complex(std::cos(std::atan2(x[1], x[0])), 0.3 * x[1])));
  auto e = expand_trace(u, mesh, 40);
  EXPECT_NEAR(e.sobolev_norm(0), boundary_l2(mesh, u), 1e-8);
}

TEST(ExpandTrace, ResynthesisIsIdentityOnBandLimitedTraces) {
  for (const auto& mesh : {BoundaryMesh::circle(1.0, 64), BoundaryMesh::sphere(1.0, 16, 32)}) {
    const int J = mesh.dim() == 2 ? 20 : 12;
    auto u = random_bandlimited(mesh, J, 7);
    auto back = synthesize(expand_trace(u, mesh, J), mesh);
    for (int i = 0; i < mesh.size(); ++i) EXPECT_LT(std::abs(back[i] - u[i]), 1e-10);
  }
}

TEST(ExpandTrace, AliasingCutoffThrows) {
  auto mesh = BoundaryMesh::circle(1.0, 32);
  ComplexVector u(32, 1.0);
  EXPECT_NO_THROW(expand_trace(u, mesh, 15));
  EXPECT_THROW(expand_trace(u, mesh, 16), DomainError);
  auto sph = BoundaryMesh::sphere(1.0, 8, 16);
  EXPECT_THROW(expand_trace(ComplexVector(sph.size(), 1.0), sph, 8), DomainError);
}

TEST(Dtn, ThreeDimensionalDegreeZeroClosedForm) {
  for (double E : {1.0, 4.0, 25.0}) {
    const Complex m = dtn_multiplier(3, 0, E, 1.0);
    EXPECT_LT(std::abs(m - Complex(-1.0, std::sqrt(E))), 1e-10);
  }
  EXPECT_LT(std::abs(dtn_multiplier(3, 0, 4.0, 1.0) - Complex(-1.0, 2.0)), 1e-10);
}

TEST(Dtn, ModulusBound) {
  for (int d : {2, 3})
    for (double E : {0.01, 1.0, 100.0})
      for (int j = 1; j <= 50; ++j) EXPECT_LE(std::abs(dtn_multiplier(d, j, E, 1.0)), j + d - 2 + 2 * E) << d << " " << j << " " << E;
  EXPECT_LE(std::abs(dtn_multiplier(3, 5, 1.0, 1.0)), 8.0);
}

TEST(Dtn, TwoDimensionalDegreeZeroGrowsLikeSqrtE) {
  double c = 0.0;
  for (double lg = -2.0; lg <= 2.0; lg += 0.1) {
    const double E = std::pow(10.0, lg);
    c = std::max(c, std::abs(dtn_multiplier(2, 0, E, 1.0)) / (1.0 + std::sqrt(E)));
  }
  EXPECT_LT(c, 2.0);
  EXPECT_GT(c, 0.1);
}

TEST(Dtn, TwoDimensionalDegreeZeroSignedAndUnsignedForms) {
  for (double E : {0.01, 1.0, 100.0}) {
    const Complex signed_value = dtn_multiplier(2, 0, E, 1.0);
    const Complex unsigned_value = unsigned_degree_zero_ratio_2d(E, 1.0);
    EXPECT_LT(std::abs(signed_value + unsigned_value), 1e-12 * std::abs(signed_value));
    EXPECT_NEAR(std::abs(signed_value), std::abs(unsigned_value), 1e-12 * std::abs(signed_value));
  }
}

TEST(Dtn, GeneralRadiusScales) {
  // h_j(t) depends on sqrt(E) t only, up to the power prefactor.
  const Complex a = dtn_multiplier(3, 4, 2.0, 2.0);
  const Complex b = dtn_multiplier(3, 4, 8.0, 1.0);
  EXPECT_LT(std::abs(2.0 * a - b), 1e-12);
}

TEST(ExteriorNormalDerivative, ZeroAndSingleMode) {
  auto mesh = BoundaryMesh::circle(1.0, 32);
  auto z = expand_trace(ComplexVector(32, 0.0), mesh, 6, 2.0);
  for (auto v : exterior_normal_derivative(z)) EXPECT_EQ(std::abs(v), 0.0);
  auto u = mode_samples(mesh, 3, 2);
  auto e = expand_trace(u, mesh, 6, 2.0);
  auto du = exterior_normal_derivative(e);
  const Complex m = dtn_multiplier(2, 3, 2.0, 1.0);
  for (int i = 0; i < 32; ++i) EXPECT_LT(std::abs(du[i] - m * u[i]), 1e-10);
}

TEST(ExteriorNormalDerivative, MatchesOneSidedDifference) {
  for (const auto& mesh : {BoundaryMesh::circle(1.0, 64), BoundaryMesh::sphere(1.0, 12, 24)}) {
    const int J = 6;
    auto e = expand_trace(random_bandlimited(mesh, J, 3), mesh, J, 3.0);
    auto trace = synthesize(e, mesh);
    auto dn = exterior_normal_derivative(e);
    const double s = 1e-4;
    for (int i = 0; i < mesh.size(); i += 7) {
      const Point n = mesh.normal(i);
      const Complex f1 = radiating_extension_eval(e, mesh.node(i) + s * n);
      const Complex f2 = radiating_extension_eval(e, mesh.node(i) + (2 * s) * n);
      const Complex fd = (-3.0 * trace[i] + 4.0 * f1 - f2) / (2.0 * s);
      EXPECT_LT(std::abs(fd - dn[i]), 1e-4);
    }
  }
}

TEST(RadiatingExtension, TraceLimitHelmholtzAndRadiation) {
  for (const auto& mesh : {BoundaryMesh::circle(1.0, 64), BoundaryMesh::sphere(1.0, 12, 24)}) {
    const int d = mesh.dim();
    const double E = 2.5;
    auto e = expand_trace(random_bandlimited(mesh, 5, 11), mesh, 5, E);
    auto trace = synthesize(e, mesh);
    for (int i = 0; i < mesh.size(); i += 9)
      EXPECT_LT(std::abs(radiating_extension_eval(e, (1.0 + 1e-12) * mesh.node(i)) - trace[i]), 1e-8);
    EXPECT_THROW(radiating_extension_eval(e, mesh.node(0)), DomainError);

    const double s = 1e-2;  // fourth-order stencil
    for (Point x : {Point{1.3, 0.4, d == 3 ? -0.5 : 0.0}, Point{-2.0, 1.1, d == 3 ? 0.7 : 0.0}}) {
      Complex lap = 0.0;
      const Complex f0 = radiating_extension_eval(e, x);
      for (int a = 0; a < d; ++a) {
        auto at = [&](double off) {
          Point y = x;
          y[a] += off;
          return radiating_extension_eval(e, y);
        };
        lap += (-at(2 * s) + 16.0 * at(s) - 30.0 * f0 + 16.0 * at(-s) - at(-2 * s)) / (12.0 * s * s);
      }
      EXPECT_LT(std::abs(lap + E * f0), 1e-5);
    }

    const Point dir = (1.0 / std::sqrt(1.0 + 0.09 + 0.04)) * Point{1.0, 0.3, d == 3 ? 0.2 : 0.0};
    Point unit = dir;
    if (d == 2) unit = (1.0 / std::hypot(dir[0], dir[1])) * Point{dir[0], dir[1], 0.0};
    double prev = 1e300;
    for (double t : {5.0, 10.0, 20.0}) {
      const double hh = 1e-4 * t;
      const Complex f = radiating_extension_eval(e, t * unit);
      const Complex df = (radiating_extension_eval(e, (t + hh) * unit) - radiating_extension_eval(e, (t - hh) * unit)) / (2 * hh);
      const double q = std::pow(t, 0.5 * (d - 1)) * std::abs(df - Complex(0.0, std::sqrt(E)) * f);
      EXPECT_LT(q, prev);
      prev = q;
    }
  }
}

TEST(DtnRatio, SingleModeRatioAndRandomSearch) {
  auto rep = verify_dtn_ratio_bound(3, 2.0, 1.0, 16, 100, 5);
  for (int j = 0; j <= 16; ++j)
    EXPECT_NEAR(rep.mode_ratio[j], std::abs(dtn_multiplier(3, j, 2.0, 1.0)) / (3.0 * (1.0 + j)), 1e-14);
  EXPECT_LE(rep.worst_random_ratio, rep.c7 * (1.0 + 1e-12));
  EXPECT_GT(rep.worst_random_ratio, 0.0);
}

TEST(DtnRatio, SingleConstantAcrossEnergySweep) {
  for (int d : {2, 3}) {
    double c7 = 0.0;
    for (double lg = -2.0; lg <= 2.0; lg += 0.25) c7 = std::max(c7, verify_dtn_ratio_bound(d, std::pow(10.0, lg), 1.0, 32).c7);
    EXPECT_LE(c7, 2.0);
  }
}
