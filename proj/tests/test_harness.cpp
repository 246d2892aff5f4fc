#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "nfis/harness.hpp"
#include "nfis/io.hpp"
#include "nfis/potentials.hpp"
#include "nfis/stability.hpp"

using namespace nfis;

namespace {

Bump smooth(Point c, double radius, double amp) {
  Bump b;
  b.center = c;
  b.radius = radius;
  b.amplitude = amp;
  return b;
}

struct Pair2D {
  GridPotential v1, v2;
};

Pair2D standard_pair(int n) {
  const Bump a = smooth({0.1, -0.05, 0.0}, 0.45, 1.0), b = smooth({-0.15, 0.1, 0.0}, 0.4, 0.6);
  return {generate_potential(PotentialFamily{{a}}, 2, n, 0.7, 1.0),
          generate_potential(PotentialFamily{{a, b}}, 2, n, 0.7, 1.0)};
}

double identity_error(int n, int nodes, double fd) {
  const double E = 2.0, k = std::sqrt(E);
  auto [v1, v2] = standard_pair(n);
  const auto mesh = BoundaryMesh::circle(1.0, nodes);
  const auto S1 = near_field_data(v1, E, mesh), S2 = near_field_data(v2, E, mesh);
  PhiOptions o;
  o.fd_step = fd;
  const auto p1 = build_phi(v1, total_field(v1, E, exponential_field({k, 0.0, 0.0})), E, mesh, o);
  const auto p2 = build_phi(v2, total_field(v2, E, exponential_field({k * std::cos(2.0), k * std::sin(2.0), 0.0})), E,
                            mesh, o);
  return alessandrini_check(v1, v2, p1, p2, S1, S2).relative_error;
}

std::string tmp(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("nfis_test_" + name)).string();
}

}  // namespace

TEST(BuildPhi, ZeroFieldGivesZeroJump) {
  const auto mesh = BoundaryMesh::circle(1.0, 64);
  InteriorField zero{[](const Point&) { return Complex(0.0); }, {}};
  const auto g = build_phi(zero, 2.0, mesh, 0.7);
  for (const auto& j : g.jump) EXPECT_EQ(j, Complex(0.0));
}

TEST(BuildPhi, PlaneWaveJumpMatchesJacobiAnger) {
  // e^{i k x1} = sum eps_j i^j J_j(kr) cos(j theta); the jump of mode j is
  // eps_j i^j (2i / (pi r H_j(kr))) times the basis normalization.
  const double E = 3.0, k = std::sqrt(E), r = 1.0;
  const auto mesh = BoundaryMesh::circle(r, 96);
  const auto g = build_phi(exponential_field({k, 0.0, 0.0}), E, mesh, 0.7);
  const auto je = expand_trace(g.jump, mesh, 20, E);
  for (int j = 0; j <= 12; ++j) {
    const double eps = j == 0 ? 1.0 : 2.0;
    const double nrm = j == 0 ? std::sqrt(2 * kPi * r) : std::sqrt(kPi * r);
    const Complex ij = std::pow(kI, j);
    const Complex ref = nrm * eps * ij * 2.0 * kI / (kPi * r * specfun::hankel1(j, k * r));
    EXPECT_LT(std::abs(je.coeff(j, 1) - ref), 1e-7 * std::max(1.0, std::abs(ref))) << j;
    if (j > 0) EXPECT_LT(std::abs(je.coeff(j, 2)), 1e-8) << j;
  }
  EXPECT_LT(g.trace_residual, 1e-12);
}

TEST(BuildPhi, RejectsNonSolution) {
  const auto mesh = BoundaryMesh::circle(1.0, 64);
  InteriorField bad{[](const Point& x) { return Complex(x[0] * x[0]); }, {}};
  try {
    build_phi(bad, 2.0, mesh, 0.7);
    FAIL() << "expected rejection";
  } catch (const PhiRejected& e) {
    EXPECT_FALSE(e.residual_map().empty());
  }
}

TEST(BuildPhi, InteriorDerivativeMatchesRepresentationGradient) {
  const double E = 2.0, k = std::sqrt(E);
  auto [v1, v2] = standard_pair(32);
  (void)v2;
  ForwardSolver solver(v1, E);
  CMat B(solver.active(), 1);
  for (int a = 0; a < solver.active(); ++a) B(a, 0) = std::exp(kI * k * solver.centers()[a][0]);
  const CVec T = solver.solve(B).col(0);
  const auto mesh = BoundaryMesh::circle(1.0, 32);
  const auto g = build_phi(v1, total_field(v1, E, exponential_field({k, 0.0, 0.0})), E, mesh);
  for (int i = 0; i < mesh.size(); ++i) {
    const Point x = mesh.node(i), nu = mesh.normal(i);
    const auto grad = solver.represent_grad(x, T);
    const Complex exact = kI * k * nu[0] * std::exp(kI * k * x[0]) + grad[0] * nu[0] + grad[1] * nu[1];
    EXPECT_LT(std::abs(g.dnu_minus[i] - exact), 1e-7) << i;
  }
}

TEST(Alessandrini, EqualPotentialsGiveZero) {
  auto [v1, v2] = standard_pair(24);
  (void)v2;
  const double E = 2.0;
  const auto mesh = BoundaryMesh::circle(1.0, 64);
  const auto S = near_field_data(v1, E, mesh);
  const auto p = build_phi(v1, total_field(v1, E, exponential_field({std::sqrt(E), 0.0, 0.0})), E, mesh);
  const auto rep = alessandrini_check(v1, v1, p, p, S, S);
  EXPECT_EQ(rep.lhs, Complex(0.0));
  EXPECT_EQ(rep.rhs, Complex(0.0));
}

TEST(Alessandrini, StandardPairAndRefinement) {
  const double coarse = identity_error(24, 64, 0.04);
  const double fine = identity_error(48, 128, 0.02);
  EXPECT_LE(fine, 2e-2);
  EXPECT_GE(std::log2(coarse / fine), 0.9);
}

TEST(Alessandrini, GeometryMismatchThrows) {
  auto [v1, v2] = standard_pair(16);
  const double E = 2.0;
  const auto m1 = BoundaryMesh::circle(1.0, 32), m2 = BoundaryMesh::circle(1.0, 48);
  const auto S1 = near_field_data(v1, E, m1), S2 = near_field_data(v2, E, m2);
  const auto f = exponential_field({std::sqrt(E), 0.0, 0.0});
  const auto p1 = build_phi(v1, f, E, m1), p2 = build_phi(v2, f, E, m2);
  EXPECT_THROW(alessandrini_check(v1, v2, p1, p2, S1, S2), DomainError);
}

TEST(Alessandrini, BoundChainAndOperatorNorm) {
  auto [v1, v2] = standard_pair(24);
  const double E = 2.0;
  const auto mesh = BoundaryMesh::circle(1.0, 64);
  const auto S1 = near_field_data(v1, E, mesh), S2 = near_field_data(v2, E, mesh);
  const double delta = data_norm_diff(S1, S2);
  EXPECT_LE(operator_norm(weighted_difference(S1, S2)), delta * (1 + 1e-9));
  for (double t : {0.0, 1.0, 2.5}) {
    const auto p1 = build_phi(exponential_field({std::sqrt(E) * std::cos(t), std::sqrt(E) * std::sin(t), 0.0}), E, mesh, 0.7);
    const auto p2 = build_phi(exponential_field({-std::sqrt(E), 0.0, 0.0}), E, mesh, 0.7);
    const Complex est = estimate_hdiff_from_data(S1, S2, p1, p2);
    EXPECT_LE(std::abs(est), delta * p1.jump_norm() * p2.jump_norm() * (1 + 1e-9));
  }
}

TEST(EstimateHdiff, EqualDataGivesZero) {
  auto [v1, v2] = standard_pair(16);
  (void)v2;
  const auto mesh = BoundaryMesh::circle(1.0, 32);
  const auto S = near_field_data(v1, 2.0, mesh);
  const auto p = build_phi(exponential_field({1.0, 1.0, 0.0}), 2.0, mesh, 0.7);
  EXPECT_EQ(estimate_hdiff_from_data(S, S, p, p), Complex(0.0));
}

TEST(JumpNorm, FaddeevProbeGrowthShape) {
  // ||jump|| / ((1 + E) e^{|Im k| (r + 1)}) stays bounded along a rho ladder.
  const double E = 4.0;
  const auto mesh = BoundaryMesh::sphere(1.0, 16, 32);
  double lo = 1e300, hi = 0.0;
  for (double rho : {0.5, 1.0, 2.0, 3.0, 4.0}) {
    const auto pair = make_theta_pair(E, {0.5, 0.0, 0.2}, rho);
    const auto g = build_phi(exponential_field(pair.k.k), E, mesh, 0.7);
    const double ratio = g.jump_norm() / ((1 + E) * std::exp(rho * 2.0));
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 10.0);
  RecordProperty("sigma_c5", std::to_string(hi));
}

TEST(ChooseParameters, ReproducesFormulas) {
  auto c3 = choose_parameters(std::exp(-10.0), 1.0, 0.5, 1.0, 3);
  EXPECT_NEAR(c3.beta, 0.125, 1e-14);
  EXPECT_NEAR(c3.rho, 0.125 * std::log(3.0 + std::exp(10.0)), 1e-14);
  EXPECT_NEAR(c3.rho, 1.25002, 1e-5);
  EXPECT_NEAR(c3.kappa, 0.5 * std::pow(1.0 + c3.rho * c3.rho, 1.0 / 6.0), 1e-14);
  auto c2 = choose_parameters(0.01, 1.0, 0.5, 1.0, 2);
  EXPECT_NEAR(c2.beta, 0.03125, 1e-14);
  EXPECT_THROW(choose_parameters(0.1, 1.0, 1.0, 1.0, 3), DomainError);
  EXPECT_THROW(choose_parameters(0.1, 1.0, 0.0, 1.0, 3), DomainError);
  double prev = 0.0;
  for (double delta : {1e-1, 1e-2, 1e-4, 1e-8}) {
    const double rho = choose_parameters(delta, 1.0, 0.3, 1.0, 3).rho;
    EXPECT_GT(rho, prev);
    prev = rho;
  }
}

TEST(Fits, LogLogAndEnvelope) {
  std::vector<double> x{1, 2, 4, 8}, y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -1.5));
  const auto f = fit_loglog(x, y);
  EXPECT_NEAR(f.slope, -1.5, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-12);
  const auto e = fit_envelope({1e-2, 1e-3, 1e-4}, {1.0, 0.1, 0.01}, log_envelope_2d);
  EXPECT_EQ(e.anchor, 0);
  EXPECT_TRUE(e.holds);
  const auto bad = fit_envelope({1e-2, 1e-3}, {0.1, 1.0}, log_envelope_2d);
  EXPECT_FALSE(bad.holds);
}

TEST(BornInversion, EqualDataGivesZeroField) {
  const auto v = generate_potential(PotentialFamily{{smooth({0, 0, 0}, 0.5, 0.05)}}, 3, 8, 0.7, 1.0);
  const auto mesh = BoundaryMesh::sphere(1.0, 12, 24);
  const auto S = near_field_data(v, 4.0, mesh);
  BornInversionOptions o;
  o.n_rad = 4;
  o.n_polar = 6;
  o.n_azimuth = 12;
  const auto g = born_invert_difference(S, S, 4.0, 1.0, 2.0, v, o);
  for (double x : g.values) EXPECT_EQ(x, 0.0);
  EXPECT_TRUE(g.below_noise);
  EXPECT_THROW(born_invert_difference(S, S, 4.0, 1.0, 5.0, v, o), ConstraintError);
}

TEST(BornInversion, WeakBumpMatchesLowPass) {
  const double E = 25.0, rho = 2.0, kappa = 5.0;
  const auto v1 = GridPotential::zero(3, 12, 0.7, 1.0);
  const auto v2 = generate_potential(PotentialFamily{{smooth({0.05, -0.04, 0.03}, 0.5, 0.05)}}, 3, 12, 0.7, 1.0);
  const auto mesh = BoundaryMesh::sphere(1.0, 16, 32);
  const auto S1 = near_field_data(v1, E, mesh), S2 = near_field_data(v2, E, mesh);
  const auto est = born_invert_difference(S1, S2, E, rho, kappa, v1);
  const auto ref = lowpass_difference(v1, v2, kappa);
  double err = 0.0;
  for (std::size_t i = 0; i < est.values.size(); ++i) err = std::max(err, std::fabs(est.values[i] - ref.values[i]));
  EXPECT_LE(err / ref.sup(), 0.3);
  EXPECT_FALSE(est.below_noise);
}

TEST(TailBound, MonotoneAndDecaying) {
  Bump b;
  b.kind = BumpKind::Polynomial;
  b.q = 4;
  b.radius = 0.55;
  b.center = {0.05, -0.04, 0.0};
  const auto v1 = GridPotential::zero(2, 128, 0.7, 1.0);
  const auto v2 = generate_potential(PotentialFamily{{b}}, 2, 128, 0.7, 1.0);
  std::vector<double> ks;
  for (double k = 4; k <= 128; k *= std::pow(2.0, 0.25)) ks.push_back(k);
  ks.push_back(1e6);
  const auto t = tail_bound_check(v1, v2, ks);
  for (std::size_t i = 1; i < ks.size(); ++i) EXPECT_LE(t.I2[i], t.I2[i - 1]);
  EXPECT_EQ(t.I2.back(), 0.0);
  EXPECT_LE(t.exponent, -(4.0 - 2.0) + 0.5);
}

TEST(TailBound, SmoothPairDecaysFasterThanOrderSix) {
  // A C-infinity bump has a stretched-exponential spectrum; its log-log slope
  // only passes -(6 - 2) once sqrt(kappa * radius) is large, hence the window.
  auto [v1, v2] = standard_pair(256);
  std::vector<double> ks;
  for (double k = 64; k <= 400; k *= std::pow(2.0, 0.25)) ks.push_back(k);
  const auto t = tail_bound_check(v1, v2, ks);
  EXPECT_LT(ks.back(), t.max_frequency);
  EXPECT_LE(t.exponent, -(6.0 - 2.0) + 0.5);
}

TEST(StabilitySweep, IdenticalRowAndEnvelope) {
  Json j = {{"dimension", 2},
            {"grid", 24},
            {"mesh", {{"polar", 64}}},
            {"base", {{{"center", {0.1, -0.05}}, {"radius", 0.45}, {"amplitude", 1.0}}}},
            {"perturbation", {{{"center", {-0.15, 0.1}}, {"radius", 0.4}, {"amplitude", 1.0}}}},
            {"amplitudes", {0.0, 0.05, 0.1, 0.2}},
            {"energies", {2.0}}};
  const auto c = parse_config(j);
  const auto res = stability_sweep(c, 2);
  ASSERT_EQ(res.records.size(), 4u);
  EXPECT_EQ(res.records[0].delta, 0.0);
  EXPECT_EQ(res.records[0].sup_diff, 0.0);
  for (const auto& r : res.records) {
    EXPECT_EQ(r.status, "ok");
    EXPECT_GE(r.delta, 0.0);
    EXPECT_GE(r.holder_term, 0.0);
    EXPECT_GE(r.log_term, 0.0);
  }
  ASSERT_EQ(res.fits.size(), 1u);
  EXPECT_TRUE(res.fits[0].sup_envelope.holds);
  // Deterministic: a second run reproduces every record.
  const auto again = stability_sweep(c, 1);
  for (std::size_t i = 0; i < res.records.size(); ++i) EXPECT_EQ(again.records[i].cells(), res.records[i].cells());
}

TEST(Config, RejectsInvalidDocuments) {
  EXPECT_THROW(parse_config(Json{{"tau", 1.5}}), ConfigError);
  EXPECT_THROW(parse_config(Json{{"r1", 1.2}, {"r", 1.0}}), ConfigError);
  EXPECT_THROW(parse_config(Json{{"dimension", 4}}), ConfigError);
  EXPECT_THROW(parse_config(Json{{"base", {{{"kind", "gaussian"}}}}}), ConfigError);
  EXPECT_THROW(parse_config(Json{{"energies", "two"}}), ConfigError);
  EXPECT_NO_THROW(parse_config(Json::object()));
}

TEST(FileFormats, PotentialRoundTripIsBitExact) {
  Bump b;
  b.kind = BumpKind::Polynomial;
  b.q = 4;
  const auto v = generate_potential(PotentialFamily{{b}}, 3, 10, 0.7, 1.0);
  const auto path = tmp("pot.bin");
  write_potential(path, v, 2.0);
  const auto w = read_potential(path);
  ASSERT_TRUE(v.same_grid(w));
  EXPECT_EQ(v.values(), w.values());
  EXPECT_EQ(v.regularity().m, w.regularity().m);
  EXPECT_EQ(v.regularity().N, w.regularity().N);
  EXPECT_EQ(v.regularity().flatness, 4);
  EXPECT_EQ(w.regularity().flatness, 4);
  std::filesystem::remove(path);
}

TEST(FileFormats, MatrixRoundTripIsBitExact) {
  const auto v = generate_potential(PotentialFamily{{smooth({0, 0, 0}, 0.5, 1.0)}}, 2, 16, 0.7, 1.0);
  const auto S = near_field_data(v, 2.0, BoundaryMesh::circle(1.0, 24));
  const auto path = tmp("mat.bin");
  write_matrix(path, S);
  const auto T = read_matrix(path);
  EXPECT_TRUE(S.mesh.same_as(T.mesh));
  EXPECT_EQ(S.E, T.E);
  EXPECT_TRUE((S.S.array() == T.S.array()).all());
  std::filesystem::remove(path);
}

TEST(FileFormats, RejectsMalformedFiles) {
  const auto path = tmp("bad.bin");
  {
    std::ofstream os(path);
    os << "NFIS-POTENTIAL 1\ndimension 2\nr1 0.5\nr 1\nn 4\nE 0\nm 6\nN 1\nflatness -1\nend\nshort";
  }
  EXPECT_THROW(read_potential(path), IoError);
  {
    std::ofstream os(path);
    os << "something else\n";
  }
  EXPECT_THROW(read_potential(path), IoError);
  EXPECT_THROW(read_matrix(path), IoError);
  std::filesystem::remove(path);
}

TEST(GeneratePotential, FlatnessAndMetadata) {
  Bump b;
  b.kind = BumpKind::Polynomial;
  b.q = 4;
  b.radius = 0.6;
  const PotentialFamily f{{b}};
  // Near the support edge the bump behaves like t^4 (t = distance to the edge),
  // so the k-th one-sided difference scales like s^(4 - k).
  auto diff = [&](int order, double s) {
    double fd = 0.0;
    for (int i = 0; i <= order; ++i) {
      const double c = std::tgamma(order + 1.0) / (std::tgamma(i + 1.0) * std::tgamma(order - i + 1.0));
      fd += ((order - i) % 2 ? -1.0 : 1.0) * c * f({0.6 - i * s, 0.0, 0.0});
    }
    return std::fabs(fd) / std::pow(s, order);
  };
  for (int order = 1; order <= 4; ++order) {
    const double ratio = diff(order, 1e-3) / diff(order, 5e-4);
    EXPECT_NEAR(ratio, std::pow(2.0, 4 - order), 0.1 * std::pow(2.0, 4 - order)) << order;
  }
  const auto v = generate_potential(f, 2, 32, 0.7, 1.0);
  EXPECT_GE(v.regularity().N, c2_norm_proxy(f, 2, 0.7, 32));
  EXPECT_EQ(v.regularity().flatness, 4);
  const auto z = generate_potential(PotentialFamily{{smooth({0, 0, 0}, 0.5, 0.0)}}, 2, 16, 0.7, 1.0);
  EXPECT_EQ(z.sup_norm(), 0.0);
  EXPECT_THROW(generate_potential(PotentialFamily{{smooth({0.5, 0, 0}, 0.5, 1.0)}}, 2, 16, 0.7, 1.0), DomainError);
}
