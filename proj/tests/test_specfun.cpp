#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/hankel.hpp>

#include <Eigen/Dense>

#include "nfis/specfun.hpp"

using namespace nfis;
using namespace nfis::specfun;

TEST(Hankel, Smoke) {
  for (double x : {1e-3, 0.5, 1.0, 5.0, 13.9, 14.1, 30.0, 1e3}) {
    for (double nu : {0.0, 1.0, 0.5, 1.5, 5.0, 10.5}) {
      Complex ref = boost::math::cyl_hankel_1(nu, x);
      Complex got = hankel1(nu, x);
      EXPECT_LT(std::abs(got - ref) / std::abs(ref), 1e-10) << nu << " " << x;
    }
  }
}

TEST(Hankel, SpotPointsAgainstIndependentOracle) {
  // 20 (order, argument) pairs spread over the supported range.
  const std::pair<double, double> pts[] = {{0, 0.01}, {0, 1.0},   {0, 7.3},   {0, 120.0}, {1, 0.2},
                                           {1, 2.5},  {1, 40.0},  {2, 3.3},   {3, 0.9},   {4, 16.0},
                                           {0.5, 2.0}, {1.5, 0.4}, {2.5, 9.0}, {3.5, 25.0}, {5.5, 1.7},
                                           {7, 6.0},  {10, 11.0}, {10.5, 3.0}, {16.5, 20.0}, {32, 50.0}};
  for (auto [nu, x] : pts) {
    const Complex ref = boost::math::cyl_hankel_1(nu, x);
    EXPECT_LT(std::abs(hankel1(nu, x) - ref) / std::abs(ref), 1e-9) << nu << " " << x;
  }
}

TEST(Hankel, OrderZeroAtOneMatchesPowerSeries) {
  // J0(1) by its power series; Y0(1) from the tabulated value.
  long double j0 = 0.0L, term = 1.0L;
  for (int k = 0; k < 30; ++k) {
    j0 += term;
    term *= -0.25L / ((k + 1.0L) * (k + 1.0L));
  }
  const Complex h = hankel1(0.0, 1.0);
  EXPECT_NEAR(h.real(), static_cast<double>(j0), 1e-14);
  EXPECT_NEAR(h.imag(), 0.088256964215676957983, 1e-14);
}

TEST(Hankel, HalfOrderClosedForm) {
  const Complex v = hankel1(0.5, 2.0);
  // Reference quoted to five digits (truncated).
  EXPECT_NEAR(v.real(), 0.51302, 1e-5);
  EXPECT_NEAR(v.imag(), 0.23478, 1e-5);
  for (double t = 0.1; t <= 100.0; t *= 1.07) {
    const Complex closed = std::sqrt(2.0 / (kPi * t)) * std::polar(1.0, t - 0.5 * kPi);
    EXPECT_LT(std::abs(hankel1(0.5, t) - closed), 1e-12 * std::abs(closed)) << t;
  }
}

TEST(Hankel, LargeArgumentModulus) {
  double prev = 1.0;
  for (double x : {10.0, 100.0, 1000.0}) {
    const double dev = std::fabs(std::abs(hankel1(0.0, x)) * std::sqrt(kPi * x / 2.0) - 1.0);
    EXPECT_LT(dev, prev);
    prev = dev;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(Hankel, SmallArgumentAsymptotics) {
  const double gamma = 0.57721566490153286;
  for (double t : {1e-2, 1e-3, 1e-4}) {
    const Complex h0 = Complex(1.0, 2.0 / kPi * (std::log(t / 2.0) + gamma));
    const Complex h1 = Complex(0.0, -2.0 / (kPi * t));
    EXPECT_LT(std::abs(hankel1(0.0, t) - h0) / std::abs(h0), 0.05);
    EXPECT_LT(std::abs(hankel1(1.0, t) - h1) / std::abs(h1), 0.05);
  }
}

TEST(Hankel, BareLogarithmLeadingTermConvergesSlowly) {
  // (2i/pi) ln(t/2) alone: relative error decays like 1/|ln t| and is
  // below 5% only for t < 1e-14.
  double prev = 1.0;
  for (double t : {1e-2, 1e-4, 1e-8, 1e-12, 1e-16}) {
    const Complex lead(0.0, 2.0 / kPi * std::log(t / 2.0));
    const double rel = std::abs(hankel1(0.0, t) - lead) / std::abs(lead);
    EXPECT_LT(rel, prev);
    prev = rel;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(Hankel, ModulusNonIncreasing) {
  for (double mu = 0.0; mu <= 10.0; mu += 0.5) {
    double prev = std::abs(hankel1(mu, 0.1));
    for (double x = 0.1 * 1.02; x <= 50.0; x *= 1.02) {
      const double cur = std::abs(hankel1(mu, x));
      EXPECT_LE(cur, prev * (1.0 + 1e-13)) << mu << " " << x;
      prev = cur;
    }
  }
}

TEST(Hankel, DomainErrors) {
  EXPECT_THROW(hankel1(0.0, 0.0), DomainError);
  EXPECT_THROW(hankel1(0.0, -1.0), DomainError);
  EXPECT_THROW(hankel1(0.3, 1.0), DomainError);
  EXPECT_THROW(hankel1(-1.0, 1.0), DomainError);
  EXPECT_THROW(hankel1(500.0, 1.0), DomainError);
}

TEST(HankelDeriv, OrderZeroIsMinusOrderOne) {
  EXPECT_EQ(hankel1_deriv(0.0, 1.5), -hankel1(1.0, 1.5));
}

TEST(HankelDeriv, FiniteDifferenceAndOde) {
  const double s = 1e-5;
  const Complex fd = (hankel1(0.5, 2.0 + s) - hankel1(0.5, 2.0 - s)) / (2 * s);
  EXPECT_LT(std::abs(fd - hankel1_deriv(0.5, 2.0)), 1e-6);
  for (double nu : {1.0, 3.5, 7.0}) {
    const Complex f = (hankel1(nu, 4.0 + s) - hankel1(nu, 4.0 - s)) / (2 * s);
    EXPECT_LT(std::abs(f - hankel1_deriv(nu, 4.0)), 1e-6);
  }
  // x^2 H'' + x H' + x^2 H = 0 for order 0, with H'' from the derivative of -H_1.
  const double x = 3.0;
  const Complex H = hankel1(0.0, x), dH = hankel1_deriv(0.0, x);
  const Complex d2H = -hankel1_deriv(1.0, x);
  EXPECT_LT(std::abs(x * x * d2H + x * dH + x * x * H), 1e-8);
}

TEST(Harmonics, Dimensions) {
  EXPECT_EQ(harmonic_dim(3, 0), 1);
  EXPECT_EQ(harmonic_dim(3, 2), 5);
  EXPECT_EQ(harmonic_dim(2, 3), 2);
  EXPECT_EQ(harmonic_dim(2, 0), 1);
  for (int j = 0; j < 20; ++j) EXPECT_EQ(harmonic_dim(3, j), 2 * j + 1);
  HarmonicBasisSpec b(3, 4);
  EXPECT_EQ(b.size(), 25);
  EXPECT_EQ(b.degree_of(b.index(3, 7)), 3);
}

TEST(Harmonics, CircleClosedForms) {
  const double t = 0.7;
  const Point dir{std::cos(t), std::sin(t), 0.0};
  EXPECT_NEAR(eval_harmonic(2, 0, 1, dir), 1.0 / std::sqrt(2 * kPi), 1e-15);
  EXPECT_NEAR(eval_harmonic(2, 4, 1, dir), std::cos(4 * t) / std::sqrt(kPi), 1e-14);
  EXPECT_NEAR(eval_harmonic(2, 4, 2, dir), std::sin(4 * t) / std::sqrt(kPi), 1e-14);
  EXPECT_THROW(eval_harmonic(2, 4, 3, dir), DomainError);
  EXPECT_THROW(eval_harmonic(3, 1, 0, dir), DomainError);
}

TEST(Harmonics, OrthonormalUnderQuadrature) {
  for (int d : {2, 3}) {
    const int J = d == 2 ? 20 : 10;
    const int np = d == 2 ? 64 : 12;
    auto [gx, gw] = gauss_legendre(np);
    std::vector<std::pair<Point, double>> rule;
    if (d == 2) {
      for (int i = 0; i < np; ++i) {
        const double t = 2 * kPi * i / np;
        rule.push_back({{std::cos(t), std::sin(t), 0.0}, 2 * kPi / np});
      }
    } else {
      const int na = 24;
      for (int i = 0; i < np; ++i)
        for (int a = 0; a < na; ++a) {
          const double st = std::sqrt(1 - gx[i] * gx[i]), ph = 2 * kPi * a / na;
          rule.push_back({{st * std::cos(ph), st * std::sin(ph), gx[i]}, gw[i] * 2 * kPi / na});
        }
    }
    HarmonicBasisSpec b(d, J);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(b.size(), b.size());
    for (auto& [x, w] : rule) {
      auto f = harmonic_values(d, J, x);
      Eigen::Map<Eigen::VectorXd> v(f.data(), f.size());
      G += w * v * v.transpose();
    }
    EXPECT_LT((G - Eigen::MatrixXd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff(), 1e-10) << d;
  }
}

TEST(Harmonics, HomogeneousExtensionIsHarmonic) {
  const double s = 1e-2;
  for (int d : {2, 3}) {
    for (int j : {1, 2, 5}) {
      for (int p = 1; p <= harmonic_dim(d, j); ++p) {
        auto F = [&](const Point& x) { return std::pow(norm(x), j) * eval_harmonic(d, j, p, (1.0 / norm(x)) * x); };
        const Point x{0.31, -0.22, d == 3 ? 0.4 : 0.0};
        double lap = 0.0;
        for (int a = 0; a < d; ++a) {
          auto at = [&](double off) {
            Point y = x;
            y[a] += off;
            return F(y);
          };
          lap += (-at(2 * s) + 16 * at(s) - 30 * F(x) + 16 * at(-s) - at(-2 * s)) / (12 * s * s);
        }
        EXPECT_LT(std::fabs(lap), 1e-6) << d << " " << j << " " << p;
      }
    }
  }
}

TEST(FreeGreen, ValuesAndInvariance) {
  const Complex g3 = free_green(3, 1.0, {0, 0, 0}, {1, 0, 0});
  EXPECT_NEAR(g3.real(), -0.04300, 5e-6);
  EXPECT_NEAR(g3.imag(), -0.06696, 5e-6);
  EXPECT_LT(std::abs(g3 + std::polar(1.0, 1.0) / (4 * kPi)), 1e-14);
  const Complex g2 = free_green(2, 1.0, {0, 0, 0}, {0.6, 0.8, 0});
  EXPECT_LT(std::abs(g2 + 0.25 * kI * hankel1(0.0, 1.0)), 1e-14);
  const Point x{0.375, -0.125, 0.75}, y{-0.5, 0.625, 0.25}, a{1.25, -2.5, 0.5};  // exact sums
  for (int d : {2, 3}) EXPECT_EQ(free_green(d, 3.0, x + a, y + a), free_green(d, 3.0, x, y));
  EXPECT_THROW(free_green(3, 1.0, x, x), SingularityError);
  for (double t : {0.1, 1.0, 4.0}) EXPECT_LT(std::abs(free_green(3, 2.0, {0, 0, 0}, {0, 0, t}) - free_green_3d(std::sqrt(2.0), t)), 1e-13);
}

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  auto [x, w] = gauss_legendre(10);
  for (int k = 0; k < 20; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], k);
    EXPECT_NEAR(s, k % 2 ? 0.0 : 2.0 / (k + 1), 1e-14);
  }
}
