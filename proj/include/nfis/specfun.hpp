#pragma once

// Hankel functions of the first kind for integer and half-integer order,
// real spherical harmonics on S^1 and S^2, and the free outgoing Green's
// function of the Helmholtz operator.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "nfis/common.hpp"

namespace nfis::specfun {

/// Largest order accepted by hankel1. Upward recurrence overflows long before
/// this for small arguments; overflow is reported as a DomainError.
inline constexpr double kMaxHankelOrder = 200.5;

namespace detail {

inline constexpr long double kEulerGamma = 0.577215664901532860606512090082402431L;
inline constexpr double kSeriesCrossover = 14.0;

// J_n and Y_n (n = 0, 1) from their ascending series, in extended precision.
inline std::pair<double, double> bessel_jy_series(int n, double xd) {
  const long double x = xd;
  const long double q = -x * x / 4.0L;
  const long double pi = std::numbers::pi_v<long double>;
  const long double half = x / 2.0L;
  const long double half_n = (n == 0) ? 1.0L : half;
  const long double n_fact = 1.0L;  // n! for n in {0, 1}

  long double term = 1.0L / n_fact;  // q^k / (k! (n+k)!)
  long double harm_k = 0.0L;         // H_k
  long double harm_nk = (n == 0) ? 0.0L : 1.0L;  // H_{n+k}
  long double jsum = 0.0L;
  long double ysum = 0.0L;
  for (int k = 0; k < 200; ++k) {
    if (k > 0) {
      term *= q / (static_cast<long double>(k) * static_cast<long double>(n + k));
      harm_k += 1.0L / k;
      harm_nk += 1.0L / (n + k);
    }
    jsum += term;
    // psi(k+1) + psi(n+k+1) = -2 gamma + H_k + H_{n+k}
    ysum += term * (-2.0L * kEulerGamma + harm_k + harm_nk);
    if (k > 4 && std::fabs(term) * (1.0L + std::fabs(harm_k + harm_nk)) <
                     1e-22L * std::max(std::fabs(jsum), 1e-300L))
      break;
  }
  const long double jn = half_n * jsum;
  long double yn = (2.0L / pi) * std::log(half) * jn - (1.0L / pi) * half_n * ysum;
  if (n == 1) yn -= (1.0L / pi) / half;
  return {static_cast<double>(jn), static_cast<double>(yn)};
}

// Hankel's asymptotic expansion, truncated at the smallest term.
inline Complex hankel1_asymptotic(double order, double x) {
  const double mu = 4.0 * order * order;
  Complex sum = 1.0;
  Complex ik = 1.0;  // i^k
  double ak = 1.0;   // a_k(order) / x^k
  double prev = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    ak *= (mu - odd * odd) / (k * 8.0 * x);
    ik *= kI;
    const double mag = std::fabs(ak);
    if (mag > prev) break;
    sum += ik * ak;
    prev = mag;
    if (mag < 1e-17) break;
  }
  const double phase = x - 0.5 * order * kPi - 0.25 * kPi;
  return std::sqrt(2.0 / (kPi * x)) * std::polar(1.0, phase) * sum;
}

inline Complex hankel1_base_integer(int n, double x) {
  if (x <= kSeriesCrossover) {
    auto [j, y] = bessel_jy_series(n, x);
    return {j, y};
  }
  return hankel1_asymptotic(static_cast<double>(n), x);
}

inline void check_hankel_args(double order, double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw DomainError("hankel1: argument must be positive and finite, got " + std::to_string(x));
  const double twice = 2.0 * order;
  if (!(order >= 0.0) || order > kMaxHankelOrder || std::fabs(twice - std::round(twice)) > 1e-12)
    throw DomainError("hankel1: unsupported order " + std::to_string(order));
}

}  // namespace detail

/// H^{(1)}_{first + n}(x) for n = 0..count-1, where first is 0 or 1/2.
/// Integer orders start from H_0, H_1 (series or asymptotic expansion);
/// half-integer orders start from the closed forms for H_{1/2}, H_{3/2}.
/// Higher orders follow by upward recurrence, which is stable for H^{(1)}.
inline std::vector<Complex> hankel1_sequence(double first, int count, double x) {
  detail::check_hankel_args(first + std::max(count - 1, 0), x);
  require(first == 0.0 || first == 0.5, "hankel1_sequence: first order must be 0 or 1/2");
  std::vector<Complex> out(static_cast<std::size_t>(std::max(count, 0)));
  if (count <= 0) return out;
  Complex h0;
  Complex h1;
  if (first == 0.0) {
    h0 = detail::hankel1_base_integer(0, x);
    h1 = detail::hankel1_base_integer(1, x);
  } else {
    const double amp = std::sqrt(2.0 / (kPi * x));
    const Complex e = std::polar(1.0, x);
    h0 = -kI * amp * e;
    h1 = -amp * e * Complex(1.0, 1.0 / x);
  }
  out[0] = h0;
  if (count > 1) out[1] = h1;
  for (int n = 2; n < count; ++n) {
    const double nu = first + n - 1;
    out[n] = (2.0 * nu / x) * out[n - 1] - out[n - 2];
    if (!std::isfinite(out[n].real()) || !std::isfinite(out[n].imag()))
      throw DomainError("hankel1: overflow at order " + std::to_string(first + n) +
                        " for argument " + std::to_string(x));
  }
  return out;
}

/// Hankel function of the first kind H^{(1)}_order(x) for x > 0 and
/// order in {0, 1/2, 1, 3/2, ...}.
inline Complex hankel1(double order, double x) {
  detail::check_hankel_args(order, x);
  const double first = std::fmod(order, 1.0) == 0.0 ? 0.0 : 0.5;
  const int count = static_cast<int>(std::lround(order - first)) + 1;
  return hankel1_sequence(first, count, x).back();
}

/// d/dx H^{(1)}_order(x) = (order/x) H_order(x) - H_{order+1}(x).
/// For order 0 this is exactly -H_1(x).
inline Complex hankel1_deriv(double order, double x) {
  detail::check_hankel_args(order + 1.0, x);
  const double first = std::fmod(order, 1.0) == 0.0 ? 0.0 : 0.5;
  const int count = static_cast<int>(std::lround(order - first)) + 2;
  const auto seq = hankel1_sequence(first, count, x);
  return (order / x) * seq[count - 2] - seq[count - 1];
}

inline long long binomial(long long n, long long k) {
  if (n < 0 || k < 0 || k > n) return 0;
  long long r = 1;
  for (long long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Dimension of the space of degree-j spherical harmonics on S^{d-1}:
/// C(j+d-1, d-1) - C(j+d-3, d-1), with C(n, k) = 0 for n < 0.
inline int harmonic_dim(int d, int j) {
  require(d == 2 || d == 3, "harmonic_dim: dimension must be 2 or 3");
  require(j >= 0, "harmonic_dim: degree must be non-negative");
  return static_cast<int>(binomial(j + d - 1, d - 1) - binomial(j + d - 3, d - 1));
}

/// Degree layout of a truncated harmonic basis, flattened by (j, p).
struct HarmonicBasisSpec {
  int dim = 2;
  int max_degree = 0;
  std::vector<int> multiplicity;
  std::vector<int> offsets;

  HarmonicBasisSpec() = default;
  HarmonicBasisSpec(int d, int J) : dim(d), max_degree(J) {
    require(J >= 0, "HarmonicBasisSpec: negative cutoff");
    int off = 0;
    for (int j = 0; j <= J; ++j) {
      multiplicity.push_back(harmonic_dim(d, j));
      offsets.push_back(off);
      off += multiplicity.back();
    }
    offsets.push_back(off);
  }

  int size() const { return offsets.back(); }
  int index(int j, int p) const { return offsets[j] + (p - 1); }
  /// Degree of the flattened index.
  int degree_of(int idx) const {
    auto it = std::upper_bound(offsets.begin(), offsets.end(), idx);
    return static_cast<int>(it - offsets.begin()) - 1;
  }
};

/// All real orthonormal harmonics of degree <= J at a unit direction, in the
/// (j, p) order of HarmonicBasisSpec.
///   d = 2: p = 1 -> cos(j t)/sqrt(pi), p = 2 -> sin(j t)/sqrt(pi); j = 0 -> 1/sqrt(2 pi).
///   d = 3: p = 1 -> m = 0; p = 2m -> cos(m phi); p = 2m + 1 -> sin(m phi).
inline std::vector<double> harmonic_values(int d, int J, const Point& dir) {
  HarmonicBasisSpec spec(d, J);
  std::vector<double> out(static_cast<std::size_t>(spec.size()));
  if (d == 2) {
    const double t = std::atan2(dir[1], dir[0]);
    out[0] = 1.0 / std::sqrt(2.0 * kPi);
    const double s = 1.0 / std::sqrt(kPi);
    for (int j = 1; j <= J; ++j) {
      out[spec.index(j, 1)] = s * std::cos(j * t);
      out[spec.index(j, 2)] = s * std::sin(j * t);
    }
    return out;
  }
  const double ct = std::clamp(dir[2], -1.0, 1.0);
  const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
  const double phi = std::atan2(dir[1], dir[0]);
  // Fully normalized associated Legendre functions, column by column in m.
  std::vector<double> pmm(static_cast<std::size_t>(J + 1));
  pmm[0] = std::sqrt(1.0 / (4.0 * kPi));
  for (int m = 1; m <= J; ++m) pmm[m] = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * st * pmm[m - 1];
  for (int m = 0; m <= J; ++m) {
    const double scale = (m == 0) ? 1.0 : std::sqrt(2.0);
    const double cm = std::cos(m * phi);
    const double sm = std::sin(m * phi);
    double p_prev = 0.0;
    double p_cur = pmm[m];
    for (int l = m; l <= J; ++l) {
      if (l > m) {
        double p_next;
        if (l == m + 1) {
          p_next = std::sqrt(2.0 * m + 3.0) * ct * p_cur;
        } else {
          const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
          const double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) /
                                     (4.0 * double(l - 1) * (l - 1) - 1.0));
          p_next = a * (ct * p_cur - b * p_prev);
        }
        p_prev = p_cur;
        p_cur = p_next;
      }
      if (m == 0) {
        out[spec.index(l, 1)] = p_cur;
      } else {
        out[spec.index(l, 2 * m)] = scale * p_cur * cm;
        out[spec.index(l, 2 * m + 1)] = scale * p_cur * sm;
      }
    }
  }
  return out;
}

/// Single orthonormal harmonic f_{jp}(dir), 1 <= p <= harmonic_dim(d, j).
inline double eval_harmonic(int d, int j, int p, const Point& dir) {
  const int pj = harmonic_dim(d, j);
  if (p < 1 || p > pj)
    throw DomainError("eval_harmonic: index p=" + std::to_string(p) + " out of range for degree " +
                      std::to_string(j));
  const auto vals = harmonic_values(d, j, dir);
  return vals[HarmonicBasisSpec(d, j).index(j, p)];
}

/// Free outgoing Green's function
///   R0+(x, y, E) = -(i/4) (sqrt(E) / (2 pi |x-y|))^{(d-2)/2} H^{(1)}_{(d-2)/2}(sqrt(E) |x-y|).
inline Complex free_green(int d, double E, const Point& x, const Point& y) {
  require(d == 2 || d == 3, "free_green: dimension must be 2 or 3");
  require(E > 0.0, "free_green: energy must be positive");
  const double t = distance(x, y);
  if (t == 0.0) throw SingularityError("free_green: coincident points");
  const double k = std::sqrt(E);
  if (d == 2) return -0.25 * kI * hankel1(0.0, k * t);
  return -0.25 * kI * std::sqrt(k / (2.0 * kPi * t)) * hankel1(0.5, k * t);
}

/// Closed form of free_green for d = 3: -exp(i sqrt(E) t) / (4 pi t).
inline Complex free_green_3d(double k, double t) {
  return -std::polar(1.0, k * t) / (4.0 * kPi * t);
}

/// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  require(n >= 1, "gauss_legendre: need at least one node");
  std::vector<double> x(static_cast<std::size_t>(n));
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-15) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n == 1) {
    x[0] = 0.0;
    w[0] = 2.0;
  }
  return {x, w};
}

}  // namespace nfis::specfun
