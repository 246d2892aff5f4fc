#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace nfis {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

/// A point in R^2 or R^3. In two dimensions the third component is zero.
using Point = std::array<double, 3>;

inline double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }
inline Point operator+(const Point& a, const Point& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Point operator-(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Point operator*(double s, const Point& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double distance(const Point& a, const Point& b) { return norm(a - b); }

/// Invalid argument or index outside the supported range.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Kernel evaluated at coincident points.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A parameter violates a structural constraint (e.g. p^2 <= 4(E + rho^2)).
class ConstraintError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Linear solve failed: singular system, iterative divergence or stagnation.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> history = {},
                   double contraction = std::nan(""))
      : std::runtime_error(what), history_(std::move(history)), contraction_(contraction) {}

  /// Residual norms recorded per iteration, when available.
  const std::vector<double>& residual_history() const { return history_; }
  /// Estimated contraction factor of the fixed-point map, NaN if unknown.
  double contraction() const { return contraction_; }

 private:
  std::vector<double> history_;
  double contraction_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DomainError(msg);
}

inline double sup_abs(const ComplexVector& v) {
  double m = 0.0;
  for (const auto& z : v) m = std::max(m, std::abs(z));
  return m;
}

}  // namespace nfis
