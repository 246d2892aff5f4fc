#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nfis/common.hpp"

namespace nfis {

using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

struct GmresResult {
  CVec x;
  std::vector<double> history;  // relative residual per inner iteration
  int iterations = 0;
};

/// Restarted GMRES for A x = b with a matrix-free operator. Throws
/// ConvergenceError with the residual history when `max_iter` is exhausted.
inline GmresResult gmres(const std::function<CVec(const CVec&)>& apply, const CVec& b, double tol,
                         int restart = 60, int max_iter = 1000, CVec x0 = CVec()) {
  const Eigen::Index n = b.size();
  GmresResult res;
  res.x = x0.size() == n ? x0 : CVec::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.x.setZero();
    return res;
  }
  int total = 0;
  while (total < max_iter) {
    CVec r = b - apply(res.x);
    double beta = r.norm();
    if (beta / bnorm <= tol) {
      res.history.push_back(beta / bnorm);
      res.iterations = total;
      return res;
    }
    const int m = restart;
    CMat V(n, m + 1);
    CMat H = CMat::Zero(m + 1, m);
    std::vector<Complex> cs(m), sn(m);
    CVec g = CVec::Zero(m + 1);
    g(0) = beta;
    V.col(0) = r / beta;
    int k = 0;
    for (; k < m && total < max_iter; ++k, ++total) {
      CVec w = apply(V.col(k));
      for (int j = 0; j <= k; ++j) {
        H(j, k) = V.col(j).dot(w);
        w -= H(j, k) * V.col(j);
      }
      // One reorthogonalization pass.
      for (int j = 0; j <= k; ++j) {
        const Complex c = V.col(j).dot(w);
        H(j, k) += c;
        w -= c * V.col(j);
      }
      H(k + 1, k) = w.norm();
      if (std::abs(H(k + 1, k)) > 0.0) V.col(k + 1) = w / H(k + 1, k);
      for (int j = 0; j < k; ++j) {
        const Complex t = std::conj(cs[j]) * H(j, k) + std::conj(sn[j]) * H(j + 1, k);
        H(j + 1, k) = -sn[j] * H(j, k) + cs[j] * H(j + 1, k);
        H(j, k) = t;
      }
      const double denom = std::hypot(std::abs(H(k, k)), std::abs(H(k + 1, k)));
      if (denom == 0.0) {
        cs[k] = 1.0;
        sn[k] = 0.0;
      } else {
        cs[k] = H(k, k) / denom;
        sn[k] = H(k + 1, k) / denom;
      }
      H(k, k) = denom;
      H(k + 1, k) = 0.0;
      g(k + 1) = -sn[k] * g(k);
      g(k) = std::conj(cs[k]) * g(k);
      const double rel = std::abs(g(k + 1)) / bnorm;
      res.history.push_back(rel);
      if (rel <= tol) {
        ++k;
        ++total;
        break;
      }
    }
    // Solve the triangular system and update.
    CVec y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    res.x += V.leftCols(k) * y;
    if (!res.history.empty() && res.history.back() <= tol) {
      const double true_rel = (b - apply(res.x)).norm() / bnorm;
      if (true_rel <= 10.0 * tol) {
        res.iterations = total;
        return res;
      }
    }
  }
  throw ConvergenceError("gmres: no convergence after " + std::to_string(max_iter) + " iterations",
                         res.history);
}

/// Largest singular value of a matrix by power iteration on A^H A.
inline double operator_norm(const CMat& A, int iters = 200, double tol = 1e-12) {
  if (A.size() == 0) return 0.0;
  CVec x = CVec::Ones(A.cols()) / std::sqrt(static_cast<double>(A.cols()));
  double sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    CVec y = A.adjoint() * (A * x);
    const double nrm = y.norm();
    if (nrm == 0.0) return 0.0;
    x = y / nrm;
    const double next = std::sqrt(nrm);
    if (std::fabs(next - sigma) <= tol * next) return next;
    sigma = next;
  }
  return sigma;
}

}  // namespace nfis
