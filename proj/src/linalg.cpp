#include "phaselock/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "phaselock/errors.hpp"

namespace phaselock {

namespace {

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

double min_eigenvalue(const Mat& sym) {
  const auto n = sym.rows();
  if (n == 1) return sym(0, 0);
  if (n == 2) {
    const double a = sym(0, 0);
    const double d = sym(1, 1);
    const double b = 0.5 * (sym(0, 1) + sym(1, 0));
    const double half_trace = 0.5 * (a + d);
    const double radius = std::hypot(0.5 * (a - d), b);
    return half_trace - radius;
  }
  Eigen::SelfAdjointEigenSolver<Mat> solver(symmetrize(sym), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool is_psd(const Mat& sym, double rel_tol) {
  const double scale = std::max(max_abs(sym), 1e-300);
  return min_eigenvalue(sym) >= -rel_tol * scale;
}

Mat inverse_spd(const Mat& m, double pivot_floor) {
  const auto n = m.rows();
  const double floor = pivot_floor * max_abs(m);
  if (n == 1) {
    if (!(m(0, 0) > floor)) throw IllConditionedError("inverse_spd: non-positive 1x1 pivot");
    Mat r(1, 1);
    r(0, 0) = 1.0 / m(0, 0);
    return r;
  }
  if (n == 2) {
    const double a = m(0, 0);
    const double b = 0.5 * (m(0, 1) + m(1, 0));
    const double d = m(1, 1);
    const double det = a * d - b * b;
    if (!(a > floor) || !(det / a > floor)) {
      throw IllConditionedError("inverse_spd: 2x2 matrix is not positive definite");
    }
    Mat r(2, 2);
    r << d / det, -b / det, -b / det, a / det;
    return r;
  }
  Eigen::LLT<Mat> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) {
    throw IllConditionedError("inverse_spd: Cholesky factorisation failed");
  }
  const Mat l = llt.matrixL();
  if (l.diagonal().minCoeff() <= std::sqrt(floor)) {
    throw IllConditionedError("inverse_spd: pivot below floor");
  }
  return llt.solve(Mat::Identity(n, n));
}

Mat inverse(const Mat& m, double pivot_floor) {
  const auto n = m.rows();
  const double floor = pivot_floor * max_abs(m);
  if (n == 1) {
    if (!(std::abs(m(0, 0)) > floor)) throw IllConditionedError("inverse: singular 1x1");
    Mat r(1, 1);
    r(0, 0) = 1.0 / m(0, 0);
    return r;
  }
  if (n == 2) {
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    if (!(std::abs(det) > floor * max_abs(m))) throw IllConditionedError("inverse: singular 2x2");
    Mat r(2, 2);
    r << m(1, 1) / det, -m(0, 1) / det, -m(1, 0) / det, m(0, 0) / det;
    return r;
  }
  Eigen::PartialPivLU<Mat> lu(m);
  const auto diag = lu.matrixLU().diagonal().cwiseAbs();
  if (diag.minCoeff() <= floor) throw IllConditionedError("inverse: pivot below floor");
  return lu.inverse();
}

Mat solve_lyapunov(const Mat& a, const Mat& q) {
  const auto n = a.rows();
  if (n == 1) {
    if (!(a(0, 0) < 0.0)) throw std::invalid_argument("solve_lyapunov: drift is not stable");
    Mat r(1, 1);
    r(0, 0) = -q(0, 0) / (2.0 * a(0, 0));
    return r;
  }
  // (I kron A + A kron I) vec(X) = -vec(Q)
  const auto nn = n * n;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(nn, nn);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index p = 0; p < n; ++p) {
        k(i + j * n, p + j * n) += a(i, p);
        k(i + j * n, i + p * n) += a(j, p);
      }
    }
  }
  Eigen::VectorXd rhs(nn);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) rhs(i + j * n) = -q(i, j);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
  if (!lu.isInvertible()) throw IllConditionedError("solve_lyapunov: singular operator");
  const Eigen::VectorXd x = lu.solve(rhs);
  Mat r(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) r(i, j) = x(i + j * n);
  return symmetrize(r);
}

Mat psd_factor(const Mat& m) {
  const auto n = m.rows();
  if (n == 1) {
    Mat r(1, 1);
    r(0, 0) = std::sqrt(std::max(m(0, 0), 0.0));
    return r;
  }
  Eigen::SelfAdjointEigenSolver<Mat> solver(symmetrize(m));
  const Vec roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal();
}

}  // namespace phaselock
