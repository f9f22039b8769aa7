#pragma once

#include <Eigen/Dense>

namespace phaselock {

/// Largest supported state dimension. Matrices live on the stack.
inline constexpr int kMaxStateDim = 8;

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                          kMaxStateDim, kMaxStateDim>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxStateDim, 1>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxStateDim>;

inline Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

/// Smallest eigenvalue of a symmetric matrix (closed form for n <= 2).
double min_eigenvalue(const Mat& sym);

/// True if the symmetric matrix has no eigenvalue below -tol * max(1e-300, |m|_max).
bool is_psd(const Mat& sym, double rel_tol);

/// Inverse of a symmetric positive definite matrix. Pivots are checked
/// against pivot_floor * |m|_max; a smaller pivot raises IllConditionedError.
Mat inverse_spd(const Mat& m, double pivot_floor = 1e-14);

/// General inverse: closed form for n <= 2, partial-pivot LU otherwise.
Mat inverse(const Mat& m, double pivot_floor = 1e-14);

/// Solve A X + X A^T + Q = 0 for X (A must be Hurwitz).
Mat solve_lyapunov(const Mat& a, const Mat& q);

/// Matrix square root factor L with L L^T = m for symmetric PSD m.
Mat psd_factor(const Mat& m);

}  // namespace phaselock
