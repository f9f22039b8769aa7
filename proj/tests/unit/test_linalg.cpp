#include "doctest.h"
#include "phaselock/linalg.hpp"

using namespace phaselock;

TEST_CASE("symmetrize averages with the transpose") {
  Mat m(2, 2);
  m << 1, 2, 4, 3;
  const Mat s = symmetrize(m);
  CHECK(s(0, 1) == doctest::Approx(3.0));
  CHECK(s(1, 0) == doctest::Approx(3.0));
}

TEST_CASE("inverse_spd and inverse give the identity") {
  Mat m(3, 3);
  m << 4, 1, 0.5, 1, 3, 0.2, 0.5, 0.2, 2;
  const Mat id = m * inverse_spd(m);
  const Mat id2 = m * inverse(m);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(id(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
      CHECK(id2(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("min_eigenvalue and is_psd on a known matrix") {
  Mat m(2, 2);
  m << 2, 1, 1, 2;  // eigenvalues 1 and 3
  CHECK(min_eigenvalue(m) == doctest::Approx(1.0));
  CHECK(is_psd(m, 1e-12));
  m(0, 1) = m(1, 0) = 3;  // eigenvalues -1 and 5
  CHECK(min_eigenvalue(m) == doctest::Approx(-1.0));
  CHECK_FALSE(is_psd(m, 1e-12));
}

TEST_CASE("solve_lyapunov satisfies A X + X A^T + Q = 0") {
  Mat a(2, 2);
  a << 0, 1, -1, -0.3;
  Mat q(2, 2);
  q << 0, 0, 0, 2;
  const Mat x = solve_lyapunov(a, q);
  const Mat r = a * x + x * a.transpose() + q;
  CHECK(r.cwiseAbs().maxCoeff() < 1e-12);
  // scalar case: x = q / (2k)
  Mat a1(1, 1), q1(1, 1);
  a1(0, 0) = -2.0;
  q1(0, 0) = 3.0;
  CHECK(solve_lyapunov(a1, q1)(0, 0) == doctest::Approx(0.75));
}

TEST_CASE("psd_factor reproduces the matrix") {
  Mat m(2, 2);
  m << 4, 2, 2, 3;
  const Mat l = psd_factor(m);
  CHECK((l * l.transpose() - m).cwiseAbs().maxCoeff() < 1e-12);
  Mat singular(2, 2);
  singular << 1, 1, 1, 1;
  const Mat ls = psd_factor(singular);
  CHECK((ls * ls.transpose() - singular).cwiseAbs().maxCoeff() < 1e-12);
}
