#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>

#include "so3sr/rotation.hpp"
#include "so3sr/sampling.hpp"
#include "so3sr/wigner.hpp"

using namespace so3sr;
using cplx = std::complex<double>;

namespace {

long double factorial(int n) {
  long double f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

std::complex<long double> i_pow(int e) {
  switch (((e % 4) + 4) % 4) {
    case 0: return {1, 0};
    case 1: return {0, 1};
    case 2: return {-1, 0};
    default: return {0, -1};
  }
}

// Direct factorial-sum evaluation of
//   P^l_{k,m}(t) = C_{l,k,m} (1-t)^{-(m-k)/2} (1+t)^{-(m+k)/2}
//                  d^{l-m}/dt^{l-m} [(1-t)^{l-k} (1+t)^{l+k}],
//   C_{l,k,m} = (-1)^{l-k} i^{m-k} / (2^l (l-k)!)
//               sqrt((l-k)!(l+m)!/((l+k)!(l-m)!)),
// expanded with the Leibniz rule.  Exact up to roundoff for l <= 10.
std::complex<long double> direct_P(int l, int k, int m, long double beta) {
  long double u = sqrtl(2.0L) * sinl(beta / 2);  // sqrt(1-t), t = cos beta
  long double v = sqrtl(2.0L) * cosl(beta / 2);  // sqrt(1+t)
  long double sum = 0;
  for (int j = std::max(0, -(m + k)); j <= std::min(l - m, l - k); ++j) {
    long double term = factorial(l - m) /
                       (factorial(j) * factorial(l - m - j)) *
                       (j % 2 == 0 ? 1.0L : -1.0L) * factorial(l - k) /
                       factorial(l - k - j) * factorial(l + k) /
                       factorial(m + k + j);
    term *= powl(u, 2 * (l - j) - (m + k)) * powl(v, 2 * j + (m + k));
    sum += term;
  }
  long double scale =
      ((l - k) % 2 == 0 ? 1.0L : -1.0L) / (powl(2.0L, l) * factorial(l - k)) *
      sqrtl(factorial(l - k) * factorial(l + m) /
            (factorial(l + k) * factorial(l - m)));
  return i_pow(m - k) * (scale * sum);
}

cplx direct_D(int l, int k, int m, const EulerZXZ& e) {
  std::complex<long double> val =
      std::complex<long double>(cosl(-k * (long double)e.alpha),
                                sinl(-k * (long double)e.alpha)) *
      direct_P(l, k, m, e.beta) *
      std::complex<long double>(cosl(-m * (long double)e.gamma),
                                sinl(-m * (long double)e.gamma));
  return {static_cast<double>(val.real()), static_cast<double>(val.imag())};
}

}  // namespace

TEST_CASE("wigner recursion matches the direct factorial formula") {
  Rng rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    EulerZXZ e{rng.uniform(0.0, 2 * M_PI), rng.uniform(0.05, M_PI - 0.05),
               rng.uniform(0.0, 2 * M_PI)};
    Rotation x = from_euler_zxz(e);
    auto all = wigner_D_all(10, x);
    for (int l = 0; l <= 10; ++l) {
      for (int k = -l; k <= l; ++k) {
        for (int m = -l; m <= l; ++m) {
          cplx got = all[l](k + l, m + l);
          cplx want = direct_D(l, k, m, e);
          CHECK(std::abs(got - want) <= 1e-12);
        }
      }
    }
  }
  // Edge beta values: compare the beta-only matrices so the check does not
  // inherit the ~1e-9 angle loss of an Euler extraction near beta = 0, pi.
  for (double beta : {0.0, 1e-9, M_PI - 1e-9, M_PI}) {
    auto dall = wigner_d_all(6, beta);
    for (int l = 0; l <= 6; ++l)
      for (int k = -l; k <= l; ++k)
        for (int m = -l; m <= l; ++m) {
          std::complex<long double> want = direct_P(l, k, m, beta);
          CHECK(std::abs(dall[l](k + l, m + l) -
                         cplx(static_cast<double>(want.real()),
                              static_cast<double>(want.imag()))) <= 1e-12);
        }
  }
}

TEST_CASE("wigner_d_row agrees with the batch recursion") {
  for (double beta : {0.1, 0.9, 2.4}) {
    auto all = wigner_d_all(8, beta);
    for (int l = 0; l <= 8; ++l) {
      Eigen::MatrixXcd row = wigner_d_row(l, beta);
      CHECK((row - all[l]).norm() <= 1e-13);
    }
  }
}

TEST_CASE("wigner matrices are a unitary representation") {
  Rng rng(32);
  CHECK((wigner_D(0, haar_sample(rng)) -
         Eigen::MatrixXcd::Identity(1, 1)).norm() <= 1e-15);
  for (int l = 0; l <= 8; ++l) {
    CHECK((wigner_D(l, Rotation()) -
           Eigen::MatrixXcd::Identity(2 * l + 1, 2 * l + 1)).norm() <= 1e-12);
  }
  for (int trial = 0; trial < 8; ++trial) {
    Rotation x = haar_sample(rng), y = haar_sample(rng);
    for (int l : {1, 2, 5, 8}) {
      Eigen::MatrixXcd dx = wigner_D(l, x);
      CHECK((dx * dx.adjoint() -
             Eigen::MatrixXcd::Identity(2 * l + 1, 2 * l + 1)).norm() <=
            1e-11);
      CHECK((wigner_D(l, x * y) - dx * wigner_D(l, y)).norm() <= 1e-11);
      CHECK((wigner_D(l, x.inverse()) - dx.adjoint()).norm() <= 1e-11);
    }
  }
}

TEST_CASE("characters and the addition formula") {
  Rng rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    Rotation x = haar_sample(rng), y = haar_sample(rng);
    double omega = geodesic_distance(x, y);
    double angle_x = axis_angle_of(x).angle;
    for (int l = 0; l <= 12; ++l) {
      // Trace = character value at the rotation angle of x.
      cplx tr = wigner_D(l, x).trace();
      CHECK(std::abs(tr.imag()) <= 1e-11);
      CHECK(tr.real() ==
            doctest::Approx(addition_kernel(l, angle_x)).epsilon(1e-10));

      // Full addition sum at (x, y).
      Eigen::MatrixXcd dx = wigner_D(l, x), dy = wigner_D(l, y);
      cplx sum = (dx.array() * dy.array().conjugate()).sum();
      CHECK(std::abs(sum.imag()) <= 1e-10);
      CHECK(sum.real() ==
            doctest::Approx(addition_kernel(l, omega))
                .epsilon(1e-10)
                .scale(2 * l + 1));
    }
  }
}

TEST_CASE("addition kernel equals the Chebyshev polynomial U_2l") {
  for (double omega : {1e-12, 1e-6, 0.3, 1.7, 3.1, M_PI}) {
    double c = std::cos(omega / 2);
    double u[31];
    u[0] = 1.0;
    u[1] = 2 * c;
    for (int n = 2; n <= 30; ++n) u[n] = 2 * c * u[n - 1] - u[n - 2];
    for (int l = 0; l <= 15; ++l) {
      CHECK(addition_kernel(l, omega) ==
            doctest::Approx(u[2 * l]).epsilon(1e-11).scale(2 * l + 1));
    }
  }
  for (int l : {0, 1, 4, 9}) {
    CHECK(addition_kernel(l, 0.0) == doctest::Approx(2 * l + 1).epsilon(1e-14));
  }
}

TEST_CASE("moment vector indexing") {
  for (int N : {0, 1, 3, 8}) {
    CHECK(MomentVector::count(N) == (N + 1) * (2 * N + 1) * (2 * N + 3) / 3);
    Eigen::Index running = 0;
    for (int l = 0; l <= N; ++l)
      for (int k = -l; k <= l; ++k)
        for (int m = -l; m <= l; ++m)
          CHECK(MomentVector::index(l, k, m) == running++);
    CHECK(running == MomentVector::count(N));
  }
  MomentVector y(3);
  CHECK(y.degree() == 3);
  CHECK(y.size() == MomentVector::count(3));
  y.entry(2, -1, 1) = cplx(0.5, -0.25);
  CHECK(y.entry(2, -1, 1) == cplx(0.5, -0.25));
}

TEST_CASE("moments of point measures") {
  Rng rng(34);
  // A single unit mass at the identity has moments delta_{k,m}.
  PointMeasure at_id{{Rotation()}, Eigen::VectorXd::Ones(1)};
  MomentVector y0 = moments(at_id, 4);
  for (int l = 0; l <= 4; ++l)
    for (int k = -l; k <= l; ++k)
      for (int m = -l; m <= l; ++m)
        CHECK(std::abs(y0.entry(l, k, m) - cplx(k == m ? 1.0 : 0.0)) <=
              1e-14);

  // Two weighted points match the hand-assembled sum.
  Rotation x1 = haar_sample(rng), x2 = haar_sample(rng);
  PointMeasure mu{{x1, x2}, Eigen::Vector2d(1.5, -0.75)};
  mu.validate();
  int N = 5;
  MomentVector y = moments(mu, N);
  auto d1 = wigner_D_all(N, x1), d2 = wigner_D_all(N, x2);
  for (int l = 0; l <= N; ++l)
    for (int k = -l; k <= l; ++k)
      for (int m = -l; m <= l; ++m) {
        cplx want = 1.5 * d1[l](k + l, m + l) - 0.75 * d2[l](k + l, m + l);
        CHECK(std::abs(y.entry(l, k, m) - want) <= 1e-13);
      }

  PointMeasure bad{{x1, x2}, Eigen::VectorXd::Ones(3)};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("moment csv round trip") {
  Rng rng(35);
  PointMeasure mu{{haar_sample(rng), haar_sample(rng)},
                  Eigen::Vector2d(0.3, 2.0)};
  MomentVector y = moments(mu, 4);

  std::string csv = moments_to_csv(y);
  CHECK(csv.rfind("l,k,m,re,im", 0) == 0);
  MomentVector back = moments_from_csv(csv);
  REQUIRE(back.degree() == y.degree());
  CHECK((back.raw() - y.raw()).norm() == 0.0);  // %.17g survives exactly

  auto path = std::filesystem::temp_directory_path() / "so3sr_moments.csv";
  write_moments_csv(path.string(), y);
  MomentVector from_file = read_moments_csv(path.string());
  CHECK((from_file.raw() - y.raw()).norm() == 0.0);
  std::filesystem::remove(path);
}
