#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "so3sr/filter.hpp"
#include "so3sr/kernel.hpp"
#include "so3sr/rotation.hpp"
#include "so3sr/sampling.hpp"
#include "so3sr/wigner.hpp"

using namespace so3sr;

namespace {

int levi0(int i, int j, int k) {  // 0-based Levi-Civita
  if (i == j || j == k || i == k) return 0;
  return ((j - i + 3) % 3 == 1) ? 1 : -1;
}

Eigen::Vector3d random_axis(Rng& rng) {
  Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
  return v.normalized();
}

// Pair with prescribed relative angle: x = y * exp(omega [axis]).
struct Pair {
  Rotation x, y;
};
Pair pair_at(Rng& rng, double omega) {
  Rotation y = haar_sample(rng);
  return {y * rodrigues(random_axis(rng), omega), y};
}

// Nested central difference d^2/ds dt sigma(x e^{s L_i}, y e^{t L_n}).
double fd_mixed(const ZonalKernel& ker, const Rotation& x, const Rotation& y,
                int i, int n, double h) {
  auto at = [&](double s, double t) {
    return ker.sigma(x * rodrigues(Eigen::Vector3d(generator(i)(2, 1),
                                                   generator(i)(0, 2),
                                                   generator(i)(1, 0)),
                                   s),
                     y * rodrigues(Eigen::Vector3d(generator(n)(2, 1),
                                                   generator(n)(0, 2),
                                                   generator(n)(1, 0)),
                                   t));
  };
  return (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4 * h * h);
}

Eigen::Vector3d axis_of_generator(int i) {
  return {generator(i)(2, 1), generator(i)(0, 2), generator(i)(1, 0)};
}

// d^3/ds du dt sigma(x e^{s L_j} e^{u L_i}, y e^{t L_k}).
double fd_third(const ZonalKernel& ker, const Rotation& x, const Rotation& y,
                int j, int i, int k, double h) {
  auto at = [&](double s, double u, double t) {
    return ker.sigma(
        x * rodrigues(axis_of_generator(j), s) *
            rodrigues(axis_of_generator(i), u),
        y * rodrigues(axis_of_generator(k), t));
  };
  double acc = 0;
  for (int a : {1, -1})
    for (int b : {1, -1})
      for (int c : {1, -1}) acc += a * b * c * at(a * h, b * h, c * h);
  return acc / (8 * h * h * h);
}

}  // namespace

TEST_CASE("profile normalization, parity and bounds") {
  ZonalKernel ker(make_filter_spec(8, 20));
  CHECK(ker.sigma_tilde(0.0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(ker.sigma_tilde(0.0, 1) == 0.0);
  CHECK(ker.sigma_tilde(0.0, 3) == 0.0);
  for (double t = -M_PI; t <= M_PI; t += 0.11) {
    CHECK(ker.sigma_tilde(t) ==
          doctest::Approx(ker.sigma_tilde(-t)).epsilon(1e-14));
    CHECK(std::abs(ker.sigma_tilde(t)) <= 1.0 + 1e-12);
    CHECK(ker.sigma_tilde(t, 1) ==
          doctest::Approx(-ker.sigma_tilde(-t, 1)).epsilon(1e-12).scale(1.0));
  }
  CHECK_THROWS_AS(ker.sigma_tilde(0.5, 4), std::invalid_argument);
}

TEST_CASE("profile equals the filtered Dirichlet expansion") {
  // sigma~(t) = sum_l h_N(l) U_2l(cos(t/2)) bridges the weights h_N(l) and
  // the direct exponential sum.
  for (int s : {6, 8}) {
    int N = 2 * s + 4;
    ZonalKernel ker(make_filter_spec(s, N));
    const auto& w = ker.spec().weights;
    for (double t : {1e-8, 0.05, 0.4, 1.3, 2.7, M_PI}) {
      double sum = 0;
      for (int l = 0; l <= N; ++l) sum += w[l] * addition_kernel(l, t);
      CHECK(ker.sigma_tilde(t) == doctest::Approx(sum).epsilon(1e-12));
    }
  }
}

TEST_CASE("profile derivatives against finite differences") {
  ZonalKernel ker(make_filter_spec(8, 20));
  double h = 1e-4;
  for (double t : {0.3, 0.9, 1.7, 2.9}) {
    CHECK(ker.sigma_tilde(t, 1) ==
          doctest::Approx((ker.sigma_tilde(t + h) - ker.sigma_tilde(t - h)) /
                          (2 * h))
              .epsilon(1e-6)
              .scale(10));
    CHECK(ker.sigma_tilde(t, 2) ==
          doctest::Approx((ker.sigma_tilde(t + h, 1) -
                           ker.sigma_tilde(t - h, 1)) /
                          (2 * h))
              .epsilon(1e-6)
              .scale(100));
    CHECK(ker.sigma_tilde(t, 3) ==
          doctest::Approx((ker.sigma_tilde(t + h, 2) -
                           ker.sigma_tilde(t - h, 2)) /
                          (2 * h))
              .epsilon(1e-6)
              .scale(1000));
  }
  // Values at zero.
  CHECK(ker.st2_zero() ==
        doctest::Approx((ker.sigma_tilde(h) - 2 + ker.sigma_tilde(-h)) /
                        (h * h))
            .epsilon(1e-6));
  CHECK(ker.st4_zero() ==
        doctest::Approx((ker.sigma_tilde(h, 2) - 2 * ker.st2_zero() +
                         ker.sigma_tilde(-h, 2)) /
                        (h * h))
            .epsilon(1e-6));
  CHECK(ker.st2_zero() == doctest::Approx(ker.sigma_tilde(0.0, 2)));
  CHECK(ker.st2_zero() < 0);
  CHECK(ker.st4_zero() > 0);
  CHECK(ker.st6_zero() < 0);
  // Loose sanity for the sixth derivative via a fourth difference of st2.
  double H = 1e-3;
  double st6_fd = (ker.sigma_tilde(2 * H, 2) - 4 * ker.sigma_tilde(H, 2) +
                   6 * ker.st2_zero() - 4 * ker.sigma_tilde(-H, 2) +
                   ker.sigma_tilde(-2 * H, 2)) /
                  (H * H * H * H);
  CHECK(ker.st6_zero() == doctest::Approx(st6_fd).epsilon(0.05));
}

TEST_CASE("zero-derivative sandwich at several degrees") {
  for (int N : {20, 32, 64}) {
    ZonalKernel ker(make_filter_spec(8, N));
    ZeroDerivativeBounds z = zero_derivative_bounds(8, N);
    double n1 = N + 1.0;
    CHECK(std::abs(ker.st2_zero()) >= z.c_lo * n1 * n1);
    CHECK(std::abs(ker.st2_zero()) <= z.c_hi * n1 * n1);
    CHECK(ker.st4_zero() >= z.d_lo * n1 * n1 * n1 * n1);
    CHECK(ker.st4_zero() <= z.d_hi * n1 * n1 * n1 * n1);
    CHECK(std::abs(ker.st6_zero()) <= z.c6_bound);
  }
}

TEST_CASE("kernel is zonal, symmetric and bi-invariant") {
  ZonalKernel ker(make_filter_spec(8, 20));
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    Rotation x = haar_sample(rng), y = haar_sample(rng), z = haar_sample(rng);
    double v = ker.sigma(x, y);
    CHECK(v == doctest::Approx(ker.sigma_tilde(geodesic_distance(x, y)))
                   .epsilon(1e-13));
    CHECK(ker.sigma(y, x) == doctest::Approx(v).epsilon(1e-12));
    CHECK(ker.sigma(z * x, z * y) == doctest::Approx(v).epsilon(1e-10));
    CHECK(ker.sigma(x, x) == doctest::Approx(1.0).epsilon(1e-13));
  }
  double t = 0.8;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::Vector3d axis = random_axis(rng);
    CHECK(ker.sigma(Rotation(), rodrigues(axis, t)) ==
          doctest::Approx(ker.sigma_tilde(t)).epsilon(1e-12));
  }
}

TEST_CASE("metric form equals the Wigner double sum") {
  Rng rng(42);
  for (auto [s, N] : {std::pair{6, 12}, std::pair{8, 16}}) {
    ZonalKernel ker(make_filter_spec(s, N));
    for (int trial = 0; trial < 10; ++trial) {
      Rotation x = haar_sample(rng), y = haar_sample(rng);
      CHECK(ker.sigma(x, y) ==
            doctest::Approx(sigma_via_wigner(ker, x, y)).epsilon(1e-10));
    }
  }
}

TEST_CASE("gradients match numeric right-translation derivatives") {
  ZonalKernel ker(make_filter_spec(8, 20));
  Rng rng(43);
  for (int trial = 0; trial < 15; ++trial) {
    Pair p = pair_at(rng, rng.uniform(0.1, 3.0));
    KernelDerivatives d = ker.derivatives(p.x, p.y);
    Eigen::Vector3d gy = ker.grad_y_sigma(p.x, p.y);
    CHECK((gy + d.grad_x).norm() <= 1e-13);
    for (int n = 1; n <= 3; ++n) {
      auto fy = [&](const Rotation& yy) { return ker.sigma(p.x, yy); };
      auto fx = [&](const Rotation& xx) { return ker.sigma(xx, p.y); };
      CHECK(gy(n - 1) ==
            doctest::Approx(numeric_X(fy, p.y, n, 1e-5))
                .epsilon(1e-6)
                .scale(10));
      CHECK(d.grad_x(n - 1) ==
            doctest::Approx(numeric_X(fx, p.x, n, 1e-5))
                .epsilon(1e-6)
                .scale(10));
    }
  }
  // Closed form along a single axis: y^{-1} x = R_Z(t).
  double t = 1.1;
  Eigen::Vector3d gy = ker.grad_y_sigma(
      Rotation(), rodrigues(Eigen::Vector3d(0, 0, 1), -t));
  CHECK(gy(0) == doctest::Approx(0.0).scale(1));
  CHECK(gy(1) == doctest::Approx(0.0).scale(1));
  CHECK(gy(2) == doctest::Approx(-ker.sigma_tilde(t, 1)).epsilon(1e-12));
  CHECK(ker.grad_y_sigma(Rotation(), Rotation()).norm() == 0.0);
}

TEST_CASE("mixed derivatives match nested finite differences") {
  ZonalKernel ker(make_filter_spec(8, 20));
  Rng rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    Pair p = pair_at(rng, rng.uniform(0.2, 2.9));
    KernelDerivatives d = ker.derivatives(p.x, p.y);
    for (int i = 1; i <= 3; ++i) {
      for (int n = 1; n <= 3; ++n) {
        double fd = fd_mixed(ker, p.x, p.y, i, n, 2e-4);
        double got = ker.mixed_sigma(p.x, p.y, i, n);
        CHECK(got == doctest::Approx(fd).epsilon(5e-4).scale(25.0));
        CHECK(got == doctest::Approx(d.mixed_xy(i - 1, n - 1)));
      }
    }
    CHECK((d.mixed_xx + d.mixed_xy).norm() == 0.0);
  }
}

TEST_CASE("expression-level commutator identities") {
  ZonalKernel ker(make_filter_spec(8, 20));
  Rng rng(45);
  for (int trial = 0; trial < 25; ++trial) {
    Pair p = pair_at(rng, rng.uniform(1e-4, M_PI - 1e-3));
    KernelDerivatives d = ker.derivatives(p.x, p.y);
    double scale = std::abs(ker.st2_zero());
    for (int i = 0; i < 3; ++i) {
      for (int n = 0; n < 3; ++n) {
        // X_i X_n^y - X_n X_i^y = -eps_inm X_m^x sigma (exact identity).
        double lhs = d.mixed_xy(i, n) - d.mixed_xy(n, i);
        double rhs = 0;
        for (int m = 0; m < 3; ++m) rhs -= levi0(i, n, m) * d.grad_x(m);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12).scale(scale));
      }
    }
    // Hessian symmetry is equivalent to the commutator bookkeeping.
    for (int r = 1; r <= 3; ++r)
      for (int c = 1; c <= 3; ++c)
        CHECK(d.hessian_entry(r, c) ==
              doctest::Approx(d.hessian_entry(c, r))
                  .epsilon(1e-11)
                  .scale(scale));
  }
}

TEST_CASE("coincidence limits of the derivative tensors") {
  ZonalKernel ker(make_filter_spec(8, 20));
  Rng rng(46);
  double c2 = ker.st2_zero();
  // Exact limit: y^{-1} x is the identity bitwise, so omega = 0 and every
  // tensor sits at its closed-form value.
  {
    Rotation e;
    KernelDerivatives d = ker.derivatives(e, e);
    CHECK(d.jet.omega == 0.0);
    CHECK(d.value == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(d.grad_x.norm() <= 1e-12);
    CHECK((d.mixed_xy + c2 * Eigen::Matrix3d::Identity()).norm() <=
          1e-12 * std::abs(c2));
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
          CHECK(d.third[j][i][k] ==
                doctest::Approx(-0.5 * c2 * levi0(j, i, k))
                    .epsilon(1e-12)
                    .scale(std::abs(c2)));
    for (int j = 1; j <= 3; ++j)
      for (int i = 1; i <= 3; ++i) {
        if (i != j) {
          CHECK(std::abs(d.combined_second(j, i)) <= 1e-12 * std::abs(c2));
          for (int k = 1; k <= 3; ++k)
            CHECK(std::abs(d.combined_third(j, i, k)) <= 1e-12 * std::abs(c2));
        }
        CHECK(d.hessian_entry(i, i) == doctest::Approx(c2).epsilon(1e-12));
      }
  }
  // Sampled x == y: x^T x leaves a residual angle ~sqrt(machine eps), and the
  // raw tensors have genuine O(omega) parts there (the epsilon terms), so the
  // checks use an omega-proportional envelope instead of a fixed tolerance.
  for (int trial = 0; trial < 5; ++trial) {
    Rotation x = haar_sample(rng);
    KernelDerivatives d = ker.derivatives(x, x);
    double w = d.jet.omega;
    CHECK(w <= 1e-7);
    double env = 3.0 * (std::abs(c2) + ker.st4_zero()) * w + 1e-12;
    CHECK(d.value == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(d.grad_x.norm() <= env);
    CHECK((d.mixed_xy + c2 * Eigen::Matrix3d::Identity()).norm() <= env);
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
          CHECK(std::abs(d.third[j][i][k] + 0.5 * c2 * levi0(j, i, k)) <= env);
    for (int j = 1; j <= 3; ++j)
      for (int i = 1; i <= 3; ++i) {
        if (i != j) {
          // Combined forms cancel the O(omega) terms exactly: O(omega^2).
          CHECK(std::abs(d.combined_second(j, i)) <= 1e-10 * std::abs(c2));
          for (int k = 1; k <= 3; ++k)
            CHECK(std::abs(d.combined_third(j, i, k)) <= env);
        }
        CHECK(d.hessian_entry(i, i) == doctest::Approx(c2).epsilon(1e-10));
      }
  }
}

TEST_CASE("third derivatives match triple finite differences") {
  ZonalKernel ker(make_filter_spec(8, 20));
  Rng rng(47);
  double h = 1e-3;
  for (int trial = 0; trial < 6; ++trial) {
    Pair p = pair_at(rng, rng.uniform(0.3, 2.8));
    KernelDerivatives d = ker.derivatives(p.x, p.y);
    for (int j = 1; j <= 3; ++j) {
      for (int i = 1; i <= 3; ++i) {
        for (int k = 1; k <= 3; ++k) {
          double fd = fd_third(ker, p.x, p.y, j, i, k, h);
          CHECK(d.third[j - 1][i - 1][k - 1] ==
                doctest::Approx(fd).epsilon(2e-3).scale(50.0));
        }
      }
    }
    // Pattern accessors agree with the tensor combinations.
    for (int i = 1; i <= 3; ++i) {
      CHECK(ker.third_sigma_terms(p.x, p.y, ThirdPattern::diag_same, i, i) ==
            doctest::Approx(d.third[i - 1][i - 1][i - 1]));
      for (int k = 1; k <= 3; ++k) {
        if (k == i) continue;
        CHECK(ker.third_sigma_terms(p.x, p.y, ThirdPattern::diag_other, i,
                                    k) ==
              doctest::Approx(d.third[i - 1][i - 1][k - 1]));
      }
    }
    for (int j = 1; j <= 3; ++j) {
      for (int i = 1; i <= 3; ++i) {
        if (i == j) continue;
        int n = 6 - i - j;
        CHECK(ker.third_sigma_terms(p.x, p.y, ThirdPattern::combined_n, j,
                                    i) ==
              doctest::Approx(d.combined_third(j, i, n)));
        CHECK(ker.third_sigma_terms(p.x, p.y, ThirdPattern::combined_i, j,
                                    i) ==
              doctest::Approx(d.combined_third(j, i, i)));
        CHECK(ker.third_sigma_terms(p.x, p.y, ThirdPattern::combined_j, j,
                                    i) ==
              doctest::Approx(d.combined_third(j, i, j)));
      }
    }
  }
  CHECK_THROWS_AS(
      ker.third_sigma_terms(Rotation(), Rotation(), ThirdPattern::diag_other,
                            2, 2),
      std::domain_error);
  CHECK_THROWS_AS(
      ker.third_sigma_terms(Rotation(), Rotation(), ThirdPattern::combined_n,
                            1, 1),
      std::domain_error);
}

TEST_CASE("combined forms assemble Hessian entries of the gradient") {
  ZonalKernel ker(make_filter_spec(8, 20));
  Rng rng(48);
  for (int trial = 0; trial < 10; ++trial) {
    Pair p = pair_at(rng, rng.uniform(0.2, 3.0));
    KernelDerivatives d = ker.derivatives(p.x, p.y);
    for (int j = 1; j <= 3; ++j)
      for (int i = 1; i <= 3; ++i) {
        if (i == j) continue;
        int n = 6 - i - j;
        int eps = levi0(j - 1, i - 1, n - 1);
        CHECK(d.combined_second(j, i) ==
              doctest::Approx(d.mixed_xx(j - 1, i - 1) -
                              0.5 * eps * d.grad_x(n - 1)));
        CHECK(d.hessian_entry(j, i) == doctest::Approx(d.combined_second(j, i)));
        for (int k = 1; k <= 3; ++k) {
          CHECK(d.combined_third(j, i, k) ==
                doctest::Approx(d.third[j - 1][i - 1][k - 1] -
                                0.5 * eps * d.mixed_xy(n - 1, k - 1)));
          CHECK(d.hessian_grad_entry(j, i, k) ==
                doctest::Approx(d.combined_third(j, i, k)));
        }
      }
  }
}

TEST_CASE("closed forms for the third-derivative combinations") {
  // With e the unit axis and w the angle of y^{-1} x, Q = (1+cos w)/(2 sin w)
  // and R = (1+cos w)/(2 sin^2 w), the tensors reduce to closed forms in
  // (w, e) alone.  Frozen here after checking against finite differences:
  //   X_iX_iX_i^y       = -3e_i(1-e_i^2)Q s2 + (2Q^2+R)e_i(1-e_i^2) s1
  //                       - e_i^3 s3
  //   combined (j,i,n)  = (3e_ie_je_nQ + eps(e_i^2-e_j^2)/2) s2
  //                       - (2e_ie_je_nQ^2 + e_ie_je_nR
  //                          + eps((e_i^2-e_j^2)/2)Q) s1 - e_ie_je_n s3
  //   combined (j,i,i)  = (e_j(3e_i^2-1)Q - eps e_ie_n/2) s2
  //                       + (e_j(1-e_i^2)R - 2e_i^2e_jQ^2
  //                          + eps(e_ie_n/2)Q - e_j/4) s1 - e_i^2e_j s3
  //   combined (j,i,j)  = (e_i(3e_j^2-1)Q + eps e_ne_j/2) s2
  //                       - ((2e_ie_j^2-e_i)Q^2 + e_ie_j^2R
  //                          + eps(e_je_n/2)Q) s1 - e_ie_j^2 s3
  // where s1..s3 are the radial profile derivatives at w, (j,i,n) is a
  // permutation of (1,2,3) and eps its sign.
  ZonalKernel ker(make_filter_spec(8, 20));
  Rng rng(52);
  for (int trial = 0; trial < 10; ++trial) {
    Pair p = pair_at(rng, rng.uniform(0.05, 3.05));
    KernelDerivatives d = ker.derivatives(p.x, p.y);
    const Eigen::Vector3d& e = d.jet.axis;
    double w = d.jet.omega;
    double s1 = d.jet.st1, s2 = d.jet.st2, s3 = d.jet.st3;
    double Q = (1 + std::cos(w)) / (2 * std::sin(w));
    double R = (1 + std::cos(w)) / (2 * std::sin(w) * std::sin(w));
    double tol = 1e-10;
    for (int i = 1; i <= 3; ++i) {
      double ei = e(i - 1);
      double diag = -3 * ei * (1 - ei * ei) * Q * s2 +
                    (2 * Q * Q + R) * ei * (1 - ei * ei) * s1 -
                    ei * ei * ei * s3;
      CHECK(d.third[i - 1][i - 1][i - 1] ==
            doctest::Approx(diag).epsilon(tol).scale(1.0));
    }
    for (int j = 1; j <= 3; ++j)
      for (int i = 1; i <= 3; ++i) {
        if (i == j) continue;
        int n = 6 - i - j;
        double eps = levi0(j - 1, i - 1, n - 1);
        double ei = e(i - 1), ej = e(j - 1), en = e(n - 1);
        double cn = (3 * ei * ej * en * Q + eps * (ei * ei - ej * ej) / 2) * s2 -
                    (2 * ei * ej * en * Q * Q + ei * ej * en * R +
                     eps * ((ei * ei - ej * ej) / 2) * Q) * s1 -
                    ei * ej * en * s3;
        double ci = (ej * (3 * ei * ei - 1) * Q - 0.5 * eps * ei * en) * s2 +
                    (ej * (1 - ei * ei) * R - 2 * ei * ei * ej * Q * Q +
                     0.5 * eps * Q * ei * en - 0.25 * ej) * s1 -
                    ei * ei * ej * s3;
        double cj = (ei * (3 * ej * ej - 1) * Q + 0.5 * eps * en * ej) * s2 -
                    ((2 * ei * ej * ej - ei) * Q * Q + ei * ej * ej * R +
                     0.5 * eps * Q * ej * en) * s1 -
                    ei * ej * ej * s3;
        CHECK(d.combined_third(j, i, n) ==
              doctest::Approx(cn).epsilon(tol).scale(1.0));
        CHECK(d.combined_third(j, i, i) ==
              doctest::Approx(ci).epsilon(tol).scale(1.0));
        CHECK(d.combined_third(j, i, j) ==
              doctest::Approx(cj).epsilon(tol).scale(1.0));
      }
  }
}

TEST_CASE("small-angle series path joins the direct path") {
  ZonalKernel ker(make_filter_spec(8, 20));
  Rng rng(49);
  for (int trial = 0; trial < 10; ++trial) {
    Rotation y = haar_sample(rng);
    Eigen::Vector3d axis = random_axis(rng);
    KernelDerivatives lo =
        ker.derivatives(y * rodrigues(axis, 0.999e-6), y);  // series branch
    KernelDerivatives hi =
        ker.derivatives(y * rodrigues(axis, 1.001e-6), y);  // direct branch
    // The evaluation angles differ by 0.2%, so allow the genuine first-order
    // drift on top of the branch agreement being probed.
    CHECK((lo.mixed_xy - hi.mixed_xy).norm() <=
          1e-6 * lo.mixed_xy.norm());
    CHECK((lo.grad_x - hi.grad_x).norm() <=
          3e-3 * lo.grad_x.norm() + 1e-15);
    CHECK(lo.grad_x.normalized().dot(hi.grad_x.normalized()) ==
          doctest::Approx(1.0).epsilon(1e-9));
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
          CHECK(lo.third[j][i][k] ==
                doctest::Approx(hi.third[j][i][k])
                    .epsilon(1e-6)
                    .scale(std::abs(ker.st2_zero())));
  }
  // Deep inside the series region everything stays finite and close to the
  // coincidence values.
  for (double w : {1e-7, 1e-9, 1e-12}) {
    Rotation y = haar_sample(rng);
    KernelDerivatives d =
        ker.derivatives(y * rodrigues(Eigen::Vector3d(0.6, -0.64, 0.48), w),
                        y);
    CHECK(std::isfinite(d.value));
    CHECK((d.mixed_xy + ker.st2_zero() * Eigen::Matrix3d::Identity())
              .norm() <= 1e-4 * std::abs(ker.st2_zero()));
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) CHECK(std::isfinite(d.third[j][i][k]));
  }
}

TEST_CASE("derivative jet carries the profile data") {
  ZonalKernel ker(make_filter_spec(8, 20));
  Rng rng(50);
  Pair p = pair_at(rng, 1.3);
  KernelDerivatives d = ker.derivatives(p.x, p.y);
  CHECK(d.jet.omega == doctest::Approx(geodesic_distance(p.x, p.y))
                           .epsilon(1e-12));
  CHECK(d.jet.st0 == doctest::Approx(ker.sigma_tilde(d.jet.omega))
                         .epsilon(1e-13));
  CHECK(d.value == doctest::Approx(d.jet.st0));
  CHECK(d.jet.axis.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((d.grad_x - d.jet.st1 * d.jet.axis).norm() <= 1e-13);
}

TEST_CASE("q evaluation: single-center expansions") {
  ZonalKernel ker(make_filter_spec(8, 20));
  Rng rng(51);
  Rotation c = haar_sample(rng);
  QData qd;
  qd.centers = {c};
  qd.alpha = Eigen::Vector4d(1.0, 0.0, 0.0, 0.0);

  QJet at_center = evaluate_q(ker, qd, c);
  CHECK(at_center.q == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(at_center.grad.norm() <= 1e-12);
  CHECK((at_center.hess - ker.st2_zero() * Eigen::Matrix3d::Identity())
            .norm() <= 1e-10 * std::abs(ker.st2_zero()));

  for (int trial = 0; trial < 10; ++trial) {
    Rotation x = haar_sample(rng);
    QJet jet = evaluate_q(ker, qd, x);
    CHECK(jet.q == doctest::Approx(ker.sigma(x, c)).epsilon(1e-13));
    CHECK((jet.hess - jet.hess.transpose()).norm() <=
          1e-10 * std::abs(ker.st2_zero()));
    CHECK((hessian_q_terms(ker, qd, x) - jet.hess).norm() == 0.0);
  }
}

TEST_CASE("q evaluation matches finite differences for general data") {
  ZonalKernel ker(make_filter_spec(8, 20));
  Rng rng(52);
  QData qd;
  qd.centers = {haar_sample(rng), haar_sample(rng), haar_sample(rng)};
  qd.alpha = Eigen::VectorXd(12);
  for (int i = 0; i < 12; ++i) qd.alpha(i) = rng.uniform(-1.0, 1.0);

  auto qfun = [&](const Rotation& x) { return evaluate_q(ker, qd, x).q; };
  for (int trial = 0; trial < 5; ++trial) {
    Rotation x = haar_sample(rng);
    QJet jet = evaluate_q(ker, qd, x);
    double scale = std::abs(ker.st2_zero());
    for (int r = 1; r <= 3; ++r) {
      CHECK(jet.grad(r - 1) ==
            doctest::Approx(numeric_X(qfun, x, r, 1e-5))
                .epsilon(1e-5)
                .scale(20));
      for (int cidx = 1; cidx <= 3; ++cidx) {
        // Hessian entry = X_r X_c q - (1/2) eps_rcn X_n q.
        auto xc_q = [&](const Rotation& p) {
          return numeric_X(qfun, p, cidx, 1e-4);
        };
        double xrxc = numeric_X(xc_q, x, r, 1e-4);
        double corr = 0;
        for (int n = 1; n <= 3; ++n)
          corr += 0.5 * levi0(r - 1, cidx - 1, n - 1) * jet.grad(n - 1);
        CHECK(jet.hess(r - 1, cidx - 1) ==
              doctest::Approx(xrxc - corr).epsilon(1e-3).scale(scale));
      }
    }
    CHECK((jet.hess - jet.hess.transpose()).norm() <= 1e-10 * scale);
    // Linearity in alpha.
    QData twice = qd;
    twice.alpha *= 2.0;
    CHECK(evaluate_q(ker, twice, x).q ==
          doctest::Approx(2 * jet.q).epsilon(1e-13));
  }
  QData bad = qd;
  bad.alpha = Eigen::VectorXd::Ones(7);
  CHECK_THROWS(evaluate_q(ker, bad, Rotation()));
}

TEST_CASE("localization report verifies every stated inequality") {
  for (auto [s, N] : {std::pair{8, 20}, std::pair{6, 16}}) {
    ZonalKernel ker(make_filter_spec(s, N));
    LocalizationReport rep = verify_localization(ker, 400, 9);
    CHECK(rep.s == s);
    CHECK(rep.N == N);
    CHECK(rep.samples == 400);
    REQUIRE(rep.rows.size() == 13);
    for (const auto& row : rep.rows) {
      CHECK(row.applicable);
      CHECK(row.worst_ratio <= 1.0);
      CHECK(row.worst_ratio > 0.0);
      CHECK(!row.where.empty());
    }
    CHECK(rep.all_ok());

    // Deterministic independent of thread partitioning.
    LocalizationReport again = verify_localization(ker, 400, 9);
    for (std::size_t r = 0; r < rep.rows.size(); ++r) {
      CHECK(rep.rows[r].worst_ratio == again.rows[r].worst_ratio);
      CHECK(rep.rows[r].where == again.rows[r].where);
    }
  }
}

TEST_CASE("off-diagonal sums respect the separation ceilings") {
  ZonalKernel ker(make_filter_spec(8, 20));
  Rng rng(53);
  SupportSet support = well_separated_support(6, 0.8, rng);

  OffdiagReport at_anchor = verify_offdiag_sums(ker, support, support[2], 0.0);
  CHECK(at_anchor.nu == doctest::Approx(21 * support.separation())
                            .epsilon(1e-12));
  CHECK(at_anchor.anchor == 2);
  REQUIRE(at_anchor.rows.size() == 6);
  CHECK(at_anchor.all_ok());

  // Perturbed evaluation point within the eps window.
  double eps = 0.45;
  Rotation x = support[3] * rodrigues(random_axis(rng),
                                      0.9 * eps * support.separation());
  OffdiagReport wobbled = verify_offdiag_sums(ker, support, x, eps);
  CHECK(wobbled.anchor == 3);
  CHECK(wobbled.all_ok());

  // Single-point support: empty sums, conventional nu = pi.
  SupportSet lone({support[0]});
  OffdiagReport empty = verify_offdiag_sums(ker, lone, support[0], 0.0);
  CHECK(empty.all_ok());
  for (const auto& row : empty.rows) CHECK(row.worst_ratio == 0.0);

  // Hypothesis violations throw.
  CHECK_THROWS_AS(verify_offdiag_sums(ker, support, support[0], 0.6),
                  std::domain_error);
  Rotation far = support[0] * rodrigues(random_axis(rng), 0.39);
  CHECK_THROWS_AS(verify_offdiag_sums(ker, support, far, 0.2),
                  std::domain_error);
  SupportSet tight({Rotation(), rodrigues(Eigen::Vector3d(1, 0, 0), 0.1)});
  CHECK_THROWS_AS(verify_offdiag_sums(ker, tight, Rotation(), 0.0),
                  std::domain_error);
}
