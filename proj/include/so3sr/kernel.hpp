#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "so3sr/filter.hpp"
#include "so3sr/rotation.hpp"

namespace so3sr {

// Scalar profile data at the relative rotation of an evaluation pair:
// omega = d(x, y), axis = e(y^{-1} x), st0..st3 = sigma~_N^(l)(omega) for
// l = 0..3.  st1 = st3 = 0 at omega = 0 (odd derivatives of an even function).
struct KernelJet {
  double omega = 0.0;
  Eigen::Vector3d axis{0.0, 0.0, 1.0};
  double st0 = 0.0;
  double st1 = 0.0;
  double st2 = 0.0;
  double st3 = 0.0;
};

// Every derivative of sigma_N(x, y) up to the third order at one pair,
// assembled from the signed axis-derivative lookup
//   X_i^x e_n = Q (delta_in - e_i e_n) + (1/2) eps_inm e_m,
// Q = (1/2) cot(omega/2).  Storage is 0-based; the accessors below take the
// operator numbers 1..3 used in comments (X_1, X_2, X_3).
struct KernelDerivatives {
  KernelJet jet;
  double value = 0.0;
  Eigen::Vector3d grad_x{0, 0, 0};  // X_i^x sigma
  Eigen::Vector3d grad_y{0, 0, 0};  // X_n^y sigma = -grad_x
  // (i, n) = X_i^x X_n^y sigma
  Eigen::Matrix3d mixed_xy = Eigen::Matrix3d::Zero();
  // (i, j) = X_i^x X_j^x sigma
  Eigen::Matrix3d mixed_xx = Eigen::Matrix3d::Zero();
  // [j][i][k] = X_j^x X_i^x X_k^y sigma
  std::array<std::array<std::array<double, 3>, 3>, 3> third{};

  // X_j^x X_i^x sigma -+ (1/2) X_n^x sigma for j != i, n the remaining axis;
  // the -+ sign is -eps_jin, i.e. this is the Hessian entry H(j, i) of
  // sigma(., y).  Arguments 1..3.
  double combined_second(int j, int i) const;
  // X_j^x X_i^x X_k^y sigma -+ (1/2) X_n^x X_k^y sigma, j != i, any k; the
  // Hessian entry H(j, i) of X_k^y sigma(., y).  Arguments 1..3.
  double combined_third(int j, int i, int k) const;
  // Hessian entry H(r, c) = X_r X_c sigma - (1/2) eps_rcn X_n sigma of
  // sigma(., y) (equals combined_second off the diagonal).  Arguments 1..3.
  double hessian_entry(int r, int c) const;
  // Hessian entry H(r, c) of X_k^y sigma(., y).  Arguments 1..3.
  double hessian_grad_entry(int r, int c, int k) const;
};

// The five closed-form third-derivative combinations.  Index arguments of
// third_sigma_terms per pattern (axes 1..3):
//   diag_other   (a=i, b=k, k != i):  X_i X_i X_k^y sigma
//   diag_same    (a=i, b=i):          X_i X_i X_i^y sigma
//   combined_n   (a=j, b=i, j != i):  X_j X_i X_n^y -+ (1/2) X_n X_n^y
//   combined_i   (a=j, b=i, j != i):  X_j X_i X_i^y -+ (1/2) X_n X_i^y
//   combined_j   (a=j, b=i, j != i):  X_j X_i X_j^y -+ (1/2) X_n X_j^y
// where n is the axis distinct from i and j and -+ = -eps_jin.
enum class ThirdPattern { diag_other, diag_same, combined_n, combined_i, combined_j };

class ZonalKernel {
 public:
  explicit ZonalKernel(FilterSpec spec);

  const FilterSpec& spec() const { return spec_; }
  int degree() const { return spec_.N; }
  int order() const { return spec_.s; }

  // sigma~_N^(order)(t) by direct trigonometric summation; order in 0..3.
  double sigma_tilde(double t, int order = 0) const;
  // Exact derivative values at t = 0: sigma~''(0) < 0, sigma~''''(0) > 0,
  // sigma~^(6)(0) < 0.
  double st2_zero() const { return st2_zero_; }
  double st4_zero() const { return st4_zero_; }
  double st6_zero() const { return st6_zero_; }

  double sigma(const Rotation& x, const Rotation& y) const;
  Eigen::Vector3d grad_y_sigma(const Rotation& x, const Rotation& y) const;
  // X_i^x X_n^y sigma; axes 1..3.
  double mixed_sigma(const Rotation& x, const Rotation& y, int i, int n) const;
  double third_sigma_terms(const Rotation& x, const Rotation& y,
                           ThirdPattern pattern, int a, int b) const;

  // Full derivative set; the workhorse behind the scalar accessors.
  KernelDerivatives derivatives(const Rotation& x, const Rotation& y) const;

 private:
  FilterSpec spec_;
  double st2_zero_ = 0.0;
  double st4_zero_ = 0.0;
  double st6_zero_ = 0.0;
};

// sigma_N(x, y) through the Wigner route sum_l h_N(l) sum_km D(x) conj(D(y));
// equals the metric form by the addition formula (cross-module oracle).
double sigma_via_wigner(const ZonalKernel& kernel, const Rotation& x,
                        const Rotation& y);

// Certificate expansion data: with M centers and coefficient blocks
// alpha = [alpha0; alpha1; alpha2; alpha3] (4M entries),
//   q(x) = sum_j alpha0_j sigma(x, c_j) + sum_n alphan_j X_n^y sigma(x, c_j).
struct QData {
  std::vector<Rotation> centers;
  Eigen::VectorXd alpha;
};

struct QJet {
  double q = 0.0;
  Eigen::Vector3d grad{0, 0, 0};  // X_i^x q
  // Symmetrized Hessian; all nine entries assembled independently, so the
  // symmetry of the result is a meaningful check, not a construction.
  Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
};

QJet evaluate_q(const ZonalKernel& kernel, const QData& qd, const Rotation& x);
// The symmetrized Hessian [X_i X_j q] - (1/2) antisymmetric gradient
// correction at x; symmetric to roundoff.
Eigen::Matrix3d hessian_q_terms(const ZonalKernel& kernel, const QData& qd,
                                const Rotation& x);

// One verified inequality: worst measured/bound over the sampled region with
// the location of the worst case.  Rows outside their hypothesis region are
// marked not applicable.
struct BoundCheckRow {
  std::string name;
  bool applicable = true;
  double worst_ratio = 0.0;
  double measured = 0.0;  // at the worst sample
  double bound = 0.0;     // at the worst sample
  std::string where;      // human-readable worst-case location
};

struct LocalizationReport {
  int s = 0;
  int N = 0;
  long samples = 0;
  std::vector<BoundCheckRow> rows;
  bool all_ok(double tol = 1.0) const;
};

// Checks every localization inequality (scalar-profile decay, first/second/
// third derivative kernels, combined off-diagonal forms, and the
// near-coincidence Lipschitz window) on randomized grids of the stated size.
LocalizationReport verify_localization(const ZonalKernel& kernel, long samples,
                                       std::uint64_t seed);

struct OffdiagReport {
  double nu = 0.0;        // (N+1) * separation(support)
  double epsilon = 0.0;
  std::size_t anchor = 0; // index of the nearest support point to x
  std::vector<BoundCheckRow> rows;
  bool all_ok(double tol = 1.0) const;
};

// Evaluates the six off-diagonal sums over support \ {anchor} at x and
// compares each against its stated ceiling; throws std::domain_error naming
// the violated hypothesis (separation < pi/(N+1) or d(x, anchor) too large).
OffdiagReport verify_offdiag_sums(const ZonalKernel& kernel,
                                  const SupportSet& support, const Rotation& x,
                                  double epsilon);

}  // namespace so3sr
