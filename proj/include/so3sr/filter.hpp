#pragma once

#include <string>
#include <utility>
#include <vector>

#include "so3sr/piecewise_poly.hpp"

namespace so3sr {

// Antiderivative ladder of the perfect B-spline of order s-1 on [-1, 1]:
// f[0] is the +-1 step function with sign changes at cos(k*pi/s) (value +1 on
// the leftmost piece), f[k] integrates f[k-1] from -1, and g_{s-1} = f[s-1].
struct SplineLadder {
  int s = 0;
  std::vector<PiecewisePoly> f;
  const PiecewisePoly& g() const { return f.back(); }
};

SplineLadder build_perfect_bspline(int s);

// Riemann zeta by direct summation with an Euler-Maclaurin tail correction;
// absolute error below 1e-14 for s >= 3.
double zeta_fn(int s);

// Closed-form total-variation / sup-norm table for the derivatives
// gtilde^(j) of the scaled spline gtilde(x) = g_{s-1}(2x).  Rows where the
// closed form is only an upper bound are flagged; entries the table does not
// cover are NaN.
struct VariationRow {
  int order = 0;          // derivative order j
  double variation = 0;   // |gtilde^(j)|_V value or bound (NaN if absent)
  bool variation_is_bound = false;
  double sup = 0;         // ||gtilde^(j)||_inf value or bound (NaN if absent)
  bool sup_is_bound = false;
};
std::vector<VariationRow> variation_constants(int s);

// Localization constants c_{l,s} of the kernel derivative decay
// |sigma^(l)(t)| <= c_{l,s} / ((N+1)^{s-l} |t|^s), l = 0..3.
struct LocalizationConstants {
  double c0 = 0, c1 = 0, c2 = 0, c3 = 0;
  double of(int l) const;
};
LocalizationConstants localization_constants(int s);

// Sandwich constants for the kernel derivatives at zero:
//   c_lo (N+1)^2 <= |sigma''(0)| <= c_hi (N+1)^2
//   d_lo (N+1)^4 <= |sigma''''(0)| <= d_hi (N+1)^4
// plus, for s = 8 and N >= 20, |sigma^(6)(0)| <= c6_coeff (N+1)^6 = c6_bound.
struct ZeroDerivativeBounds {
  double c_lo = 0, c_hi = 0, d_lo = 0, d_hi = 0;
  double c6_coeff = 0;  // NaN unless s == 8, N >= 20
  double c6_bound = 0;  // c6_coeff (N+1)^6
};
ZeroDerivativeBounds zero_derivative_bounds(int s, int N);

// Off-diagonal summation constants C_{l,s} = 124 c_{l,s} zeta(s-2) and the
// wobble factor a_eps = min{(27/124)(1-eps)^{-s} + 1, (1-eps)^{-s}}.
struct OffdiagConstants {
  double C0 = 0, C1 = 0, C2 = 0, C3 = 0;
  double a_eps = 0;
  double of(int l) const;
};
OffdiagConstants offdiag_constants(int s, double eps);

// Everything the kernel needs, built once per (s, N): the spline ladder, the
// scaled filter gtilde, its samples a_k = gtilde(k/(2(N+1))), the discrete
// norm, the positive filter weights h_N(l), and the constant tables.
struct FilterSpec {
  int s = 0;
  int N = 0;
  SplineLadder ladder;
  PiecewisePoly gtilde;
  std::vector<double> samples;   // a_k for k = 0..N (a_{-k} = a_k)
  double discrete_norm = 0;      // a_0 + 2 sum_{k>=1} a_k
  std::vector<double> weights;   // h_N(l) = (a_l - a_{l+1}) / discrete_norm
  LocalizationConstants loc;
  OffdiagConstants offdiag;      // at eps = 0, i.e. plain C_{l,s}
  ZeroDerivativeBounds zero;     // only populated when has_zero_bounds
  bool has_zero_bounds = false;  // requires s >= 8
};

FilterSpec make_filter_spec(int s, int N);

// Discrete-norm sandwich: lo <= discrete_norm / (2(N+1)) <= hi.
struct L1Sandwich {
  double lo = 0, mid = 0, hi = 0;
};
L1Sandwich l1_norm_sandwich(const FilterSpec& spec);

// ||g_{s-1}||_1 = 1/((s-1)! 2^{s-2}); the scaled gtilde has half that.
double gtilde_l1_closed_form(int s);

// Name -> value dump of every derived constant for the CLI constants table.
std::vector<std::pair<std::string, double>> constants_table(
    const FilterSpec& spec);

}  // namespace so3sr
