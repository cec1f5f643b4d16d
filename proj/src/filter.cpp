#include "so3sr/filter.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace so3sr {

namespace {

constexpr long double kPi = std::numbers::pi_v<long double>;

void require_even_order(int s) {
  if (s < 6 || s > 16 || s % 2 != 0)
    throw std::invalid_argument("filter order s must be even and in [6, 16]");
}

double factorial(int n) {
  double r = 1.0;
  for (int k = 2; k <= n; ++k) r *= k;
  return r;
}

}  // namespace

SplineLadder build_perfect_bspline(int s) {
  require_even_order(s);
  // Breakpoints cos(k*pi/s) listed increasing; mirror the left half so the
  // grid is exactly symmetric and the midpoint is exactly zero.
  std::vector<long double> breaks(static_cast<std::size_t>(s) + 1);
  for (int j = 0; j <= s / 2; ++j) {
    long double b = -std::cos(kPi * static_cast<long double>(j) /
                              static_cast<long double>(s));
    breaks[static_cast<std::size_t>(j)] = b;
    breaks[static_cast<std::size_t>(s - j)] = -b;
  }
  breaks[static_cast<std::size_t>(s) / 2] = 0.0L;
  std::vector<long double> values(static_cast<std::size_t>(s));
  for (int p = 0; p < s; ++p)
    values[static_cast<std::size_t>(p)] = (p % 2 == 0) ? 1.0L : -1.0L;

  SplineLadder ladder;
  ladder.s = s;
  ladder.f.reserve(static_cast<std::size_t>(s));
  ladder.f.push_back(PiecewisePoly::step(breaks, values));
  for (int k = 1; k <= s - 1; ++k)
    ladder.f.push_back(ladder.f.back().antiderivative());
  return ladder;
}

double zeta_fn(int s) {
  if (s < 3) throw std::invalid_argument("zeta_fn: need s >= 3");
  const long double K = 512.0L;
  long double sum = 0.0L;
  for (long double n = K - 1.0L; n >= 1.0L; n -= 1.0L)
    sum += std::pow(n, -static_cast<long double>(s));
  // Euler-Maclaurin tail from K: integral + half-term + B_2 correction.
  long double tail = std::pow(K, 1.0L - s) / (s - 1.0L) +
                     0.5L * std::pow(K, -static_cast<long double>(s)) +
                     (s / 12.0L) * std::pow(K, -static_cast<long double>(s) - 1.0L);
  return static_cast<double>(sum + tail);
}

double LocalizationConstants::of(int l) const {
  switch (l) {
    case 0: return c0;
    case 1: return c1;
    case 2: return c2;
    case 3: return c3;
    default: throw std::invalid_argument("localization constant: l in 0..3");
  }
}

LocalizationConstants localization_constants(int s) {
  require_even_order(s);
  double base = 1.02 * factorial(s - 1) * std::pow(2.0, s);
  LocalizationConstants c;
  c.c0 = base * s;
  c.c1 = base * 2 * s;
  c.c2 = base * (4 * s + 1);
  c.c3 = base * (9 * s - 2);
  return c;
}

std::vector<VariationRow> variation_constants(int s) {
  require_even_order(s);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double theta = std::numbers::pi / (2.0 * s);
  const double tan1 = std::tan(theta);
  // |f_3(0)| = (tan(3 theta) - 3 tan(theta)) / 24; peak of the third
  // antiderivative of the step function.
  const double f3_sup = (std::tan(3.0 * theta) - 3.0 * tan1) / 24.0;
  auto p2 = [](int e) { return std::pow(2.0, e); };

  std::vector<VariationRow> rows;
  rows.push_back({s - 1, p2(s) * s, false, p2(s - 1), false});
  rows.push_back({s - 2, p2(s - 1), false, p2(s - 2) * tan1, false});
  rows.push_back({s - 3, p2(s - 4) * s * tan1 * tan1, false,
                  p2(s - 4) * tan1 * tan1, false});
  rows.push_back({s - 4, p2(s - 4) * tan1 * tan1, true, p2(s - 4) * f3_sup,
                  false});
  rows.push_back({s - 5, p2(s - 4) * f3_sup, true, nan, false});
  if (s == 8) {
    // Low-order bounds specific to s = 8:
    //   sup of order j <= 4^j / (2^5 (6-j)!), TV of order j-1 <= 4^j / (2^4 (6-j)!)
    double var_low[3], sup_low[3];
    for (int j = 1; j <= 3; ++j) {
      double f6j = factorial(6 - j);
      sup_low[j - 1] = std::pow(4.0, j) / (32.0 * f6j);
      var_low[j - 1] = std::pow(4.0, j) / (16.0 * f6j);
    }
    // The order s-5 = 3 row gains the sup bound from this family.
    rows.back().sup = sup_low[2];
    rows.back().sup_is_bound = true;
    rows.push_back({2, var_low[2], true, sup_low[1], true});
    rows.push_back({1, var_low[1], true, sup_low[0], true});
    rows.push_back({0, var_low[0], true, nan, false});
  }
  return rows;
}

ZeroDerivativeBounds zero_derivative_bounds(int s, int N) {
  if (s < 8 || s % 2 != 0 || s > 16)
    throw std::invalid_argument(
        "zero-derivative bounds require even s >= 8 (and s <= 16)");
  if (N < 2 * s)
    throw std::invalid_argument("zero-derivative bounds require N >= 2s");
  ZeroDerivativeBounds z;
  z.c_lo = 0.999 / (2.0 * (s + 1));
  z.c_hi = 1.001 / (2.0 * (s + 1));
  z.d_lo = 3.0 * 0.999 / (4.0 * (s + 2) * (s + 1));
  z.d_hi = 3.0 * 1.001 / (4.0 * (s + 2) * (s + 1));
  // Sixth-derivative ceiling 1.011 (15/8) (8!/11!) (N+1)^6, stated for s = 8,
  // N >= 20 only.
  const double nan = std::numeric_limits<double>::quiet_NaN();
  z.c6_coeff = (s == 8 && N >= 20)
                   ? 1.011 * (15.0 / 8.0) / (9.0 * 10.0 * 11.0)
                   : nan;
  z.c6_bound = z.c6_coeff * std::pow(N + 1.0, 6);
  return z;
}

double OffdiagConstants::of(int l) const {
  switch (l) {
    case 0: return C0;
    case 1: return C1;
    case 2: return C2;
    case 3: return C3;
    default: throw std::invalid_argument("offdiag constant: l in 0..3");
  }
}

OffdiagConstants offdiag_constants(int s, double eps) {
  require_even_order(s);
  if (eps < 0.0 || eps > 0.5)
    throw std::domain_error("offdiag constants: eps in [0, 1/2]");
  LocalizationConstants c = localization_constants(s);
  double z = zeta_fn(s - 2);
  OffdiagConstants o;
  o.C0 = 124.0 * c.c0 * z;
  o.C1 = 124.0 * c.c1 * z;
  o.C2 = 124.0 * c.c2 * z;
  o.C3 = 124.0 * c.c3 * z;
  double inv = std::pow(1.0 - eps, -static_cast<double>(s));
  o.a_eps = std::min((27.0 / 124.0) * inv + 1.0, inv);
  return o;
}

double gtilde_l1_closed_form(int s) {
  require_even_order(s);
  return 1.0 / (factorial(s - 1) * std::pow(2.0, s - 1));
}

FilterSpec make_filter_spec(int s, int N) {
  require_even_order(s);
  if (N < 2 * s)
    throw std::invalid_argument("filter degree must satisfy N >= 2s");
  FilterSpec spec;
  spec.s = s;
  spec.N = N;
  spec.ladder = build_perfect_bspline(s);
  spec.gtilde = spec.ladder.g().scaled_abscissa(2.0L);

  spec.samples.resize(static_cast<std::size_t>(N) + 1);
  long double norm = 0.0L;
  for (int k = 0; k <= N; ++k) {
    long double x = static_cast<long double>(k) /
                    (2.0L * static_cast<long double>(N + 1));
    long double v = spec.gtilde(x);
    spec.samples[static_cast<std::size_t>(k)] = static_cast<double>(v);
    norm += (k == 0) ? v : 2.0L * v;
  }
  spec.discrete_norm = static_cast<double>(norm);

  spec.weights.resize(static_cast<std::size_t>(N) + 1);
  for (int l = 0; l <= N; ++l) {
    double hi = spec.samples[static_cast<std::size_t>(l)];
    double lo = (l + 1 <= N) ? spec.samples[static_cast<std::size_t>(l) + 1] : 0.0;
    spec.weights[static_cast<std::size_t>(l)] = (hi - lo) / spec.discrete_norm;
    if (!(spec.weights[static_cast<std::size_t>(l)] > 0.0))
      throw std::runtime_error(
          "filter weights must be positive; sampled filter is not strictly "
          "decreasing on [0, 1/2]");
  }

  spec.loc = localization_constants(s);
  spec.offdiag = offdiag_constants(s, 0.0);
  if (s >= 8) {
    spec.zero = zero_derivative_bounds(s, N);
    spec.has_zero_bounds = true;
  }
  return spec;
}

L1Sandwich l1_norm_sandwich(const FilterSpec& spec) {
  double l1 = gtilde_l1_closed_form(spec.s);
  double variation = std::pow(2.0, spec.s) * spec.s;  // |gtilde^(s-1)|_V
  double slack = 2.0 * zeta_fn(spec.s) /
                 std::pow(2.0 * spec.N * std::numbers::pi, spec.s) * variation;
  L1Sandwich b;
  b.lo = l1 - slack;
  b.hi = l1 + slack;
  b.mid = spec.discrete_norm / (2.0 * (spec.N + 1));
  return b;
}

std::vector<std::pair<std::string, double>> constants_table(
    const FilterSpec& spec) {
  std::vector<std::pair<std::string, double>> t;
  t.emplace_back("gtilde_l1_closed", gtilde_l1_closed_form(spec.s));
  t.emplace_back("gtilde_l1_ladder",
                 static_cast<double>(spec.gtilde.integral()));
  t.emplace_back("discrete_norm", spec.discrete_norm);
  L1Sandwich sw = l1_norm_sandwich(spec);
  t.emplace_back("l1_sandwich_lo", sw.lo);
  t.emplace_back("l1_sandwich_mid", sw.mid);
  t.emplace_back("l1_sandwich_hi", sw.hi);
  t.emplace_back("zeta_s", zeta_fn(spec.s));
  t.emplace_back("zeta_s_minus_2", zeta_fn(spec.s - 2));
  t.emplace_back("c0_s", spec.loc.c0);
  t.emplace_back("c1_s", spec.loc.c1);
  t.emplace_back("c2_s", spec.loc.c2);
  t.emplace_back("c3_s", spec.loc.c3);
  t.emplace_back("C0_s", spec.offdiag.C0);
  t.emplace_back("C1_s", spec.offdiag.C1);
  t.emplace_back("C2_s", spec.offdiag.C2);
  t.emplace_back("C3_s", spec.offdiag.C3);
  if (spec.has_zero_bounds) {
    t.emplace_back("c_s", spec.zero.c_lo);
    t.emplace_back("ctilde_s", spec.zero.c_hi);
    t.emplace_back("d_s", spec.zero.d_lo);
    t.emplace_back("dtilde_s", spec.zero.d_hi);
    if (!std::isnan(spec.zero.c6_coeff))
      t.emplace_back("c6_coeff", spec.zero.c6_coeff);
  }
  for (const VariationRow& row : variation_constants(spec.s)) {
    std::string suffix = std::to_string(row.order);
    if (!std::isnan(row.variation))
      t.emplace_back((row.variation_is_bound ? "var_bound_" : "var_") + suffix,
                     row.variation);
    if (!std::isnan(row.sup))
      t.emplace_back((row.sup_is_bound ? "sup_bound_" : "sup_") + suffix,
                     row.sup);
  }
  return t;
}

}  // namespace so3sr
