#pragma once

#include <vector>

namespace so3sr {

// Compactly supported piecewise polynomial on [breaks.front(), breaks.back()],
// identically zero outside.  Piece p lives on [breaks[p], breaks[p+1]] and is
// stored in the local basis (x - breaks[p])^j, which keeps coefficients O(1)
// through repeated antidifferentiation.  All arithmetic in long double: the
// spline ladders built on top amplify roundoff and the derived constants are
// compared against closed forms at ~1e-12 relative tolerance.
class PiecewisePoly {
 public:
  PiecewisePoly() = default;

  // Piecewise-constant function: values[p] on (breaks[p], breaks[p+1]).
  static PiecewisePoly step(const std::vector<long double>& breaks,
                            const std::vector<long double>& values);

  long double operator()(long double x) const;

  // F(x) = \int_{breaks.front()}^x f(t) dt, accumulated left to right so F is
  // continuous across interior breakpoints.
  PiecewisePoly antiderivative() const;
  PiecewisePoly derivative() const;

  // h(x) = f(c*x); support shrinks by 1/c (c > 0).
  PiecewisePoly scaled_abscissa(long double c) const;

  long double integral() const;                 // \int f
  long double integral_abs() const;             // \int |f|
  long double moment(int k) const;              // \int x^k f(x) dx
  long double sup_norm() const;                 // max |f| over the support
  // Total variation on the whole line: interior jumps, oscillation inside each
  // piece, and the two boundary jumps against the zero extension.
  long double total_variation() const;

  int piece_count() const { return static_cast<int>(coef_.size()); }
  int degree() const;
  const std::vector<long double>& breakpoints() const { return breaks_; }
  const std::vector<long double>& piece_coefficients(int p) const {
    return coef_[p];
  }

  long double support_left() const { return breaks_.front(); }
  long double support_right() const { return breaks_.back(); }

 private:
  long double eval_piece(int p, long double x) const;
  std::vector<long double> breaks_;               // size P+1, increasing
  std::vector<std::vector<long double>> coef_;    // size P, local basis
};

// Real roots of the polynomial sum_j c[j] u^j on [lo, hi], ascending, found by
// recursive monotone bracketing + bisection.  Multiple roots are reported once.
std::vector<long double> polynomial_roots(const std::vector<long double>& c,
                                          long double lo, long double hi);

}  // namespace so3sr
