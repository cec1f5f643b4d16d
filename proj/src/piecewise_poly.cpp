#include "so3sr/piecewise_poly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace so3sr {

namespace {

long double horner(const std::vector<long double>& c, long double u) {
  long double v = 0.0L;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * u + *it;
  return v;
}

std::vector<long double> poly_derivative(const std::vector<long double>& c) {
  std::vector<long double> d;
  for (std::size_t j = 1; j < c.size(); ++j)
    d.push_back(static_cast<long double>(j) * c[j]);
  if (d.empty()) d.push_back(0.0L);
  return d;
}

int effective_degree(const std::vector<long double>& c) {
  int d = static_cast<int>(c.size()) - 1;
  while (d > 0 && c[static_cast<std::size_t>(d)] == 0.0L) --d;
  return d;
}

long double bisect_root(const std::vector<long double>& c, long double lo,
                        long double hi) {
  long double flo = horner(c, lo);
  for (int it = 0; it < 200; ++it) {
    long double mid = 0.5L * (lo + hi);
    if (mid == lo || mid == hi) break;
    long double fm = horner(c, mid);
    if (fm == 0.0L) return mid;
    if ((flo < 0.0L) == (fm < 0.0L)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5L * (lo + hi);
}

}  // namespace

std::vector<long double> polynomial_roots(const std::vector<long double>& c,
                                          long double lo, long double hi) {
  std::vector<long double> roots;
  if (lo >= hi) return roots;
  int deg = effective_degree(c);
  if (deg == 0) return roots;  // constant: either no roots or trivially all
  if (deg == 1) {
    long double r = -c[0] / c[1];
    if (r >= lo && r <= hi) roots.push_back(r);
    return roots;
  }
  std::vector<long double> trimmed(c.begin(), c.begin() + deg + 1);
  std::vector<long double> crit = polynomial_roots(poly_derivative(trimmed), lo, hi);
  std::vector<long double> nodes;
  nodes.push_back(lo);
  for (long double r : crit)
    if (r > nodes.back()) nodes.push_back(r);
  if (hi > nodes.back()) nodes.push_back(hi);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    long double a = nodes[i], b = nodes[i + 1];
    long double fa = horner(trimmed, a), fb = horner(trimmed, b);
    if (fa == 0.0L) {
      if (roots.empty() || roots.back() != a) roots.push_back(a);
    }
    if ((fa < 0.0L && fb > 0.0L) || (fa > 0.0L && fb < 0.0L)) {
      long double r = bisect_root(trimmed, a, b);
      if (roots.empty() || r > roots.back()) roots.push_back(r);
    }
    if (fb == 0.0L && i + 2 == nodes.size()) {
      if (roots.empty() || roots.back() != b) roots.push_back(b);
    }
  }
  return roots;
}

PiecewisePoly PiecewisePoly::step(const std::vector<long double>& breaks,
                                  const std::vector<long double>& values) {
  if (breaks.size() < 2 || values.size() + 1 != breaks.size())
    throw std::invalid_argument("step: need P+1 breakpoints for P values");
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    if (!(breaks[i] < breaks[i + 1]))
      throw std::invalid_argument("step: breakpoints must increase");
  PiecewisePoly f;
  f.breaks_ = breaks;
  f.coef_.resize(values.size());
  for (std::size_t p = 0; p < values.size(); ++p) f.coef_[p] = {values[p]};
  return f;
}

long double PiecewisePoly::eval_piece(int p, long double x) const {
  return horner(coef_[static_cast<std::size_t>(p)],
                x - breaks_[static_cast<std::size_t>(p)]);
}

long double PiecewisePoly::operator()(long double x) const {
  if (coef_.empty() || x < breaks_.front() || x > breaks_.back()) return 0.0L;
  // Last piece is closed on the right; others half-open.
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
  int p = static_cast<int>(it - breaks_.begin()) - 1;
  if (p < 0) p = 0;
  if (p >= piece_count()) p = piece_count() - 1;
  return eval_piece(p, x);
}

PiecewisePoly PiecewisePoly::antiderivative() const {
  PiecewisePoly F;
  F.breaks_ = breaks_;
  F.coef_.resize(coef_.size());
  long double acc = 0.0L;  // running value at the left edge of each piece
  for (std::size_t p = 0; p < coef_.size(); ++p) {
    const auto& c = coef_[p];
    std::vector<long double> C(c.size() + 1);
    C[0] = acc;
    for (std::size_t j = 0; j < c.size(); ++j)
      C[j + 1] = c[j] / static_cast<long double>(j + 1);
    F.coef_[p] = C;
    acc = horner(C, breaks_[p + 1] - breaks_[p]);
  }
  return F;
}

PiecewisePoly PiecewisePoly::derivative() const {
  PiecewisePoly d;
  d.breaks_ = breaks_;
  d.coef_.resize(coef_.size());
  for (std::size_t p = 0; p < coef_.size(); ++p)
    d.coef_[p] = poly_derivative(coef_[p]);
  return d;
}

PiecewisePoly PiecewisePoly::scaled_abscissa(long double c) const {
  if (!(c > 0.0L)) throw std::invalid_argument("scaled_abscissa: need c > 0");
  PiecewisePoly h;
  h.breaks_.resize(breaks_.size());
  for (std::size_t i = 0; i < breaks_.size(); ++i) h.breaks_[i] = breaks_[i] / c;
  h.coef_.resize(coef_.size());
  for (std::size_t p = 0; p < coef_.size(); ++p) {
    // f(c x) in local variable u = x - b/c:  f's local variable is c*u.
    std::vector<long double> C = coef_[p];
    long double pw = 1.0L;
    for (std::size_t j = 0; j < C.size(); ++j) {
      C[j] *= pw;
      pw *= c;
    }
    h.coef_[p] = C;
  }
  return h;
}

long double PiecewisePoly::integral() const {
  long double total = 0.0L;
  for (std::size_t p = 0; p < coef_.size(); ++p) {
    const auto& c = coef_[p];
    long double w = breaks_[p + 1] - breaks_[p];
    long double term = 0.0L, pw = w;
    for (std::size_t j = 0; j < c.size(); ++j) {
      term += c[j] * pw / static_cast<long double>(j + 1);
      pw *= w;
    }
    total += term;
  }
  return total;
}

long double PiecewisePoly::integral_abs() const {
  long double total = 0.0L;
  for (std::size_t p = 0; p < coef_.size(); ++p) {
    const auto& c = coef_[p];
    long double w = breaks_[p + 1] - breaks_[p];
    std::vector<long double> nodes = polynomial_roots(c, 0.0L, w);
    std::vector<long double> C(c.size() + 1, 0.0L);
    for (std::size_t j = 0; j < c.size(); ++j)
      C[j + 1] = c[j] / static_cast<long double>(j + 1);
    long double prev = 0.0L, Fprev = 0.0L;
    auto flush = [&](long double u) {
      long double Fu = horner(C, u);
      long double mid = horner(c, 0.5L * (prev + u));
      total += (mid >= 0.0L) ? (Fu - Fprev) : (Fprev - Fu);
      prev = u;
      Fprev = Fu;
    };
    for (long double r : nodes)
      if (r > prev) flush(r);
    if (w > prev) flush(w);
  }
  return total;
}

long double PiecewisePoly::moment(int k) const {
  if (k < 0) throw std::invalid_argument("moment: need k >= 0");
  long double total = 0.0L;
  for (std::size_t p = 0; p < coef_.size(); ++p) {
    // x^k = (b + u)^k expanded binomially in the local variable u.
    const auto& c = coef_[p];
    long double b = breaks_[p];
    long double w = breaks_[p + 1] - breaks_[p];
    std::vector<long double> xk(static_cast<std::size_t>(k) + 1, 0.0L);
    long double binom = 1.0L;
    for (int j = 0; j <= k; ++j) {
      xk[static_cast<std::size_t>(j)] =
          binom * std::pow(b, static_cast<long double>(k - j));
      binom = binom * static_cast<long double>(k - j) /
              static_cast<long double>(j + 1);
    }
    std::vector<long double> prod(c.size() + xk.size() - 1, 0.0L);
    for (std::size_t a = 0; a < c.size(); ++a)
      for (std::size_t bj = 0; bj < xk.size(); ++bj) prod[a + bj] += c[a] * xk[bj];
    long double term = 0.0L, pw = w;
    for (std::size_t j = 0; j < prod.size(); ++j) {
      term += prod[j] * pw / static_cast<long double>(j + 1);
      pw *= w;
    }
    total += term;
  }
  return total;
}

long double PiecewisePoly::sup_norm() const {
  long double m = 0.0L;
  for (std::size_t p = 0; p < coef_.size(); ++p) {
    const auto& c = coef_[p];
    long double w = breaks_[p + 1] - breaks_[p];
    m = std::max(m, std::fabs(horner(c, 0.0L)));
    m = std::max(m, std::fabs(horner(c, w)));
    for (long double r : polynomial_roots(poly_derivative(c), 0.0L, w))
      m = std::max(m, std::fabs(horner(c, r)));
  }
  return m;
}

long double PiecewisePoly::total_variation() const {
  if (coef_.empty()) return 0.0L;
  long double tv = 0.0L;
  // Boundary jumps against the zero extension.
  tv += std::fabs(eval_piece(0, breaks_.front()));
  tv += std::fabs(eval_piece(piece_count() - 1, breaks_.back()));
  for (std::size_t p = 0; p < coef_.size(); ++p) {
    const auto& c = coef_[p];
    long double w = breaks_[p + 1] - breaks_[p];
    // Oscillation within the piece: sum |f| increments over monotone segments.
    std::vector<long double> nodes{0.0L};
    for (long double r : polynomial_roots(poly_derivative(c), 0.0L, w))
      if (r > nodes.back()) nodes.push_back(r);
    if (w > nodes.back()) nodes.push_back(w);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
      tv += std::fabs(horner(c, nodes[i + 1]) - horner(c, nodes[i]));
    // Jump to the next piece.
    if (p + 1 < coef_.size())
      tv += std::fabs(horner(coef_[p + 1], 0.0L) - horner(c, w));
  }
  return tv;
}

int PiecewisePoly::degree() const {
  int d = 0;
  for (const auto& c : coef_) d = std::max(d, effective_degree(c));
  return d;
}

}  // namespace so3sr
