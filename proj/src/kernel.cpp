#include "so3sr/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "so3sr/parallel.hpp"
#include "so3sr/sampling.hpp"
#include "so3sr/wigner.hpp"

namespace so3sr {
namespace {

constexpr double kPi = std::numbers::pi;
// Below this rotation angle the closed forms are evaluated as truncated
// Laurent series of the assembled expressions (the individual factors
// Q ~ 1/omega, Q' ~ -1/omega^2 blow up; the combinations stay finite).
constexpr double kSeriesOmega = 1e-6;

// Levi-Civita symbol on 0-based indices.
int levi(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0;
  // even permutations of (0,1,2)
  if ((i == 0 && j == 1) || (i == 1 && j == 2) || (i == 2 && j == 0)) return 1;
  return -1;
}

// Laurent polynomial in omega, powers kLo..kHi.  Products landing below kLo
// cannot arise with nonzero coefficients in the expressions assembled here;
// products above kHi are O(omega^{kHi+1}) and dropped (omega < 1e-6).
struct Series {
  static constexpr int kLo = -2;
  static constexpr int kHi = 4;
  std::array<double, kHi - kLo + 1> c{};

  double& at(int p) { return c[static_cast<std::size_t>(p - kLo)]; }
  double get(int p) const { return c[static_cast<std::size_t>(p - kLo)]; }
};

Series operator+(const Series& a, const Series& b) {
  Series r = a;
  for (std::size_t i = 0; i < r.c.size(); ++i) r.c[i] += b.c[i];
  return r;
}

Series operator-(const Series& a, const Series& b) {
  Series r = a;
  for (std::size_t i = 0; i < r.c.size(); ++i) r.c[i] -= b.c[i];
  return r;
}

Series operator-(const Series& a) {
  Series r;
  for (std::size_t i = 0; i < r.c.size(); ++i) r.c[i] = -a.c[i];
  return r;
}

Series operator*(const Series& a, double s) {
  Series r = a;
  for (auto& v : r.c) v *= s;
  return r;
}

Series operator*(const Series& a, const Series& b) {
  Series r;
  for (int p = Series::kLo; p <= Series::kHi; ++p) {
    if (a.get(p) == 0.0) continue;
    for (int q = Series::kLo; q <= Series::kHi; ++q) {
      int t = p + q;
      if (t < Series::kLo || t > Series::kHi) continue;
      r.at(t) += a.get(p) * b.get(q);
    }
  }
  return r;
}

// Evaluation keeping the regular part only.  The negative powers of every
// assembled derivative cancel identically; whatever the cancellation leaves
// behind numerically is roundoff and is dropped here.
double eval_regular(const Series& s, double w) {
  double v = 0.0;
  for (int p = Series::kHi; p >= 0; --p) v = v * w + s.get(p);
  return v;
}

template <typename T>
T constant(double v);

template <>
double constant<double>(double v) { return v; }

template <>
Series constant<Series>(double v) {
  Series s;
  s.at(0) = v;
  return s;
}

// Everything the assembly needs at one relative rotation: the unit axis e,
// Q = (1/2) cot(omega/2), Q' = dQ/domega = -1/(4 sin^2(omega/2)), and the
// profile derivatives sigma~', sigma~'', sigma~'''.
template <typename T>
struct JetTerms {
  std::array<double, 3> e{};
  T Q{}, Qp{}, s1{}, s2{}, s3{};
};

template <typename T>
struct JetTensors {
  std::array<T, 3> grad_x{};
  std::array<std::array<T, 3>, 3> mixed_xy{};
  std::array<std::array<std::array<T, 3>, 3>, 3> third{};
};

// Assembles every derivative tensor from the single signed lookup
//   de[i][n] := X_i^x e_n = Q (delta_in - e_i e_n) + (1/2) eps_inm e_m.
// All composite signs are derived from it by the product rule; none are
// hand-coded per case.
template <typename T>
JetTensors<T> assemble(const JetTerms<T>& in) {
  const auto& e = in.e;
  std::array<std::array<T, 3>, 3> de{};
  for (int i = 0; i < 3; ++i)
    for (int n = 0; n < 3; ++n) {
      double kron = (i == n) ? 1.0 : 0.0;
      T v = in.Q * (kron - e[i] * e[n]);
      for (int m = 0; m < 3; ++m) {
        int sgn = levi(i, n, m);
        if (sgn != 0) v = v + constant<T>(0.5 * sgn * e[m]);
      }
      de[i][n] = v;
    }

  // dde[j][i][k] := X_j^x X_i^x e_k, by differentiating the lookup:
  //   X_j Q = Q' e_j;  X_j e_m = de[j][m].
  std::array<std::array<std::array<T, 3>, 3>, 3> dde{};
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        double kron = (i == k) ? 1.0 : 0.0;
        T v = in.Qp * (e[j] * (kron - e[i] * e[k]));
        v = v - in.Q * (de[j][i] * e[k] + de[j][k] * e[i]);
        for (int m = 0; m < 3; ++m) {
          int sgn = levi(i, k, m);
          if (sgn != 0) v = v + de[j][m] * (0.5 * sgn);
        }
        dde[j][i][k] = v;
      }

  JetTensors<T> out;
  for (int n = 0; n < 3; ++n) out.grad_x[n] = in.s1 * e[n];
  // X_i^x X_n^y sigma = -(X_i^x e_n) sigma~' - e_i e_n sigma~''.
  for (int i = 0; i < 3; ++i)
    for (int n = 0; n < 3; ++n)
      out.mixed_xy[i][n] = -(de[i][n] * in.s1) - in.s2 * (e[i] * e[n]);
  // X_j^x X_i^x X_k^y sigma from one more product rule.
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        T v = -(dde[j][i][k] * in.s1);
        v = v - (de[i][k] * e[j] + de[j][k] * e[i] + de[j][i] * e[k]) * in.s2;
        v = v - in.s3 * (e[i] * e[j] * e[k]);
        out.third[j][i][k] = v;
      }
  return out;
}

void check_axis(int a, const char* who) {
  if (a < 1 || a > 3)
    throw std::invalid_argument(std::string(who) + ": axis index must be 1..3");
}

std::string format_where(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

// Near-coincidence estimate constants; the Lipschitz lemma is stated for even
// s >= 6 with these expressions (the zero-derivative sandwich object itself is
// gated at s >= 8 per its own hypothesis).
double lip_ctilde(int s) { return 1.001 / (2.0 * (s + 1)); }
double lip_dtilde(int s) { return 3.0 * 1.001 / (4.0 * (s + 2) * (s + 1)); }

}  // namespace

ZonalKernel::ZonalKernel(FilterSpec spec) : spec_(std::move(spec)) {
  const auto& a = spec_.samples;
  long double s2 = 0.0L, s4 = 0.0L, s6 = 0.0L;
  for (std::size_t k = 1; k < a.size(); ++k) {
    long double k2 = static_cast<long double>(k) * static_cast<long double>(k);
    long double ak = a[k];
    s2 += ak * k2;
    s4 += ak * k2 * k2;
    s6 += ak * k2 * k2 * k2;
  }
  const long double W = spec_.discrete_norm;
  st2_zero_ = static_cast<double>(-2.0L * s2 / W);
  st4_zero_ = static_cast<double>(2.0L * s4 / W);
  st6_zero_ = static_cast<double>(-2.0L * s6 / W);
}

double ZonalKernel::sigma_tilde(double t, int order) const {
  if (order < 0 || order > 3)
    throw std::invalid_argument(
        "sigma_tilde: derivative order is capped at 3");
  const auto& a = spec_.samples;
  long double acc = (order == 0) ? static_cast<long double>(a[0]) : 0.0L;
  for (std::size_t k = 1; k < a.size(); ++k) {
    double kd = static_cast<double>(k);
    double ang = kd * t;
    long double term = 0.0L;
    switch (order) {
      case 0: term = 2.0 * a[k] * std::cos(ang); break;
      case 1: term = -2.0 * a[k] * kd * std::sin(ang); break;
      case 2: term = -2.0 * a[k] * kd * kd * std::cos(ang); break;
      case 3: term = 2.0 * a[k] * kd * kd * kd * std::sin(ang); break;
    }
    acc += term;
  }
  return static_cast<double>(acc / spec_.discrete_norm);
}

double ZonalKernel::sigma(const Rotation& x, const Rotation& y) const {
  return sigma_tilde(geodesic_distance(x, y), 0);
}

Eigen::Vector3d ZonalKernel::grad_y_sigma(const Rotation& x,
                                          const Rotation& y) const {
  AxisAngle aa = relative_axis_angle(x, y);
  double st1 = sigma_tilde(aa.angle, 1);
  return -st1 * aa.axis;
}

double ZonalKernel::mixed_sigma(const Rotation& x, const Rotation& y, int i,
                                int n) const {
  check_axis(i, "mixed_sigma");
  check_axis(n, "mixed_sigma");
  return derivatives(x, y).mixed_xy(i - 1, n - 1);
}

KernelDerivatives ZonalKernel::derivatives(const Rotation& x,
                                           const Rotation& y) const {
  AxisAngle aa = relative_axis_angle(x, y);
  const double w = aa.angle;

  KernelDerivatives out;
  out.jet.omega = w;
  out.jet.axis = aa.axis;
  out.jet.st0 = sigma_tilde(w, 0);
  out.jet.st1 = sigma_tilde(w, 1);
  out.jet.st2 = sigma_tilde(w, 2);
  out.jet.st3 = sigma_tilde(w, 3);
  out.value = out.jet.st0;

  const std::array<double, 3> e{aa.axis[0], aa.axis[1], aa.axis[2]};

  if (w < kSeriesOmega) {
    JetTerms<Series> in;
    in.e = e;
    // Q = 1/w - w/12 - w^3/720, Q' = -1/w^2 - 1/12 - w^2/240.
    in.Q.at(-1) = 1.0;
    in.Q.at(1) = -1.0 / 12.0;
    in.Q.at(3) = -1.0 / 720.0;
    in.Qp.at(-2) = -1.0;
    in.Qp.at(0) = -1.0 / 12.0;
    in.Qp.at(2) = -1.0 / 240.0;
    // Profile jets from the exact derivative values at 0.
    in.s1.at(1) = st2_zero_;
    in.s1.at(3) = st4_zero_ / 6.0;
    in.s2.at(0) = st2_zero_;
    in.s2.at(2) = st4_zero_ / 2.0;
    in.s2.at(4) = st6_zero_ / 24.0;
    in.s3.at(1) = st4_zero_;
    in.s3.at(3) = st6_zero_ / 6.0;
    JetTensors<Series> t = assemble<Series>(in);
    for (int n = 0; n < 3; ++n) {
      out.grad_x(n) = eval_regular(t.grad_x[n], w);
      out.grad_y(n) = -out.grad_x(n);
    }
    for (int i = 0; i < 3; ++i)
      for (int n = 0; n < 3; ++n) {
        out.mixed_xy(i, n) = eval_regular(t.mixed_xy[i][n], w);
        out.mixed_xx(i, n) = -out.mixed_xy(i, n);
      }
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
          out.third[j][i][k] = eval_regular(t.third[j][i][k], w);
    return out;
  }

  JetTerms<double> in;
  in.e = e;
  const double sh = std::sin(0.5 * w);
  const double ch = std::cos(0.5 * w);
  in.Q = 0.5 * ch / sh;
  in.Qp = -0.25 / (sh * sh);
  in.s1 = out.jet.st1;
  in.s2 = out.jet.st2;
  in.s3 = out.jet.st3;
  JetTensors<double> t = assemble<double>(in);
  for (int n = 0; n < 3; ++n) {
    out.grad_x(n) = t.grad_x[n];
    out.grad_y(n) = -t.grad_x[n];
  }
  for (int i = 0; i < 3; ++i)
    for (int n = 0; n < 3; ++n) {
      out.mixed_xy(i, n) = t.mixed_xy[i][n];
      out.mixed_xx(i, n) = -t.mixed_xy[i][n];
    }
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) out.third[j][i][k] = t.third[j][i][k];
  return out;
}

double KernelDerivatives::combined_second(int j, int i) const {
  check_axis(j, "combined_second");
  check_axis(i, "combined_second");
  if (j == i)
    throw std::invalid_argument("combined_second: indices must differ");
  int J = j - 1, I = i - 1;
  int n = 3 - J - I;
  return mixed_xx(J, I) - 0.5 * levi(J, I, n) * grad_x(n);
}

double KernelDerivatives::combined_third(int j, int i, int k) const {
  check_axis(j, "combined_third");
  check_axis(i, "combined_third");
  check_axis(k, "combined_third");
  if (j == i)
    throw std::invalid_argument("combined_third: leading indices must differ");
  int J = j - 1, I = i - 1, K = k - 1;
  int n = 3 - J - I;
  return third[static_cast<std::size_t>(J)][static_cast<std::size_t>(I)]
              [static_cast<std::size_t>(K)] -
         0.5 * levi(J, I, n) * mixed_xy(n, K);
}

double KernelDerivatives::hessian_entry(int r, int c) const {
  check_axis(r, "hessian_entry");
  check_axis(c, "hessian_entry");
  if (r == c) return mixed_xx(r - 1, c - 1);
  return combined_second(r, c);
}

double KernelDerivatives::hessian_grad_entry(int r, int c, int k) const {
  check_axis(r, "hessian_grad_entry");
  check_axis(c, "hessian_grad_entry");
  check_axis(k, "hessian_grad_entry");
  if (r == c)
    return third[static_cast<std::size_t>(r - 1)]
                [static_cast<std::size_t>(c - 1)]
                [static_cast<std::size_t>(k - 1)];
  return combined_third(r, c, k);
}

double ZonalKernel::third_sigma_terms(const Rotation& x, const Rotation& y,
                                      ThirdPattern pattern, int a,
                                      int b) const {
  check_axis(a, "third_sigma_terms");
  check_axis(b, "third_sigma_terms");
  KernelDerivatives d = derivatives(x, y);
  switch (pattern) {
    case ThirdPattern::diag_other:
      if (b == a)
        throw std::domain_error(
            "third_sigma_terms: diag_other needs distinct indices (i, k)");
      return d.third[static_cast<std::size_t>(a - 1)]
                    [static_cast<std::size_t>(a - 1)]
                    [static_cast<std::size_t>(b - 1)];
    case ThirdPattern::diag_same:
      if (b != a)
        throw std::domain_error(
            "third_sigma_terms: diag_same needs equal indices (i, i)");
      return d.third[static_cast<std::size_t>(a - 1)]
                    [static_cast<std::size_t>(a - 1)]
                    [static_cast<std::size_t>(a - 1)];
    case ThirdPattern::combined_n: {
      if (b == a)
        throw std::domain_error(
            "third_sigma_terms: combined patterns need distinct (j, i)");
      int n = 3 - (a - 1) - (b - 1);
      return d.combined_third(a, b, n + 1);
    }
    case ThirdPattern::combined_i:
      if (b == a)
        throw std::domain_error(
            "third_sigma_terms: combined patterns need distinct (j, i)");
      return d.combined_third(a, b, b);
    case ThirdPattern::combined_j:
      if (b == a)
        throw std::domain_error(
            "third_sigma_terms: combined patterns need distinct (j, i)");
      return d.combined_third(a, b, a);
  }
  throw std::domain_error("third_sigma_terms: unknown pattern");
}

double sigma_via_wigner(const ZonalKernel& kernel, const Rotation& x,
                        const Rotation& y) {
  const int N = kernel.degree();
  const auto& h = kernel.spec().weights;
  std::vector<Eigen::MatrixXcd> Dx = wigner_D_all(N, x);
  std::vector<Eigen::MatrixXcd> Dy = wigner_D_all(N, y);
  long double acc = 0.0L;
  for (int l = 0; l <= N; ++l) {
    std::complex<double> block =
        (Dx[static_cast<std::size_t>(l)].array() *
         Dy[static_cast<std::size_t>(l)].array().conjugate())
            .sum();
    acc += static_cast<long double>(h[static_cast<std::size_t>(l)]) *
           static_cast<long double>(block.real());
  }
  return static_cast<double>(acc);
}

QJet evaluate_q(const ZonalKernel& kernel, const QData& qd, const Rotation& x) {
  const Eigen::Index M = static_cast<Eigen::Index>(qd.centers.size());
  if (M == 0) throw std::invalid_argument("evaluate_q: no centers");
  if (qd.alpha.size() != 4 * M)
    throw std::invalid_argument(
        "evaluate_q: coefficient vector must have 4M entries");
  QJet out;
  for (Eigen::Index j = 0; j < M; ++j) {
    KernelDerivatives d =
        kernel.derivatives(x, qd.centers[static_cast<std::size_t>(j)]);
    const double a0 = qd.alpha(j);
    const Eigen::Vector3d an{qd.alpha(M + j), qd.alpha(2 * M + j),
                             qd.alpha(3 * M + j)};
    out.q += a0 * d.value + an.dot(d.grad_y);
    for (int i = 0; i < 3; ++i) {
      double g = a0 * d.grad_x(i);
      for (int n = 0; n < 3; ++n) g += an(n) * d.mixed_xy(i, n);
      out.grad(i) += g;
    }
    for (int r = 1; r <= 3; ++r)
      for (int c = 1; c <= 3; ++c) {
        double hval = a0 * d.hessian_entry(r, c);
        for (int n = 1; n <= 3; ++n)
          hval += an(n - 1) * d.hessian_grad_entry(r, c, n);
        out.hess(r - 1, c - 1) += hval;
      }
  }
  return out;
}

Eigen::Matrix3d hessian_q_terms(const ZonalKernel& kernel, const QData& qd,
                                const Rotation& x) {
  return evaluate_q(kernel, qd, x).hess;
}

bool LocalizationReport::all_ok(double tol) const {
  for (const auto& r : rows)
    if (r.applicable && !(r.worst_ratio <= tol)) return false;
  return true;
}

bool OffdiagReport::all_ok(double tol) const {
  for (const auto& r : rows)
    if (r.applicable && !(r.worst_ratio <= tol)) return false;
  return true;
}

namespace {

// Deterministic worst-case tracker; merges across threads break ties by
// sample index so the report never depends on the partition.
struct WorstTracker {
  double ratio = -1.0;
  double measured = 0.0;
  double bound = 0.0;
  std::int64_t idx = std::numeric_limits<std::int64_t>::max();
  std::string where;

  void offer(double r, double m, double b, std::int64_t i, std::string w) {
    if (r > ratio || (r == ratio && i < idx)) {
      ratio = r;
      measured = m;
      bound = b;
      idx = i;
      where = std::move(w);
    }
  }
  void merge(const WorstTracker& o) {
    if (o.idx != std::numeric_limits<std::int64_t>::max())
      offer(o.ratio, o.measured, o.bound, o.idx, o.where);
  }
};

BoundCheckRow to_row(const std::string& name, const WorstTracker& w) {
  BoundCheckRow row;
  row.name = name;
  row.applicable = w.idx != std::numeric_limits<std::int64_t>::max();
  row.worst_ratio = std::max(w.ratio, 0.0);
  row.measured = w.measured;
  row.bound = w.bound;
  row.where = row.applicable ? w.where : "not applicable";
  return row;
}

// Uniform unit vector from two uniforms.
Eigen::Vector3d sphere_point(Rng& rng) {
  double z = rng.uniform(-1.0, 1.0);
  double phi = rng.uniform(0.0, 2.0 * kPi);
  double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

std::uint64_t sample_seed(std::uint64_t base, std::int64_t idx) {
  // splitmix-style exclusive stream per sample; Rng reseeds through splitmix
  // so consecutive values are decorrelated.
  return base + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(idx + 1);
}

}  // namespace

LocalizationReport verify_localization(const ZonalKernel& kernel, long samples,
                                       std::uint64_t seed) {
  const FilterSpec& spec = kernel.spec();
  const int s = spec.s;
  const double Np1 = spec.N + 1.0;
  const double wmin = kPi / (2.0 * Np1);

  LocalizationReport rep;
  rep.s = s;
  rep.N = spec.N;
  rep.samples = samples;

  enum RowId {
    kSt0 = 0, kSt1, kSt2, kSt3,
    kGrad, kMixed, kThirdDiag, kSecondComb, kThirdComb,
    kLipSecondDiag, kLipThirdDiag, kLipSecondOff, kLipThirdOff,
    kRowCount
  };
  static const char* kNames[kRowCount] = {
      "sigma_tilde_order0", "sigma_tilde_order1", "sigma_tilde_order2",
      "sigma_tilde_order3", "grad_y",             "mixed_xy",
      "third_diag",         "second_combined",    "third_combined",
      "lip_second_diag",    "lip_third_diag",     "lip_second_offdiag",
      "lip_third_offdiag"};

  std::array<WorstTracker, kRowCount> global;
  std::mutex merge_mutex;

  const double ctilde = lip_ctilde(s);
  const double dtilde = lip_dtilde(s);
  const double st2_zero = kernel.st2_zero();

  // Scalar-profile rows: |sigma~^(l)(t)| <= c_l / ((N+1)^{s-l} t^s) on
  // t in [pi/(2(N+1)), pi], sampled log-uniformly.
  const std::uint64_t scalar_base = derive_seed(seed, "localization/scalar");
  parallel_for(samples, [&](std::int64_t lo, std::int64_t hi) {
    std::array<WorstTracker, kRowCount> local;
    for (std::int64_t m = lo; m < hi; ++m) {
      Rng rng(sample_seed(scalar_base, m));
      double t = wmin * std::pow(kPi / wmin, rng.uniform());
      double ts = std::pow(t, s);
      for (int l = 0; l <= 3; ++l) {
        double measured = std::abs(kernel.sigma_tilde(t, l));
        double bound = spec.loc.of(l) / (std::pow(Np1, s - l) * ts);
        local[static_cast<std::size_t>(kSt0 + l)].offer(
            measured / bound, measured, bound, m, format_where("t=%.9g", t));
      }
    }
    std::lock_guard<std::mutex> g(merge_mutex);
    for (int r = 0; r < kRowCount; ++r)
      global[static_cast<std::size_t>(r)].merge(
          local[static_cast<std::size_t>(r)]);
  });

  // Wide-window derivative rows on omega in [pi/(2(N+1)), pi].
  const std::uint64_t wide_base = derive_seed(seed, "localization/wide");
  parallel_for(samples, [&](std::int64_t lo, std::int64_t hi) {
    std::array<WorstTracker, kRowCount> local;
    for (std::int64_t m = lo; m < hi; ++m) {
      Rng rng(sample_seed(wide_base, m));
      double w = wmin * std::pow(kPi / wmin, rng.uniform());
      Rotation y = haar_sample(rng);
      Rotation x = y * rodrigues(sphere_point(rng), w);
      KernelDerivatives d = kernel.derivatives(x, y);
      double ws = std::pow(d.jet.omega, s);
      auto where = [&](const char* extra) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "omega=%.9g %s", d.jet.omega, extra);
        return std::string(buf);
      };

      double b1 = spec.loc.c1 / (std::pow(Np1, s - 1) * ws);
      double b2 = spec.loc.c2 / (std::pow(Np1, s - 2) * ws);
      double b3 = 1.2 * spec.loc.c3 / (std::pow(Np1, s - 3) * ws);

      for (int n = 0; n < 3; ++n) {
        double v = std::abs(d.grad_y(n));
        char extra[16];
        std::snprintf(extra, sizeof extra, "n=%d", n + 1);
        local[kGrad].offer(v / b1, v, b1, m, where(extra));
      }
      for (int i = 0; i < 3; ++i)
        for (int n = 0; n < 3; ++n) {
          double v = std::abs(d.mixed_xy(i, n));
          char extra[24];
          std::snprintf(extra, sizeof extra, "i=%d n=%d", i + 1, n + 1);
          local[kMixed].offer(v / b2, v, b2, m, where(extra));
        }
      for (int i = 1; i <= 3; ++i)
        for (int k = 1; k <= 3; ++k) {
          double v = std::abs(d.third[static_cast<std::size_t>(i - 1)]
                                     [static_cast<std::size_t>(i - 1)]
                                     [static_cast<std::size_t>(k - 1)]);
          char extra[24];
          std::snprintf(extra, sizeof extra, "i=%d k=%d", i, k);
          local[kThirdDiag].offer(v / b3, v, b3, m, where(extra));
        }
      for (int j = 1; j <= 3; ++j)
        for (int i = 1; i <= 3; ++i) {
          if (j == i) continue;
          double v = std::abs(d.combined_second(j, i));
          char extra[24];
          std::snprintf(extra, sizeof extra, "j=%d i=%d", j, i);
          local[kSecondComb].offer(v / b2, v, b2, m, where(extra));
          for (int k = 1; k <= 3; ++k) {
            double v3 = std::abs(d.combined_third(j, i, k));
            char extra3[32];
            std::snprintf(extra3, sizeof extra3, "j=%d i=%d k=%d", j, i, k);
            local[kThirdComb].offer(v3 / b3, v3, b3, m, where(extra3));
          }
        }
    }
    std::lock_guard<std::mutex> g(merge_mutex);
    for (int r = 0; r < kRowCount; ++r)
      global[static_cast<std::size_t>(r)].merge(
          local[static_cast<std::size_t>(r)]);
  });

  // Near-coincidence rows on omega in (0, pi/(2(N+1))], delta = (N+1) omega.
  const std::uint64_t lip_base = derive_seed(seed, "localization/lip");
  parallel_for(samples, [&](std::int64_t lo, std::int64_t hi) {
    std::array<WorstTracker, kRowCount> local;
    for (std::int64_t m = lo; m < hi; ++m) {
      Rng rng(sample_seed(lip_base, m));
      double w = (1.0 - rng.uniform()) * wmin;  // in (0, wmin]
      Rotation y = haar_sample(rng);
      Rotation x = y * rodrigues(sphere_point(rng), w);
      KernelDerivatives d = kernel.derivatives(x, y);
      double delta = Np1 * d.jet.omega;
      double b_second = 0.5 * dtilde * Np1 * Np1 * delta * delta;
      double b_third = dtilde * (Np1 * Np1 * Np1 * delta +
                                 0.25 * Np1 * Np1 * delta * delta) +
                       0.25 * ctilde * Np1 * delta;
      double b_off = 0.25 * dtilde * Np1 * Np1 * delta * delta;
      auto where = [&](const char* extra) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "omega=%.9g %s", d.jet.omega, extra);
        return std::string(buf);
      };
      for (int i = 0; i < 3; ++i) {
        double v = std::abs(d.mixed_xx(i, i) - st2_zero);
        char extra[16];
        std::snprintf(extra, sizeof extra, "i=%d", i + 1);
        local[kLipSecondDiag].offer(v / b_second, v, b_second, m, where(extra));
      }
      for (int i = 1; i <= 3; ++i)
        for (int k = 1; k <= 3; ++k) {
          double v = std::abs(d.third[static_cast<std::size_t>(i - 1)]
                                     [static_cast<std::size_t>(i - 1)]
                                     [static_cast<std::size_t>(k - 1)]);
          char extra[24];
          std::snprintf(extra, sizeof extra, "i=%d k=%d", i, k);
          local[kLipThirdDiag].offer(v / b_third, v, b_third, m, where(extra));
        }
      for (int j = 1; j <= 3; ++j)
        for (int i = 1; i <= 3; ++i) {
          if (j == i) continue;
          double v = std::abs(d.combined_second(j, i));
          char extra[24];
          std::snprintf(extra, sizeof extra, "j=%d i=%d", j, i);
          local[kLipSecondOff].offer(v / b_off, v, b_off, m, where(extra));
          for (int k = 1; k <= 3; ++k) {
            double v3 = std::abs(d.combined_third(j, i, k));
            char extra3[32];
            std::snprintf(extra3, sizeof extra3, "j=%d i=%d k=%d", j, i, k);
            local[kLipThirdOff].offer(v3 / b_third, v3, b_third, m,
                                      where(extra3));
          }
        }
    }
    std::lock_guard<std::mutex> g(merge_mutex);
    for (int r = 0; r < kRowCount; ++r)
      global[static_cast<std::size_t>(r)].merge(
          local[static_cast<std::size_t>(r)]);
  });

  for (int r = 0; r < kRowCount; ++r)
    rep.rows.push_back(
        to_row(kNames[static_cast<std::size_t>(r)],
               global[static_cast<std::size_t>(r)]));
  return rep;
}

OffdiagReport verify_offdiag_sums(const ZonalKernel& kernel,
                                  const SupportSet& support, const Rotation& x,
                                  double epsilon) {
  const FilterSpec& spec = kernel.spec();
  const int s = spec.s;
  const double Np1 = spec.N + 1.0;

  if (support.size() == 0)
    throw std::invalid_argument("verify_offdiag_sums: empty support");
  if (epsilon < 0.0 || epsilon > 0.5)
    throw std::domain_error(
        "off-diagonal sums: hypothesis epsilon <= 1/2 violated");

  // nu is pinned to the actual separation, the tightest admissible value;
  // a single point has infinite separation, where any nu works and pi is the
  // hypothesis minimum.
  double nu = (support.size() >= 2) ? Np1 * support.separation() : kPi;
  if (!(nu >= kPi))
    throw std::domain_error(
        "off-diagonal sums: hypothesis separation >= nu/(N+1) with nu >= pi "
        "violated (support too close for this N)");

  std::size_t anchor = 0;
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < support.size(); ++i) {
    double di = geodesic_distance(x, support[i]);
    if (di < dmin) {
      dmin = di;
      anchor = i;
    }
  }
  // Small slack so an exactly coincident anchor (distance ~ rounding, not 0)
  // passes the eps = 0 hypothesis.
  if (!(dmin <= epsilon * nu / Np1 + 1e-7))
    throw std::domain_error(
        "off-diagonal sums: hypothesis d(x, x_j) <= eps nu/(N+1) violated for "
        "every support point");

  OffdiagConstants C = offdiag_constants(s, epsilon);
  const double nus = std::pow(nu, s);

  OffdiagReport rep;
  rep.nu = nu;
  rep.epsilon = epsilon;
  rep.anchor = anchor;

  // Accumulate all six sum families in one sweep over the support.
  double sum_sigma = 0.0;
  std::array<double, 3> sum_grad{};
  Eigen::Matrix3d sum_mixed = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d sum_third_diag = Eigen::Matrix3d::Zero();  // (i, k)
  Eigen::Matrix3d sum_second_comb = Eigen::Matrix3d::Zero(); // (j, i), j != i
  std::array<std::array<std::array<double, 3>, 3>, 3> sum_third_comb{};

  for (std::size_t p = 0; p < support.size(); ++p) {
    if (p == anchor) continue;
    KernelDerivatives d = kernel.derivatives(x, support[p]);
    sum_sigma += std::abs(d.value);
    for (int n = 0; n < 3; ++n) sum_grad[static_cast<std::size_t>(n)] +=
        std::abs(d.grad_y(n));
    for (int i = 0; i < 3; ++i)
      for (int n = 0; n < 3; ++n)
        sum_mixed(i, n) += std::abs(d.mixed_xy(i, n));
    for (int i = 1; i <= 3; ++i)
      for (int k = 1; k <= 3; ++k)
        sum_third_diag(i - 1, k - 1) +=
            std::abs(d.third[static_cast<std::size_t>(i - 1)]
                            [static_cast<std::size_t>(i - 1)]
                            [static_cast<std::size_t>(k - 1)]);
    for (int j = 1; j <= 3; ++j)
      for (int i = 1; i <= 3; ++i) {
        if (j == i) continue;
        sum_second_comb(j - 1, i - 1) += std::abs(d.combined_second(j, i));
        for (int k = 1; k <= 3; ++k)
          sum_third_comb[static_cast<std::size_t>(j - 1)]
                        [static_cast<std::size_t>(i - 1)]
                        [static_cast<std::size_t>(k - 1)] +=
              std::abs(d.combined_third(j, i, k));
      }
  }

  const bool have_terms = support.size() >= 2;
  auto push = [&](const std::string& name, double measured, double bound,
                  const std::string& where) {
    BoundCheckRow row;
    row.name = name;
    row.applicable = true;
    row.measured = measured;
    row.bound = bound;
    row.worst_ratio = have_terms ? measured / bound : 0.0;
    row.where = where;
    rep.rows.push_back(row);
  };

  push("offdiag_sigma", sum_sigma, C.C0 * C.a_eps / nus, "");

  {
    int worst = 0;
    for (int n = 1; n < 3; ++n)
      if (sum_grad[static_cast<std::size_t>(n)] >
          sum_grad[static_cast<std::size_t>(worst)])
        worst = n;
    push("offdiag_grad", sum_grad[static_cast<std::size_t>(worst)],
         C.C1 * C.a_eps * Np1 / nus, format_where("n=%.0f", worst + 1.0));
  }
  {
    int wi = 0, wn = 0;
    for (int i = 0; i < 3; ++i)
      for (int n = 0; n < 3; ++n)
        if (sum_mixed(i, n) > sum_mixed(wi, wn)) { wi = i; wn = n; }
    char buf[32];
    std::snprintf(buf, sizeof buf, "i=%d n=%d", wi + 1, wn + 1);
    push("offdiag_mixed", sum_mixed(wi, wn), C.C2 * C.a_eps * Np1 * Np1 / nus,
         buf);
  }
  {
    int wi = 0, wk = 0;
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k)
        if (sum_third_diag(i, k) > sum_third_diag(wi, wk)) { wi = i; wk = k; }
    char buf[32];
    std::snprintf(buf, sizeof buf, "i=%d k=%d", wi + 1, wk + 1);
    push("offdiag_third_diag", sum_third_diag(wi, wk),
         1.2 * C.C3 * C.a_eps * Np1 * Np1 * Np1 / nus, buf);
  }
  {
    int wj = 0, wi = 1;
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) {
        if (j == i) continue;
        if (sum_second_comb(j, i) > sum_second_comb(wj, wi)) { wj = j; wi = i; }
      }
    char buf[32];
    std::snprintf(buf, sizeof buf, "j=%d i=%d", wj + 1, wi + 1);
    push("offdiag_combined_second", sum_second_comb(wj, wi),
         C.C2 * C.a_eps * Np1 * Np1 / nus, buf);
  }
  {
    int wj = 0, wi = 1, wk = 0;
    double best = -1.0;
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) {
        if (j == i) continue;
        for (int k = 0; k < 3; ++k) {
          double v = sum_third_comb[static_cast<std::size_t>(j)]
                                   [static_cast<std::size_t>(i)]
                                   [static_cast<std::size_t>(k)];
          if (v > best) { best = v; wj = j; wi = i; wk = k; }
        }
      }
    char buf[40];
    std::snprintf(buf, sizeof buf, "j=%d i=%d k=%d", wj + 1, wi + 1, wk + 1);
    // Right-hand side transcribed as displayed: (N+1)^2, not (N+1)^3.
    push("offdiag_combined_third", std::max(best, 0.0),
         1.2 * C.C3 * C.a_eps * Np1 * Np1 / nus, buf);
  }

  return rep;
}

}  // namespace so3sr
