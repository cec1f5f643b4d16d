#include "so3sr/wigner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace so3sr {

namespace {

using cd = std::complex<double>;

cd ipow(int e) {
  // i^e for possibly negative e.
  switch (((e % 4) + 4) % 4) {
    case 0:
      return {1.0, 0.0};
    case 1:
      return {0.0, 1.0};
    case 2:
      return {-1.0, 0.0};
    default:
      return {0.0, -1.0};
  }
}

double log_binom(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Seed P^{l0}_{k,m} at l0 = max(|k|,|m|), straight from the product form of
// the Rodrigues-type definition (a single surviving term).
cd boundary_seed(int k, int m, double s_half, double c_half) {
  const int l0 = std::max(std::abs(k), std::abs(m));
  auto pw = [](double b, int e) { return e == 0 ? 1.0 : std::pow(b, e); };
  if (m == l0)
    return ipow(-(l0 - k)) * std::exp(0.5 * log_binom(2 * l0, l0 - k)) *
           pw(s_half, l0 - k) * pw(c_half, l0 + k);
  if (m == -l0)
    return ipow(-l0 - k) * std::exp(0.5 * log_binom(2 * l0, l0 - k)) *
           pw(s_half, l0 + k) * pw(c_half, l0 - k);
  if (k == l0)
    return ipow(m - l0) * std::exp(0.5 * log_binom(2 * l0, l0 - m)) *
           pw(s_half, l0 - m) * pw(c_half, l0 + m);
  // k == -l0
  return ipow(m + l0) * ((l0 - m) % 2 ? -1.0 : 1.0) *
         std::exp(0.5 * log_binom(2 * l0, l0 - m)) * pw(s_half, l0 + m) *
         pw(c_half, l0 - m);
}

}  // namespace

std::vector<Eigen::MatrixXcd> wigner_d_all(int N, double beta) {
  if (N < 0) throw std::invalid_argument("wigner_d_all: N must be >= 0");
  std::vector<Eigen::MatrixXcd> out(N + 1);
  for (int l = 0; l <= N; ++l)
    out[l] = Eigen::MatrixXcd::Zero(2 * l + 1, 2 * l + 1);
  out[0](0, 0) = 1.0;
  if (N == 0) return out;

  if (beta == 0.0) {
    for (int l = 1; l <= N; ++l) out[l].setIdentity();
    return out;
  }
  if (beta == M_PI) {
    // P^l_{k,-k}(-1) = (-1)^l, all other entries vanish.
    for (int l = 1; l <= N; ++l) {
      const double v = (l % 2) ? -1.0 : 1.0;
      for (int k = -l; k <= l; ++k) out[l](k + l, -k + l) = v;
    }
    return out;
  }

  const double c = std::cos(beta);
  const double s_half = std::sin(beta / 2), c_half = std::cos(beta / 2);
  for (int k = -N; k <= N; ++k) {
    for (int m = -N; m <= N; ++m) {
      const int l0 = std::max(std::abs(k), std::abs(m));
      cd prev = 0.0, cur;
      int lstart;
      if (l0 == 0) {
        // (k,m) = (0,0): P^0 = 1, P^1 = cos beta, then recurse from l = 1.
        prev = 1.0;
        cur = c;
        lstart = 1;
      } else {
        cur = boundary_seed(k, m, s_half, c_half);
        lstart = l0;
      }
      out[lstart](k + lstart, m + lstart) = cur;
      for (int l = lstart; l < N; ++l) {
        const double lk = std::sqrt(double(l) * l - double(k) * k);
        const double lm = std::sqrt(double(l) * l - double(m) * m);
        const double lk1 = std::sqrt(double(l + 1) * (l + 1) - double(k) * k);
        const double lm1 = std::sqrt(double(l + 1) * (l + 1) - double(m) * m);
        const cd nxt = ((2 * l + 1) * (double(l) * (l + 1) * c - double(k) * m) * cur -
                        (l + 1) * lk * lm * prev) /
                       (double(l) * lk1 * lm1);
        prev = cur;
        cur = nxt;
        out[l + 1](k + l + 1, m + l + 1) = cur;
      }
    }
  }
  return out;
}

Eigen::MatrixXcd wigner_d_row(int l, double beta) {
  return wigner_d_all(l, beta)[l];
}

Eigen::MatrixXcd wigner_D(int l, const Rotation& x) {
  return wigner_D_all(l, x)[l];
}

std::vector<Eigen::MatrixXcd> wigner_D_all(int N, const Rotation& x) {
  const EulerZXZ e = euler_zxz_of(x);
  std::vector<Eigen::MatrixXcd> out = wigner_d_all(N, e.beta);
  for (int l = 0; l <= N; ++l) {
    Eigen::VectorXcd ka(2 * l + 1), mg(2 * l + 1);
    for (int k = -l; k <= l; ++k) {
      ka(k + l) = std::polar(1.0, -k * e.alpha);
      mg(k + l) = std::polar(1.0, -k * e.gamma);
    }
    out[l] = ka.asDiagonal() * out[l] * mg.asDiagonal();
  }
  return out;
}

double addition_kernel(int l, double omega) {
  const double sh = std::sin(omega / 2);
  if (std::abs(sh) < 1e-8) {
    double acc = 1.0;
    for (int k = 1; k <= l; ++k) acc += 2.0 * std::cos(k * omega);
    return acc;
  }
  return std::sin((2 * l + 1) * omega / 2) / sh;
}

void PointMeasure::validate() const {
  if (coefficients.size() != static_cast<Eigen::Index>(centers.size()))
    throw std::invalid_argument(
        "PointMeasure: centers/coefficients size mismatch");
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j)
      if (geodesic_distance(centers[i], centers[j]) < 1e-12)
        throw std::invalid_argument("PointMeasure: duplicate centers");
}

MomentVector::MomentVector(int N) : N_(N) {
  if (N < 0) throw std::invalid_argument("MomentVector: N must be >= 0");
  data_ = Eigen::VectorXcd::Zero(count(N));
}

Eigen::Index MomentVector::count(int N) {
  return static_cast<Eigen::Index>(N + 1) * (2 * N + 1) * (2 * N + 3) / 3;
}

Eigen::Index MomentVector::index(int l, int k, int m) {
  // offset(l) = sum_{j<l} (2j+1)^2 = l(2l-1)(2l+1)/3
  const Eigen::Index off = static_cast<Eigen::Index>(l) * (2 * l - 1) * (2 * l + 1) / 3;
  return off + static_cast<Eigen::Index>(k + l) * (2 * l + 1) + (m + l);
}

std::complex<double>& MomentVector::entry(int l, int k, int m) {
  return data_(index(l, k, m));
}

std::complex<double> MomentVector::entry(int l, int k, int m) const {
  return data_(index(l, k, m));
}

MomentVector moments(const PointMeasure& mu, int N) {
  mu.validate();
  MomentVector y(N);
  for (int i = 0; i < mu.size(); ++i) {
    const auto D = wigner_D_all(N, mu.centers[i]);
    const double c = mu.coefficients(i);
    for (int l = 0; l <= N; ++l)
      for (int k = -l; k <= l; ++k)
        for (int m = -l; m <= l; ++m)
          y.entry(l, k, m) += c * D[l](k + l, m + l);
  }
  return y;
}

std::string moments_to_csv(const MomentVector& y) {
  std::string out = "l,k,m,re,im\n";
  char buf[128];
  for (int l = 0; l <= y.degree(); ++l)
    for (int k = -l; k <= l; ++k)
      for (int m = -l; m <= l; ++m) {
        const std::complex<double> v = y.entry(l, k, m);
        std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.17g,%.17g\n", l, k, m,
                      v.real(), v.imag());
        out += buf;
      }
  return out;
}

MomentVector moments_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line.rfind("l,k,m", 0) != 0)
    throw std::runtime_error("moments_from_csv: missing header");
  std::vector<std::tuple<int, int, int, double, double>> rows;
  int N = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int l, k, m;
    double re, im;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%lf,%lf", &l, &k, &m, &re, &im) != 5)
      throw std::runtime_error("moments_from_csv: malformed row: " + line);
    rows.emplace_back(l, k, m, re, im);
    N = std::max(N, l);
  }
  if (N < 0) throw std::runtime_error("moments_from_csv: no rows");
  MomentVector y(N);
  if (static_cast<Eigen::Index>(rows.size()) != y.size())
    throw std::runtime_error("moments_from_csv: incomplete moment table");
  for (const auto& [l, k, m, re, im] : rows) y.entry(l, k, m) = {re, im};
  return y;
}

void write_moments_csv(const std::string& path, const MomentVector& y) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("write_moments_csv: cannot open " + tmp);
    out << moments_to_csv(y);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("write_moments_csv: rename failed for " + path);
}

MomentVector read_moments_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_moments_csv: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return moments_from_csv(ss.str());
}

}  // namespace so3sr
