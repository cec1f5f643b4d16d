#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "so3sr/rotation.hpp"

namespace so3sr {

// Wigner matrices for the ZXZ convention
//   D^l_{k,m}(alpha,beta,gamma) = e^{-ik alpha} P^l_{k,m}(cos beta) e^{-im gamma},
// where P^l carries the i^{m-k} phase, so the matrices are complex already at
// gamma = alpha = 0.  Entries are indexed (k+l, m+l).

// P^l(cos beta) for a single degree.
Eigen::MatrixXcd wigner_d_row(int l, double beta);

// P^l(cos beta) for all degrees 0..N in one pass (shared recursion).
std::vector<Eigen::MatrixXcd> wigner_d_all(int N, double beta);

// Full D^l(x) from the ZXZ Euler angles of x.
Eigen::MatrixXcd wigner_D(int l, const Rotation& x);
std::vector<Eigen::MatrixXcd> wigner_D_all(int N, const Rotation& x);

// Character sum  sum_{k=-l}^{l} e^{ik omega} = sin((2l+1) omega/2)/sin(omega/2),
// i.e. U_{2l}(cos(omega/2)); equals the full addition sum
// sum_{k,m} D^l_{k,m}(x) conj(D^l_{k,m}(y)) at omega = d(x,y).
double addition_kernel(int l, double omega);

// Weighted sum of Dirac measures with real coefficients.
struct PointMeasure {
  std::vector<Rotation> centers;
  Eigen::VectorXd coefficients;

  int size() const { return static_cast<int>(centers.size()); }
  void validate() const;
};

// All moments y_{l,k,m} = sum_i c_i D^l_{k,m}(x_i) for l <= N, stored
// lexicographically in (l, k, m).
class MomentVector {
 public:
  MomentVector() = default;
  explicit MomentVector(int N);

  int degree() const { return N_; }
  Eigen::Index size() const { return data_.size(); }
  static Eigen::Index count(int N);
  static Eigen::Index index(int l, int k, int m);

  std::complex<double>& entry(int l, int k, int m);
  std::complex<double> entry(int l, int k, int m) const;
  Eigen::VectorXcd& raw() { return data_; }
  const Eigen::VectorXcd& raw() const { return data_; }

 private:
  int N_ = -1;
  Eigen::VectorXcd data_;
};

MomentVector moments(const PointMeasure& mu, int N);

// CSV with header "l,k,m,re,im", one row per entry, lexicographic order.
std::string moments_to_csv(const MomentVector& y);
MomentVector moments_from_csv(const std::string& csv);
void write_moments_csv(const std::string& path, const MomentVector& y);
MomentVector read_moments_csv(const std::string& path);

}  // namespace so3sr
