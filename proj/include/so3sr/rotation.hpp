#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace so3sr {

class Rotation;

// Axis-angle pair: unit axis, angle in [0, pi].
struct AxisAngle {
  Eigen::Vector3d axis{0.0, 0.0, 1.0};
  double angle = 0.0;
};

// ZXZ Euler angles: x = R_Z(alpha) R_X(beta) R_Z(gamma),
// alpha, gamma in [0, 2pi), beta in [0, pi].
struct EulerZXZ {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

// Proper rotation: 3x3 orthogonal matrix with det +1, validated on
// construction to 1e-9.
class Rotation {
 public:
  Rotation() : m_(Eigen::Matrix3d::Identity()) {}
  explicit Rotation(const Eigen::Matrix3d& m);

  const Eigen::Matrix3d& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_); }
  Rotation inverse() const;

 private:
  struct Unchecked {};
  Rotation(const Eigen::Matrix3d& m, Unchecked) : m_(m) {}
  Eigen::Matrix3d m_;
};

// so(3) generator L_i (i in {1,2,3} for the x/y/z axes):
//   L_1 = [0 0 0; 0 0 -1; 0 1 0], L_2 = [0 0 1; 0 0 0; -1 0 0],
//   L_3 = [0 -1 0; 1 0 0; 0 0 0].
const Eigen::Matrix3d& generator(int i);

// Rodrigues formula A = I cos(w) + (1 - cos(w)) e e^T + [e]_x sin(w).
// The axis need not be normalized on input; a zero axis is rejected.
Rotation rodrigues(const Eigen::Vector3d& axis, double angle);
Rotation rodrigues(const AxisAngle& aa);

// Inverse of rodrigues.  Angle in [0, pi]; near-identity rotations
// (angle < 1e-7) report the conventional axis (0,0,1); near angle pi the
// axis comes from the dominant diagonal of A + I.
AxisAngle axis_angle_of(const Rotation& x);

// Rotation angle of y^{-1} x, i.e. the bi-invariant geodesic distance.
double geodesic_distance(const Rotation& x, const Rotation& y);

// Relative rotation angle and unit axis of y^{-1} x in one call.
AxisAngle relative_axis_angle(const Rotation& x, const Rotation& y);

EulerZXZ euler_zxz_of(const Rotation& x);
Rotation from_euler_zxz(const EulerZXZ& e);
Rotation from_euler_zxz(double alpha, double beta, double gamma);

// Right-translation derivative estimate by central differences:
//   X_i f(x) ~ (f(x exp(h L_i)) - f(x exp(-h L_i))) / (2h).
double numeric_X(const std::function<double(const Rotation&)>& f,
                 const Rotation& x, int i, double h);

// Ordered collection of rotations with cached minimum pairwise distance.
class SupportSet {
 public:
  SupportSet() = default;
  explicit SupportSet(std::vector<Rotation> points);

  const std::vector<Rotation>& points() const { return points_; }
  const Rotation& operator[](std::size_t i) const { return points_[i]; }
  std::size_t size() const { return points_.size(); }
  // Minimum pairwise geodesic distance; +inf for fewer than two points.
  double separation() const { return separation_; }

 private:
  std::vector<Rotation> points_;
  double separation_ = std::numeric_limits<double>::infinity();
};

}  // namespace so3sr
