#include "so3sr/rotation.hpp"

#include <cmath>
#include <stdexcept>

namespace so3sr {

namespace {

constexpr double kOrthoTol = 1e-9;
constexpr double kAxisTol0 = 1e-7;   // angle ~ 0: conventional axis
constexpr double kAxisTolPi = 1e-7;  // angle ~ pi: diagonal extraction

double clamped_acos(double c) {
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return std::acos(c);
}

// Rotation angle from both the trace and the antisymmetric part:
// atan2(sin w, cos w) stays accurate at w ~ 0, where acos((tr-1)/2) loses
// half the digits to the flat cosine.
double rotation_angle(const Eigen::Matrix3d& a) {
  const Eigen::Vector3d v(a(2, 1) - a(1, 2), a(0, 2) - a(2, 0),
                          a(1, 0) - a(0, 1));
  return std::atan2(0.5 * v.norm(), 0.5 * (a.trace() - 1.0));
}

Eigen::Matrix3d skew(const Eigen::Vector3d& e) {
  Eigen::Matrix3d s;
  s << 0.0, -e.z(), e.y(), e.z(), 0.0, -e.x(), -e.y(), e.x(), 0.0;
  return s;
}

}  // namespace

Rotation::Rotation(const Eigen::Matrix3d& m) : m_(m) {
  const double ortho = (m.transpose() * m - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (ortho > kOrthoTol)
    throw std::invalid_argument("Rotation: matrix is not orthogonal");
  if (std::abs(m.determinant() - 1.0) > kOrthoTol)
    throw std::invalid_argument("Rotation: determinant is not +1");
}

Rotation Rotation::inverse() const {
  return Rotation(m_.transpose(), Unchecked{});
}

const Eigen::Matrix3d& generator(int i) {
  static const Eigen::Matrix3d L1 =
      (Eigen::Matrix3d() << 0, 0, 0, 0, 0, -1, 0, 1, 0).finished();
  static const Eigen::Matrix3d L2 =
      (Eigen::Matrix3d() << 0, 0, 1, 0, 0, 0, -1, 0, 0).finished();
  static const Eigen::Matrix3d L3 =
      (Eigen::Matrix3d() << 0, -1, 0, 1, 0, 0, 0, 0, 0).finished();
  switch (i) {
    case 1:
      return L1;
    case 2:
      return L2;
    case 3:
      return L3;
  }
  throw std::invalid_argument("generator: index must be 1, 2 or 3");
}

Rotation rodrigues(const Eigen::Vector3d& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0))
    throw std::invalid_argument("rodrigues: axis must be nonzero");
  const Eigen::Vector3d e = axis / n;
  const double c = std::cos(angle), s = std::sin(angle);
  const Eigen::Matrix3d a = Eigen::Matrix3d::Identity() * c +
                            (1.0 - c) * (e * e.transpose()) + skew(e) * s;
  return Rotation(a);
}

Rotation rodrigues(const AxisAngle& aa) { return rodrigues(aa.axis, aa.angle); }

AxisAngle axis_angle_of(const Rotation& x) {
  const Eigen::Matrix3d& a = x.matrix();
  const double w = rotation_angle(a);
  AxisAngle out;
  out.angle = w;
  if (w < kAxisTol0) {
    out.axis = Eigen::Vector3d(0.0, 0.0, 1.0);
    return out;
  }
  if (M_PI - w < kAxisTolPi) {
    // A + I = 2 e e^T at angle pi; use the column with the largest diagonal.
    const Eigen::Matrix3d b = a + Eigen::Matrix3d::Identity();
    int j = 0;
    b.diagonal().maxCoeff(&j);
    Eigen::Vector3d e = b.col(j);
    e.normalize();
    // Fix the (arbitrary) sign: first component of largest magnitude > 0.
    int imax = 0;
    e.cwiseAbs().maxCoeff(&imax);
    if (e(imax) < 0.0) e = -e;
    out.axis = e;
    return out;
  }
  // The antisymmetric part is 2 sin(w) e; its direction is accurate even
  // where the acos-extracted angle is not, so normalize instead of dividing.
  Eigen::Vector3d e(a(2, 1) - a(1, 2), a(0, 2) - a(2, 0), a(1, 0) - a(0, 1));
  out.axis = e.normalized();
  return out;
}

double geodesic_distance(const Rotation& x, const Rotation& y) {
  return rotation_angle(y.matrix().transpose() * x.matrix());
}

AxisAngle relative_axis_angle(const Rotation& x, const Rotation& y) {
  return axis_angle_of(Rotation(y.matrix().transpose() * x.matrix()));
}

EulerZXZ euler_zxz_of(const Rotation& x) {
  const Eigen::Matrix3d& a = x.matrix();
  EulerZXZ e;
  e.beta = clamped_acos(a(2, 2));
  const double sb = std::sin(e.beta);
  if (sb > 1e-10) {
    e.alpha = std::atan2(a(0, 2), -a(1, 2));
    e.gamma = std::atan2(a(2, 0), a(2, 1));
  } else {
    // beta ~ 0 or pi: only alpha -+ gamma is determined; take gamma = 0.
    e.gamma = 0.0;
    e.alpha = std::atan2(a(1, 0), a(0, 0));
  }
  if (e.alpha < 0.0) e.alpha += 2.0 * M_PI;
  if (e.gamma < 0.0) e.gamma += 2.0 * M_PI;
  return e;
}

Rotation from_euler_zxz(double alpha, double beta, double gamma) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const double cg = std::cos(gamma), sg = std::sin(gamma);
  Eigen::Matrix3d a;
  a << ca * cg - sa * cb * sg, -ca * sg - sa * cb * cg, sa * sb,
      sa * cg + ca * cb * sg, -sa * sg + ca * cb * cg, -ca * sb,
      sb * sg, sb * cg, cb;
  return Rotation(a);
}

Rotation from_euler_zxz(const EulerZXZ& e) {
  return from_euler_zxz(e.alpha, e.beta, e.gamma);
}

double numeric_X(const std::function<double(const Rotation&)>& f,
                 const Rotation& x, int i, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("numeric_X: h must be positive");
  static const Eigen::Vector3d axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  if (i < 1 || i > 3)
    throw std::invalid_argument("numeric_X: direction must be 1, 2 or 3");
  const Rotation step = rodrigues(axes[i - 1], h);
  const Rotation back = rodrigues(axes[i - 1], -h);
  return (f(x * step) - f(x * back)) / (2.0 * h);
}

SupportSet::SupportSet(std::vector<Rotation> points)
    : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i)
    for (std::size_t j = i + 1; j < points_.size(); ++j)
      separation_ =
          std::min(separation_, geodesic_distance(points_[i], points_[j]));
}

}  // namespace so3sr
