#include "gsfm/rotation.h"

#include <cmath>

#include "gsfm/errors.h"

namespace gsfm {

Rotation::Rotation(double w, double x, double y, double z) {
  const double norm = std::sqrt(w * w + x * x + y * y + z * z);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw InputError("Rotation: quaternion must be finite and nonzero");
  }
  w /= norm;
  x /= norm;
  y /= norm;
  z /= norm;
  bool flip = w < 0.0;
  if (w == 0.0) {
    const double first = x != 0.0 ? x : (y != 0.0 ? y : z);
    flip = first < 0.0;
  }
  if (flip) {
    w = -w;
    x = -x;
    y = -y;
    z = -z;
  }
  w_ = w;
  x_ = x;
  y_ = y;
  z_ = z;
}

Rotation Rotation::FromQuaternion(const Eigen::Quaterniond& q) {
  return Rotation(q.w(), q.x(), q.y(), q.z());
}

Rotation Rotation::FromMatrix(const Matrix3d& m) {
  return FromQuaternion(Eigen::Quaterniond(m));
}

Rotation Rotation::FromAxisAngle(const Vector3d& axis, double angle) {
  return ExpMap(axis.normalized() * angle);
}

Rotation Rotation::operator*(const Rotation& other) const {
  return FromQuaternion(ToQuaternion() * other.ToQuaternion());
}

bool Rotation::IsApprox(const Rotation& other, double tol) const {
  return std::abs(w_ - other.w_) <= tol && std::abs(x_ - other.x_) <= tol &&
         std::abs(y_ - other.y_) <= tol && std::abs(z_ - other.z_) <= tol;
}

double AngularDistance(const Rotation& a, const Rotation& b) {
  const Eigen::Quaterniond rel = a.ToQuaternion() * b.ToQuaternion().conjugate();
  return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
}

Vector3d LogMap(const Rotation& r) {
  const Vector3d v(r.x(), r.y(), r.z());
  const double n = v.norm();
  // w >= 0 by canonicalization, so the angle lies in [0, pi].
  if (n < 1e-8) {
    return (2.0 / r.w()) * v;
  }
  return (2.0 * std::atan2(n, r.w()) / n) * v;
}

Rotation ExpMap(const Vector3d& omega) {
  const double theta = omega.norm();
  double scale;
  if (theta < 1e-8) {
    scale = 0.5 - theta * theta / 48.0;
  } else {
    scale = std::sin(0.5 * theta) / theta;
  }
  return Rotation(std::cos(0.5 * theta), scale * omega.x(), scale * omega.y(),
                  scale * omega.z());
}

Matrix3d CrossMatrix(const Vector3d& v) {
  Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

}  // namespace gsfm
