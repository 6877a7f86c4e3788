#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "gsfm/types.h"

namespace gsfm {

// Unit quaternion rotation. The double cover is canonicalized so that w >= 0
// (and, when w == 0, the first nonzero of x, y, z is positive); two Rotation
// values that represent the same rotation therefore compare equal
// coefficient-wise.
class Rotation {
 public:
  Rotation() = default;
  // Normalizes and canonicalizes. Throws InputError on a zero quaternion.
  Rotation(double w, double x, double y, double z);

  static Rotation Identity() { return Rotation(); }
  static Rotation FromQuaternion(const Eigen::Quaterniond& q);
  static Rotation FromMatrix(const Matrix3d& m);
  static Rotation FromAxisAngle(const Vector3d& axis, double angle);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  Eigen::Quaterniond ToQuaternion() const { return {w_, x_, y_, z_}; }
  Matrix3d ToMatrix() const { return ToQuaternion().toRotationMatrix(); }

  Rotation Inverse() const { return Rotation(w_, -x_, -y_, -z_); }
  Vector3d operator*(const Vector3d& v) const { return ToQuaternion() * v; }
  Rotation operator*(const Rotation& other) const;

  bool IsApprox(const Rotation& other, double tol = 1e-9) const;

 private:
  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

// Geodesic angle of a * b^-1, in [0, pi].
double AngularDistance(const Rotation& a, const Rotation& b);

// Axis-angle vector with norm in [0, pi]. Stable near 0 and near pi.
Vector3d LogMap(const Rotation& r);
Rotation ExpMap(const Vector3d& omega);

// World-to-camera rotation plus camera center. A world point X has camera
// coordinates rotation * (X - center).
struct Pose {
  Rotation rotation;
  Vector3d center = Vector3d::Zero();

  Vector3d WorldToCamera(const Vector3d& X) const {
    return rotation * (X - center);
  }
  // t = -R c, the translation of the equivalent [R | t] form.
  Vector3d Translation() const { return -(rotation * center); }
  static Pose FromRotationTranslation(const Rotation& r, const Vector3d& t) {
    return {r, -(r.Inverse() * t)};
  }
};

Matrix3d CrossMatrix(const Vector3d& v);

}  // namespace gsfm
