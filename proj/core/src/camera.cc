#include "gsfm/camera.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "gsfm/errors.h"

namespace gsfm {

std::string_view CameraModelName(CameraModel model) {
  switch (model) {
    case CameraModel::kPinhole:
      return "PINHOLE";
    case CameraModel::kSimpleRadial:
      return "SIMPLE_RADIAL";
  }
  return "UNKNOWN";
}

CameraModel CameraModelFromName(std::string_view name) {
  if (name == "PINHOLE") return CameraModel::kPinhole;
  if (name == "SIMPLE_RADIAL") return CameraModel::kSimpleRadial;
  throw InputError("unknown camera model '" + std::string(name) + "'");
}

CameraIntrinsics CameraIntrinsics::Pinhole(int width, int height, double fx,
                                           double fy, double cx, double cy) {
  CameraIntrinsics c;
  c.model = CameraModel::kPinhole;
  c.width = width;
  c.height = height;
  c.fx = fx;
  c.fy = fy;
  c.cx = cx;
  c.cy = cy;
  return c;
}

CameraIntrinsics CameraIntrinsics::SimpleRadial(int width, int height,
                                                double f, double cx, double cy,
                                                double k1) {
  CameraIntrinsics c;
  c.model = CameraModel::kSimpleRadial;
  c.width = width;
  c.height = height;
  c.fx = f;
  c.fy = f;
  c.cx = cx;
  c.cy = cy;
  c.k1 = k1;
  return c;
}

std::vector<double> CameraIntrinsics::Params() const {
  switch (model) {
    case CameraModel::kPinhole:
      return {fx, fy, cx, cy};
    case CameraModel::kSimpleRadial:
      return {fx, cx, cy, k1};
  }
  return {};
}

CameraIntrinsics CameraIntrinsics::FromParams(
    CameraModel model, int width, int height,
    const std::vector<double>& params) {
  if (params.size() != 4) {
    throw InputError(std::string(CameraModelName(model)) +
                     " expects 4 parameters, got " +
                     std::to_string(params.size()));
  }
  CameraIntrinsics c;
  if (model == CameraModel::kPinhole) {
    c = Pinhole(width, height, params[0], params[1], params[2], params[3]);
  } else {
    c = SimpleRadial(width, height, params[0], params[1], params[2],
                     params[3]);
  }
  c.Validate();
  return c;
}

void CameraIntrinsics::Validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw InputError("camera " + std::to_string(id) +
                     ": focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw InputError("camera " + std::to_string(id) +
                     ": image size must be positive");
  }
  if (model == CameraModel::kSimpleRadial && fx != fy) {
    throw InputError("camera " + std::to_string(id) +
                     ": SIMPLE_RADIAL requires fx == fy");
  }
}

Eigen::Matrix3d CameraIntrinsics::CalibrationMatrix() const {
  Eigen::Matrix3d K;
  K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return K;
}

std::optional<Vector2d> Project(const CameraIntrinsics& intrinsics,
                                const Pose& pose, const Vector3d& X) {
  const Vector3d p = pose.WorldToCamera(X);
  if (p.z() <= 0.0) {
    return std::nullopt;
  }
  Vector2d xy(p.x() / p.z(), p.y() / p.z());
  if (intrinsics.model == CameraModel::kSimpleRadial) {
    xy *= 1.0 + intrinsics.k1 * xy.squaredNorm();
  }
  return ImageFromNormalized(intrinsics, xy);
}

Vector2d ImageFromNormalized(const CameraIntrinsics& intrinsics,
                             const Vector2d& xy) {
  return {intrinsics.fx * xy.x() + intrinsics.cx,
          intrinsics.fy * xy.y() + intrinsics.cy};
}

namespace {

// Solves r (1 + k1 r^2) = rd for the undistorted radius r >= 0.
double UndistortRadius(double k1, double rd) {
  double r = rd;
  for (int iter = 0; iter < 100; ++iter) {
    const double r2 = r * r;
    const double f = r * (1.0 + k1 * r2) - rd;
    if (std::abs(f) <= 1e-15 * std::max(1.0, rd)) {
      return r;
    }
    const double df = 1.0 + 3.0 * k1 * r2;
    if (!(df > 0.0)) {
      break;
    }
    const double step = f / df;
    r -= step;
    if (!std::isfinite(r) || r < 0.0) {
      break;
    }
    if (std::abs(step) <= 1e-15 * std::max(1.0, r)) {
      return r;
    }
  }
  throw InputError("radial undistortion did not converge (k1 = " +
                   std::to_string(k1) + ")");
}

}  // namespace

Vector2d NormalizedFromImage(const CameraIntrinsics& intrinsics,
                             const Vector2d& uv) {
  const Vector2d xd((uv.x() - intrinsics.cx) / intrinsics.fx,
                    (uv.y() - intrinsics.cy) / intrinsics.fy);
  if (intrinsics.model != CameraModel::kSimpleRadial || intrinsics.k1 == 0.0) {
    return xd;
  }
  const double rd = xd.norm();
  if (rd == 0.0) {
    return xd;
  }
  return xd * (UndistortRadius(intrinsics.k1, rd) / rd);
}

Vector3d RayDirection(const CameraIntrinsics& intrinsics, const Vector2d& uv) {
  const Vector2d xy = NormalizedFromImage(intrinsics, uv);
  return Vector3d(xy.x(), xy.y(), 1.0).normalized();
}

}  // namespace gsfm
