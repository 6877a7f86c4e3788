#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gsfm/rotation.h"
#include "gsfm/types.h"

namespace gsfm {

enum class CameraModel { kPinhole, kSimpleRadial };

std::string_view CameraModelName(CameraModel model);
// Throws InputError for unknown names.
CameraModel CameraModelFromName(std::string_view name);

// PINHOLE uses fx, fy, cx, cy. SIMPLE_RADIAL uses a single focal length
// (fx == fy), cx, cy and k1.
struct CameraIntrinsics {
  camera_t id = 0;
  CameraModel model = CameraModel::kPinhole;
  int width = 0;
  int height = 0;
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double k1 = 0.0;
  // True if the intrinsics are trusted priors and are not refined.
  bool calibrated = true;

  static CameraIntrinsics Pinhole(int width, int height, double fx, double fy,
                                  double cx, double cy);
  static CameraIntrinsics SimpleRadial(int width, int height, double f,
                                       double cx, double cy, double k1);

  // Parameter list in the order of the sparse-model text layout:
  // PINHOLE fx fy cx cy, SIMPLE_RADIAL f cx cy k1.
  std::vector<double> Params() const;
  static CameraIntrinsics FromParams(CameraModel model, int width, int height,
                                     const std::vector<double>& params);

  bool InImage(const Vector2d& uv) const {
    return uv.x() >= 0.0 && uv.y() >= 0.0 && uv.x() < width &&
           uv.y() < height;
  }

  // Throws InputError if focal lengths or image size are not positive.
  void Validate() const;

  Eigen::Matrix3d CalibrationMatrix() const;
};

struct Observation {
  image_t image_id = kInvalidImageId;
  Vector2d uv = Vector2d::Zero();
};

// Pixel coordinates of world point X, or std::nullopt if X is not strictly in
// front of the camera.
std::optional<Vector2d> Project(const CameraIntrinsics& intrinsics,
                                const Pose& pose, const Vector3d& X);

// Distortion-free normalized image point (x/z, y/z) -> pixels.
Vector2d ImageFromNormalized(const CameraIntrinsics& intrinsics,
                             const Vector2d& xy);
// Pixels -> undistorted normalized image point. Throws InputError if the
// radial undistortion does not converge within 100 Newton iterations.
Vector2d NormalizedFromImage(const CameraIntrinsics& intrinsics,
                             const Vector2d& uv);

// Unit viewing ray in the camera frame.
Vector3d RayDirection(const CameraIntrinsics& intrinsics, const Vector2d& uv);
inline Vector3d RayDirection(const CameraIntrinsics& intrinsics,
                             const Observation& obs) {
  return RayDirection(intrinsics, obs.uv);
}

}  // namespace gsfm
