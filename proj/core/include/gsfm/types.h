#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <utility>

#include <Eigen/Core>

namespace gsfm {

using camera_t = uint32_t;
using image_t = uint32_t;
using track_t = uint32_t;
using feature_t = uint32_t;

inline constexpr image_t kInvalidImageId = std::numeric_limits<image_t>::max();

using Vector2d = Eigen::Vector2d;
using Vector3d = Eigen::Vector3d;
using Matrix3d = Eigen::Matrix3d;

// Unordered image pair, always stored with first < second.
struct ImagePair {
  image_t first = kInvalidImageId;
  image_t second = kInvalidImageId;

  ImagePair() = default;
  ImagePair(image_t a, image_t b)
      : first(a < b ? a : b), second(a < b ? b : a) {}

  friend auto operator<=>(const ImagePair&, const ImagePair&) = default;
};

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double DegToRad(double deg) { return deg * kPi / 180.0; }
inline constexpr double RadToDeg(double rad) { return rad * 180.0 / kPi; }

}  // namespace gsfm
