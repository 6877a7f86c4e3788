#pragma once

#include <optional>
#include <vector>

#include "gsfm/camera.h"
#include "gsfm/view_graph.h"

namespace gsfm {

inline constexpr std::size_t kMinEdgeMatches = 15;

// Sampson distance of a pixel correspondence under x2^T F x1 = 0, in pixels.
double SampsonDistance(const Matrix3d& F, const Vector2d& x1,
                       const Vector2d& x2);
// max(|x2 - H x1|, |x1 - H^-1 x2|), in pixels.
double SymmetricTransferError(const Matrix3d& H, const Vector2d& x1,
                              const Vector2d& x2);

Matrix3d EssentialFromPose(const Rotation& rotation,
                           const Vector3d& translation);
Matrix3d FundamentalFromEssential(const Matrix3d& E,
                                  const CameraIntrinsics& camera1,
                                  const CameraIntrinsics& camera2);
Matrix3d EssentialFromFundamental(const Matrix3d& F,
                                  const CameraIntrinsics& camera1,
                                  const CameraIntrinsics& camera2);

// The four (R, t) candidates of an essential matrix, |t| = 1.
std::vector<std::pair<Rotation, Vector3d>> DecomposeEssentialMatrix(
    const Matrix3d& E);

struct HomographyCandidate {
  Rotation rotation;
  Vector3d translation = Vector3d::Zero();  // zero for pure rotation
  Vector3d normal = Vector3d::Zero();
};
// Analytic decomposition of H into (R, t, n) in normalized coordinates. A
// homography that is a pure rotation yields a single candidate with t = 0.
std::vector<HomographyCandidate> DecomposeHomographyMatrix(
    const Matrix3d& H, const CameraIntrinsics& camera1,
    const CameraIntrinsics& camera2);

// Midpoint triangulation of two normalized rays (camera 1 at the origin,
// X2 = R X1 + t). Returns the depths of the midpoint in both cameras.
struct MidpointDepths {
  double depth1 = 0.0;
  double depth2 = 0.0;
  bool degenerate = false;
};
MidpointDepths TriangulateMidpoint(const Rotation& rotation,
                                   const Vector3d& translation,
                                   const Vector3d& ray1, const Vector3d& ray2);

// Keeps matches whose model residual is within threshold_px: symmetric
// transfer error for homographies and Sampson distance for E and F. Returns
// std::nullopt if fewer than min_matches survive. Throws InputError for
// feature indices outside the feature lists.
std::optional<TwoViewGeometry> VerifyMatches(
    const TwoViewGeometry& edge, const std::vector<Vector2d>& features1,
    const std::vector<Vector2d>& features2, const CameraIntrinsics& camera1,
    const CameraIntrinsics& camera2, double threshold_px,
    std::size_t min_matches = kMinEdgeMatches);

struct DecomposedEdge {
  bool valid = false;
  Rotation rotation;
  std::optional<Vector3d> translation;
  std::vector<FeatureMatch> inliers;
};

// Relative pose of the edge. Essential and fundamental matrices are
// decomposed into four candidates and the one with the most matches in front
// of both cameras wins; a fundamental matrix is first promoted to an
// essential matrix with the (prior) intrinsics. Homographies yield a rotation
// and no translation. The edge is invalid if the winner keeps fewer than half
// of the matches.
DecomposedEdge DecomposeEdge(const TwoViewGeometry& edge,
                             const std::vector<Vector2d>& features1,
                             const std::vector<Vector2d>& features2,
                             const CameraIntrinsics& camera1,
                             const CameraIntrinsics& camera2);

// Drops matches whose ray in either image lies within min_epipole_angle_deg
// of the epipole axis, or whose rays subtend less than
// min_triangulation_angle_deg. Edges without a translation are returned
// unchanged.
std::vector<FeatureMatch> FilterEpipoleAndAngle(
    const TwoViewGeometry& edge, const std::vector<Vector2d>& features1,
    const std::vector<Vector2d>& features2, const CameraIntrinsics& camera1,
    const CameraIntrinsics& camera2, double min_triangulation_angle_deg,
    double min_epipole_angle_deg);

}  // namespace gsfm
