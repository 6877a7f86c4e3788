#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "gsfm/reconstruction.h"
#include "gsfm/solver.h"
#include "gsfm/view_graph.h"

namespace gsfm {

enum class SceneLayout {
  // Cameras on a sphere looking inward at a cube of points.
  kGeneral,
  // Cameras on a straight line, all facing sideways onto a slab of points.
  kColinear,
  // Cameras on a horizontal circle looking at the center.
  kRing,
};

std::string_view SceneLayoutName(SceneLayout layout);
SceneLayout SceneLayoutFromName(std::string_view name);

struct SyntheticSceneOptions {
  SceneLayout layout = SceneLayout::kGeneral;
  int num_cameras = 20;
  int num_points = 200;
  double noise_px = 0.0;
  // Fraction of all matches replaced by random feature pairings.
  double outlier_fraction = 0.0;
  // Fraction of cameras whose prior intrinsics are untrusted, with the focal
  // length off by +-20%.
  double miscalibration_fraction = 0.0;
  uint64_t seed = 0;

  int width = 640;
  int height = 480;
  double focal = 500.0;
  CameraModel model = CameraModel::kPinhole;
  double radial_k1 = 0.0;
  // Refit each pair's relative pose to its noisy inlier matches instead of
  // deriving it from the ground truth. Has no effect without noise.
  bool relative_pose_from_matches = true;
  std::size_t min_edge_matches = 15;
  // If positive, every point is a surface patch with a random normal that is
  // only seen by cameras within this angle of the normal.
  double visibility_angle_deg = 0.0;
};

struct SyntheticScene {
  SyntheticSceneOptions options;
  // True intrinsics, poses and points. Track elements carry the noisy
  // observations.
  Reconstruction ground_truth;
  // Largest distance between two ground-truth camera centers.
  double diameter = 0.0;
  std::size_t num_matches = 0;
  std::size_t num_corrupted_matches = 0;
};

struct SyntheticDataset {
  SyntheticScene scene;
  ViewGraph graph;
};

// Deterministic for a fixed options.seed. Throws InputError for fewer than 2
// cameras or 8 points, or if the layout yields no usable pair.
SyntheticDataset GenerateScene(const SyntheticSceneOptions& options);

// Places dataset b next to dataset a (ids of b are offset past those of a)
// and links them with one wrongly matched pair: num_matches extra features
// in one image of each scene that are consistent with a fake relative pose.
SyntheticDataset ConcatenateWithSpuriousEdge(const SyntheticDataset& a,
                                             const SyntheticDataset& b,
                                             int num_matches, uint64_t seed);

// Signed Sampson error of a normalized correspondence under E = [t]x R,
// over blocks: rotation quaternion (w, x, y, z) and translation 3.
std::shared_ptr<CostFunction> MakeSampsonCost(const Vector2d& normalized1,
                                              const Vector2d& normalized2);

// Least-squares refinement of a relative pose (X2 = R X1 + t) on normalized
// correspondences, minimizing the Sampson error. |t| = 1 on return.
void RefineRelativePose(const std::vector<Vector2d>& normalized1,
                        const std::vector<Vector2d>& normalized2,
                        Rotation* rotation, Vector3d* translation);

}  // namespace gsfm
