#pragma once

#include <cstdint>
#include <map>
#include <set>

#include "gsfm/reconstruction.h"
#include "gsfm/rotation.h"

namespace gsfm {

// x -> scale * rotation * x + translation
struct Similarity {
  double scale = 1.0;
  Matrix3d rotation = Matrix3d::Identity();
  Vector3d translation = Vector3d::Zero();

  Vector3d operator()(const Vector3d& x) const {
    return scale * rotation * x + translation;
  }
};

// Closed-form least-squares similarity mapping src onto dst (columns are
// points). Needs at least 3 columns.
Similarity EstimateSimilarity(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst);

struct AlignmentResult {
  Similarity transform;
  std::set<image_t> inliers;
  // |transform(estimate_i) - truth_i| for every common image.
  std::map<image_t, double> errors;
};

// RANSAC over 3-camera samples, inlier if the aligned position error is
// below inlier_threshold, then refit on the consensus set. Small sets are
// sampled exhaustively, larger ones with a generator seeded by seed. Throws
// InputError for fewer than 3 common images.
AlignmentResult AlignRobust(const std::map<image_t, Vector3d>& estimate,
                            const std::map<image_t, Vector3d>& ground_truth,
                            double inlier_threshold, uint64_t seed = 0);

// Aligns registered camera centers. Images registered in ground_truth but not
// in estimate get an infinite error.
AlignmentResult AlignReconstructions(const Reconstruction& estimate,
                                     const Reconstruction& ground_truth,
                                     double inlier_threshold, uint64_t seed = 0);

// Rotation G minimizing the mean angular distance of R_i G^-1 to the truth,
// estimated by chordal averaging of R_true_i^-1 R_i. Applying it as
// R_i * G.Inverse() removes the global gauge.
Rotation AlignRotations(const std::map<image_t, Rotation>& estimate,
                        const std::map<image_t, Rotation>& ground_truth);

}  // namespace gsfm
