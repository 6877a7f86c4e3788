#include "gsfm/alignment.h"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "gsfm/errors.h"

namespace gsfm {

Similarity EstimateSimilarity(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst) {
  if (src.cols() < 3 || src.cols() != dst.cols()) {
    throw InputError("similarity needs at least 3 point pairs");
  }
  const Eigen::Matrix4d T = Eigen::umeyama(src, dst, true);
  Similarity s;
  const Matrix3d sR = T.topLeftCorner<3, 3>();
  s.scale = std::cbrt(sR.determinant());
  if (!(s.scale > 0.0) || !std::isfinite(s.scale)) {
    // All source points coincide; fall back to a pure translation.
    s.scale = 1.0;
    s.rotation.setIdentity();
    s.translation = dst.rowwise().mean() - src.rowwise().mean();
    return s;
  }
  s.rotation = sR / s.scale;
  s.translation = T.topRightCorner<3, 1>();
  return s;
}

namespace {

struct Correspondences {
  std::vector<image_t> ids;
  Eigen::Matrix3Xd src;
  Eigen::Matrix3Xd dst;
};

Eigen::VectorXd Errors(const Similarity& s, const Correspondences& c) {
  Eigen::VectorXd errors(c.ids.size());
  for (Eigen::Index i = 0; i < errors.size(); ++i) {
    errors[i] = (s(c.src.col(i)) - c.dst.col(i)).norm();
  }
  return errors;
}

Similarity FitSubset(const Correspondences& c, const std::vector<int>& subset) {
  Eigen::Matrix3Xd src(3, subset.size()), dst(3, subset.size());
  for (std::size_t k = 0; k < subset.size(); ++k) {
    src.col(k) = c.src.col(subset[k]);
    dst.col(k) = c.dst.col(subset[k]);
  }
  return EstimateSimilarity(src, dst);
}

// Inlier count first, then the truncated error sum.
struct Score {
  int inliers = -1;
  double cost = std::numeric_limits<double>::infinity();
  bool operator>(const Score& other) const {
    return inliers != other.inliers ? inliers > other.inliers : cost < other.cost;
  }
};

Score Evaluate(const Eigen::VectorXd& errors, double threshold) {
  Score score{0, 0.0};
  for (Eigen::Index i = 0; i < errors.size(); ++i) {
    if (errors[i] < threshold) {
      ++score.inliers;
      score.cost += errors[i];
    } else {
      score.cost += threshold;
    }
  }
  return score;
}

}  // namespace

AlignmentResult AlignRobust(const std::map<image_t, Vector3d>& estimate,
                            const std::map<image_t, Vector3d>& ground_truth,
                            double inlier_threshold, uint64_t seed) {
  if (!(inlier_threshold > 0.0)) throw InputError("inlier threshold must be positive");
  Correspondences c;
  for (const auto& [id, x] : estimate) {
    if (ground_truth.count(id)) c.ids.push_back(id);
  }
  const int n = static_cast<int>(c.ids.size());
  if (n < 3) throw InputError("alignment needs at least 3 common images");
  c.src.resize(3, n);
  c.dst.resize(3, n);
  for (int i = 0; i < n; ++i) {
    c.src.col(i) = estimate.at(c.ids[i]);
    c.dst.col(i) = ground_truth.at(c.ids[i]);
  }

  Similarity best;
  Score best_score;
  auto try_sample = [&](int a, int b, int d) {
    const Similarity s = FitSubset(c, {a, b, d});
    if (!s.translation.allFinite() || !s.rotation.allFinite()) return;
    const Score score = Evaluate(Errors(s, c), inlier_threshold);
    if (score > best_score) {
      best_score = score;
      best = s;
    }
  };
  constexpr int kExhaustiveLimit = 40;
  if (n <= kExhaustiveLimit) {
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (int d = b + 1; d < n; ++d) try_sample(a, b, d);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int iteration = 0; iteration < 10000; ++iteration) {
      const int a = pick(rng);
      int b = pick(rng);
      int d = pick(rng);
      if (a == b || b == d || a == d) continue;
      try_sample(a, b, d);
    }
  }

  // Refit on the consensus set until it stops changing.
  std::vector<int> inliers;
  for (int round = 0; round < 20; ++round) {
    const Eigen::VectorXd errors = Errors(best, c);
    std::vector<int> next;
    for (int i = 0; i < n; ++i) {
      if (errors[i] < inlier_threshold) next.push_back(i);
    }
    if (next.size() < 3 || next == inliers) break;
    inliers = next;
    best = FitSubset(c, inliers);
  }

  AlignmentResult result;
  result.transform = best;
  const Eigen::VectorXd errors = Errors(best, c);
  for (int i = 0; i < n; ++i) {
    result.errors[c.ids[i]] = errors[i];
    if (errors[i] < inlier_threshold) result.inliers.insert(c.ids[i]);
  }
  return result;
}

AlignmentResult AlignReconstructions(const Reconstruction& estimate,
                                     const Reconstruction& ground_truth,
                                     double inlier_threshold, uint64_t seed) {
  std::map<image_t, Vector3d> est, truth;
  for (const image_t id : estimate.RegisteredImages()) {
    est[id] = estimate.poses.at(id).center;
  }
  for (const image_t id : ground_truth.RegisteredImages()) {
    truth[id] = ground_truth.poses.at(id).center;
  }
  AlignmentResult result = AlignRobust(est, truth, inlier_threshold, seed);
  for (const auto& [id, x] : truth) {
    if (!est.count(id)) result.errors[id] = std::numeric_limits<double>::infinity();
  }
  return result;
}

Rotation AlignRotations(const std::map<image_t, Rotation>& estimate,
                        const std::map<image_t, Rotation>& ground_truth) {
  Matrix3d sum = Matrix3d::Zero();
  for (const auto& [id, r] : estimate) {
    const auto it = ground_truth.find(id);
    if (it == ground_truth.end()) continue;
    sum += (it->second.Inverse() * r).ToMatrix();
  }
  if (sum.isZero()) return Rotation::Identity();
  Eigen::JacobiSVD<Matrix3d> svd(sum, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3d D = Matrix3d::Identity();
  D(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return Rotation::FromMatrix(svd.matrixU() * D * svd.matrixV().transpose());
}

}  // namespace gsfm
