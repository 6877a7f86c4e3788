#include "gsfm/two_view.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "gsfm/errors.h"

namespace gsfm {
namespace {

Vector3d Homogeneous(const Vector2d& x) { return {x.x(), x.y(), 1.0}; }

void CheckIndices(const TwoViewGeometry& edge, std::size_t num_features1,
                  std::size_t num_features2) {
  for (const auto& m : edge.matches) {
    if (m.idx1 >= num_features1 || m.idx2 >= num_features2) {
      throw InputError("pair (" + std::to_string(edge.image_id1) + ", " +
                       std::to_string(edge.image_id2) +
                       "): match references missing feature index");
    }
  }
}

Matrix3d ProjectToRotation(const Matrix3d& m) {
  Eigen::JacobiSVD<Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3d R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < 0.0) {
    Matrix3d U = svd.matrixU();
    U.col(2) *= -1.0;
    R = U * svd.matrixV().transpose();
  }
  return R;
}

// Negated 2x2 minor of a symmetric 3x3 matrix.
double OppositeOfMinor(const Matrix3d& m, int row, int col) {
  const int col1 = col == 0 ? 1 : 0;
  const int col2 = col == 2 ? 1 : 2;
  const int row1 = row == 0 ? 1 : 0;
  const int row2 = row == 2 ? 1 : 2;
  return m(row1, col2) * m(row2, col1) - m(row1, col1) * m(row2, col2);
}

double SignOf(double x) { return x >= 0.0 ? 1.0 : -1.0; }

}  // namespace

double SampsonDistance(const Matrix3d& F, const Vector2d& x1,
                       const Vector2d& x2) {
  const Vector3d h1 = Homogeneous(x1);
  const Vector3d h2 = Homogeneous(x2);
  const Vector3d Fx1 = F * h1;
  const Vector3d Ftx2 = F.transpose() * h2;
  const double e = h2.dot(Fx1);
  const double denom = Fx1.x() * Fx1.x() + Fx1.y() * Fx1.y() +
                       Ftx2.x() * Ftx2.x() + Ftx2.y() * Ftx2.y();
  if (denom <= 0.0) {
    return e == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return std::abs(e) / std::sqrt(denom);
}

double SymmetricTransferError(const Matrix3d& H, const Vector2d& x1,
                              const Vector2d& x2) {
  const Vector3d fwd = H * Homogeneous(x1);
  const Vector3d bwd = H.inverse() * Homogeneous(x2);
  if (fwd.z() == 0.0 || bwd.z() == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return std::max((fwd.hnormalized() - x2).norm(),
                  (bwd.hnormalized() - x1).norm());
}

Matrix3d EssentialFromPose(const Rotation& rotation,
                           const Vector3d& translation) {
  return CrossMatrix(translation) * rotation.ToMatrix();
}

Matrix3d FundamentalFromEssential(const Matrix3d& E,
                                  const CameraIntrinsics& camera1,
                                  const CameraIntrinsics& camera2) {
  return camera2.CalibrationMatrix().inverse().transpose() * E *
         camera1.CalibrationMatrix().inverse();
}

Matrix3d EssentialFromFundamental(const Matrix3d& F,
                                  const CameraIntrinsics& camera1,
                                  const CameraIntrinsics& camera2) {
  return camera2.CalibrationMatrix().transpose() * F *
         camera1.CalibrationMatrix();
}

std::vector<std::pair<Rotation, Vector3d>> DecomposeEssentialMatrix(
    const Matrix3d& E) {
  Eigen::JacobiSVD<Matrix3d> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3d U = svd.matrixU();
  Matrix3d V = svd.matrixV();
  if (U.determinant() < 0.0) U *= -1.0;
  if (V.determinant() < 0.0) V *= -1.0;
  Matrix3d W;
  W << 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  const Rotation R1 = Rotation::FromMatrix(U * W * V.transpose());
  const Rotation R2 = Rotation::FromMatrix(U * W.transpose() * V.transpose());
  const Vector3d t = U.col(2).normalized();
  return {{R1, t}, {R1, -t}, {R2, t}, {R2, -t}};
}

std::vector<HomographyCandidate> DecomposeHomographyMatrix(
    const Matrix3d& H, const CameraIntrinsics& camera1,
    const CameraIntrinsics& camera2) {
  Matrix3d Hn = camera2.CalibrationMatrix().inverse() * H *
                camera1.CalibrationMatrix();
  Eigen::JacobiSVD<Matrix3d> svd(Hn);
  Hn /= svd.singularValues()(1);
  if (Hn.determinant() < 0.0) Hn *= -1.0;

  const Matrix3d S = Hn.transpose() * Hn - Matrix3d::Identity();
  if (S.lpNorm<Eigen::Infinity>() < 1e-3) {
    return {{Rotation::FromMatrix(ProjectToRotation(Hn)), Vector3d::Zero(),
             Vector3d::Zero()}};
  }

  const double M00 = std::max(0.0, OppositeOfMinor(S, 0, 0));
  const double M11 = std::max(0.0, OppositeOfMinor(S, 1, 1));
  const double M22 = std::max(0.0, OppositeOfMinor(S, 2, 2));
  const double rtM00 = std::sqrt(M00);
  const double rtM11 = std::sqrt(M11);
  const double rtM22 = std::sqrt(M22);
  const double e01 = SignOf(OppositeOfMinor(S, 0, 1));
  const double e02 = SignOf(OppositeOfMinor(S, 0, 2));
  const double e12 = SignOf(OppositeOfMinor(S, 1, 2));

  const std::array<double, 3> abs_diag{std::abs(S(0, 0)), std::abs(S(1, 1)),
                                       std::abs(S(2, 2))};
  const int idx = static_cast<int>(
      std::max_element(abs_diag.begin(), abs_diag.end()) - abs_diag.begin());

  Vector3d np1, np2;
  if (idx == 0) {
    np1 << S(0, 0), S(0, 1) + rtM22, S(0, 2) + e12 * rtM11;
    np2 << S(0, 0), S(0, 1) - rtM22, S(0, 2) - e12 * rtM11;
  } else if (idx == 1) {
    np1 << S(0, 1) + rtM22, S(1, 1), S(1, 2) - e02 * rtM00;
    np2 << S(0, 1) - rtM22, S(1, 1), S(1, 2) + e02 * rtM00;
  } else {
    np1 << S(0, 2) + e01 * rtM11, S(1, 2) + rtM00, S(2, 2);
    np2 << S(0, 2) - e01 * rtM11, S(1, 2) - rtM00, S(2, 2);
  }

  const double trace = S.trace();
  const double v = 2.0 * std::sqrt(std::max(0.0, 1.0 + trace - M00 - M11 - M22));
  const double esii = SignOf(S(idx, idx));
  const double r = std::sqrt(std::max(0.0, 2.0 + trace + v));
  const double n_t = std::sqrt(std::max(0.0, 2.0 + trace - v));
  const Vector3d n1 = np1.normalized();
  const Vector3d n2 = np2.normalized();
  const Vector3d t1_star = 0.5 * n_t * (esii * r * n2 - n_t * n1);
  const Vector3d t2_star = 0.5 * n_t * (esii * r * n1 - n_t * n2);

  auto rotation_of = [&](const Vector3d& t_star, const Vector3d& n) {
    return ProjectToRotation(
        Hn * (Matrix3d::Identity() - (2.0 / v) * t_star * n.transpose()));
  };
  const Matrix3d R1 = rotation_of(t1_star, n1);
  const Matrix3d R2 = rotation_of(t2_star, n2);
  const Vector3d t1 = R1 * t1_star;
  const Vector3d t2 = R2 * t2_star;
  const Rotation q1 = Rotation::FromMatrix(R1);
  const Rotation q2 = Rotation::FromMatrix(R2);
  return {{q1, t1, -n1}, {q1, -t1, n1}, {q2, t2, -n2}, {q2, -t2, n2}};
}

MidpointDepths TriangulateMidpoint(const Rotation& rotation,
                                   const Vector3d& translation,
                                   const Vector3d& ray1, const Vector3d& ray2) {
  // Camera 2 center and ray expressed in camera 1 coordinates.
  const Rotation inv = rotation.Inverse();
  const Vector3d c2 = -(inv * translation);
  const Vector3d d1 = ray1;
  const Vector3d d2 = inv * ray2;
  Eigen::Matrix2d A;
  A << d1.dot(d1), -d1.dot(d2), d1.dot(d2), -d2.dot(d2);
  const Vector2d b(d1.dot(c2), d2.dot(c2));
  MidpointDepths result;
  const double det = A.determinant();
  if (std::abs(det) < 1e-14 * d1.squaredNorm() * d2.squaredNorm()) {
    result.degenerate = true;
    return result;
  }
  const Vector2d lambda = A.inverse() * b;
  const Vector3d X = 0.5 * (lambda(0) * d1 + c2 + lambda(1) * d2);
  result.depth1 = X.z();
  result.depth2 = (rotation * X + translation).z();
  return result;
}

std::optional<TwoViewGeometry> VerifyMatches(
    const TwoViewGeometry& edge, const std::vector<Vector2d>& features1,
    const std::vector<Vector2d>& features2, const CameraIntrinsics& camera1,
    const CameraIntrinsics& camera2, double threshold_px,
    std::size_t min_matches) {
  CheckIndices(edge, features1.size(), features2.size());

  Matrix3d F = edge.matrix;
  bool undistort = false;
  if (edge.config == TwoViewConfig::kCalibrated) {
    F = FundamentalFromEssential(edge.matrix, camera1, camera2);
    undistort = true;
  }
  auto pixel = [&](const CameraIntrinsics& camera, const Vector2d& uv) {
    return undistort
               ? ImageFromNormalized(camera, NormalizedFromImage(camera, uv))
               : uv;
  };

  TwoViewGeometry filtered = edge;
  filtered.matches.clear();
  for (const auto& m : edge.matches) {
    const Vector2d x1 = pixel(camera1, features1[m.idx1]);
    const Vector2d x2 = pixel(camera2, features2[m.idx2]);
    const double residual = edge.config == TwoViewConfig::kHomography
                                ? SymmetricTransferError(edge.matrix, x1, x2)
                                : SampsonDistance(F, x1, x2);
    if (residual <= threshold_px) {
      filtered.matches.push_back(m);
    }
  }
  if (filtered.matches.size() < min_matches) {
    return std::nullopt;
  }
  return filtered;
}

DecomposedEdge DecomposeEdge(const TwoViewGeometry& edge,
                             const std::vector<Vector2d>& features1,
                             const std::vector<Vector2d>& features2,
                             const CameraIntrinsics& camera1,
                             const CameraIntrinsics& camera2) {
  CheckIndices(edge, features1.size(), features2.size());

  std::vector<Vector3d> rays1, rays2;
  rays1.reserve(edge.matches.size());
  rays2.reserve(edge.matches.size());
  for (const auto& m : edge.matches) {
    rays1.push_back(
        NormalizedFromImage(camera1, features1[m.idx1]).homogeneous());
    rays2.push_back(
        NormalizedFromImage(camera2, features2[m.idx2]).homogeneous());
  }

  auto inliers_of = [&](const Rotation& R, const Vector3d& t) {
    std::vector<FeatureMatch> inliers;
    for (std::size_t i = 0; i < edge.matches.size(); ++i) {
      const MidpointDepths depths = TriangulateMidpoint(R, t, rays1[i], rays2[i]);
      if (!depths.degenerate && depths.depth1 > 0.0 && depths.depth2 > 0.0) {
        inliers.push_back(edge.matches[i]);
      }
    }
    return inliers;
  };

  DecomposedEdge best;
  if (edge.config == TwoViewConfig::kHomography) {
    const auto candidates = DecomposeHomographyMatrix(edge.matrix, camera1, camera2);
    bool have_best = false;
    for (const auto& candidate : candidates) {
      std::vector<FeatureMatch> inliers;
      if (candidate.translation.isZero()) {
        inliers = edge.matches;
      } else {
        inliers = inliers_of(candidate.rotation, candidate.translation.normalized());
      }
      if (!have_best || inliers.size() > best.inliers.size()) {
        have_best = true;
        best.rotation = candidate.rotation;
        best.inliers = std::move(inliers);
      }
    }
    best.translation.reset();
  } else {
    const Matrix3d E =
        edge.config == TwoViewConfig::kCalibrated
            ? edge.matrix
            : EssentialFromFundamental(edge.matrix, camera1, camera2);
    bool have_best = false;
    for (const auto& [R, t] : DecomposeEssentialMatrix(E)) {
      std::vector<FeatureMatch> inliers = inliers_of(R, t);
      if (!have_best || inliers.size() > best.inliers.size()) {
        have_best = true;
        best.rotation = R;
        best.translation = t;
        best.inliers = std::move(inliers);
      }
    }
  }
  best.valid = !edge.matches.empty() &&
               2 * best.inliers.size() >= edge.matches.size();
  return best;
}

std::vector<FeatureMatch> FilterEpipoleAndAngle(
    const TwoViewGeometry& edge, const std::vector<Vector2d>& features1,
    const std::vector<Vector2d>& features2, const CameraIntrinsics& camera1,
    const CameraIntrinsics& camera2, double min_triangulation_angle_deg,
    double min_epipole_angle_deg) {
  if (!edge.rotation || !edge.translation) {
    return edge.matches;
  }
  CheckIndices(edge, features1.size(), features2.size());
  const Rotation& R = *edge.rotation;
  const Vector3d t = edge.translation->normalized();
  // Epipoles as viewing directions: camera 2 seen from camera 1 and vice versa.
  const Vector3d epipole1 = -(R.Inverse() * t);
  const Vector3d epipole2 = t;
  const double cos_epipole = std::cos(DegToRad(min_epipole_angle_deg));
  const double cos_triangulation = std::cos(DegToRad(min_triangulation_angle_deg));

  std::vector<FeatureMatch> kept;
  for (const auto& m : edge.matches) {
    const Vector3d ray1 = RayDirection(camera1, features1[m.idx1]);
    const Vector3d ray2 = RayDirection(camera2, features2[m.idx2]);
    if (std::abs(ray1.dot(epipole1)) > cos_epipole ||
        std::abs(ray2.dot(epipole2)) > cos_epipole) {
      continue;
    }
    if ((R * ray1).dot(ray2) > cos_triangulation) {
      continue;
    }
    kept.push_back(m);
  }
  return kept;
}

}  // namespace gsfm
