#include "gsfm/bundle_adjustment.h"

#include <cmath>
#include <map>

#include <glog/logging.h>

#include "gsfm/errors.h"
#include "gsfm/parallel.h"

namespace gsfm {

void BaConfig::Validate() const {
  if (max_rounds < 1) throw InputError("BA needs at least one round");
  if (!(huber_px > 0.0)) throw InputError("BA Huber scale must be positive");
  if (!(prefilter_calibrated_deg > 0.0) || !(prefilter_uncalibrated_deg > 0.0)) {
    throw InputError("BA prefilter angles must be positive");
  }
  if (!(reprojection_threshold_px > 0.0)) {
    throw InputError("reprojection threshold must be positive");
  }
  if (!(stop_ratio > 0.0 && stop_ratio < 1.0)) {
    throw InputError("BA stop ratio must lie in (0, 1)");
  }
}

namespace {

using RowMajor23 = Eigen::Matrix<double, 2, 3, Eigen::RowMajor>;
using RowMajor22 = Eigen::Matrix<double, 2, 2, Eigen::RowMajor>;

class ReprojectionCost : public CostFunction {
 public:
  ReprojectionCost(CameraModel model, double cx, double cy, const Vector2d& obs)
      : CostFunction(2, {3, 3, 2, 3}), model_(model), cx_(cx), cy_(cy), obs_(obs) {}

  void Evaluate(const double* const* parameters, double* residuals,
                double** jacobians) const override {
    const Eigen::Quaterniond q(parameters[0][0], parameters[0][1],
                               parameters[0][2], parameters[0][3]);
    const Matrix3d R = q.normalized().toRotationMatrix();
    const Eigen::Map<const Vector3d> center(parameters[1]);
    const double* intr = parameters[2];
    const Eigen::Map<const Vector3d> X(parameters[3]);
    const Vector3d p = R * (X - center);

    Eigen::Map<Vector2d> r(residuals);
    if (p.z() == 0.0) {
      r.setZero();
      if (jacobians != nullptr) {
        for (int k = 0; k < 4; ++k) {
          if (jacobians[k] == nullptr) continue;
          std::fill(jacobians[k], jacobians[k] + 2 * tangent_sizes()[k], 0.0);
        }
      }
      return;
    }
    const double x = p.x() / p.z();
    const double y = p.y() / p.z();

    // d(u, v)/d(x, y) and d(u, v)/d(intrinsics).
    Eigen::Matrix2d duv_dxy;
    Eigen::Matrix2d duv_dintr;
    if (model_ == CameraModel::kPinhole) {
      r = Vector2d(intr[0] * x + cx_, intr[1] * y + cy_) - obs_;
      duv_dxy << intr[0], 0.0, 0.0, intr[1];
      duv_dintr << x, 0.0, 0.0, y;
    } else {
      const double f = intr[0];
      const double k1 = intr[1];
      const double r2 = x * x + y * y;
      const double s = 1.0 + k1 * r2;
      r = Vector2d(f * s * x + cx_, f * s * y + cy_) - obs_;
      duv_dxy << f * (s + 2.0 * k1 * x * x), f * 2.0 * k1 * x * y,
          f * 2.0 * k1 * x * y, f * (s + 2.0 * k1 * y * y);
      duv_dintr << s * x, f * r2 * x, s * y, f * r2 * y;
    }
    if (jacobians == nullptr) return;

    RowMajor23 dxy_dp;
    dxy_dp << 1.0 / p.z(), 0.0, -p.x() / (p.z() * p.z()), 0.0, 1.0 / p.z(),
        -p.y() / (p.z() * p.z());
    const RowMajor23 duv_dp = duv_dxy * dxy_dp;
    if (jacobians[0] != nullptr) {
      Eigen::Map<RowMajor23> J(jacobians[0]);
      J = -duv_dp * CrossMatrix(p);
    }
    if (jacobians[1] != nullptr) {
      Eigen::Map<RowMajor23> J(jacobians[1]);
      J = -duv_dp * R;
    }
    if (jacobians[2] != nullptr) {
      Eigen::Map<RowMajor22> J(jacobians[2]);
      J = duv_dintr;
    }
    if (jacobians[3] != nullptr) {
      Eigen::Map<RowMajor23> J(jacobians[3]);
      J = duv_dp * R;
    }
  }

 private:
  CameraModel model_;
  double cx_;
  double cy_;
  Vector2d obs_;
};

}  // namespace

std::shared_ptr<CostFunction> MakeReprojectionCost(const CameraIntrinsics& camera,
                                                   const Vector2d& observation) {
  return std::make_shared<ReprojectionCost>(camera.model, camera.cx, camera.cy,
                                            observation);
}

Eigen::Vector2d IntrinsicsBlock(const CameraIntrinsics& camera) {
  if (camera.model == CameraModel::kPinhole) return {camera.fx, camera.fy};
  return {camera.fx, camera.k1};
}

void SetIntrinsicsBlock(const Eigen::Vector2d& block, CameraIntrinsics* camera) {
  if (camera->model == CameraModel::kPinhole) {
    camera->fx = block[0];
    camera->fy = block[1];
  } else {
    camera->fx = camera->fy = block[0];
    camera->k1 = block[1];
  }
}

namespace {

// Erases tracks with fewer than two observations or no point and returns
// how many were erased.
std::size_t EraseShortTracks(Reconstruction* recon) {
  std::size_t erased = 0;
  for (auto it = recon->tracks.begin(); it != recon->tracks.end();) {
    if (it->second.elements.size() < 2 || !it->second.point) {
      it = recon->tracks.erase(it);
      ++erased;
    } else {
      ++it;
    }
  }
  return erased;
}

// Runs keep(track, element) over all tracks in parallel and removes the
// rejected elements. Returns the number of removed elements.
template <typename Keep>
std::size_t FilterElements(Reconstruction* recon, const Keep& keep) {
  std::vector<Track*> tracks;
  for (auto& [id, track] : recon->tracks) {
    if (track.point) tracks.push_back(&track);
  }
  std::vector<std::size_t> removed(tracks.size(), 0);
  ParallelFor(0, tracks.size(), [&](std::size_t i) {
    Track& track = *tracks[i];
    const std::size_t before = track.elements.size();
    std::erase_if(track.elements, [&](const TrackElement& element) {
      return !keep(track, element);
    });
    removed[i] = before - track.elements.size();
  });
  std::size_t total = 0;
  for (const std::size_t r : removed) total += r;
  return total;
}

}  // namespace

std::size_t PrefilterObservations(Reconstruction* recon, const BaConfig& config) {
  const double cos_calibrated = std::cos(DegToRad(config.prefilter_calibrated_deg));
  const double cos_uncalibrated =
      std::cos(DegToRad(config.prefilter_uncalibrated_deg));
  const std::size_t removed =
      FilterElements(recon, [&](const Track& track, const TrackElement& element) {
        if (!recon->IsRegistered(element.image_id)) return false;
        const CameraIntrinsics& camera = recon->CameraOf(element.image_id);
        const Pose& pose = recon->poses.at(element.image_id);
        const Vector3d ray = pose.rotation.Inverse() * RayDirection(camera, element.uv);
        const Vector3d diff = *track.point - pose.center;
        const double norm = diff.norm();
        if (norm == 0.0) return false;
        const double cos_angle = ray.dot(diff) / norm;
        return cos_angle >= (camera.calibrated ? cos_calibrated : cos_uncalibrated);
      });
  EraseShortTracks(recon);
  return removed;
}

std::size_t FilterByReprojection(Reconstruction* recon, double threshold_px) {
  FilterElements(recon, [&](const Track& track, const TrackElement& element) {
    if (!recon->IsRegistered(element.image_id)) return false;
    return recon->ReprojectionError(element, *track.point) <= threshold_px;
  });
  return EraseShortTracks(recon);
}

namespace {

struct BaVariables {
  std::map<image_t, std::array<double, 4>> rotations;
  std::map<image_t, Vector3d> centers;
  std::map<camera_t, Eigen::Vector2d> intrinsics;
  std::map<track_t, Vector3d> points;
};

}  // namespace

BaSummary RunGlobalBa(Reconstruction* recon, const BaConfig& config) {
  config.Validate();
  BaSummary summary;
  const LossFunction loss = LossFunction::Huber(config.huber_px);

  for (int round = 0; round < config.max_rounds; ++round) {
    for (const bool rotations_free : {false, true}) {
      BaVariables vars;
      Problem problem;
      for (const image_t id : recon->RegisteredImages()) {
        const Rotation& r = recon->poses.at(id).rotation;
        vars.rotations[id] = {r.w(), r.x(), r.y(), r.z()};
        vars.centers[id] = recon->poses.at(id).center;
        const camera_t camera_id = recon->images.at(id).camera_id;
        if (!vars.intrinsics.count(camera_id)) {
          vars.intrinsics[camera_id] = IntrinsicsBlock(recon->cameras.at(camera_id));
        }
      }
      for (const auto& [id, track] : recon->tracks) {
        if (track.point) vars.points[id] = *track.point;
      }
      for (const auto& [id, track] : recon->tracks) {
        if (!track.point) continue;
        double* point = vars.points.at(id).data();
        for (const auto& element : track.elements) {
          if (!vars.rotations.count(element.image_id)) continue;
          const camera_t camera_id = recon->images.at(element.image_id).camera_id;
          double* rotation = vars.rotations.at(element.image_id).data();
          double* center = vars.centers.at(element.image_id).data();
          double* intr = vars.intrinsics.at(camera_id).data();
          problem.AddParameterBlock(rotation, 4, Manifold::kRotation);
          problem.AddParameterBlock(center, 3);
          problem.AddParameterBlock(intr, 2);
          problem.AddParameterBlock(point, 3);
          problem.SetEliminate(point);
          problem.AddResidualBlock(
              MakeReprojectionCost(recon->cameras.at(camera_id), element.uv), loss,
              {rotation, center, intr, point});
        }
      }
      if (problem.NumResidualBlocks() == 0) {
        throw ReconstructionError("bundle adjustment: no observations left");
      }
      for (auto& [id, q] : vars.rotations) {
        if (!rotations_free && problem.HasParameterBlock(q.data())) {
          problem.SetParameterBlockConstant(q.data());
        }
      }
      for (auto& [id, intr] : vars.intrinsics) {
        if (recon->cameras.at(id).calibrated && problem.HasParameterBlock(intr.data())) {
          problem.SetParameterBlockConstant(intr.data());
        }
      }

      BaStageReport stage;
      stage.round = round + 1;
      stage.stage = rotations_free ? "B" : "A";
      stage.report = Solve(config.solver, &problem);
      if (!stage.report.IsUsable()) {
        throw ReconstructionError("bundle adjustment failed in round " +
                                  std::to_string(stage.round) + " stage " +
                                  stage.stage + ": " + stage.report.message);
      }
      VLOG(1) << "BA round " << stage.round << " stage " << stage.stage << ": "
              << stage.report.initial_cost << " -> " << stage.report.final_cost
              << " in " << stage.report.iterations << " iterations";

      if (rotations_free) {
        for (const auto& [id, q] : vars.rotations) {
          recon->poses.at(id).rotation = Rotation(q[0], q[1], q[2], q[3]);
        }
      }
      for (const auto& [id, c] : vars.centers) recon->poses.at(id).center = c;
      for (const auto& [id, intr] : vars.intrinsics) {
        if (!recon->cameras.at(id).calibrated) {
          SetIntrinsicsBlock(intr, &recon->cameras.at(id));
        }
      }
      for (const auto& [id, X] : vars.points) recon->tracks.at(id).point = X;
      summary.stages.push_back(std::move(stage));
    }

    const std::size_t tracks_before = recon->tracks.size();
    const std::size_t removed =
        FilterByReprojection(recon, config.reprojection_threshold_px);
    summary.removed_tracks.push_back(removed);
    summary.rounds = round + 1;
    const double ratio =
        tracks_before == 0 ? 0.0
                           : static_cast<double>(removed) / static_cast<double>(tracks_before);
    if (ratio < config.stop_ratio) break;
  }
  return summary;
}

}  // namespace gsfm
