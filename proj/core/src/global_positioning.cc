#include "gsfm/global_positioning.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include <glog/logging.h>

#include "gsfm/errors.h"

namespace gsfm {
namespace {

class RayDirectionCost : public CostFunction {
 public:
  RayDirectionCost(const Vector3d& v, double weight)
      : CostFunction(3, {3, 3, 1}), v_(v), weight_(weight) {}

  void Evaluate(const double* const* parameters, double* residuals,
                double** jacobians) const override {
    const Eigen::Map<const Vector3d> origin(parameters[0]);
    const Eigen::Map<const Vector3d> target(parameters[1]);
    const double d = parameters[2][0];
    const Vector3d diff = target - origin;
    Eigen::Map<Vector3d> r(residuals);
    r = weight_ * (v_ - d * diff);
    if (jacobians == nullptr) return;
    using RowMajor33 = Eigen::Matrix<double, 3, 3, Eigen::RowMajor>;
    if (jacobians[0] != nullptr) {
      Eigen::Map<RowMajor33> J(jacobians[0]);
      J = weight_ * d * Matrix3d::Identity();
    }
    if (jacobians[1] != nullptr) {
      Eigen::Map<RowMajor33> J(jacobians[1]);
      J = -weight_ * d * Matrix3d::Identity();
    }
    if (jacobians[2] != nullptr) {
      Eigen::Map<Vector3d> J(jacobians[2]);
      J = -weight_ * diff;
    }
  }

 private:
  Vector3d v_;
  double weight_;
};

}  // namespace

PositioningProblem BuildPositioningProblem(
    const std::map<image_t, Rotation>& rotations,
    const std::vector<Track>& tracks, const ViewGraph& graph) {
  std::vector<PositioningTerm> terms;
  for (const auto& track : tracks) {
    for (const auto& element : track.elements) {
      const auto image = graph.Images().find(element.image_id);
      const auto rotation = rotations.find(element.image_id);
      if (image == graph.Images().end() || !image->second.registered ||
          rotation == rotations.end()) {
        continue;
      }
      const CameraIntrinsics& camera = graph.CameraOf(element.image_id);
      PositioningTerm term;
      term.image_id = element.image_id;
      term.track_id = track.id;
      term.ray = rotation->second.Inverse() * RayDirection(camera, element.uv);
      term.weight = camera.calibrated ? 1.0 : 0.5;
      terms.push_back(term);
    }
  }

  // Drop under-constrained cameras and tracks until every remaining one has
  // at least two terms.
  bool changed = true;
  while (changed) {
    std::map<image_t, int> per_camera;
    std::map<track_t, int> per_track;
    for (const auto& term : terms) {
      ++per_camera[term.image_id];
      ++per_track[term.track_id];
    }
    const std::size_t before = terms.size();
    std::erase_if(terms, [&](const PositioningTerm& term) {
      return per_camera[term.image_id] < 2 || per_track[term.track_id] < 2;
    });
    changed = terms.size() != before;
  }
  if (terms.empty()) {
    throw ReconstructionError("global positioning: no camera ray constraints");
  }

  PositioningProblem problem;
  std::set<image_t> cameras;
  std::set<track_t> track_ids;
  for (const auto& term : terms) {
    cameras.insert(term.image_id);
    track_ids.insert(term.track_id);
  }
  problem.terms = std::move(terms);
  problem.cameras.assign(cameras.begin(), cameras.end());
  problem.tracks.assign(track_ids.begin(), track_ids.end());
  return problem;
}

Vector3d RayDirectionResidual(const Vector3d& v, double weight,
                              const Vector3d& origin, const Vector3d& target,
                              double scale) {
  return weight * (v - scale * (target - origin));
}

double MinResidualOverScale(const Vector3d& v, const Vector3d& u) {
  const double u_norm = u.norm();
  if (u_norm == 0.0) return v.norm();
  const double cos_theta = v.dot(u) / (v.norm() * u_norm);
  if (cos_theta <= 0.0) return 1.0;
  return std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
}

std::shared_ptr<CostFunction> MakeRayDirectionCost(const Vector3d& v,
                                                   double weight) {
  return std::make_shared<RayDirectionCost>(v, weight);
}

PositioningResult SolvePositioning(const PositioningProblem& problem,
                                   const PositioningOptions& options) {
  if (problem.terms.empty() && problem.camera_terms.empty()) {
    throw ReconstructionError("global positioning: empty problem");
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  auto random_point = [&] {
    const double x = uniform(rng);
    const double y = uniform(rng);
    const double z = uniform(rng);
    return Vector3d(x, y, z);
  };

  PositioningResult result;
  for (const image_t id : problem.cameras) {
    result.centers[id] = random_point();
    if (options.fixed_centers != nullptr) {
      result.centers[id] = options.fixed_centers->at(id);
    }
  }
  for (const track_t id : problem.tracks) result.points[id] = random_point();
  result.scales.assign(problem.terms.size(), 1.0);
  result.camera_scales.assign(problem.camera_terms.size(), 1.0);

  Problem lm;
  const LossFunction loss = LossFunction::Huber(options.huber_scale);
  for (std::size_t t = 0; t < problem.terms.size(); ++t) {
    const auto& term = problem.terms[t];
    double* center = result.centers.at(term.image_id).data();
    double* point = result.points.at(term.track_id).data();
    double* scale = &result.scales[t];
    lm.AddParameterBlock(center, 3);
    lm.AddParameterBlock(point, 3);
    lm.AddParameterBlock(scale, 1);
    lm.SetLowerBound(scale, 0, options.min_scale);
    lm.AddResidualBlock(MakeRayDirectionCost(term.ray, term.weight), loss,
                        {center, point, scale});
  }
  for (std::size_t t = 0; t < problem.camera_terms.size(); ++t) {
    const auto& term = problem.camera_terms[t];
    double* origin = result.centers.at(term.image_id1).data();
    double* target = result.centers.at(term.image_id2).data();
    double* scale = &result.camera_scales[t];
    lm.AddParameterBlock(origin, 3);
    lm.AddParameterBlock(target, 3);
    lm.AddParameterBlock(scale, 1);
    lm.SetLowerBound(scale, 0, options.min_scale);
    lm.AddResidualBlock(MakeRayDirectionCost(term.direction, term.weight), loss,
                        {origin, target, scale});
  }
  if (options.fixed_centers != nullptr) {
    for (auto& [id, center] : result.centers) {
      lm.SetParameterBlockConstant(center.data());
    }
  }

  result.report = Solve(options.solver, &lm);
  if (result.report.failed_residual_block &&
      static_cast<std::size_t>(*result.report.failed_residual_block) >=
          problem.terms.size()) {
    const auto& term = problem.camera_terms[static_cast<std::size_t>(
        *result.report.failed_residual_block) - problem.terms.size()];
    throw ReconstructionError(
        "global positioning: non-finite cost in camera term (images " +
        std::to_string(term.image_id1) + ", " + std::to_string(term.image_id2) + ")");
  }
  if (result.report.failed_residual_block) {
    const auto& term = problem.terms[*result.report.failed_residual_block];
    throw ReconstructionError(
        "global positioning: non-finite cost in term (image " +
        std::to_string(term.image_id) + ", track " +
        std::to_string(term.track_id) + ")");
  }
  if (result.report.termination == TerminationReason::kFailure) {
    throw ReconstructionError("global positioning failed: " +
                              result.report.message);
  }

  const double equations =
      3.0 * static_cast<double>(problem.terms.size() + problem.camera_terms.size());
  const double free_cameras =
      options.fixed_centers != nullptr ? 0.0 : static_cast<double>(problem.cameras.size());
  const double unknowns = 3.0 * free_cameras +
                          3.0 * static_cast<double>(problem.tracks.size()) +
                          static_cast<double>(problem.terms.size() +
                                              problem.camera_terms.size());
  const double gauge = options.fixed_centers != nullptr ? 0.0 : 4.0;
  result.under_constrained =
      (options.fixed_centers == nullptr && problem.cameras.size() < 2) ||
      equations < unknowns - gauge;
  if (result.under_constrained) {
    LOG(WARNING) << "global positioning is under-constrained: "
                 << problem.cameras.size() << " cameras, "
                 << problem.tracks.size() << " tracks";
  }
  return result;
}

}  // namespace gsfm
