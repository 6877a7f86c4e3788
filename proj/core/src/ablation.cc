#include "gsfm/ablation.h"

#include <Eigen/SparseCholesky>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "gsfm/alignment.h"
#include "gsfm/errors.h"
#include "gsfm/metrics.h"

namespace gsfm {

std::string_view AblationVariantName(AblationVariant variant) {
  switch (variant) {
    case AblationVariant::kPoints:
      return "PT";
    case AblationVariant::kCameras:
      return "CAM";
    case AblationVariant::kPointsAndCameras:
      return "PT_CAM";
    case AblationVariant::kLud:
      return "LUD";
  }
  return "unknown";
}

AblationVariant AblationVariantFromName(std::string_view name) {
  for (const AblationVariant variant : kAllAblationVariants) {
    if (AblationVariantName(variant) == name) return variant;
  }
  throw InputError("unknown ablation variant '" + std::string(name) + "'");
}

std::vector<CameraDirectionTerm> CameraDirectionTerms(
    const ViewGraph& graph, const std::map<image_t, Rotation>& rotations, double weight) {
  std::vector<CameraDirectionTerm> terms;
  for (const auto& [pair, edge] : graph.Edges()) {
    if (!edge.valid || !edge.translation) continue;
    const auto r1 = rotations.find(edge.image_id1);
    const auto r2 = rotations.find(edge.image_id2);
    if (r1 == rotations.end() || r2 == rotations.end()) continue;
    CameraDirectionTerm term;
    term.image_id1 = edge.image_id1;
    term.image_id2 = edge.image_id2;
    term.direction = -(r2->second.Inverse() * *edge.translation).normalized();
    term.weight = weight;
    terms.push_back(term);
  }
  return terms;
}

std::map<image_t, Vector3d> SolveLud(const std::vector<CameraDirectionTerm>& terms,
                                     int iterations) {
  std::set<image_t> nodes;
  std::vector<std::pair<image_t, image_t>> links;
  for (const auto& term : terms) {
    nodes.insert(term.image_id1);
    nodes.insert(term.image_id2);
    links.emplace_back(term.image_id1, term.image_id2);
  }
  if (nodes.size() < 2) throw ReconstructionError("LUD needs at least two cameras");
  if (ConnectedComponents(nodes, links).size() != 1) {
    throw ReconstructionError("LUD needs a connected camera graph");
  }

  const image_t anchor = *nodes.begin();
  std::map<image_t, int> index;
  for (const image_t id : nodes) {
    if (id != anchor) index.emplace(id, static_cast<int>(index.size()));
  }
  auto slot = [&](image_t id) { return id == anchor ? -1 : index.at(id); };

  const int dim = 3 * static_cast<int>(index.size());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  auto center = [&](const Eigen::VectorXd& v, image_t id) -> Vector3d {
    const int s = slot(id);
    return s < 0 ? Vector3d::Zero() : Vector3d(v.segment<3>(3 * s));
  };
  // With s_ij eliminated as max(1, u.d) the weighted objective is convex and
  // piecewise quadratic in the centers.
  auto residual = [&](const Eigen::VectorXd& v, const CameraDirectionTerm& term) {
    const Vector3d d = center(v, term.image_id2) - center(v, term.image_id1);
    return Vector3d(d - std::max(1.0, term.direction.dot(d)) * term.direction);
  };
  std::vector<double> weights(terms.size(), 1.0);
  auto objective = [&](const Eigen::VectorXd& v) {
    double f = 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      f += weights[t] * residual(v, terms[t]).squaredNorm();
    }
    return f;
  };

  constexpr double kMinResidual = 1e-10;
  constexpr double kProximal = 1e-12;
  for (int iteration = 0; iteration < iterations; ++iteration) {
    const Eigen::VectorXd start = x;
    for (int step = 0; step < 50; ++step) {
      std::vector<Eigen::Triplet<double>> triplets;
      Eigen::VectorXd rhs = kProximal * x;
      for (int k = 0; k < dim; ++k) triplets.emplace_back(k, k, kProximal);
      for (std::size_t t = 0; t < terms.size(); ++t) {
        const Vector3d& u = terms[t].direction;
        const Vector3d d = center(x, terms[t].image_id2) - center(x, terms[t].image_id1);
        const bool at_bound = u.dot(d) < 1.0;
        const Eigen::Matrix3d M =
            weights[t] * (at_bound ? Eigen::Matrix3d::Identity()
                                   : Eigen::Matrix3d(Eigen::Matrix3d::Identity() - u * u.transpose()));
        const int a = slot(terms[t].image_id1);
        const int b = slot(terms[t].image_id2);
        for (int r = 0; r < 3; ++r) {
          for (int c = 0; c < 3; ++c) {
            if (a >= 0) triplets.emplace_back(3 * a + r, 3 * a + c, M(r, c));
            if (b >= 0) triplets.emplace_back(3 * b + r, 3 * b + c, M(r, c));
            if (a >= 0 && b >= 0) {
              triplets.emplace_back(3 * a + r, 3 * b + c, -M(r, c));
              triplets.emplace_back(3 * b + r, 3 * a + c, -M(r, c));
            }
          }
        }
        if (at_bound) {
          if (a >= 0) rhs.segment<3>(3 * a) -= weights[t] * u;
          if (b >= 0) rhs.segment<3>(3 * b) += weights[t] * u;
        }
      }
      Eigen::SparseMatrix<double> H(dim, dim);
      H.setFromTriplets(triplets.begin(), triplets.end());
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(H);
      if (solver.info() != Eigen::Success) {
        throw ReconstructionError("LUD: singular camera system");
      }
      const Eigen::VectorXd direction = solver.solve(rhs) - x;
      const double f0 = objective(x);
      double alpha = 1.0;
      Eigen::VectorXd trial = x + direction;
      while (objective(trial) > f0 && alpha > 1e-8) {
        alpha *= 0.5;
        trial = x + alpha * direction;
      }
      if (objective(trial) > f0) break;
      const double change = (trial - x).cwiseAbs().maxCoeff();
      x = trial;
      if (change <= 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff())) break;
    }

    for (std::size_t t = 0; t < terms.size(); ++t) {
      weights[t] = terms[t].weight / std::max(residual(x, terms[t]).norm(), kMinResidual);
    }
    if (iteration > 0 &&
        (x - start).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, x.cwiseAbs().maxCoeff())) {
      break;
    }
  }

  std::map<image_t, Vector3d> result;
  for (const image_t id : nodes) result[id] = center(x, id);
  return result;
}

namespace {

PositioningResult PositionPointsWithFixedCameras(const FrontEnd& front,
                                                 const std::map<image_t, Vector3d>& centers,
                                                 const AblationOptions& options) {
  std::map<image_t, Rotation> rotations;
  for (const auto& [id, c] : centers) rotations[id] = front.rotations.at(id);
  const PositioningProblem problem =
      BuildPositioningProblem(rotations, front.tracks, front.graph);
  PositioningOptions positioning;
  positioning.seed = options.seed;
  positioning.huber_scale = options.front_end.huber_positioning;
  positioning.fixed_centers = &centers;
  return SolvePositioning(problem, positioning);
}

}  // namespace

AblationResult RunAblation(const SyntheticScene& scene, const FrontEnd& front,
                           AblationVariant variant, const AblationOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  PositioningOptions positioning;
  positioning.seed = options.seed;
  positioning.huber_scale = options.front_end.huber_positioning;

  std::map<image_t, Vector3d> centers;
  switch (variant) {
    case AblationVariant::kPoints: {
      const PositioningProblem problem =
          BuildPositioningProblem(front.rotations, front.tracks, front.graph);
      centers = SolvePositioning(problem, positioning).centers;
      break;
    }
    case AblationVariant::kCameras: {
      PositioningProblem problem;
      problem.camera_terms = CameraDirectionTerms(front.graph, front.rotations, 1.0);
      std::set<image_t> cameras;
      for (const auto& term : problem.camera_terms) {
        cameras.insert(term.image_id1);
        cameras.insert(term.image_id2);
      }
      problem.cameras.assign(cameras.begin(), cameras.end());
      const auto camera_only = SolvePositioning(problem, positioning).centers;
      centers = PositionPointsWithFixedCameras(front, camera_only, options).centers;
      break;
    }
    case AblationVariant::kPointsAndCameras: {
      PositioningProblem problem =
          BuildPositioningProblem(front.rotations, front.tracks, front.graph);
      const std::set<image_t> positioned(problem.cameras.begin(), problem.cameras.end());
      for (const auto& term : CameraDirectionTerms(front.graph, front.rotations,
                                                   options.camera_term_weight)) {
        if (positioned.count(term.image_id1) && positioned.count(term.image_id2)) {
          problem.camera_terms.push_back(term);
        }
      }
      centers = SolvePositioning(problem, positioning).centers;
      break;
    }
    case AblationVariant::kLud: {
      const auto lud = SolveLud(CameraDirectionTerms(front.graph, front.rotations, 1.0),
                                options.lud_iterations);
      centers = PositionPointsWithFixedCameras(front, lud, options).centers;
      break;
    }
  }

  AblationResult result;
  result.variant = variant;
  std::map<image_t, Vector3d> truth;
  for (const auto& [id, pose] : scene.ground_truth.poses) truth[id] = pose.center;
  const AlignmentResult alignment =
      AlignRobust(centers, truth, options.alignment_threshold * scene.diameter, options.seed);
  for (const auto& [id, c] : truth) {
    const auto it = alignment.errors.find(id);
    result.errors.push_back(it == alignment.errors.end()
                                ? std::numeric_limits<double>::infinity()
                                : it->second);
  }
  result.max_error = Max(result.errors);
  result.median_error = Median(result.errors);
  for (std::size_t k = 0; k < kAucFractions.size(); ++k) {
    result.auc[k] = Auc(result.errors, kAucFractions[k] * scene.diameter);
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<AblationResult> RunAblation(const SyntheticDataset& data,
                                        const std::vector<AblationVariant>& variants,
                                        const AblationOptions& options) {
  const FrontEnd front = RunFrontEnd(data.graph, options.front_end);
  std::vector<AblationResult> results;
  for (const AblationVariant variant : variants) {
    results.push_back(RunAblation(data.scene, front, variant, options));
  }
  return results;
}

void WriteAblationCsvHeader(std::ostream& out) {
  out << "seed,layout,cameras,points,noise_px,outliers,variant,max_error,median_error,"
         "auc_0.01,auc_0.05,auc_0.1,seconds\n";
}

void WriteAblationCsvRow(std::ostream& out, const SyntheticSceneOptions& scene,
                         const AblationResult& result) {
  out << scene.seed << ',' << SceneLayoutName(scene.layout) << ',' << scene.num_cameras
      << ',' << scene.num_points << ',' << scene.noise_px << ',' << scene.outlier_fraction
      << ',' << AblationVariantName(result.variant) << ',' << result.max_error << ','
      << result.median_error << ',' << result.auc[0] << ',' << result.auc[1] << ','
      << result.auc[2] << ',' << result.seconds << '\n';
}

}  // namespace gsfm
