#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "gsfm/rotation.h"
#include "gsfm/solver.h"
#include "gsfm/view_graph.h"

namespace gsfm {

// One camera ray: v_ik, the viewing ray of track k in image i rotated into
// the world frame.
struct PositioningTerm {
  image_t image_id = kInvalidImageId;
  track_t track_id = 0;
  Vector3d ray = Vector3d::UnitZ();
  double weight = 1.0;
};

// Relative translation direction between two cameras: the unit vector from
// the center of image_id1 toward the center of image_id2, in the world frame.
// Only the ablation baselines use these.
struct CameraDirectionTerm {
  image_t image_id1 = kInvalidImageId;
  image_t image_id2 = kInvalidImageId;
  Vector3d direction = Vector3d::UnitZ();
  double weight = 1.0;
};

struct PositioningProblem {
  std::vector<PositioningTerm> terms;
  std::vector<CameraDirectionTerm> camera_terms;
  std::vector<image_t> cameras;  // sorted
  std::vector<track_t> tracks;   // sorted
};

// One term per observation of a registered image with a rotation. Terms of
// uncalibrated cameras get weight 0.5. Cameras and tracks with fewer than two
// terms are dropped (repeatedly, until stable). Throws ReconstructionError if
// no term remains.
PositioningProblem BuildPositioningProblem(
    const std::map<image_t, Rotation>& rotations,
    const std::vector<Track>& tracks, const ViewGraph& graph);

// weight * (v - d (target - origin)). For camera rays origin = c_i and
// target = X_k.
Vector3d RayDirectionResidual(const Vector3d& v, double weight,
                              const Vector3d& origin, const Vector3d& target,
                              double scale);

// min over d >= 0 of |v - d u| for unit v: sin(theta) below 90 degrees and
// 1 beyond, theta being the angle between v and u.
double MinResidualOverScale(const Vector3d& v, const Vector3d& u);

// Residual block over (origin: 3, target: 3, scale: 1).
std::shared_ptr<CostFunction> MakeRayDirectionCost(const Vector3d& v,
                                                   double weight);

struct PositioningOptions {
  uint64_t seed = 42;
  double huber_scale = 0.1;
  double min_scale = 1e-12;
  // When set, camera centers start from these values and stay fixed.
  const std::map<image_t, Vector3d>* fixed_centers = nullptr;
  SolverOptions solver = DefaultSolverOptions();

  static SolverOptions DefaultSolverOptions() {
    SolverOptions options;
    options.max_iterations = 500;
    options.function_tolerance = 1e-12;
    options.gradient_tolerance = 1e-14;
    options.parameter_tolerance = 1e-12;
    return options;
  }
};

struct PositioningResult {
  std::map<image_t, Vector3d> centers;
  std::map<track_t, Vector3d> points;
  std::vector<double> scales;  // d_ik, one per term
  std::vector<double> camera_scales;  // one per camera term
  SolverReport report;
  // Fewer equations than unknowns modulo the 4-dof similarity gauge.
  bool under_constrained = false;
};

// Random initialization of all positions in [-1, 1]^3 from the seed, d = 1,
// then robust Levenberg-Marquardt. Throws ReconstructionError if the solver
// meets a non-finite cost, naming the offending term.
PositioningResult SolvePositioning(const PositioningProblem& problem,
                                   const PositioningOptions& options = {});

}  // namespace gsfm
