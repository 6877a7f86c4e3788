#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gsfm/reconstruction.h"
#include "gsfm/solver.h"

namespace gsfm {

struct BaConfig {
  int max_rounds = 5;
  double huber_px = 1.0;
  double prefilter_calibrated_deg = 1.0;
  double prefilter_uncalibrated_deg = 2.0;
  double reprojection_threshold_px = 4.0;
  // Stop once the fraction of tracks removed by a round's filter is below this.
  double stop_ratio = 0.001;
  SolverOptions solver = DefaultSolverOptions();

  static SolverOptions DefaultSolverOptions() {
    SolverOptions options;
    options.max_iterations = 100;
    options.function_tolerance = 1e-10;
    options.gradient_tolerance = 1e-12;
    options.parameter_tolerance = 1e-10;
    return options;
  }

  // Throws InputError on a non-positive threshold or a stop ratio outside
  // (0, 1).
  void Validate() const;
};

// Reprojection residual (pixels) over blocks: rotation quaternion (w, x, y,
// z), center 3, intrinsics 2 (fx, fy for PINHOLE, f, k1 for SIMPLE_RADIAL),
// point 3. The principal point is held by the cost.
std::shared_ptr<CostFunction> MakeReprojectionCost(const CameraIntrinsics& camera,
                                                   const Vector2d& observation);

// Free intrinsic parameters of a camera in the layout of MakeReprojectionCost.
Eigen::Vector2d IntrinsicsBlock(const CameraIntrinsics& camera);
void SetIntrinsicsBlock(const Eigen::Vector2d& block, CameraIntrinsics* camera);

// Drops observations whose world ray deviates from X - c by more than the
// calibrated or uncalibrated angle threshold; tracks left with fewer than two
// observations lose their point and are erased. Returns the number of
// observations removed.
std::size_t PrefilterObservations(Reconstruction* recon, const BaConfig& config);

// Drops observations with reprojection error above threshold_px or behind the
// camera, then erases tracks with fewer than two observations. Returns the
// number of erased tracks.
std::size_t FilterByReprojection(Reconstruction* recon, double threshold_px);

struct BaStageReport {
  int round = 0;
  // "A": rotations fixed, "B": everything except calibrated intrinsics free.
  std::string stage;
  SolverReport report;
};

struct BaSummary {
  std::vector<BaStageReport> stages;
  std::vector<std::size_t> removed_tracks;  // per round
  int rounds = 0;
};

// Staged global bundle adjustment. Throws ReconstructionError naming the
// round and stage if the solver fails.
BaSummary RunGlobalBa(Reconstruction* recon, const BaConfig& config);

}  // namespace gsfm
