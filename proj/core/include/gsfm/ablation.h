#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "gsfm/pipeline.h"
#include "gsfm/synthetic.h"

namespace gsfm {

enum class AblationVariant {
  // Camera rays to points only (the production path).
  kPoints,
  // Relative translation directions only, then points with fixed cameras.
  kCameras,
  // Both term families.
  kPointsAndCameras,
  // Least unsquared deviations translation averaging, then points with fixed
  // cameras.
  kLud,
};

std::string_view AblationVariantName(AblationVariant variant);
AblationVariant AblationVariantFromName(std::string_view name);
inline constexpr std::array<AblationVariant, 4> kAllAblationVariants = {
    AblationVariant::kPoints, AblationVariant::kCameras,
    AblationVariant::kPointsAndCameras, AblationVariant::kLud};

struct AblationOptions {
  uint64_t seed = 42;
  // Weight of a relative translation term relative to a camera ray term.
  double camera_term_weight = 1.0;
  // Inlier threshold of the robust alignment, as a fraction of the diameter.
  double alignment_threshold = 0.1;
  int lud_iterations = 200;
  PipelineConfig front_end;
};

inline constexpr std::array<double, 3> kAucFractions = {0.01, 0.05, 0.1};

struct AblationResult {
  AblationVariant variant = AblationVariant::kPoints;
  // Aligned camera position errors; unregistered images count as infinite.
  std::vector<double> errors;
  double max_error = 0.0;
  double median_error = 0.0;
  // AUC at kAucFractions times the scene diameter.
  std::array<double, 3> auc = {0.0, 0.0, 0.0};
  double seconds = 0.0;
};

// Camera centers by image from relative translation directions, minimizing
// the sum of |c_j - c_i - s_ij u_ij| with s_ij >= 1 by reweighted least
// squares. The first image of the largest component is fixed at the origin.
// Throws ReconstructionError if the edges do not connect the cameras.
std::map<image_t, Vector3d> SolveLud(const std::vector<CameraDirectionTerm>& terms,
                                     int iterations);

// Relative translation terms of decomposed edges between images with a
// rotation: u_ij = -R_j^T t_ij.
std::vector<CameraDirectionTerm> CameraDirectionTerms(
    const ViewGraph& graph, const std::map<image_t, Rotation>& rotations, double weight);

AblationResult RunAblation(const SyntheticScene& scene, const FrontEnd& front,
                           AblationVariant variant, const AblationOptions& options);

// Runs the front end once and then the given variants.
std::vector<AblationResult> RunAblation(const SyntheticDataset& data,
                                        const std::vector<AblationVariant>& variants,
                                        const AblationOptions& options);

void WriteAblationCsvHeader(std::ostream& out);
void WriteAblationCsvRow(std::ostream& out, const SyntheticSceneOptions& scene,
                         const AblationResult& result);

}  // namespace gsfm
