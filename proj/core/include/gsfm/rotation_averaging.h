#pragma once

#include <map>
#include <vector>

#include "gsfm/rotation.h"
#include "gsfm/view_graph.h"

namespace gsfm {

// R_j ~ rotation * R_i, weighted by the number of supporting matches.
struct RelativeRotation {
  image_t i = kInvalidImageId;
  image_t j = kInvalidImageId;
  Rotation rotation;
  double weight = 1.0;
};

struct RotationProblem {
  std::vector<image_t> nodes;
  std::vector<RelativeRotation> edges;
  // Its rotation is pinned to identity.
  image_t anchor = kInvalidImageId;

  // Largest connected component of valid, decomposed edges between
  // registered images. The anchor is the highest-degree node (ties: smallest
  // id). Edge weights are match counts.
  static RotationProblem FromViewGraph(const ViewGraph& graph);

  // Throws InputError if the problem is empty, has non-positive weights, an
  // anchor outside the node set, or nodes unreachable from the anchor.
  void Validate() const;
};

// Maximum-weight spanning tree (Kruskal, ties by edge order) propagated from
// the anchor: R_anchor = I, R_j = R_ij R_i along tree edges.
std::map<image_t, Rotation> InitSpanningTree(const RotationProblem& problem);

struct RotationAveragingOptions {
  int l1_iterations = 100;
  int irls_iterations = 100;
  // L1 reweighting uses 1 / max(|r|, l1_epsilon).
  double l1_epsilon = 1e-5;
  // Geman-McClure scale of the second phase.
  double irls_sigma_deg = 5.0;
  // Max tangent update norm (radians) that ends a phase.
  double convergence_tolerance = 1e-5;
};

struct RotationAveragingResult {
  std::map<image_t, Rotation> rotations;
  bool converged = false;
  int l1_iterations = 0;
  int irls_iterations = 0;
  // Robust objective of phase two after every accepted iteration, starting
  // with the value at the end of phase one.
  std::vector<double> irls_objective;
};

// Robust rotation averaging in the tangent space. Phase one minimizes the
// sum of geodesic residual norms (L1) by reweighted least squares, phase two
// refines with Geman-McClure weights. Each linear system has rows weighted by
// sqrt(match count). Non-convergence returns the last iterate with
// converged = false.
RotationAveragingResult SolveRotationAveraging(
    const RotationProblem& problem, const std::map<image_t, Rotation>& initial,
    const RotationAveragingOptions& options = {});

// Geodesic residual of one edge, log(R_j^-1 R_ij R_i).
Vector3d RotationResidual(const RelativeRotation& edge, const Rotation& Ri,
                          const Rotation& Rj);

// Removes edges whose relative rotation deviates from R_j R_i^-1 by more than
// max_angle_deg. Afterwards only the largest connected component of images
// with a rotation stays registered. Returns the number of removed edges.
int FilterEdgesByRotation(const std::map<image_t, Rotation>& rotations,
                          double max_angle_deg, ViewGraph* graph);

}  // namespace gsfm
