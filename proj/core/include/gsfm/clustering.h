#pragma once

#include <map>
#include <optional>
#include <vector>

#include "gsfm/reconstruction.h"

namespace gsfm {

struct CovisibilityGraph {
  std::vector<image_t> nodes;  // sorted
  // Number of triangulated tracks seen by both images; pairs below
  // kMinCovisibility are absent.
  std::map<ImagePair, int> edges;
  // Lower median of the edge counts; unset without edges.
  std::optional<double> tau;
};

inline constexpr int kMinCovisibility = 5;

CovisibilityGraph BuildCovisibility(const Reconstruction& recon);

// Connected components over edges with count >= tau, then repeated merging
// of any two clusters joined by at least two edges with count > 0.75 tau,
// restarting after each merge with candidate pairs in ascending order of
// their smallest image ids. Sorted by descending size, then smallest id.
std::vector<std::vector<image_t>> ClusterCameras(const CovisibilityGraph& graph);

}  // namespace gsfm
