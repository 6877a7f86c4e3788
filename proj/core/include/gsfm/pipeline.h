#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gsfm/bundle_adjustment.h"
#include "gsfm/global_positioning.h"
#include "gsfm/reconstruction.h"
#include "gsfm/rotation_averaging.h"
#include "gsfm/view_graph.h"

namespace gsfm {

struct PipelineConfig {
  std::filesystem::path input;
  std::filesystem::path output;
  uint64_t seed = 42;
  int num_threads = 1;

  bool skip_rotation_filter = false;
  bool skip_clustering = false;
  bool skip_ba = false;
  bool export_ply = true;

  double verify_threshold_px = 4.0;
  std::size_t min_edge_matches = 15;
  double min_triangulation_angle_deg = 1.0;
  double min_epipole_angle_deg = 1.0;

  RotationAveragingOptions rotation_averaging;
  double rotation_filter_deg = 10.0;

  double huber_positioning = 0.1;
  BaConfig ba;

  // Throws InputError naming the first out-of-range value.
  void Validate() const;
};

struct StageLog {
  std::string name;
  double seconds = 0.0;
  std::size_t registered_images = 0;
  std::size_t tracks = 0;
  double mean_reprojection_error = 0.0;
};

// State after two-view filtering, rotation averaging and track building.
struct FrontEnd {
  ViewGraph graph;
  std::map<image_t, Rotation> rotations;
  std::vector<Track> tracks;
  std::vector<StageLog> stages;
};

// verify -> decompose -> epipole/angle filter -> tracks -> rotation
// averaging -> rotation filter. Throws ReconstructionError with the stage
// name on failure.
FrontEnd RunFrontEnd(ViewGraph graph, const PipelineConfig& config);

// Camera poses from rotations and positioned centers, plus the positioned
// tracks restricted to posed images. Intrinsics are the graph's priors.
Reconstruction MakeReconstruction(const ViewGraph& graph,
                                  const std::map<image_t, Rotation>& rotations,
                                  const std::vector<Track>& tracks,
                                  const PositioningResult& positioning);

struct PipelineResult {
  // Full model after bundle adjustment (or positioning with skip_ba).
  Reconstruction reconstruction;
  // One model per cluster with at least two images, largest first.
  std::vector<Reconstruction> models;
  std::vector<StageLog> stages;
  std::vector<std::filesystem::path> exported;
};

// Runs every stage on an in-memory view graph. Exports to config.output
// (subdirectories 0, 1, ...) unless it is empty.
PipelineResult RunPipeline(const ViewGraph& graph, const PipelineConfig& config);

// Reads config.input first.
PipelineResult RunPipeline(const PipelineConfig& config);

}  // namespace gsfm
