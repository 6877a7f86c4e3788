#include "gsfm/pipeline.h"

#include <chrono>
#include <set>

#include <glog/logging.h>

#include "gsfm/clustering.h"
#include "gsfm/errors.h"
#include "gsfm/io.h"
#include "gsfm/parallel.h"
#include "gsfm/track_builder.h"
#include "gsfm/two_view.h"

namespace gsfm {

void PipelineConfig::Validate() const {
  if (num_threads < 1) throw InputError("threads must be at least 1");
  if (!(verify_threshold_px > 0.0)) throw InputError("verify threshold must be positive");
  if (min_edge_matches < 1) throw InputError("minimum edge matches must be positive");
  if (!(min_triangulation_angle_deg >= 0.0 && min_triangulation_angle_deg < 90.0)) {
    throw InputError("minimum triangulation angle must lie in [0, 90)");
  }
  if (!(min_epipole_angle_deg >= 0.0 && min_epipole_angle_deg < 90.0)) {
    throw InputError("minimum epipole angle must lie in [0, 90)");
  }
  if (rotation_averaging.l1_iterations < 0 || rotation_averaging.irls_iterations < 0) {
    throw InputError("rotation averaging iteration caps must be non-negative");
  }
  if (!(rotation_averaging.l1_epsilon > 0.0) || !(rotation_averaging.irls_sigma_deg > 0.0)) {
    throw InputError("rotation averaging epsilon and sigma must be positive");
  }
  if (!(rotation_filter_deg > 0.0 && rotation_filter_deg <= 180.0)) {
    throw InputError("rotation filter angle must lie in (0, 180]");
  }
  if (!(huber_positioning > 0.0)) throw InputError("positioning Huber scale must be positive");
  ba.Validate();
}

namespace {

class StageTimer {
 public:
  explicit StageTimer(std::string name)
      : name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}

  StageLog Finish(std::size_t registered, std::size_t tracks, double error = 0.0) const {
    StageLog log;
    log.name = name_;
    log.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    log.registered_images = registered;
    log.tracks = tracks;
    log.mean_reprojection_error = error;
    LOG(INFO) << "stage " << log.name << ": " << log.seconds << " s, "
              << log.registered_images << " images, " << log.tracks << " tracks"
              << (error > 0.0 ? ", mean reprojection error " + std::to_string(error) + " px"
                              : std::string());
    return log;
  }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

std::size_t NumRegistered(const ViewGraph& graph) {
  std::size_t n = 0;
  for (const auto& [id, image] : graph.Images()) n += image.registered ? 1 : 0;
  return n;
}

// Applies fn to every edge in parallel; fn returns false to drop the edge.
template <typename Fn>
void ForEachEdge(ViewGraph* graph, const Fn& fn) {
  std::vector<TwoViewGeometry*> edges;
  for (auto& [pair, edge] : graph->MutableEdges()) edges.push_back(&edge);
  std::vector<char> keep(edges.size(), 1);
  ParallelFor(0, edges.size(), [&](std::size_t i) { keep[i] = fn(edges[i]) ? 1 : 0; });
  std::size_t i = 0;
  for (auto it = graph->MutableEdges().begin(); it != graph->MutableEdges().end(); ++i) {
    it = keep[i] ? std::next(it) : graph->MutableEdges().erase(it);
  }
}

template <typename Fn>
auto RunStage(const std::string& name, const Fn& fn) {
  try {
    return fn();
  } catch (const ReconstructionError& e) {
    throw ReconstructionError(name + ": " + e.what());
  }
}

}  // namespace

FrontEnd RunFrontEnd(ViewGraph graph, const PipelineConfig& config) {
  FrontEnd front;
  graph.Validate();

  {
    StageTimer timer("verify");
    ForEachEdge(&graph, [&](TwoViewGeometry* edge) {
      auto verified = VerifyMatches(*edge, graph.Images().at(edge->image_id1).features,
                                    graph.Images().at(edge->image_id2).features,
                                    graph.CameraOf(edge->image_id1),
                                    graph.CameraOf(edge->image_id2),
                                    config.verify_threshold_px, config.min_edge_matches);
      if (!verified) return false;
      *edge = std::move(*verified);
      return true;
    });
    front.stages.push_back(timer.Finish(NumRegistered(graph), 0));
    LOG(INFO) << graph.Edges().size() << " pairs after verification";
  }
  {
    StageTimer timer("decompose");
    ForEachEdge(&graph, [&](TwoViewGeometry* edge) {
      const DecomposedEdge decomposed =
          DecomposeEdge(*edge, graph.Images().at(edge->image_id1).features,
                        graph.Images().at(edge->image_id2).features,
                        graph.CameraOf(edge->image_id1), graph.CameraOf(edge->image_id2));
      if (!decomposed.valid || decomposed.inliers.size() < config.min_edge_matches) {
        return false;
      }
      edge->rotation = decomposed.rotation;
      edge->translation = decomposed.translation;
      edge->matches = decomposed.inliers;
      return true;
    });
    front.stages.push_back(timer.Finish(NumRegistered(graph), 0));
  }
  {
    StageTimer timer("epipole_angle_filter");
    ForEachEdge(&graph, [&](TwoViewGeometry* edge) {
      edge->matches = FilterEpipoleAndAngle(
          *edge, graph.Images().at(edge->image_id1).features,
          graph.Images().at(edge->image_id2).features, graph.CameraOf(edge->image_id1),
          graph.CameraOf(edge->image_id2), config.min_triangulation_angle_deg,
          config.min_epipole_angle_deg);
      return edge->matches.size() >= config.min_edge_matches;
    });
    front.stages.push_back(timer.Finish(NumRegistered(graph), 0));
  }
  {
    StageTimer timer("tracks");
    front.tracks = BuildTracks(graph);
    front.stages.push_back(timer.Finish(NumRegistered(graph), front.tracks.size()));
  }
  {
    StageTimer timer("rotation_averaging");
    graph.KeepRegistered(graph.LargestConnectedComponent());
    if (NumRegistered(graph) < 2) {
      throw ReconstructionError("rotation_averaging: no reconstructable component");
    }
    const RotationProblem problem = RotationProblem::FromViewGraph(graph);
    const auto initial = InitSpanningTree(problem);
    const RotationAveragingResult result =
        SolveRotationAveraging(problem, initial, config.rotation_averaging);
    if (!result.converged) {
      LOG(WARNING) << "rotation averaging hit its iteration caps";
    }
    front.rotations = result.rotations;
    front.stages.push_back(timer.Finish(front.rotations.size(), front.tracks.size()));
  }
  if (!config.skip_rotation_filter) {
    StageTimer timer("rotation_filter");
    const int removed =
        FilterEdgesByRotation(front.rotations, config.rotation_filter_deg, &graph);
    LOG(INFO) << removed << " pairs removed by the rotation filter";
    for (auto it = front.rotations.begin(); it != front.rotations.end();) {
      it = graph.Images().at(it->first).registered ? std::next(it)
                                                  : front.rotations.erase(it);
    }
    if (front.rotations.size() < 2) {
      throw ReconstructionError("rotation_filter: no reconstructable component");
    }
    // Tracks must not carry matches of removed pairs.
    if (removed > 0) front.tracks = BuildTracks(graph);
    front.stages.push_back(timer.Finish(front.rotations.size(), front.tracks.size()));
  }
  front.graph = std::move(graph);
  return front;
}

Reconstruction MakeReconstruction(const ViewGraph& graph,
                                  const std::map<image_t, Rotation>& rotations,
                                  const std::vector<Track>& tracks,
                                  const PositioningResult& positioning) {
  Reconstruction recon;
  recon.cameras = graph.Cameras();
  recon.images = graph.Images();
  for (auto& [id, image] : recon.images) {
    const auto center = positioning.centers.find(id);
    const auto rotation = rotations.find(id);
    image.registered = center != positioning.centers.end() && rotation != rotations.end();
    if (!image.registered) continue;
    Pose pose;
    pose.rotation = rotation->second;
    pose.center = center->second;
    recon.poses[id] = pose;
  }
  for (const auto& track : tracks) {
    const auto point = positioning.points.find(track.id);
    if (point == positioning.points.end()) continue;
    Track copy = track;
    copy.point = point->second;
    std::erase_if(copy.elements, [&](const TrackElement& element) {
      return !recon.IsRegistered(element.image_id);
    });
    if (copy.elements.size() < 2) continue;
    recon.tracks[copy.id] = std::move(copy);
  }
  return recon;
}

PipelineResult RunPipeline(const ViewGraph& graph, const PipelineConfig& config) {
  config.Validate();
  SetNumThreads(config.num_threads);
  PipelineResult result;

  FrontEnd front = RunFrontEnd(graph, config);
  result.stages = front.stages;

  {
    StageTimer timer("global_positioning");
    PositioningOptions options;
    options.seed = config.seed;
    options.huber_scale = config.huber_positioning;
    const PositioningResult positioning = RunStage(timer.name(), [&] {
      const PositioningProblem problem =
          BuildPositioningProblem(front.rotations, front.tracks, front.graph);
      return SolvePositioning(problem, options);
    });
    LOG(INFO) << "positioning: " << TerminationReasonName(positioning.report.termination)
              << " after " << positioning.report.iterations << " iterations, cost "
              << positioning.report.final_cost;
    result.reconstruction =
        MakeReconstruction(front.graph, front.rotations, front.tracks, positioning);
    result.stages.push_back(timer.Finish(result.reconstruction.RegisteredImages().size(),
                                         result.reconstruction.tracks.size(),
                                         result.reconstruction.MeanReprojectionError()));
  }

  if (!config.skip_ba) {
    StageTimer timer("bundle_adjustment");
    Reconstruction& recon = result.reconstruction;
    RunStage(timer.name(), [&] {
      const std::size_t removed = PrefilterObservations(&recon, config.ba);
      LOG(INFO) << "prefilter removed " << removed << " observations";
      const BaSummary summary = RunGlobalBa(&recon, config.ba);
      LOG(INFO) << "bundle adjustment ran " << summary.rounds << " rounds";
      return 0;
    });
    result.stages.push_back(timer.Finish(recon.RegisteredImages().size(), recon.tracks.size(),
                                         recon.MeanReprojectionError()));
  }

  {
    StageTimer timer("clustering");
    if (config.skip_clustering) {
      result.models.push_back(result.reconstruction);
    } else {
      const CovisibilityGraph covisibility = BuildCovisibility(result.reconstruction);
      for (const auto& cluster : ClusterCameras(covisibility)) {
        if (cluster.size() < 2) continue;
        result.models.push_back(result.reconstruction.Subset(
            std::set<image_t>(cluster.begin(), cluster.end())));
      }
      LOG(INFO) << result.models.size() << " clusters";
    }
    if (result.models.empty()) {
      throw ReconstructionError("clustering: no cluster with at least two images");
    }
    result.stages.push_back(timer.Finish(result.reconstruction.RegisteredImages().size(),
                                         result.reconstruction.tracks.size()));
  }

  if (!config.output.empty()) {
    StageTimer timer("export");
    for (std::size_t k = 0; k < result.models.size(); ++k) {
      const std::filesystem::path dir = config.output / std::to_string(k);
      WriteColmapText(result.models[k], dir);
      if (config.export_ply) WritePly(result.models[k], dir / "points.ply");
      result.exported.push_back(dir);
    }
    result.stages.push_back(timer.Finish(result.reconstruction.RegisteredImages().size(),
                                         result.reconstruction.tracks.size()));
  }
  return result;
}

PipelineResult RunPipeline(const PipelineConfig& config) {
  config.Validate();
  const ViewGraph graph = ReadViewGraph(config.input);
  return RunPipeline(graph, config);
}

}  // namespace gsfm
