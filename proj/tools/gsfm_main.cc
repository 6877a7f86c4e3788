#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <glog/logging.h>

#include "gsfm/ablation.h"
#include "gsfm/errors.h"
#include "gsfm/io.h"
#include "gsfm/parallel.h"
#include "gsfm/pipeline.h"
#include "gsfm/synthetic.h"

namespace {

constexpr int kExitInput = 1;
constexpr int kExitReconstruction = 2;

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream stream(text);
  for (std::string item; std::getline(stream, item, ',');) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::pair<uint64_t, uint64_t> ParseSeedRange(const std::string& text) {
  static const std::regex range(R"((\d+)(?:\.\.(\d+))?)");
  std::smatch match;
  if (!std::regex_match(text, match, range)) {
    throw gsfm::InputError("seed range must look like A..B, got '" + text + "'");
  }
  const uint64_t first = std::stoull(match[1].str());
  const uint64_t last = match[2].matched ? std::stoull(match[2].str()) : first;
  if (last < first) throw gsfm::InputError("empty seed range '" + text + "'");
  return {first, last};
}

}  // namespace

int main(int argc, char** argv) {
  google::InitGoogleLogging(argv[0]);
  FLAGS_logtostderr = true;

  CLI::App app{"Global structure-from-motion from a pairwise view graph"};
  app.require_subcommand(1);

  gsfm::PipelineConfig config;
  bool no_ply = false;
  auto* pipeline = app.add_subcommand("pipeline", "Reconstruct a view graph file");
  pipeline->add_option("--input", config.input, "View graph file")->required();
  pipeline->add_option("--output", config.output, "Output directory")->required();
  pipeline->add_option("--seed", config.seed, "Random seed");
  pipeline->add_option("--threads", config.num_threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  pipeline->add_flag("--skip-clustering", config.skip_clustering);
  pipeline->add_flag("--skip-ba", config.skip_ba);
  pipeline->add_flag("--skip-rotation-filter", config.skip_rotation_filter);
  pipeline->add_flag("--no-ply", no_ply, "Do not write points.ply");
  pipeline->add_option("--verify-threshold-px", config.verify_threshold_px);
  pipeline->add_option("--min-edge-matches", config.min_edge_matches);
  pipeline->add_option("--min-tri-angle-deg", config.min_triangulation_angle_deg);
  pipeline->add_option("--min-epipole-angle-deg", config.min_epipole_angle_deg);
  pipeline->add_option("--rot-filter-deg", config.rotation_filter_deg);
  pipeline->add_option("--ra-l1-iters", config.rotation_averaging.l1_iterations);
  pipeline->add_option("--ra-irls-iters", config.rotation_averaging.irls_iterations);
  pipeline->add_option("--ra-sigma-deg", config.rotation_averaging.irls_sigma_deg);
  pipeline->add_option("--huber-positioning", config.huber_positioning);
  pipeline->add_option("--huber-ba-px", config.ba.huber_px);
  pipeline->add_option("--max-ba-rounds", config.ba.max_rounds);
  pipeline->add_option("--ba-reproj-px", config.ba.reprojection_threshold_px);
  pipeline->add_option("--ba-stop-ratio", config.ba.stop_ratio);
  pipeline->add_option("--prefilter-deg", config.ba.prefilter_calibrated_deg);
  pipeline->add_option("--prefilter-uncalibrated-deg", config.ba.prefilter_uncalibrated_deg);

  gsfm::SyntheticSceneOptions scene;
  std::string layout = "general";
  std::string synth_output;
  std::string ground_truth_dir;
  auto* synth = app.add_subcommand("synth", "Write a synthetic view graph");
  synth->add_option("--layout", layout)->check(CLI::IsMember({"general", "colinear", "ring"}));
  synth->add_option("--cams", scene.num_cameras);
  synth->add_option("--points", scene.num_points);
  synth->add_option("--noise-px", scene.noise_px);
  synth->add_option("--outliers", scene.outlier_fraction);
  synth->add_option("--miscalibrated", scene.miscalibration_fraction);
  synth->add_option("--seed", scene.seed);
  synth->add_option("--output", synth_output, "View graph file")->required();
  synth->add_option("--ground-truth", ground_truth_dir,
                    "Also write the ground-truth model to this directory");

  bool ablation = false;
  std::string layouts = "general,colinear";
  std::string seeds = "0..9";
  std::string variants = "PT,PT_CAM,CAM,LUD";
  std::string csv_path;
  int threads = 1;
  gsfm::SyntheticSceneOptions bench_scene;
  auto* bench = app.add_subcommand("bench", "Run synthetic benchmarks");
  bench->add_flag("--ablation", ablation, "Positioning ablation")->required();
  bench->add_option("--layouts", layouts, "Comma separated layouts");
  bench->add_option("--seeds", seeds, "Seed range A..B");
  bench->add_option("--variants", variants, "Comma separated variants");
  bench->add_option("--cams", bench_scene.num_cameras);
  bench->add_option("--points", bench_scene.num_points);
  bench->add_option("--visibility-deg", bench_scene.visibility_angle_deg);
  bench->add_option("--noise-px", bench_scene.noise_px);
  bench->add_option("--outliers", bench_scene.outlier_fraction);
  bench->add_option("--csv", csv_path, "Output CSV file")->required();
  bench->add_option("--threads", threads)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (pipeline->parsed()) {
      config.export_ply = !no_ply;
      const gsfm::PipelineResult result = gsfm::RunPipeline(config);
      for (const auto& stage : result.stages) {
        std::cout << stage.name << ' ' << stage.seconds << " s, " << stage.registered_images
                  << " images, " << stage.tracks << " tracks\n";
      }
      std::cout << result.exported.size() << " model(s) written to " << config.output
                << '\n';
    } else if (synth->parsed()) {
      scene.layout = gsfm::SceneLayoutFromName(layout);
      const gsfm::SyntheticDataset data = gsfm::GenerateScene(scene);
      gsfm::WriteViewGraph(data.graph, synth_output);
      if (!ground_truth_dir.empty()) {
        gsfm::WriteColmapText(data.scene.ground_truth, ground_truth_dir);
      }
      std::cout << data.graph.Images().size() << " images, " << data.graph.Edges().size()
                << " pairs, " << data.scene.num_matches << " matches ("
                << data.scene.num_corrupted_matches << " corrupted)\n";
    } else if (bench->parsed()) {
      gsfm::SetNumThreads(threads);
      std::vector<gsfm::AblationVariant> selected;
      for (const auto& name : SplitList(variants)) {
        selected.push_back(gsfm::AblationVariantFromName(name));
      }
      const auto [first, last] = ParseSeedRange(seeds);
      std::ofstream csv(csv_path);
      if (!csv) throw gsfm::InputError("cannot write " + csv_path);
      gsfm::WriteAblationCsvHeader(csv);
      for (const auto& layout_name : SplitList(layouts)) {
        for (uint64_t seed = first; seed <= last; ++seed) {
          gsfm::SyntheticSceneOptions options = bench_scene;
          options.layout = gsfm::SceneLayoutFromName(layout_name);
          options.seed = seed;
          gsfm::AblationOptions ablation_options;
          ablation_options.seed = seed;
          const auto data = gsfm::GenerateScene(options);
          for (const auto& result : gsfm::RunAblation(data, selected, ablation_options)) {
            gsfm::WriteAblationCsvRow(csv, options, result);
            std::cout << layout_name << " seed " << seed << ' '
                      << gsfm::AblationVariantName(result.variant) << " median "
                      << result.median_error << " max " << result.max_error << '\n';
          }
        }
      }
    }
  } catch (const gsfm::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const gsfm::ReconstructionError& e) {
    std::cerr << "reconstruction failed: " << e.what() << '\n';
    return kExitReconstruction;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitReconstruction;
  }
  return 0;
}
