#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "gsfm/clustering.h"
#include "gsfm/synthetic.h"
#include "test_helpers.h"

namespace gsfm {
namespace {

using testing::PlantCovisibility;
using Pairs = std::vector<std::tuple<image_t, image_t, int>>;

Pairs TwoGroups() {
  Pairs pairs;
  for (const image_t base : {1u, 5u}) {
    pairs.emplace_back(base, base + 1, 11);
    pairs.emplace_back(base + 1, base + 2, 11);
    pairs.emplace_back(base + 2, base + 3, 11);
    pairs.emplace_back(base, base + 2, 10);
    pairs.emplace_back(base + 1, base + 3, 10);
    pairs.emplace_back(base, base + 3, 10);
  }
  return pairs;
}

TEST(BuildCovisibility, SharedTracksCounted) {
  Reconstruction recon;
  recon.cameras[0] = CameraIntrinsics::Pinhole(100, 100, 100, 100, 50, 50);
  for (const image_t id : {1u, 2u, 3u}) {
    Image image;
    image.id = id;
    recon.images[id] = image;
    recon.poses[id] = Pose{};
  }
  for (track_t k = 0; k < 10; ++k) {
    Track track;
    track.id = k;
    track.point = Vector3d(0, 0, 1);
    for (const image_t id : {1u, 2u, 3u}) track.elements.push_back({id, k, Vector2d(1, 1)});
    recon.tracks[k] = track;
  }
  const CovisibilityGraph graph = BuildCovisibility(recon);
  EXPECT_EQ(graph.nodes, (std::vector<image_t>{1, 2, 3}));
  ASSERT_EQ(graph.edges.size(), 3u);
  for (const auto& [pair, count] : graph.edges) EXPECT_EQ(count, 10);
  EXPECT_EQ(graph.tau, 10.0);
}

TEST(BuildCovisibility, WeakPairAbsent) {
  const CovisibilityGraph graph = BuildCovisibility(PlantCovisibility({{1, 2, 4}, {2, 3, 5}}));
  EXPECT_FALSE(graph.edges.count(ImagePair(1, 2)));
  EXPECT_EQ(graph.edges.at(ImagePair(2, 3)), 5);
  EXPECT_EQ(graph.nodes.size(), 3u);
}

TEST(BuildCovisibility, MedianThreshold) {
  EXPECT_EQ(BuildCovisibility(PlantCovisibility({{1, 2, 6}, {2, 3, 8}, {3, 4, 20}})).tau, 8.0);
  EXPECT_EQ(
      BuildCovisibility(PlantCovisibility({{1, 2, 6}, {2, 3, 8}, {3, 4, 10}, {4, 5, 20}})).tau,
      8.0);
}

TEST(BuildCovisibility, NoEdgesSingleCluster) {
  const CovisibilityGraph graph = BuildCovisibility(PlantCovisibility({{1, 2, 3}}));
  EXPECT_FALSE(graph.tau);
  const auto clusters = ClusterCameras(graph);
  ASSERT_EQ(clusters.size(), 1u);
  EXPECT_EQ(clusters[0], (std::vector<image_t>{1, 2}));
}

TEST(ClusterCameras, DisjointGroups) {
  const CovisibilityGraph graph = BuildCovisibility(PlantCovisibility(TwoGroups()));
  EXPECT_EQ(graph.tau, 10.0);
  const auto clusters = ClusterCameras(graph);
  ASSERT_EQ(clusters.size(), 2u);
  EXPECT_EQ(clusters[0], (std::vector<image_t>{1, 2, 3, 4}));
  EXPECT_EQ(clusters[1], (std::vector<image_t>{5, 6, 7, 8}));
}

TEST(ClusterCameras, TwoModerateLinksMerge) {
  Pairs pairs = TwoGroups();
  pairs.emplace_back(1, 5, 8);
  pairs.emplace_back(2, 6, 8);
  const auto clusters = ClusterCameras(BuildCovisibility(PlantCovisibility(pairs)));
  ASSERT_EQ(clusters.size(), 1u);
  EXPECT_EQ(clusters[0].size(), 8u);
}

TEST(ClusterCameras, OneModerateLinkKeepsSplit) {
  Pairs pairs = TwoGroups();
  pairs.emplace_back(1, 5, 8);
  EXPECT_EQ(ClusterCameras(BuildCovisibility(PlantCovisibility(pairs))).size(), 2u);
}

TEST(ClusterCameras, LinksAtExactlyThreeQuartersDoNotMerge) {
  CovisibilityGraph graph = BuildCovisibility(PlantCovisibility(TwoGroups()));
  graph.edges[ImagePair(1, 5)] = 7;
  graph.edges[ImagePair(2, 6)] = 7;
  graph.tau = 7.0 / 0.75;
  // Cross links of exactly 0.75 tau are not "more than" 0.75 tau.
  EXPECT_EQ(ClusterCameras(graph).size(), 2u);
}

TEST(ClusterCameras, IsolatedImageIsSingleton) {
  Pairs pairs = TwoGroups();
  pairs.emplace_back(4, 9, 6);
  const auto clusters = ClusterCameras(BuildCovisibility(PlantCovisibility(pairs)));
  ASSERT_EQ(clusters.size(), 3u);
  EXPECT_EQ(clusters[2], std::vector<image_t>{9});
}

CovisibilityGraph RandomGraph(std::mt19937_64& rng, int n) {
  CovisibilityGraph graph;
  for (int i = 0; i < n; ++i) graph.nodes.push_back(i);
  std::uniform_int_distribution<int> count(5, 40);
  std::bernoulli_distribution present(0.3);
  std::vector<int> counts;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (present(rng)) {
        graph.edges[ImagePair(i, j)] = count(rng);
        counts.push_back(graph.edges[ImagePair(i, j)]);
      }
    }
  }
  if (!counts.empty()) {
    std::sort(counts.begin(), counts.end());
    graph.tau = counts[(counts.size() - 1) / 2];
  }
  return graph;
}

TEST(ClusterCameras, PartitionAndDeterminism) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const CovisibilityGraph graph = RandomGraph(rng, 15);
    const auto clusters = ClusterCameras(graph);
    EXPECT_EQ(clusters, ClusterCameras(graph));
    std::multiset<image_t> seen;
    for (const auto& cluster : clusters) seen.insert(cluster.begin(), cluster.end());
    EXPECT_EQ(seen, std::multiset<image_t>(graph.nodes.begin(), graph.nodes.end()));
    for (std::size_t k = 1; k < clusters.size(); ++k) {
      EXPECT_TRUE(clusters[k - 1].size() > clusters[k].size() ||
                  (clusters[k - 1].size() == clusters[k].size() &&
                   clusters[k - 1].front() < clusters[k].front()));
    }
  }
}

TEST(ClusterCameras, RaisingTauNeverReducesClusterCount) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    CovisibilityGraph graph = RandomGraph(rng, 12);
    if (!graph.tau) continue;
    std::size_t previous = 0;
    for (double tau = 5.0; tau <= 45.0; tau += 2.5) {
      graph.tau = tau;
      const std::size_t count = ClusterCameras(graph).size();
      EXPECT_GE(count, previous) << trial << " " << tau;
      previous = count;
    }
  }
}

TEST(ClusterCameras, ConcatenatedScenesSplit) {
  SyntheticSceneOptions options;
  options.num_cameras = 8;
  options.num_points = 150;
  options.seed = 3;
  const SyntheticDataset a = GenerateScene(options);
  options.seed = 4;
  const SyntheticDataset b = GenerateScene(options);
  const SyntheticDataset joined = ConcatenateWithSpuriousEdge(a, b, 20, 5);
  const auto clusters = ClusterCameras(BuildCovisibility(joined.scene.ground_truth));
  ASSERT_EQ(clusters.size(), 2u);
  EXPECT_EQ(clusters[0].size(), 8u);
  EXPECT_EQ(clusters[1].size(), 8u);
}

}  // namespace
}  // namespace gsfm
