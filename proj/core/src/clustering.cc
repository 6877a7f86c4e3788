#include "gsfm/clustering.h"

#include <algorithm>
#include <set>

namespace gsfm {

CovisibilityGraph BuildCovisibility(const Reconstruction& recon) {
  CovisibilityGraph graph;
  const std::set<image_t> registered = recon.RegisteredImages();
  graph.nodes.assign(registered.begin(), registered.end());

  std::map<ImagePair, int> counts;
  for (const auto& [id, track] : recon.tracks) {
    if (!track.point) continue;
    std::set<image_t> images;
    for (const auto& element : track.elements) {
      if (registered.count(element.image_id)) images.insert(element.image_id);
    }
    for (auto a = images.begin(); a != images.end(); ++a) {
      for (auto b = std::next(a); b != images.end(); ++b) {
        ++counts[ImagePair(*a, *b)];
      }
    }
  }
  std::vector<int> values;
  for (const auto& [pair, count] : counts) {
    if (count < kMinCovisibility) continue;
    graph.edges[pair] = count;
    values.push_back(count);
  }
  if (!values.empty()) {
    std::sort(values.begin(), values.end());
    graph.tau = values[(values.size() - 1) / 2];
  }
  return graph;
}

std::vector<std::vector<image_t>> ClusterCameras(const CovisibilityGraph& graph) {
  std::vector<std::vector<image_t>> clusters;
  if (!graph.tau) {
    if (!graph.nodes.empty()) clusters.push_back(graph.nodes);
    return clusters;
  }
  const double tau = *graph.tau;

  std::vector<std::pair<image_t, image_t>> strong;
  for (const auto& [pair, count] : graph.edges) {
    if (count >= tau) strong.emplace_back(pair.first, pair.second);
  }
  clusters = ConnectedComponents(std::set<image_t>(graph.nodes.begin(), graph.nodes.end()), strong);

  const double merge_count = 0.75 * tau;
  bool merged = true;
  while (merged) {
    merged = false;
    std::sort(clusters.begin(), clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    std::map<image_t, std::size_t> cluster_of;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      for (const image_t id : clusters[c]) cluster_of[id] = c;
    }
    std::map<std::pair<std::size_t, std::size_t>, int> links;
    for (const auto& [pair, count] : graph.edges) {
      if (!(count > merge_count)) continue;
      std::size_t a = cluster_of.at(pair.first);
      std::size_t b = cluster_of.at(pair.second);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      ++links[{a, b}];
    }
    for (const auto& [key, num_links] : links) {
      if (num_links < 2) continue;
      auto& target = clusters[key.first];
      target.insert(target.end(), clusters[key.second].begin(),
                    clusters[key.second].end());
      std::sort(target.begin(), target.end());
      clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(key.second));
      merged = true;
      break;
    }
  }

  for (auto& cluster : clusters) std::sort(cluster.begin(), cluster.end());
  std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() > b.size() : a.front() < b.front();
  });
  return clusters;
}

}  // namespace gsfm
