#include "gsfm/track_builder.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <utility>

namespace gsfm {
namespace {

using Node = std::pair<image_t, feature_t>;

class UnionFind {
 public:
  std::size_t Add() {
    parent_.push_back(parent_.size());
    return parent_.size() - 1;
  }
  std::size_t Find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void Union(std::size_t a, std::size_t b) {
    a = Find(a);
    b = Find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<Track> BuildTracks(const ViewGraph& graph) {
  std::map<Node, std::size_t> node_index;
  std::vector<Node> nodes;
  UnionFind uf;
  auto index_of = [&](const Node& node) {
    const auto [it, inserted] = node_index.emplace(node, nodes.size());
    if (inserted) {
      nodes.push_back(node);
      uf.Add();
    }
    return it->second;
  };

  const auto& images = graph.Images();
  for (const auto& [pair, edge] : graph.Edges()) {
    if (!edge.valid) continue;
    if (!images.at(edge.image_id1).registered ||
        !images.at(edge.image_id2).registered) {
      continue;
    }
    for (const auto& m : edge.matches) {
      uf.Union(index_of({edge.image_id1, m.idx1}),
               index_of({edge.image_id2, m.idx2}));
    }
  }

  // Nodes are visited in (image, feature) order, so members of each
  // component come out sorted.
  std::map<std::size_t, std::vector<Node>> components;
  for (const auto& [node, idx] : node_index) {
    components[uf.Find(idx)].push_back(node);
  }

  std::vector<std::vector<Node>> kept;
  for (auto& [root, members] : components) {
    std::map<image_t, int> per_image;
    for (const auto& node : members) ++per_image[node.first];
    std::vector<Node> consistent;
    for (const auto& node : members) {
      if (per_image[node.first] == 1) consistent.push_back(node);
    }
    if (consistent.size() >= 2) kept.push_back(std::move(consistent));
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a.front() < b.front();
  });

  std::vector<Track> tracks;
  tracks.reserve(kept.size());
  for (const auto& members : kept) {
    Track track;
    track.id = static_cast<track_t>(tracks.size());
    for (const auto& [image_id, feature_idx] : members) {
      track.elements.push_back(
          {image_id, feature_idx, images.at(image_id).features.at(feature_idx)});
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

}  // namespace gsfm
