#include "gsfm/view_graph.h"

#include <algorithm>
#include <numeric>
#include <string>

#include "gsfm/errors.h"

namespace gsfm {

void ViewGraph::AddCamera(const CameraIntrinsics& camera) {
  camera.Validate();
  if (!cameras_.emplace(camera.id, camera).second) {
    throw InputError("duplicate camera id " + std::to_string(camera.id));
  }
}

void ViewGraph::AddImage(const Image& image) {
  if (cameras_.count(image.camera_id) == 0) {
    throw InputError("image " + std::to_string(image.id) +
                     " references unknown camera " +
                     std::to_string(image.camera_id));
  }
  if (!images_.emplace(image.id, image).second) {
    throw InputError("duplicate image id " + std::to_string(image.id));
  }
}

void ViewGraph::AddEdge(const TwoViewGeometry& edge) {
  if (edge.image_id1 == edge.image_id2) {
    throw InputError("self edge on image " + std::to_string(edge.image_id1));
  }
  for (const image_t id : {edge.image_id1, edge.image_id2}) {
    if (images_.count(id) == 0) {
      throw InputError("edge references unknown image " + std::to_string(id));
    }
  }
  if (!edges_.emplace(edge.Pair(), edge).second) {
    throw InputError("duplicate pair (" + std::to_string(edge.image_id1) +
                     ", " + std::to_string(edge.image_id2) + ")");
  }
}

const CameraIntrinsics& ViewGraph::CameraOf(image_t image_id) const {
  const auto image = images_.find(image_id);
  if (image == images_.end()) {
    throw InputError("unknown image " + std::to_string(image_id));
  }
  return cameras_.at(image->second.camera_id);
}

std::set<image_t> ViewGraph::LargestConnectedComponent() const {
  std::set<image_t> nodes;
  for (const auto& [id, image] : images_) {
    if (image.registered) nodes.insert(id);
  }
  std::vector<std::pair<image_t, image_t>> links;
  for (const auto& [pair, edge] : edges_) {
    if (edge.valid && nodes.count(pair.first) && nodes.count(pair.second)) {
      links.emplace_back(pair.first, pair.second);
    }
  }
  const auto components = ConnectedComponents(nodes, links);
  if (components.empty()) {
    return {};
  }
  return {components.front().begin(), components.front().end()};
}

void ViewGraph::KeepRegistered(const std::set<image_t>& keep) {
  for (auto& [id, image] : images_) {
    if (keep.count(id) == 0) image.registered = false;
  }
}

void ViewGraph::Validate() const {
  for (const auto& [id, camera] : cameras_) {
    camera.Validate();
  }
  for (const auto& [id, image] : images_) {
    if (cameras_.count(image.camera_id) == 0) {
      throw InputError("image " + std::to_string(id) +
                       " references unknown camera");
    }
  }
  for (const auto& [pair, edge] : edges_) {
    if (pair.first == pair.second || !images_.count(pair.first) ||
        !images_.count(pair.second)) {
      throw InputError("edge (" + std::to_string(pair.first) + ", " +
                       std::to_string(pair.second) + ") is dangling");
    }
    const auto& f1 = images_.at(edge.image_id1).features;
    const auto& f2 = images_.at(edge.image_id2).features;
    for (const auto& m : edge.matches) {
      if (m.idx1 >= f1.size() || m.idx2 >= f2.size()) {
        throw InputError("edge (" + std::to_string(edge.image_id1) + ", " +
                         std::to_string(edge.image_id2) +
                         ") references a missing feature index");
      }
    }
  }
}

std::vector<std::vector<image_t>> ConnectedComponents(
    const std::set<image_t>& nodes,
    const std::vector<std::pair<image_t, image_t>>& edges) {
  const std::vector<image_t> ids(nodes.begin(), nodes.end());
  std::map<image_t, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;

  std::vector<std::size_t> parent(ids.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& [a, b] : edges) {
    const auto ia = index.find(a);
    const auto ib = index.find(b);
    if (ia == index.end() || ib == index.end()) continue;
    const std::size_t ra = find(ia->second);
    const std::size_t rb = find(ib->second);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }

  std::map<std::size_t, std::vector<image_t>> groups;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    groups[find(i)].push_back(ids[i]);
  }
  std::vector<std::vector<image_t>> components;
  components.reserve(groups.size());
  for (auto& [root, members] : groups) components.push_back(std::move(members));
  std::stable_sort(components.begin(), components.end(),
                   [](const auto& a, const auto& b) {
                     if (a.size() != b.size()) return a.size() > b.size();
                     return a.front() < b.front();
                   });
  return components;
}

}  // namespace gsfm
