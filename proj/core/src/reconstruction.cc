#include "gsfm/reconstruction.h"

#include <cmath>
#include <limits>

namespace gsfm {

std::set<image_t> Reconstruction::RegisteredImages() const {
  std::set<image_t> ids;
  for (const auto& [id, image] : images) {
    if (IsRegistered(id)) ids.insert(id);
  }
  return ids;
}

double Reconstruction::ReprojectionError(const TrackElement& element,
                                         const Vector3d& X) const {
  const auto uv = Project(CameraOf(element.image_id), poses.at(element.image_id), X);
  if (!uv) return std::numeric_limits<double>::infinity();
  return (*uv - element.uv).norm();
}

double Reconstruction::MeanReprojectionError() const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& [id, track] : tracks) {
    if (!track.point) continue;
    for (const auto& element : track.elements) {
      if (!IsRegistered(element.image_id)) continue;
      sum += ReprojectionError(element, *track.point);
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

std::size_t Reconstruction::NumObservations() const {
  std::size_t count = 0;
  for (const auto& [id, track] : tracks) count += track.elements.size();
  return count;
}

Reconstruction Reconstruction::Subset(const std::set<image_t>& image_ids) const {
  Reconstruction subset;
  subset.cameras = cameras;
  subset.images = images;
  for (auto& [id, image] : subset.images) {
    image.registered = image.registered && image_ids.count(id) > 0;
    if (image.registered && poses.count(id)) subset.poses[id] = poses.at(id);
  }
  for (const auto& [id, track] : tracks) {
    Track kept = track;
    kept.elements.clear();
    for (const auto& element : track.elements) {
      if (subset.IsRegistered(element.image_id)) kept.elements.push_back(element);
    }
    if (kept.elements.size() >= 2) subset.tracks.emplace(id, std::move(kept));
  }
  return subset;
}

}  // namespace gsfm
