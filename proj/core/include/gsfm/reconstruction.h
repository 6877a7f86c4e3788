#pragma once

#include <map>
#include <set>
#include <vector>

#include "gsfm/camera.h"
#include "gsfm/view_graph.h"

namespace gsfm {

// Cameras, images, poses of registered images and tracks with 3D points.
struct Reconstruction {
  std::map<camera_t, CameraIntrinsics> cameras;
  std::map<image_t, Image> images;
  std::map<image_t, Pose> poses;
  std::map<track_t, Track> tracks;

  bool IsRegistered(image_t image_id) const {
    const auto it = images.find(image_id);
    return it != images.end() && it->second.registered && poses.count(image_id);
  }
  std::set<image_t> RegisteredImages() const;
  const CameraIntrinsics& CameraOf(image_t image_id) const {
    return cameras.at(images.at(image_id).camera_id);
  }

  // Reprojection error in pixels, or +inf if the point is behind the camera.
  double ReprojectionError(const TrackElement& element, const Vector3d& X) const;
  // Mean over all observations of triangulated tracks.
  double MeanReprojectionError() const;
  std::size_t NumObservations() const;

  // Restricts the model to the given images: others become unregistered,
  // their observations are removed and tracks with fewer than two remaining
  // observations are erased.
  Reconstruction Subset(const std::set<image_t>& image_ids) const;
};

}  // namespace gsfm
