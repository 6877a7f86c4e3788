#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gsfm/camera.h"
#include "gsfm/rotation.h"
#include "gsfm/types.h"

namespace gsfm {

enum class TwoViewConfig { kHomography, kCalibrated, kUncalibrated };

struct FeatureMatch {
  feature_t idx1 = 0;
  feature_t idx2 = 0;
  friend bool operator==(const FeatureMatch&, const FeatureMatch&) = default;
};

// Verified relation between image_id1 and image_id2. The matrix maps image 1
// to image 2: x2^T F x1 = 0 (pixels), x2^T E x1 = 0 (normalized), x2 ~ H x1.
// The relative pose satisfies X_cam2 = rotation * X_cam1 + s * translation.
struct TwoViewGeometry {
  image_t image_id1 = kInvalidImageId;
  image_t image_id2 = kInvalidImageId;
  TwoViewConfig config = TwoViewConfig::kCalibrated;
  Matrix3d matrix = Matrix3d::Zero();
  std::optional<Rotation> rotation;
  std::optional<Vector3d> translation;  // unit norm when present
  std::vector<FeatureMatch> matches;
  bool valid = true;

  ImagePair Pair() const { return {image_id1, image_id2}; }
};

struct Image {
  image_t id = kInvalidImageId;
  camera_t camera_id = 0;
  std::string name;
  std::vector<Vector2d> features;
  bool registered = true;
};

struct TrackElement {
  image_t image_id = kInvalidImageId;
  feature_t feature_idx = 0;
  Vector2d uv = Vector2d::Zero();
};

struct Track {
  track_t id = 0;
  std::vector<TrackElement> elements;
  std::optional<Vector3d> point;
  std::optional<std::array<uint8_t, 3>> color;
};

class ViewGraph {
 public:
  // All three throw InputError on invariant violations (duplicate ids,
  // dangling references, self edges, duplicate pairs).
  void AddCamera(const CameraIntrinsics& camera);
  void AddImage(const Image& image);
  void AddEdge(const TwoViewGeometry& edge);

  const std::map<camera_t, CameraIntrinsics>& Cameras() const {
    return cameras_;
  }
  const std::map<image_t, Image>& Images() const { return images_; }
  const std::map<ImagePair, TwoViewGeometry>& Edges() const { return edges_; }

  std::map<camera_t, CameraIntrinsics>& MutableCameras() { return cameras_; }
  std::map<image_t, Image>& MutableImages() { return images_; }
  std::map<ImagePair, TwoViewGeometry>& MutableEdges() { return edges_; }

  const CameraIntrinsics& CameraOf(image_t image_id) const;
  bool HasEdge(image_t a, image_t b) const {
    return edges_.count(ImagePair(a, b)) > 0;
  }

  // Images of the largest connected component over valid edges between
  // registered images. Ties break toward the component holding the smallest
  // image id.
  std::set<image_t> LargestConnectedComponent() const;

  // Marks every image outside `keep` as unregistered.
  void KeepRegistered(const std::set<image_t>& keep);

  // Checks every invariant of the graph. Throws InputError.
  void Validate() const;

 private:
  std::map<camera_t, CameraIntrinsics> cameras_;
  std::map<image_t, Image> images_;
  std::map<ImagePair, TwoViewGeometry> edges_;
};

// Connected components of an undirected graph given as an edge list. Nodes
// with no edges form singleton components. Components are sorted by
// descending size, then by smallest member.
std::vector<std::vector<image_t>> ConnectedComponents(
    const std::set<image_t>& nodes,
    const std::vector<std::pair<image_t, image_t>>& edges);

}  // namespace gsfm
