#pragma once

#include <vector>

#include "gsfm/view_graph.h"

namespace gsfm {

// Concatenates the matches of all valid edges into feature tracks with a
// union-find over (image, feature) nodes. When a component holds two
// features of the same image, every observation of that image is dropped
// from the track. Tracks with fewer than two observations are discarded.
// Output is sorted by descending length (ties: smallest (image, feature)
// node first) and ids are dense from 0.
std::vector<Track> BuildTracks(const ViewGraph& graph);

}  // namespace gsfm
