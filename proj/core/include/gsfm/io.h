#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "gsfm/reconstruction.h"
#include "gsfm/view_graph.h"

namespace gsfm {

// Line-based view-graph text format ('#' starts a comment line):
//   CAMERA <id> <MODEL> <w> <h> <params...> <calibrated:0|1>
//   IMAGE <id> <camera_id> <name>
//   FEATURES <image_id> <n>, followed by n lines "u v"
//   PAIR <i> <j> <H|E|F> <9 matrix entries, row-major> <n>, followed by n
//   lines "idx_i idx_j"
// An uncalibrated camera with a non-positive focal length gets the guess
// 1.2 * max(w, h). Errors are InputError messages of the form
// "<source>:<line>: <reason>".
ViewGraph ReadViewGraph(const std::filesystem::path& path);
ViewGraph ParseViewGraph(std::istream& in, const std::string& source = "<input>");

void WriteViewGraph(const ViewGraph& graph, const std::filesystem::path& path);
void WriteViewGraph(const ViewGraph& graph, std::ostream& out);

// Writes cameras.txt, images.txt and points3D.txt of the registered part of
// the reconstruction, creating dir if needed. Translations are t = -R c.
void WriteColmapText(const Reconstruction& recon, const std::filesystem::path& dir);

// ASCII PLY of the triangulated points; camera centers are appended as red
// vertices if include_cameras is set.
void WritePly(const Reconstruction& recon, const std::filesystem::path& path,
              bool include_cameras = false);

}  // namespace gsfm
