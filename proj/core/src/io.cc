#include "gsfm/io.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "gsfm/errors.h"

namespace gsfm {
namespace {

class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  // Next non-empty, non-comment line split into tokens; false at the end.
  bool Next(std::vector<std::string>* tokens, std::string* raw = nullptr) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] == '#') continue;
      std::istringstream stream(line);
      tokens->clear();
      for (std::string token; stream >> token;) tokens->push_back(token);
      if (raw != nullptr) *raw = line;
      return true;
    }
    return false;
  }

  int line() const { return line_; }

  [[noreturn]] void Fail(const std::string& message, int line = -1) const {
    throw InputError(source_ + ":" + std::to_string(line < 0 ? line_ : line) +
                     ": " + message);
  }

  double Double(const std::string& token) const {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception&) {
      Fail("expected a number, got '" + token + "'");
    }
    if (used != token.size()) Fail("expected a number, got '" + token + "'");
    return value;
  }

  long long Integer(const std::string& token, long long min, long long max) const {
    std::size_t used = 0;
    long long value = 0;
    try {
      value = std::stoll(token, &used);
    } catch (const std::exception&) {
      Fail("expected an integer, got '" + token + "'");
    }
    if (used != token.size()) Fail("expected an integer, got '" + token + "'");
    if (value < min || value > max) Fail("value " + token + " out of range");
    return value;
  }

 private:
  std::istream& in_;
  std::string source_;
  int line_ = 0;
};

constexpr long long kMaxId = 0xFFFFFFFEll;

std::string FormatDouble(double value, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*g", digits, value);
  return buffer;
}

char ConfigLetter(TwoViewConfig config) {
  switch (config) {
    case TwoViewConfig::kHomography:
      return 'H';
    case TwoViewConfig::kCalibrated:
      return 'E';
    case TwoViewConfig::kUncalibrated:
      return 'F';
  }
  return '?';
}

std::ofstream OpenForWriting(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

}  // namespace

ViewGraph ParseViewGraph(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  struct Located {
    int line;
    Image image;
  };
  std::vector<std::pair<int, CameraIntrinsics>> cameras;
  std::vector<Located> images;
  std::map<image_t, std::pair<int, std::vector<Vector2d>>> features;
  std::vector<std::pair<int, TwoViewGeometry>> pairs;

  std::vector<std::string> tokens;
  std::string raw;
  while (reader.Next(&tokens, &raw)) {
    const std::string& keyword = tokens[0];
    if (keyword == "CAMERA") {
      if (tokens.size() < 6) reader.Fail("CAMERA needs id, model, size, params and flag");
      CameraModel model;
      try {
        model = CameraModelFromName(tokens[2]);
      } catch (const InputError& e) {
        reader.Fail(e.what());
      }
      const int width = static_cast<int>(reader.Integer(tokens[3], 1, 1 << 30));
      const int height = static_cast<int>(reader.Integer(tokens[4], 1, 1 << 30));
      std::vector<double> params;
      for (std::size_t k = 5; k + 1 < tokens.size(); ++k) {
        params.push_back(reader.Double(tokens[k]));
      }
      const long long calibrated = reader.Integer(tokens.back(), 0, 1);
      if (params.size() != 4) {
        reader.Fail("camera model " + tokens[2] + " takes 4 parameters, got " +
                    std::to_string(params.size()));
      }
      const double guess = 1.2 * std::max(width, height);
      if (calibrated == 0) {
        if (model == CameraModel::kPinhole) {
          if (params[0] <= 0.0) params[0] = guess;
          if (params[1] <= 0.0) params[1] = guess;
        } else if (params[0] <= 0.0) {
          params[0] = guess;
        }
      }
      CameraIntrinsics camera;
      try {
        camera = CameraIntrinsics::FromParams(model, width, height, params);
        camera.id = static_cast<camera_t>(reader.Integer(tokens[1], 0, kMaxId));
        camera.calibrated = calibrated == 1;
        camera.Validate();
      } catch (const InputError& e) {
        reader.Fail(e.what());
      }
      cameras.emplace_back(reader.line(), camera);
    } else if (keyword == "IMAGE") {
      if (tokens.size() < 4) reader.Fail("IMAGE needs id, camera id and name");
      Image image;
      image.id = static_cast<image_t>(reader.Integer(tokens[1], 0, kMaxId));
      image.camera_id = static_cast<camera_t>(reader.Integer(tokens[2], 0, kMaxId));
      // The name is the rest of the line after the camera id.
      std::size_t pos = raw.find(tokens[0]) + tokens[0].size();
      pos = raw.find(tokens[1], pos) + tokens[1].size();
      pos = raw.find(tokens[2], pos) + tokens[2].size();
      pos = raw.find_first_not_of(" \t", pos);
      image.name = raw.substr(pos);
      image.name.erase(image.name.find_last_not_of(" \t") + 1);
      images.push_back({reader.line(), image});
    } else if (keyword == "FEATURES") {
      if (tokens.size() != 3) reader.Fail("FEATURES needs image id and count");
      const image_t id = static_cast<image_t>(reader.Integer(tokens[1], 0, kMaxId));
      const long long n = reader.Integer(tokens[2], 0, 1ll << 31);
      if (features.count(id)) reader.Fail("duplicate FEATURES for image " + tokens[1]);
      auto& entry = features[id];
      entry.first = reader.line();
      entry.second.reserve(static_cast<std::size_t>(n));
      for (long long k = 0; k < n; ++k) {
        if (!reader.Next(&tokens)) reader.Fail("unexpected end of file in FEATURES");
        if (tokens.size() != 2) reader.Fail("feature line needs 'u v'");
        entry.second.emplace_back(reader.Double(tokens[0]), reader.Double(tokens[1]));
      }
    } else if (keyword == "PAIR") {
      if (tokens.size() != 14) {
        reader.Fail("PAIR needs two ids, a config, 9 matrix entries and a count");
      }
      TwoViewGeometry edge;
      edge.image_id1 = static_cast<image_t>(reader.Integer(tokens[1], 0, kMaxId));
      edge.image_id2 = static_cast<image_t>(reader.Integer(tokens[2], 0, kMaxId));
      if (tokens[3] == "H") {
        edge.config = TwoViewConfig::kHomography;
      } else if (tokens[3] == "E") {
        edge.config = TwoViewConfig::kCalibrated;
      } else if (tokens[3] == "F") {
        edge.config = TwoViewConfig::kUncalibrated;
      } else {
        reader.Fail("unknown pair config '" + tokens[3] + "'");
      }
      for (int k = 0; k < 9; ++k) edge.matrix(k / 3, k % 3) = reader.Double(tokens[4 + k]);
      if (!edge.matrix.allFinite()) reader.Fail("non-finite matrix entry");
      const long long n = reader.Integer(tokens[13], 0, 1ll << 31);
      const int line = reader.line();
      for (long long k = 0; k < n; ++k) {
        if (!reader.Next(&tokens)) reader.Fail("unexpected end of file in PAIR");
        if (tokens.size() != 2) reader.Fail("match line needs 'idx_i idx_j'");
        edge.matches.push_back(
            {static_cast<feature_t>(reader.Integer(tokens[0], 0, kMaxId)),
             static_cast<feature_t>(reader.Integer(tokens[1], 0, kMaxId))});
      }
      pairs.emplace_back(line, std::move(edge));
    } else {
      reader.Fail("unknown record '" + keyword + "'");
    }
  }

  ViewGraph graph;
  for (const auto& [line, camera] : cameras) {
    try {
      graph.AddCamera(camera);
    } catch (const InputError& e) {
      reader.Fail(e.what(), line);
    }
  }
  for (auto& [line, image] : images) {
    const auto it = features.find(image.id);
    if (it != features.end()) image.features = it->second.second;
    try {
      graph.AddImage(image);
    } catch (const InputError& e) {
      reader.Fail(e.what(), line);
    }
  }
  for (const auto& [id, entry] : features) {
    if (!graph.Images().count(id)) {
      reader.Fail("FEATURES for unknown image " + std::to_string(id), entry.first);
    }
  }
  for (auto& [line, edge] : pairs) {
    // The format allows either order; edges are stored with the smaller id
    // first.
    if (edge.image_id1 > edge.image_id2) {
      std::swap(edge.image_id1, edge.image_id2);
      for (auto& match : edge.matches) std::swap(match.idx1, match.idx2);
      edge.matrix = edge.config == TwoViewConfig::kHomography
                        ? Matrix3d(edge.matrix.inverse())
                        : Matrix3d(edge.matrix.transpose());
    }
    for (const auto& match : edge.matches) {
      const auto image1 = graph.Images().find(edge.image_id1);
      const auto image2 = graph.Images().find(edge.image_id2);
      if (image1 == graph.Images().end() || image2 == graph.Images().end()) break;
      if (match.idx1 >= image1->second.features.size() ||
          match.idx2 >= image2->second.features.size()) {
        reader.Fail("match references a missing feature (" +
                        std::to_string(match.idx1) + ", " +
                        std::to_string(match.idx2) + ")",
                    line);
      }
    }
    try {
      graph.AddEdge(edge);
    } catch (const InputError& e) {
      reader.Fail(e.what(), line);
    }
  }
  return graph;
}

ViewGraph ReadViewGraph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return ParseViewGraph(in, path.string());
}

void WriteViewGraph(const ViewGraph& graph, std::ostream& out) {
  out << "# view graph: " << graph.Cameras().size() << " cameras, "
      << graph.Images().size() << " images, " << graph.Edges().size() << " pairs\n";
  for (const auto& [id, camera] : graph.Cameras()) {
    out << "CAMERA " << id << ' ' << CameraModelName(camera.model) << ' '
        << camera.width << ' ' << camera.height;
    for (const double p : camera.Params()) out << ' ' << FormatDouble(p, 17);
    out << ' ' << (camera.calibrated ? 1 : 0) << '\n';
  }
  for (const auto& [id, image] : graph.Images()) {
    out << "IMAGE " << id << ' ' << image.camera_id << ' ' << image.name << '\n';
  }
  for (const auto& [id, image] : graph.Images()) {
    out << "FEATURES " << id << ' ' << image.features.size() << '\n';
    for (const auto& uv : image.features) {
      out << FormatDouble(uv.x(), 17) << ' ' << FormatDouble(uv.y(), 17) << '\n';
    }
  }
  for (const auto& [pair, edge] : graph.Edges()) {
    out << "PAIR " << edge.image_id1 << ' ' << edge.image_id2 << ' '
        << ConfigLetter(edge.config);
    for (int k = 0; k < 9; ++k) out << ' ' << FormatDouble(edge.matrix(k / 3, k % 3), 17);
    out << ' ' << edge.matches.size() << '\n';
    for (const auto& match : edge.matches) out << match.idx1 << ' ' << match.idx2 << '\n';
  }
}

void WriteViewGraph(const ViewGraph& graph, const std::filesystem::path& path) {
  std::ofstream out = OpenForWriting(path);
  WriteViewGraph(graph, out);
  if (!out) throw InputError("failed writing " + path.string());
}

void WriteColmapText(const Reconstruction& recon, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());

  const std::set<image_t> registered = recon.RegisteredImages();
  // Triangulated tracks restricted to registered images.
  std::map<track_t, std::vector<const TrackElement*>> elements;
  std::map<image_t, std::map<feature_t, track_t>> point_of;
  for (const auto& [id, track] : recon.tracks) {
    if (!track.point) continue;
    for (const auto& element : track.elements) {
      if (!registered.count(element.image_id)) continue;
      elements[id].push_back(&element);
      point_of[element.image_id][element.feature_idx] = id;
    }
  }

  std::set<camera_t> used_cameras;
  for (const image_t id : registered) used_cameras.insert(recon.images.at(id).camera_id);
  {
    std::ofstream out = OpenForWriting(dir / "cameras.txt");
    out << "# Camera list with one line of data per camera:\n"
        << "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n"
        << "# Number of cameras: " << used_cameras.size() << '\n';
    for (const camera_t id : used_cameras) {
      const CameraIntrinsics& camera = recon.cameras.at(id);
      out << id << ' ' << CameraModelName(camera.model) << ' ' << camera.width << ' '
          << camera.height;
      for (const double p : camera.Params()) out << ' ' << FormatDouble(p, 12);
      out << '\n';
    }
    if (!out) throw InputError("failed writing cameras.txt");
  }
  {
    std::size_t num_observations = 0;
    for (const auto& [id, features] : point_of) num_observations += features.size();
    std::ofstream out = OpenForWriting(dir / "images.txt");
    out << "# Image list with two lines of data per image:\n"
        << "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n"
        << "#   POINTS2D[] as (X, Y, POINT3D_ID)\n"
        << "# Number of images: " << registered.size() << ", mean observations per image: "
        << FormatDouble(registered.empty() ? 0.0
                                           : static_cast<double>(num_observations) /
                                                 static_cast<double>(registered.size()),
                        12)
        << '\n';
    for (const image_t id : registered) {
      const Image& image = recon.images.at(id);
      const Pose& pose = recon.poses.at(id);
      const Vector3d t = pose.Translation();
      out << id << ' ' << FormatDouble(pose.rotation.w(), 12) << ' '
          << FormatDouble(pose.rotation.x(), 12) << ' '
          << FormatDouble(pose.rotation.y(), 12) << ' '
          << FormatDouble(pose.rotation.z(), 12) << ' ' << FormatDouble(t.x(), 12) << ' '
          << FormatDouble(t.y(), 12) << ' ' << FormatDouble(t.z(), 12) << ' '
          << image.camera_id << ' ' << image.name << '\n';
      const auto features = point_of.find(id);
      bool first = true;
      for (std::size_t f = 0; f < image.features.size(); ++f) {
        long long point_id = -1;
        if (features != point_of.end()) {
          const auto it = features->second.find(static_cast<feature_t>(f));
          if (it != features->second.end()) point_id = it->second;
        }
        if (!first) out << ' ';
        first = false;
        out << FormatDouble(image.features[f].x(), 12) << ' '
            << FormatDouble(image.features[f].y(), 12) << ' ' << point_id;
      }
      out << '\n';
    }
    if (!out) throw InputError("failed writing images.txt");
  }
  {
    double mean_length = 0.0;
    for (const auto& [id, list] : elements) mean_length += static_cast<double>(list.size());
    if (!elements.empty()) mean_length /= static_cast<double>(elements.size());
    std::ofstream out = OpenForWriting(dir / "points3D.txt");
    out << "# 3D point list with one line of data per point:\n"
        << "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n"
        << "# Number of points: " << elements.size()
        << ", mean track length: " << FormatDouble(mean_length, 12) << '\n';
    for (const auto& [id, list] : elements) {
      const Track& track = recon.tracks.at(id);
      const Vector3d& X = *track.point;
      const std::array<uint8_t, 3> color =
          track.color.value_or(std::array<uint8_t, 3>{128, 128, 128});
      double error = 0.0;
      for (const TrackElement* element : list) error += recon.ReprojectionError(*element, X);
      error /= static_cast<double>(list.size());
      out << id << ' ' << FormatDouble(X.x(), 12) << ' ' << FormatDouble(X.y(), 12) << ' '
          << FormatDouble(X.z(), 12) << ' ' << int{color[0]} << ' ' << int{color[1]}
          << ' ' << int{color[2]} << ' ' << FormatDouble(error, 12);
      for (const TrackElement* element : list) {
        out << ' ' << element->image_id << ' ' << element->feature_idx;
      }
      out << '\n';
    }
    if (!out) throw InputError("failed writing points3D.txt");
  }
}

void WritePly(const Reconstruction& recon, const std::filesystem::path& path,
              bool include_cameras) {
  std::vector<std::pair<Vector3d, std::array<uint8_t, 3>>> vertices;
  for (const auto& [id, track] : recon.tracks) {
    if (!track.point) continue;
    vertices.emplace_back(*track.point,
                          track.color.value_or(std::array<uint8_t, 3>{128, 128, 128}));
  }
  if (include_cameras) {
    for (const image_t id : recon.RegisteredImages()) {
      vertices.emplace_back(recon.poses.at(id).center, std::array<uint8_t, 3>{255, 0, 0});
    }
  }
  std::ofstream out = OpenForWriting(path);
  out << "ply\nformat ascii 1.0\nelement vertex " << vertices.size() << '\n'
      << "property double x\nproperty double y\nproperty double z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  for (const auto& [X, color] : vertices) {
    out << FormatDouble(X.x(), 12) << ' ' << FormatDouble(X.y(), 12) << ' '
        << FormatDouble(X.z(), 12) << ' ' << int{color[0]} << ' ' << int{color[1]} << ' '
        << int{color[2]} << '\n';
  }
  if (!out) throw InputError("failed writing " + path.string());
}

}  // namespace gsfm
