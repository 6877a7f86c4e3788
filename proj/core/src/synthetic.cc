#include "gsfm/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "gsfm/errors.h"
#include "gsfm/solver.h"
#include "gsfm/two_view.h"

namespace gsfm {

std::string_view SceneLayoutName(SceneLayout layout) {
  switch (layout) {
    case SceneLayout::kGeneral:
      return "general";
    case SceneLayout::kColinear:
      return "colinear";
    case SceneLayout::kRing:
      return "ring";
  }
  return "unknown";
}

SceneLayout SceneLayoutFromName(std::string_view name) {
  if (name == "general") return SceneLayout::kGeneral;
  if (name == "colinear") return SceneLayout::kColinear;
  if (name == "ring") return SceneLayout::kRing;
  throw InputError("unknown layout '" + std::string(name) + "'");
}

namespace {

// World-to-camera rotation looking from center toward target.
Rotation LookAt(const Vector3d& center, const Vector3d& target,
                const Vector3d& up) {
  const Vector3d z = (target - center).normalized();
  Vector3d x = up.cross(z);
  if (x.norm() < 1e-6) x = Vector3d::UnitX().cross(z);
  x.normalize();
  const Vector3d y = z.cross(x);
  Matrix3d R;
  R.row(0) = x.transpose();
  R.row(1) = y.transpose();
  R.row(2) = z.transpose();
  return Rotation::FromMatrix(R);
}

Vector3d RandomUnit(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector3d v;
  do {
    v = Vector3d(normal(rng), normal(rng), normal(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

Vector3d UniformBox(std::mt19937_64& rng, const Vector3d& lo, const Vector3d& hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector3d p;
  for (int k = 0; k < 3; ++k) p[k] = lo[k] + (hi[k] - lo[k]) * u(rng);
  return p;
}

// Signed Sampson error of normalized correspondences under E = [t]x R.
class EpipolarCost : public CostFunction {
 public:
  EpipolarCost(const Vector2d& x1, const Vector2d& x2)
      : CostFunction(1, {3, 3}), x1_(x1.homogeneous()), x2_(x2.homogeneous()) {}

  void Evaluate(const double* const* parameters, double* residuals,
                double** jacobians) const override {
    const Eigen::Quaterniond q(parameters[0][0], parameters[0][1],
                               parameters[0][2], parameters[0][3]);
    const Matrix3d R = q.normalized().toRotationMatrix();
    const Vector3d t(parameters[1][0], parameters[1][1], parameters[1][2]);
    const Matrix3d E = CrossMatrix(t) * R;
    const Vector3d a = E * x1_;
    const Vector3d b = E.transpose() * x2_;
    const double n = x2_.dot(a);
    const double D = a.x() * a.x() + a.y() * a.y() + b.x() * b.x() + b.y() * b.y();
    const double sqrt_d = std::sqrt(D);
    residuals[0] = n / sqrt_d;
    if (jacobians == nullptr) return;

    // ds/dE, then chain through E(R, t).
    Matrix3d dsdE;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        double dD = 0.0;
        if (r < 2) dD += 2.0 * a[r] * x1_[c];
        if (c < 2) dD += 2.0 * b[c] * x2_[r];
        dsdE(r, c) = x2_[r] * x1_[c] / sqrt_d - 0.5 * n * dD / (D * sqrt_d);
      }
    }
    if (jacobians[0] != nullptr) {
      for (int k = 0; k < 3; ++k) {
        const Matrix3d dE = CrossMatrix(t) * CrossMatrix(Vector3d::Unit(k)) * R;
        jacobians[0][k] = (dsdE.array() * dE.array()).sum();
      }
    }
    if (jacobians[1] != nullptr) {
      for (int k = 0; k < 3; ++k) {
        const Matrix3d dE = CrossMatrix(Vector3d::Unit(k)) * R;
        jacobians[1][k] = (dsdE.array() * dE.array()).sum();
      }
    }
  }

 private:
  Vector3d x1_;
  Vector3d x2_;
};

double Diameter(const Reconstruction& recon) {
  double diameter = 0.0;
  for (const auto& [a, pa] : recon.poses) {
    for (const auto& [b, pb] : recon.poses) {
      diameter = std::max(diameter, (pa.center - pb.center).norm());
    }
  }
  return diameter;
}

TwoViewGeometry MakeEdge(image_t id1, image_t id2, const Rotation& R,
                         const Vector3d& t, const CameraIntrinsics& true1,
                         const CameraIntrinsics& true2, bool calibrated) {
  TwoViewGeometry edge;
  edge.image_id1 = id1;
  edge.image_id2 = id2;
  const Matrix3d E = EssentialFromPose(R, t.normalized());
  if (calibrated) {
    edge.config = TwoViewConfig::kCalibrated;
    edge.matrix = E;
  } else {
    edge.config = TwoViewConfig::kUncalibrated;
    edge.matrix = FundamentalFromEssential(E, true1, true2);
  }
  return edge;
}

}  // namespace

std::shared_ptr<CostFunction> MakeSampsonCost(const Vector2d& normalized1,
                                              const Vector2d& normalized2) {
  return std::make_shared<EpipolarCost>(normalized1, normalized2);
}

void RefineRelativePose(const std::vector<Vector2d>& normalized1,
                        const std::vector<Vector2d>& normalized2,
                        Rotation* rotation, Vector3d* translation) {
  double q[4] = {rotation->w(), rotation->x(), rotation->y(), rotation->z()};
  Vector3d t = translation->normalized();
  Problem problem;
  problem.AddParameterBlock(q, 4, Manifold::kRotation);
  problem.AddParameterBlock(t.data(), 3);
  for (std::size_t i = 0; i < normalized1.size(); ++i) {
    problem.AddResidualBlock(
        MakeSampsonCost(normalized1[i], normalized2[i]),
        LossFunction::Trivial(), {q, t.data()});
  }
  SolverOptions options;
  options.max_iterations = 50;
  Solve(options, &problem);
  *rotation = Rotation(q[0], q[1], q[2], q[3]);
  *translation = t.normalized();
}

SyntheticDataset GenerateScene(const SyntheticSceneOptions& options) {
  if (options.num_cameras < 2) {
    throw InputError("synthetic scene needs at least 2 cameras");
  }
  if (options.num_points < 8) {
    throw InputError("synthetic scene needs at least 8 points");
  }
  if (options.outlier_fraction < 0.0 || options.outlier_fraction >= 1.0) {
    throw InputError("outlier fraction must lie in [0, 1)");
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  SyntheticDataset data;
  SyntheticScene& scene = data.scene;
  scene.options = options;
  Reconstruction& gt = scene.ground_truth;
  const int n = options.num_cameras;

  // Poses.
  std::vector<Pose> poses(n);
  Vector3d points_lo, points_hi;
  switch (options.layout) {
    case SceneLayout::kGeneral: {
      for (int i = 0; i < n; ++i) {
        poses[i].center = 6.0 * RandomUnit(rng);
        const Vector3d target = 0.3 * RandomUnit(rng) * uniform(rng);
        poses[i].rotation = LookAt(poses[i].center, target, RandomUnit(rng));
      }
      points_lo = Vector3d::Constant(-1.5);
      points_hi = Vector3d::Constant(1.5);
      break;
    }
    case SceneLayout::kColinear: {
      const double spacing = 0.5;
      const double half = 0.5 * spacing * (n - 1);
      for (int i = 0; i < n; ++i) {
        poses[i].center = Vector3d(-half + spacing * i, 0.0, 0.0);
        poses[i].rotation = Rotation::Identity();
      }
      points_lo = Vector3d(-half - 2.0, -2.0, 6.0);
      points_hi = Vector3d(half + 2.0, 2.0, 12.0);
      break;
    }
    case SceneLayout::kRing: {
      for (int i = 0; i < n; ++i) {
        const double angle = 2.0 * kPi * i / n;
        poses[i].center = Vector3d(6.0 * std::cos(angle), 0.0, 6.0 * std::sin(angle));
        poses[i].rotation = LookAt(poses[i].center, Vector3d::Zero(), -Vector3d::UnitY());
      }
      points_lo = Vector3d::Constant(-1.5);
      points_hi = Vector3d::Constant(1.5);
      break;
    }
  }

  // Intrinsics; a random subset of cameras gets an untrusted focal prior.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const int num_miscalibrated =
      static_cast<int>(std::round(options.miscalibration_fraction * n));
  std::vector<bool> miscalibrated(n, false);
  for (int k = 0; k < num_miscalibrated; ++k) miscalibrated[order[k]] = true;

  for (int i = 0; i < n; ++i) {
    const image_t id = static_cast<image_t>(i + 1);
    CameraIntrinsics camera =
        options.model == CameraModel::kPinhole
            ? CameraIntrinsics::Pinhole(options.width, options.height,
                                        options.focal, options.focal,
                                        0.5 * options.width, 0.5 * options.height)
            : CameraIntrinsics::SimpleRadial(options.width, options.height,
                                             options.focal, 0.5 * options.width,
                                             0.5 * options.height, options.radial_k1);
    camera.id = id;
    gt.cameras[id] = camera;
    CameraIntrinsics prior = camera;
    if (miscalibrated[i]) {
      const double sign = uniform(rng) < 0.5 ? -1.0 : 1.0;
      prior.fx = prior.fy = options.focal * (1.0 + 0.2 * sign);
      prior.calibrated = false;
    }
    data.graph.AddCamera(prior);

    Image image;
    image.id = id;
    image.camera_id = id;
    image.name = "image_" + std::to_string(id) + ".png";
    gt.images[id] = image;
    gt.poses[id] = poses[i];
  }

  // Points and their observations.
  std::vector<Vector3d> points(options.num_points);
  // observations[p] = (image index, uv)
  std::vector<std::vector<std::pair<int, Vector2d>>> observations(options.num_points);
  for (int p = 0; p < options.num_points; ++p) {
    points[p] = UniformBox(rng, points_lo, points_hi);
    const Vector3d normal = RandomUnit(rng);
    for (int i = 0; i < n; ++i) {
      const CameraIntrinsics& camera = gt.cameras.at(static_cast<image_t>(i + 1));
      if (options.visibility_angle_deg > 0.0 &&
          normal.dot((poses[i].center - points[p]).normalized()) <
              std::cos(DegToRad(options.visibility_angle_deg))) {
        continue;
      }
      const auto uv = Project(camera, poses[i], points[p]);
      if (!uv || !camera.InImage(*uv)) continue;
      Vector2d noisy = *uv;
      if (options.noise_px > 0.0) {
        noisy += options.noise_px * Vector2d(noise(rng), noise(rng));
      }
      if (!camera.InImage(noisy)) continue;
      observations[p].emplace_back(i, noisy);
    }
  }

  // Feature lists in shuffled order so feature indices carry no correspondence.
  std::vector<std::vector<std::pair<int, Vector2d>>> per_image(n);  // (point, uv)
  for (int p = 0; p < options.num_points; ++p) {
    if (observations[p].size() < 2) continue;
    for (const auto& [i, uv] : observations[p]) per_image[i].emplace_back(p, uv);
  }
  std::vector<std::map<int, feature_t>> feature_of(n);  // point -> feature index
  for (int i = 0; i < n; ++i) {
    std::shuffle(per_image[i].begin(), per_image[i].end(), rng);
    Image& image = gt.images.at(static_cast<image_t>(i + 1));
    for (std::size_t f = 0; f < per_image[i].size(); ++f) {
      image.features.push_back(per_image[i][f].second);
      feature_of[i][per_image[i][f].first] = static_cast<feature_t>(f);
    }
    data.graph.AddImage(image);
  }

  for (int p = 0; p < options.num_points; ++p) {
    if (observations[p].size() < 2) continue;
    Track track;
    track.id = static_cast<track_t>(gt.tracks.size());
    track.point = points[p];
    track.color = std::array<uint8_t, 3>{128, 128, 128};
    for (const auto& [i, uv] : observations[p]) {
      track.elements.push_back({static_cast<image_t>(i + 1), feature_of[i].at(p), uv});
    }
    gt.tracks[track.id] = std::move(track);
  }

  // Pairs.
  struct MatchRef {
    ImagePair pair;
    std::size_t index;
  };
  std::vector<MatchRef> all_matches;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      std::vector<int> common;
      for (const auto& [p, f] : feature_of[i]) {
        if (feature_of[j].count(p)) common.push_back(p);
      }
      if (common.size() < options.min_edge_matches) continue;
      const image_t id1 = static_cast<image_t>(i + 1);
      const image_t id2 = static_cast<image_t>(j + 1);
      const Rotation R = poses[j].rotation * poses[i].rotation.Inverse();
      Vector3d t = (poses[j].rotation * (poses[i].center - poses[j].center)).normalized();
      Rotation R_est = R;
      if (options.relative_pose_from_matches && options.noise_px > 0.0) {
        std::vector<Vector2d> x1, x2;
        const Image& image1 = gt.images.at(id1);
        const Image& image2 = gt.images.at(id2);
        for (const int p : common) {
          x1.push_back(NormalizedFromImage(gt.cameras.at(id1),
                                           image1.features[feature_of[i].at(p)]));
          x2.push_back(NormalizedFromImage(gt.cameras.at(id2),
                                           image2.features[feature_of[j].at(p)]));
        }
        RefineRelativePose(x1, x2, &R_est, &t);
      }
      const bool calibrated = !miscalibrated[i] && !miscalibrated[j];
      TwoViewGeometry edge = MakeEdge(id1, id2, R_est, t, gt.cameras.at(id1),
                                      gt.cameras.at(id2), calibrated);
      for (const int p : common) {
        edge.matches.push_back({feature_of[i].at(p), feature_of[j].at(p)});
      }
      for (std::size_t m = 0; m < edge.matches.size(); ++m) {
        all_matches.push_back({edge.Pair(), m});
      }
      data.graph.AddEdge(edge);
    }
  }
  if (data.graph.Edges().empty()) {
    throw InputError("synthetic layout produced no image pair with enough overlap");
  }

  scene.num_matches = all_matches.size();
  scene.num_corrupted_matches = static_cast<std::size_t>(
      std::floor(options.outlier_fraction * static_cast<double>(all_matches.size())));
  std::shuffle(all_matches.begin(), all_matches.end(), rng);
  for (std::size_t k = 0; k < scene.num_corrupted_matches; ++k) {
    TwoViewGeometry& edge = data.graph.MutableEdges().at(all_matches[k].pair);
    FeatureMatch& match = edge.matches[all_matches[k].index];
    const std::size_t num_features = gt.images.at(edge.image_id2).features.size();
    std::uniform_int_distribution<std::size_t> pick(0, num_features - 2);
    std::size_t other = pick(rng);
    if (other >= match.idx2) ++other;
    match.idx2 = static_cast<feature_t>(other);
  }

  scene.diameter = Diameter(gt);
  return data;
}

SyntheticDataset ConcatenateWithSpuriousEdge(const SyntheticDataset& a,
                                             const SyntheticDataset& b,
                                             int num_matches, uint64_t seed) {
  std::mt19937_64 rng(seed);
  SyntheticDataset out = a;
  Reconstruction& gt = out.scene.ground_truth;

  image_t image_offset = 0;
  for (const auto& [id, image] : a.graph.Images()) image_offset = std::max(image_offset, id);
  camera_t camera_offset = 0;
  for (const auto& [id, camera] : a.graph.Cameras()) camera_offset = std::max(camera_offset, id);
  track_t track_offset = 0;
  for (const auto& [id, track] : gt.tracks) track_offset = std::max(track_offset, id + 1);

  // Scene b lives far away from scene a in the common world frame.
  const Vector3d shift(100.0, 0.0, 0.0);
  for (const auto& [id, camera] : b.graph.Cameras()) {
    CameraIntrinsics c = camera;
    c.id += camera_offset;
    out.graph.AddCamera(c);
    CameraIntrinsics truth = b.scene.ground_truth.cameras.at(id);
    truth.id = c.id;
    gt.cameras[c.id] = truth;
  }
  for (const auto& [id, image] : b.graph.Images()) {
    Image im = image;
    im.id += image_offset;
    im.camera_id += camera_offset;
    out.graph.AddImage(im);
    gt.images[im.id] = im;
    Pose pose = b.scene.ground_truth.poses.at(id);
    pose.center += shift;
    gt.poses[im.id] = pose;
  }
  for (const auto& [pair, edge] : b.graph.Edges()) {
    TwoViewGeometry e = edge;
    e.image_id1 += image_offset;
    e.image_id2 += image_offset;
    out.graph.AddEdge(e);
  }
  for (const auto& [id, track] : b.scene.ground_truth.tracks) {
    Track t = track;
    t.id += track_offset;
    for (auto& element : t.elements) element.image_id += image_offset;
    if (t.point) *t.point += shift;
    gt.tracks[t.id] = std::move(t);
  }

  // The spurious pair: image ia of scene a matched against image ib of scene
  // b as if ib had been taken from the pose of another image of scene a.
  const auto& images_a = a.scene.ground_truth.poses;
  const image_t ia = images_a.begin()->first;
  const image_t ghost = std::next(images_a.begin())->first;
  const image_t ib = b.graph.Images().begin()->first + image_offset;
  const Pose& pose_a = images_a.at(ia);
  const Pose& pose_ghost = images_a.at(ghost);
  const CameraIntrinsics& camera_a = a.scene.ground_truth.cameras.at(
      a.graph.Images().at(ia).camera_id);
  const CameraIntrinsics& camera_b = gt.cameras.at(out.graph.Images().at(ib).camera_id);

  Image& image_a = out.graph.MutableImages().at(ia);
  Image& image_b = out.graph.MutableImages().at(ib);
  TwoViewGeometry edge = MakeEdge(
      ia, ib, pose_ghost.rotation * pose_a.rotation.Inverse(),
      pose_ghost.rotation * (pose_a.center - pose_ghost.center), camera_a,
      camera_b,
      out.graph.CameraOf(ia).calibrated && out.graph.CameraOf(ib).calibrated);
  int added = 0;
  for (int attempt = 0; attempt < 100000 && added < num_matches; ++attempt) {
    const Vector3d X = UniformBox(rng, Vector3d::Constant(-1.5), Vector3d::Constant(1.5));
    const auto uv_a = Project(camera_a, pose_a, X);
    const auto uv_b = Project(camera_b, pose_ghost, X);
    if (!uv_a || !uv_b || !camera_a.InImage(*uv_a) || !camera_b.InImage(*uv_b)) {
      continue;
    }
    edge.matches.push_back({static_cast<feature_t>(image_a.features.size()),
                            static_cast<feature_t>(image_b.features.size())});
    image_a.features.push_back(*uv_a);
    image_b.features.push_back(*uv_b);
    ++added;
  }
  gt.images.at(ia).features = image_a.features;
  gt.images.at(ib).features = image_b.features;
  out.graph.AddEdge(edge);

  out.scene.num_matches += b.scene.num_matches + edge.matches.size();
  out.scene.num_corrupted_matches += b.scene.num_corrupted_matches;
  out.scene.diameter = Diameter(gt);
  return out;
}

}  // namespace gsfm
