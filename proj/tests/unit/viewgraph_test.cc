#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "gsfm/errors.h"
#include "gsfm/synthetic.h"
#include "gsfm/track_builder.h"
#include "gsfm/two_view.h"
#include "gsfm/view_graph.h"
#include "test_helpers.h"

namespace gsfm {
namespace {

using testing::RandomRotation;
using testing::RandomUnitVector;

// Two cameras with X_cam2 = R X_cam1 + t and one correspondence per point.
struct PairCase {
  CameraIntrinsics camera = CameraIntrinsics::Pinhole(2000, 2000, 500, 500, 1000, 1000);
  std::vector<Vector2d> features1, features2;
  TwoViewGeometry edge;
};

Vector2d Pixel(const CameraIntrinsics& camera, const Vector3d& p) {
  return ImageFromNormalized(camera, p.hnormalized());
}

PairCase MakePair(const Rotation& R, const Vector3d& t, const std::vector<Vector3d>& points) {
  PairCase pair;
  pair.edge.image_id1 = 1;
  pair.edge.image_id2 = 2;
  pair.edge.config = TwoViewConfig::kCalibrated;
  pair.edge.matrix = EssentialFromPose(R, t);
  for (std::size_t k = 0; k < points.size(); ++k) {
    pair.features1.push_back(Pixel(pair.camera, points[k]));
    pair.features2.push_back(Pixel(pair.camera, R * points[k] + t));
    pair.edge.matches.push_back({static_cast<feature_t>(k), static_cast<feature_t>(k)});
  }
  return pair;
}

// Points in front of both cameras.
std::vector<Vector3d> FrontPoints(const Rotation& R, const Vector3d& t, int n,
                                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> xy(-1.0, 1.0), z(3.0, 8.0);
  std::vector<Vector3d> points;
  while (static_cast<int>(points.size()) < n) {
    const Vector3d X(xy(rng), xy(rng), z(rng));
    if ((R * X + t).z() > 0.5) points.push_back(X);
  }
  return points;
}

double SampsonOracle(const Matrix3d& F, const Vector2d& a, const Vector2d& b) {
  const Vector3d x1(a.x(), a.y(), 1.0), x2(b.x(), b.y(), 1.0);
  const Vector3d Fx1 = F * x1, Ftx2 = F.transpose() * x2;
  const double e = x2.dot(Fx1);
  return std::abs(e) / std::sqrt(Fx1.x() * Fx1.x() + Fx1.y() * Fx1.y() +
                                 Ftx2.x() * Ftx2.x() + Ftx2.y() * Ftx2.y());
}

TEST(VerifyMatches, ExactHomographyKeepsAll) {
  const CameraIntrinsics camera = CameraIntrinsics::Pinhole(640, 480, 500, 500, 320, 240);
  const Matrix3d K = camera.CalibrationMatrix();
  const Matrix3d H =
      K * Rotation::FromAxisAngle(Vector3d(0.2, 1, 0).normalized(), 0.1).ToMatrix() *
      K.inverse();
  TwoViewGeometry edge;
  edge.image_id1 = 1;
  edge.image_id2 = 2;
  edge.config = TwoViewConfig::kHomography;
  edge.matrix = H;
  std::vector<Vector2d> f1, f2;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(100, 500), v(100, 400);
  for (feature_t k = 0; k < 40; ++k) {
    f1.emplace_back(u(rng), v(rng));
    f2.push_back((H * f1.back().homogeneous()).hnormalized());
    edge.matches.push_back({k, k});
  }
  const auto verified = VerifyMatches(edge, f1, f2, camera, camera, 4.0);
  ASSERT_TRUE(verified);
  EXPECT_EQ(verified->matches, edge.matches);
}

TEST(VerifyMatches, PerturbedMatchRemovedUnderF) {
  std::mt19937_64 rng(2);
  const Rotation R = Rotation::FromAxisAngle(Vector3d::UnitY(), 0.3);
  const Vector3d t = Vector3d(1, 0.1, 0).normalized();
  PairCase pair = MakePair(R, t, FrontPoints(R, t, 40, rng));
  const Matrix3d F =
      FundamentalFromEssential(pair.edge.matrix, pair.camera, pair.camera);
  pair.edge.config = TwoViewConfig::kUncalibrated;
  pair.edge.matrix = F;
  // Move one observation 50 px perpendicular to its epipolar line.
  const Vector3d line = F * pair.features1[7].homogeneous();
  pair.features2[7] += 50.0 * Vector2d(line.x(), line.y()).normalized();
  const auto verified = VerifyMatches(pair.edge, pair.features1, pair.features2, pair.camera,
                                      pair.camera, 4.0);
  ASSERT_TRUE(verified);
  std::vector<FeatureMatch> expected;
  for (const auto& m : pair.edge.matches) {
    if (SampsonOracle(F, pair.features1[m.idx1], pair.features2[m.idx2]) <= 4.0) {
      expected.push_back(m);
    }
  }
  EXPECT_EQ(verified->matches, expected);
  EXPECT_EQ(verified->matches.size(), 39u);
  EXPECT_TRUE(std::none_of(verified->matches.begin(), verified->matches.end(),
                           [](const FeatureMatch& m) { return m.idx1 == 7; }));
}

TEST(VerifyMatches, SampsonDistanceMatchesOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1), p(0, 640);
  for (int k = 0; k < 200; ++k) {
    Matrix3d F;
    for (int i = 0; i < 9; ++i) F(i / 3, i % 3) = u(rng);
    const Vector2d a(p(rng), p(rng)), b(p(rng), p(rng));
    EXPECT_NEAR(SampsonDistance(F, a, b), SampsonOracle(F, a, b),
                1e-9 * (1.0 + SampsonOracle(F, a, b)));
  }
}

TEST(VerifyMatches, TooFewSurvivorsDropEdge) {
  std::mt19937_64 rng(4);
  const Rotation R = Rotation::FromAxisAngle(Vector3d::UnitY(), 0.3);
  const Vector3d t(1, 0, 0);
  const PairCase pair = MakePair(R, t, FrontPoints(R, t, 10, rng));
  EXPECT_FALSE(VerifyMatches(pair.edge, pair.features1, pair.features2, pair.camera,
                             pair.camera, 4.0));
}

TEST(VerifyMatches, MissingFeatureIndexThrows) {
  std::mt19937_64 rng(5);
  const Rotation R = Rotation::FromAxisAngle(Vector3d::UnitY(), 0.3);
  const Vector3d t(1, 0, 0);
  PairCase pair = MakePair(R, t, FrontPoints(R, t, 20, rng));
  pair.edge.matches.push_back({0, 99});
  EXPECT_THROW(VerifyMatches(pair.edge, pair.features1, pair.features2, pair.camera,
                             pair.camera, 4.0),
               InputError);
}

TEST(DecomposeEdge, RecoversKnownPose) {
  std::mt19937_64 rng(6);
  const Rotation R = Rotation::FromAxisAngle(Vector3d::UnitY(), DegToRad(30.0));
  const Vector3d t(1, 0, 0);
  const PairCase pair = MakePair(R, t, FrontPoints(R, t, 100, rng));
  const DecomposedEdge d =
      DecomposeEdge(pair.edge, pair.features1, pair.features2, pair.camera, pair.camera);
  ASSERT_TRUE(d.valid);
  ASSERT_TRUE(d.translation);
  EXPECT_LT(AngularDistance(d.rotation, R), 1e-6);
  EXPECT_LT((*d.translation - t).norm(), 1e-6);
  EXPECT_EQ(d.inliers.size(), 100u);
}

TEST(DecomposeEdge, ForwardMotionKeepsAll) {
  std::mt19937_64 rng(7);
  const Rotation R = Rotation::Identity();
  const Vector3d t(0, 0, 1);
  const PairCase pair = MakePair(R, t, FrontPoints(R, t, 50, rng));
  const DecomposedEdge d =
      DecomposeEdge(pair.edge, pair.features1, pair.features2, pair.camera, pair.camera);
  ASSERT_TRUE(d.valid);
  EXPECT_EQ(d.inliers.size(), 50u);
  EXPECT_LT((*d.translation - t).norm(), 1e-6);
}

TEST(DecomposeEdge, BehindCameraMatchesRemoved) {
  std::mt19937_64 rng(8);
  const Rotation R = Rotation::FromAxisAngle(Vector3d::UnitY(), DegToRad(30.0));
  const Vector3d t(1, 0, 0);
  std::vector<Vector3d> points = FrontPoints(R, t, 70, rng);
  // Behind both cameras: still epipolar-consistent in homogeneous terms.
  std::set<feature_t> behind;
  std::uniform_real_distribution<double> xy(-1.0, 1.0), z(-8.0, -3.0);
  while (behind.size() < 30) {
    const Vector3d X(xy(rng), xy(rng), z(rng));
    if ((R * X + t).z() < -0.5) {
      behind.insert(static_cast<feature_t>(points.size()));
      points.push_back(X);
    }
  }
  const PairCase pair = MakePair(R, t, points);
  const DecomposedEdge d =
      DecomposeEdge(pair.edge, pair.features1, pair.features2, pair.camera, pair.camera);
  ASSERT_TRUE(d.valid);
  EXPECT_EQ(d.inliers.size(), 70u);
  for (const auto& m : d.inliers) EXPECT_FALSE(behind.count(m.idx1));
  EXPECT_LT(AngularDistance(d.rotation, R), 1e-6);
}

// The four poses sharing one essential matrix.
std::vector<std::pair<Rotation, Vector3d>> PoseCandidates(const Rotation& R, const Vector3d& t) {
  const Rotation twisted = Rotation::FromAxisAngle(t.normalized(), kPi) * R;
  return {{R, t}, {R, -t}, {twisted, t}, {twisted, -t}};
}

bool InFrontOracle(const Rotation& R, const Vector3d& t, const Vector3d& x1,
                   const Vector3d& x2) {
  Eigen::Matrix<double, 3, 2> A;
  A.col(0) = R * x1;
  A.col(1) = -x2;
  const Eigen::Vector2d lambda = A.colPivHouseholderQr().solve(-t);
  // Midpoint of the closest points, in camera 1 coordinates.
  const Vector3d X =
      0.5 * (lambda.x() * x1 + R.Inverse() * (lambda.y() * x2 - t));
  return X.z() > 0 && (R * X + t).z() > 0;
}

TEST(DecomposeEdge, QuarterPerCandidateIsInvalid) {
  std::mt19937_64 rng(9);
  const Rotation R = Rotation::FromAxisAngle(Vector3d::UnitY(), DegToRad(30.0));
  const Vector3d t(1, 0, 0);
  PairCase pair = MakePair(R, t, {});
  std::uniform_real_distribution<double> x(-10, 10), z(0.5, 5);
  for (const auto& [Rc, tc] : PoseCandidates(R, t)) {
    int added = 0;
    while (added < 25) {
      const Vector3d X(x(rng), x(rng), z(rng));
      const Vector3d Y = Rc * X + tc;
      if (Y.z() < 0.5) continue;
      const auto k = static_cast<feature_t>(pair.features1.size());
      pair.features1.push_back(Pixel(pair.camera, X));
      pair.features2.push_back(Pixel(pair.camera, Y));
      pair.edge.matches.push_back({k, k});
      ++added;
    }
  }
  const DecomposedEdge d =
      DecomposeEdge(pair.edge, pair.features1, pair.features2, pair.camera, pair.camera);
  EXPECT_FALSE(d.valid);
  EXPECT_EQ(d.inliers.size(), 25u);
}

TEST(DecomposeEdge, RandomPairingsMatchCheiralityOracle) {
  std::mt19937_64 rng(9);
  const Rotation R = Rotation::FromAxisAngle(Vector3d::UnitY(), DegToRad(30.0));
  const Vector3d t(1, 0, 0);
  std::uniform_real_distribution<double> p(0, 2000);
  for (int trial = 0; trial < 20; ++trial) {
    PairCase pair = MakePair(R, t, {});
    for (feature_t k = 0; k < 200; ++k) {
      pair.features1.emplace_back(p(rng), p(rng));
      pair.features2.emplace_back(p(rng), p(rng));
      pair.edge.matches.push_back({k, k});
    }
    std::size_t best = 0;
    for (const auto& [Rc, tc] : PoseCandidates(R, t)) {
      std::size_t count = 0;
      for (const auto& m : pair.edge.matches) {
        count += InFrontOracle(
            Rc, tc, NormalizedFromImage(pair.camera, pair.features1[m.idx1]).homogeneous(),
            NormalizedFromImage(pair.camera, pair.features2[m.idx2]).homogeneous());
      }
      best = std::max(best, count);
    }
    const DecomposedEdge d =
        DecomposeEdge(pair.edge, pair.features1, pair.features2, pair.camera, pair.camera);
    EXPECT_EQ(d.inliers.size(), best);
    EXPECT_EQ(d.valid, 2 * best >= pair.edge.matches.size());
  }
}

TEST(DecomposeEdge, HomographyGivesRotationOnly) {
  const CameraIntrinsics camera = CameraIntrinsics::Pinhole(640, 480, 500, 500, 320, 240);
  const Rotation R = Rotation::FromAxisAngle(Vector3d(0.3, 1, 0.1).normalized(), 0.2);
  const Matrix3d K = camera.CalibrationMatrix();
  TwoViewGeometry edge;
  edge.image_id1 = 1;
  edge.image_id2 = 2;
  edge.config = TwoViewConfig::kHomography;
  edge.matrix = K * R.ToMatrix() * K.inverse();
  std::vector<Vector2d> f1, f2;
  for (feature_t k = 0; k < 30; ++k) {
    f1.emplace_back(100 + 13 * k, 50 + 11 * k);
    f2.push_back((edge.matrix * f1.back().homogeneous()).hnormalized());
    edge.matches.push_back({k, k});
  }
  const DecomposedEdge d = DecomposeEdge(edge, f1, f2, camera, camera);
  ASSERT_TRUE(d.valid);
  EXPECT_FALSE(d.translation);
  EXPECT_LT(AngularDistance(d.rotation, R), 1e-9);
}

TEST(DecomposeEdge, RandomNoiselessConfigurations) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 1000; ++trial) {
    const Rotation R = testing::RandomRotationWithAngle(rng, 0.6 * std::abs(
        std::uniform_real_distribution<double>(-1, 1)(rng)));
    const Vector3d t = RandomUnitVector(rng);
    const PairCase pair = MakePair(R, t, FrontPoints(R, t, 30, rng));
    const DecomposedEdge d =
        DecomposeEdge(pair.edge, pair.features1, pair.features2, pair.camera, pair.camera);
    ASSERT_TRUE(d.valid);
    ASSERT_TRUE(d.translation);
    EXPECT_LT(AngularDistance(d.rotation, R), 1e-6) << trial;
    EXPECT_LT(std::acos(std::clamp(d.translation->dot(t), -1.0, 1.0)), 1e-6) << trial;
    EXPECT_NEAR(d.translation->norm(), 1.0, 1e-9);
  }
}

TEST(FilterEpipoleAndAngle, SidewaysMotionKeepsOffAxisPoint) {
  const Rotation R = Rotation::Identity();
  const Vector3d t(1, 0, 0);
  PairCase pair = MakePair(R, t, {Vector3d(0.2, 0.3, 3.0)});
  pair.edge.rotation = R;
  pair.edge.translation = t;
  EXPECT_EQ(FilterEpipoleAndAngle(pair.edge, pair.features1, pair.features2, pair.camera,
                                  pair.camera, 1.0, 1.0)
                .size(),
            1u);
}

TEST(FilterEpipoleAndAngle, ForwardMotionOnAxisRemoved) {
  const Rotation R = Rotation::Identity();
  const Vector3d t(0, 0, 1);
  PairCase pair = MakePair(R, t, {Vector3d(0, 0, 4.0), Vector3d(1.0, 0.5, 3.0)});
  pair.edge.rotation = R;
  pair.edge.translation = t;
  const auto kept = FilterEpipoleAndAngle(pair.edge, pair.features1, pair.features2,
                                          pair.camera, pair.camera, 1.0, 1.0);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].idx1, 1u);
}

TEST(FilterEpipoleAndAngle, ExactlyPlantedNearEpipoleRemoved) {
  std::mt19937_64 rng(11);
  const Rotation R = Rotation::Identity();
  const Vector3d t(0, 0, 1);
  std::uniform_real_distribution<double> wide(DegToRad(10.0), DegToRad(40.0));
  std::uniform_real_distribution<double> azimuth(-kPi, kPi), depth(2.0, 3.0);
  std::vector<Vector3d> points;
  std::set<feature_t> planted;
  for (int k = 0; k < 100; ++k) {
    const bool near = k % 20 == 0;
    const double angle = near ? DegToRad(0.5) : wide(rng);
    const double phi = azimuth(rng);
    const Vector3d dir(std::sin(angle) * std::cos(phi), std::sin(angle) * std::sin(phi),
                       std::cos(angle));
    if (near) planted.insert(static_cast<feature_t>(k));
    points.push_back(depth(rng) * dir);
  }
  PairCase pair = MakePair(R, t, points);
  pair.edge.rotation = R;
  pair.edge.translation = t;
  const auto kept = FilterEpipoleAndAngle(pair.edge, pair.features1, pair.features2,
                                          pair.camera, pair.camera, 1.0, 1.0);
  // Oracle: angles of both rays to the baseline and between the rays.
  std::set<feature_t> expected_removed;
  for (feature_t k = 0; k < points.size(); ++k) {
    const Vector3d r1 = points[k].normalized();
    const Vector3d r2 = (points[k] + t).normalized();
    const double a1 = std::acos(std::abs(r1.z()));
    const double a2 = std::acos(std::abs(r2.z()));
    const double tri = std::acos(std::clamp(r1.dot(r2), -1.0, 1.0));
    if (a1 < DegToRad(1.0) || a2 < DegToRad(1.0) || tri < DegToRad(1.0)) {
      expected_removed.insert(k);
    }
  }
  EXPECT_EQ(expected_removed, planted);
  EXPECT_EQ(kept.size(), 95u);
  for (const auto& m : kept) EXPECT_FALSE(planted.count(m.idx1));
}

TEST(FilterEpipoleAndAngle, NeverAddsMatches) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Rotation R = testing::RandomRotationWithAngle(rng, 0.3);
    const Vector3d t = RandomUnitVector(rng);
    PairCase pair = MakePair(R, t, FrontPoints(R, t, 40, rng));
    pair.edge.rotation = R;
    pair.edge.translation = t;
    const auto kept = FilterEpipoleAndAngle(pair.edge, pair.features1, pair.features2,
                                            pair.camera, pair.camera, 2.0, 2.0);
    EXPECT_LE(kept.size(), pair.edge.matches.size());
    for (const auto& m : kept) {
      EXPECT_NE(std::find(pair.edge.matches.begin(), pair.edge.matches.end(), m),
                pair.edge.matches.end());
    }
    const auto verified = VerifyMatches(pair.edge, pair.features1, pair.features2,
                                        pair.camera, pair.camera, 1.0, 0);
    ASSERT_TRUE(verified);
    EXPECT_LE(verified->matches.size(), pair.edge.matches.size());
  }
}

ViewGraph GraphWithImages(int n, int features_per_image = 4) {
  ViewGraph graph;
  graph.AddCamera(CameraIntrinsics::Pinhole(100, 100, 100, 100, 50, 50));
  for (int i = 0; i < n; ++i) {
    Image image;
    image.id = static_cast<image_t>(i);
    image.camera_id = 0;
    image.name = "img" + std::to_string(i);
    for (int f = 0; f < features_per_image; ++f) image.features.emplace_back(10 + f, 20 + i);
    graph.AddImage(image);
  }
  return graph;
}

void AddMatches(ViewGraph* graph, image_t a, image_t b, std::vector<FeatureMatch> matches) {
  TwoViewGeometry edge;
  edge.image_id1 = a;
  edge.image_id2 = b;
  edge.matches = std::move(matches);
  graph->AddEdge(edge);
}

TEST(BuildTracks, TransitiveClosure) {
  ViewGraph graph = GraphWithImages(3);
  AddMatches(&graph, 0, 1, {{1, 1}});
  AddMatches(&graph, 1, 2, {{1, 1}});
  const auto tracks = BuildTracks(graph);
  ASSERT_EQ(tracks.size(), 1u);
  EXPECT_EQ(tracks[0].id, 0u);
  ASSERT_EQ(tracks[0].elements.size(), 3u);
  for (const auto& e : tracks[0].elements) EXPECT_EQ(e.feature_idx, 1u);
  EXPECT_EQ(tracks[0].elements[2].uv, graph.Images().at(2).features[1]);
}

TEST(BuildTracks, SameImageConflictDropsImage) {
  ViewGraph graph = GraphWithImages(2);
  AddMatches(&graph, 0, 1, {{1, 1}, {2, 1}});
  EXPECT_TRUE(BuildTracks(graph).empty());
}

TEST(BuildTracks, ConflictKeepsOtherImages) {
  ViewGraph graph = GraphWithImages(3);
  AddMatches(&graph, 0, 1, {{1, 1}, {2, 1}});
  AddMatches(&graph, 1, 2, {{1, 3}});
  const auto tracks = BuildTracks(graph);
  ASSERT_EQ(tracks.size(), 1u);
  ASSERT_EQ(tracks[0].elements.size(), 2u);
  EXPECT_EQ(tracks[0].elements[0].image_id, 1u);
  EXPECT_EQ(tracks[0].elements[1].image_id, 2u);
}

TEST(BuildTracks, InvalidEdgesIgnored) {
  ViewGraph graph = GraphWithImages(2);
  AddMatches(&graph, 0, 1, {{1, 1}});
  graph.MutableEdges().begin()->second.valid = false;
  EXPECT_TRUE(BuildTracks(graph).empty());
}

TEST(BuildTracks, SyntheticSceneGivesOneTrackPerPoint) {
  SyntheticSceneOptions options;
  options.num_cameras = 6;
  options.num_points = 50;
  options.seed = 13;
  const SyntheticDataset data = GenerateScene(options);
  const auto tracks = BuildTracks(data.graph);
  // Count points visible in at least two cameras: with full visibility that
  // is all of them.
  ASSERT_EQ(tracks.size(), 50u);
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    EXPECT_EQ(tracks[k].id, k);
    EXPECT_EQ(tracks[k].elements.size(), 6u);
  }
}

TEST(BuildTracks, OutputPartitionsMatchGraph) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    ViewGraph graph = GraphWithImages(6, 8);
    std::uniform_int_distribution<feature_t> feature(0, 7);
    for (image_t a = 0; a < 6; ++a) {
      for (image_t b = a + 1; b < 6; ++b) {
        std::vector<FeatureMatch> matches;
        for (int k = 0; k < 4; ++k) matches.push_back({feature(rng), feature(rng)});
        AddMatches(&graph, a, b, matches);
      }
    }
    const auto tracks = BuildTracks(graph);
    std::map<std::pair<image_t, feature_t>, track_t> owner;
    for (std::size_t k = 0; k < tracks.size(); ++k) {
      EXPECT_GE(tracks[k].elements.size(), 2u);
      if (k > 0) EXPECT_GE(tracks[k - 1].elements.size(), tracks[k].elements.size());
      std::set<image_t> images;
      for (const auto& e : tracks[k].elements) {
        EXPECT_TRUE(images.insert(e.image_id).second);
        EXPECT_TRUE(owner.emplace(std::make_pair(e.image_id, e.feature_idx), tracks[k].id)
                        .second);
      }
    }
    // Two endpoints of a match never land in different tracks.
    for (const auto& [pair, edge] : graph.Edges()) {
      for (const auto& m : edge.matches) {
        const auto a = owner.find({edge.image_id1, m.idx1});
        const auto b = owner.find({edge.image_id2, m.idx2});
        if (a != owner.end() && b != owner.end()) EXPECT_EQ(a->second, b->second);
      }
    }
  }
}

TEST(ViewGraph, RejectsInvariantViolations) {
  ViewGraph graph = GraphWithImages(2);
  EXPECT_THROW(AddMatches(&graph, 0, 0, {}), InputError);
  EXPECT_THROW(AddMatches(&graph, 0, 7, {}), InputError);
  AddMatches(&graph, 0, 1, {});
  EXPECT_THROW(AddMatches(&graph, 1, 0, {}), InputError);
  Image dangling;
  dangling.id = 9;
  dangling.camera_id = 5;
  EXPECT_THROW(graph.AddImage(dangling), InputError);
  Image duplicate;
  duplicate.id = 1;
  EXPECT_THROW(graph.AddImage(duplicate), InputError);
}

TEST(ViewGraph, LargestComponentAndRegistration) {
  ViewGraph graph = GraphWithImages(5);
  AddMatches(&graph, 0, 1, {});
  AddMatches(&graph, 2, 3, {});
  AddMatches(&graph, 3, 4, {});
  EXPECT_EQ(graph.LargestConnectedComponent(), (std::set<image_t>{2, 3, 4}));
  graph.KeepRegistered({2, 3, 4});
  EXPECT_FALSE(graph.Images().at(0).registered);
  EXPECT_TRUE(graph.Images().at(3).registered);
}

TEST(ConnectedComponents, SortedBySizeThenSmallestId) {
  const auto components =
      ConnectedComponents({1, 2, 3, 4, 5, 6}, {{5, 6}, {1, 2}, {3, 4}, {4, 6}});
  ASSERT_EQ(components.size(), 2u);
  EXPECT_EQ(components[0], (std::vector<image_t>{3, 4, 5, 6}));
  EXPECT_EQ(components[1], (std::vector<image_t>{1, 2}));
  const auto singletons = ConnectedComponents({3, 1, 2}, {});
  EXPECT_EQ(singletons.front(), std::vector<image_t>{1});
}

}  // namespace
}  // namespace gsfm
