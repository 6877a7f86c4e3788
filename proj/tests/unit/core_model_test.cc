#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gsfm/camera.h"
#include "gsfm/errors.h"
#include "gsfm/rotation.h"
#include "test_helpers.h"

namespace gsfm {
namespace {

using testing::RandomRotation;
using testing::RandomUnitVector;

TEST(AngularDistance, Identity) {
  EXPECT_DOUBLE_EQ(AngularDistance(Rotation::Identity(), Rotation::Identity()), 0.0);
}

TEST(AngularDistance, QuarterTurn) {
  const Rotation r = Rotation::FromAxisAngle(Vector3d::UnitZ(), kPi / 2);
  EXPECT_NEAR(AngularDistance(Rotation::Identity(), r), kPi / 2, 1e-12);
}

TEST(AngularDistance, SameAxisDifference) {
  const Vector3d axis = Vector3d(1, 2, -0.5).normalized();
  const Rotation a = Rotation::FromAxisAngle(axis, 0.3);
  const Rotation b = Rotation::FromAxisAngle(axis, 1.0);
  EXPECT_NEAR(AngularDistance(a, b), 0.7, 1e-12);
  EXPECT_NEAR(AngularDistance(b, a), 0.7, 1e-12);
}

TEST(AngularDistance, TriangleInequality) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 1000; ++k) {
    const Rotation a = RandomRotation(rng), b = RandomRotation(rng), c = RandomRotation(rng);
    EXPECT_LE(AngularDistance(a, c), AngularDistance(a, b) + AngularDistance(b, c) + 1e-9);
    EXPECT_GE(AngularDistance(a, b), 0.0);
    EXPECT_LE(AngularDistance(a, b), kPi + 1e-12);
  }
}

TEST(LogMap, Identity) { EXPECT_EQ(LogMap(Rotation::Identity()), Vector3d::Zero()); }

TEST(LogMap, QuarterTurnAboutX) {
  const Vector3d w = LogMap(Rotation::FromAxisAngle(Vector3d::UnitX(), kPi / 2));
  EXPECT_NEAR((w - Vector3d(kPi / 2, 0, 0)).norm(), 0.0, 1e-12);
}

TEST(LogMap, RoundTrip) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 1000; ++k) {
    const Rotation r = RandomRotation(rng);
    const Vector3d w = LogMap(r);
    EXPECT_LE(w.norm(), kPi + 1e-12);
    EXPECT_TRUE(ExpMap(w).IsApprox(r, 1e-9));
  }
}

TEST(LogMap, NearZeroAndNearPi) {
  std::mt19937_64 rng(3);
  for (const double angle : {1e-12, 1e-8, 1e-4, kPi - 1e-4, kPi - 1e-8, kPi}) {
    const Vector3d axis = RandomUnitVector(rng);
    const Rotation r = Rotation::FromAxisAngle(axis, angle);
    const Vector3d w = LogMap(r);
    EXPECT_NEAR(w.norm(), angle, 1e-9) << angle;
    EXPECT_TRUE(ExpMap(w).IsApprox(r, 1e-9)) << angle;
  }
}

TEST(Rotation, CanonicalSignMakesEqualityWellDefined) {
  const Rotation a(0.5, 0.5, 0.5, 0.5);
  const Rotation b(-0.5, -0.5, -0.5, -0.5);
  EXPECT_EQ(a.w(), b.w());
  EXPECT_EQ(a.x(), b.x());
  EXPECT_TRUE(a.IsApprox(b));
  const Rotation c(0.0, 0.0, -1.0, 0.0);
  EXPECT_GT(c.y(), 0.0);
}

TEST(Rotation, ZeroQuaternionThrows) { EXPECT_THROW(Rotation(0, 0, 0, 0), InputError); }

TEST(Rotation, MatrixRoundTrip) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 100; ++k) {
    const Rotation r = RandomRotation(rng);
    EXPECT_TRUE(Rotation::FromMatrix(r.ToMatrix()).IsApprox(r, 1e-12));
    const Vector3d v = RandomUnitVector(rng);
    EXPECT_NEAR(((r * r.Inverse()) * v - v).norm(), 0.0, 1e-12);
  }
}

TEST(Pose, TranslationIsMinusRc) {
  Pose pose;
  pose.rotation = Rotation::FromAxisAngle(Vector3d::UnitY(), 0.4);
  pose.center = Vector3d(1, 2, 3);
  EXPECT_NEAR((pose.Translation() + pose.rotation * pose.center).norm(), 0.0, 1e-15);
  const Pose back = Pose::FromRotationTranslation(pose.rotation, pose.Translation());
  EXPECT_NEAR((back.center - pose.center).norm(), 0.0, 1e-12);
}

TEST(Project, OpticalAxis) {
  const auto camera = CameraIntrinsics::Pinhole(100, 100, 100, 100, 50, 50);
  const auto uv = Project(camera, Pose{}, Vector3d(0, 0, 1));
  ASSERT_TRUE(uv);
  EXPECT_EQ(*uv, Vector2d(50, 50));
}

TEST(Project, OffAxis) {
  const auto camera = CameraIntrinsics::Pinhole(100, 100, 100, 100, 50, 50);
  const auto uv = Project(camera, Pose{}, Vector3d(0.1, 0, 1));
  ASSERT_TRUE(uv);
  EXPECT_NEAR((*uv - Vector2d(60, 50)).norm(), 0.0, 1e-12);
}

TEST(Project, SimpleRadialMatchesPolynomial) {
  const auto camera = CameraIntrinsics::SimpleRadial(100, 100, 100, 50, 50, 0.1);
  const auto uv = Project(camera, Pose{}, Vector3d(0.1, 0, 1));
  ASSERT_TRUE(uv);
  // x (1 + k1 r^2) with x = 0.1, r^2 = 0.01.
  const double distorted = 0.1 * (1.0 + 0.1 * 0.01);
  EXPECT_NEAR(uv->x(), 100.0 * distorted + 50.0, 1e-12);
  EXPECT_NEAR(uv->y(), 50.0, 1e-12);
}

TEST(Project, BehindCamera) {
  const auto camera = CameraIntrinsics::Pinhole(100, 100, 100, 100, 50, 50);
  EXPECT_FALSE(Project(camera, Pose{}, Vector3d(0, 0, -1)));
  EXPECT_FALSE(Project(camera, Pose{}, Vector3d(1, 0, 0)));
}

TEST(RayDirection, PrincipalPoint) {
  const auto camera = CameraIntrinsics::Pinhole(640, 480, 500, 500, 320, 240);
  EXPECT_NEAR((RayDirection(camera, Vector2d(320, 240)) - Vector3d::UnitZ()).norm(), 0.0,
              1e-15);
}

TEST(RayDirection, OneFocalSideways) {
  const auto camera = CameraIntrinsics::Pinhole(640, 480, 500, 500, 320, 240);
  EXPECT_NEAR((RayDirection(camera, Vector2d(820, 240)) - Vector3d(1, 0, 1).normalized()).norm(),
              0.0, 1e-15);
}

class ProjectRayRoundTrip : public ::testing::TestWithParam<CameraModel> {};

TEST_P(ProjectRayRoundTrip, RandomPixels) {
  const CameraIntrinsics camera =
      GetParam() == CameraModel::kPinhole
          ? CameraIntrinsics::Pinhole(640, 480, 500, 480, 320, 240)
          : CameraIntrinsics::SimpleRadial(640, 480, 500, 320, 240, -0.1);
  const double tolerance = GetParam() == CameraModel::kPinhole ? 1e-6 : 1e-4;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 640.0), v(0.0, 480.0), depth(0.5, 20.0);
  std::mt19937_64 pose_rng(6);
  Pose pose;
  pose.rotation = RandomRotation(pose_rng);
  pose.center = Vector3d(1, -2, 0.5);
  for (int k = 0; k < 1000; ++k) {
    const Vector2d pixel(u(rng), v(rng));
    const Vector3d ray = RayDirection(camera, pixel);
    EXPECT_NEAR(ray.norm(), 1.0, 1e-9);
    const Vector3d X = pose.center + pose.rotation.Inverse() * (depth(rng) * ray);
    const auto back = Project(camera, pose, X);
    ASSERT_TRUE(back);
    EXPECT_LT((*back - pixel).norm(), tolerance);
  }
}

INSTANTIATE_TEST_SUITE_P(Models, ProjectRayRoundTrip,
                         ::testing::Values(CameraModel::kPinhole, CameraModel::kSimpleRadial));

TEST(RayDirection, AbsurdDistortionThrows) {
  const auto camera = CameraIntrinsics::SimpleRadial(640, 480, 100, 320, 240, -5.0);
  EXPECT_THROW(RayDirection(camera, Vector2d(639, 479)), InputError);
}

TEST(CameraIntrinsics, ValidateRejectsNonPositiveFocal) {
  auto camera = CameraIntrinsics::Pinhole(640, 480, 500, 500, 320, 240);
  camera.fx = 0.0;
  EXPECT_THROW(camera.Validate(), InputError);
  EXPECT_THROW(CameraModelFromName("FISHEYE"), InputError);
  EXPECT_EQ(CameraModelFromName("SIMPLE_RADIAL"), CameraModel::kSimpleRadial);
}

TEST(CameraIntrinsics, ParamsRoundTrip) {
  const auto camera = CameraIntrinsics::SimpleRadial(640, 480, 500, 320, 240, 0.05);
  const auto back = CameraIntrinsics::FromParams(CameraModel::kSimpleRadial, 640, 480,
                                                 camera.Params());
  EXPECT_EQ(back.fx, camera.fx);
  EXPECT_EQ(back.fy, camera.fy);
  EXPECT_EQ(back.k1, camera.k1);
  EXPECT_EQ(back.cx, camera.cx);
}

}  // namespace
}  // namespace gsfm
