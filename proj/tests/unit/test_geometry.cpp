#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "satsplat/errors.hpp"
#include "satsplat/geometry.hpp"
#include "satsplat/random.hpp"
#include "../support/oracles.hpp"

using namespace satsplat;

namespace {

PoseMatrix aimed(const Vec3& position, const Vec3& target) {
  const Vec3 f = (target - position).normalized();
  const Vec3 hint = std::abs(f.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  return look_at_pose(position, target, hint);
}

void expect_frame(const PoseMatrix& p, double tol) {
  EXPECT_NEAR(p.right().norm(), 1.0, tol);
  EXPECT_NEAR(p.up().norm(), 1.0, tol);
  EXPECT_NEAR(p.forward().norm(), 1.0, tol);
  EXPECT_NEAR(p.right().dot(p.up()), 0.0, tol);
  EXPECT_NEAR(p.right().dot(p.forward()), 0.0, tol);
  EXPECT_NEAR(p.up().dot(p.forward()), 0.0, tol);
  EXPECT_LT((p.right().cross(p.up()) - p.forward()).norm(), tol);
  EXPECT_EQ(p.matrix().row(3), Eigen::RowVector4d(0, 0, 0, 1));
}

}  // namespace

TEST(Attention, TwoPerpendicularLinesMeetAtOrigin) {
  const std::vector<PoseMatrix> poses = {
      PoseMatrix::from_axes(Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(-1, 0, 0), Vec3(1, 0, 0)),
      PoseMatrix::from_axes(Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, -1, 0), Vec3(0, 1, 0))};
  const AttentionSolution s = solve_attention_center(poses);
  EXPECT_LT(s.center.norm(), 1e-12);
  EXPECT_LT(s.residual_rms, 1e-12);
  ASSERT_EQ(s.line_params.size(), 2u);
  EXPECT_NEAR(s.line_params[0], 1.0, 1e-12);
  EXPECT_NEAR(s.line_params[1], 1.0, 1e-12);
}

TEST(Attention, FiveCamerasOnCircleAimedAtPoint) {
  const Vec3 target(1, 2, 3);
  std::vector<PoseMatrix> poses;
  for (int i = 0; i < 5; ++i) {
    const double a = 2 * std::numbers::pi * i / 5;
    poses.push_back(aimed(target + Vec3(4 * std::cos(a), 4 * std::sin(a), 0.5 * i), target));
  }
  const AttentionSolution s = solve_attention_center(poses);
  EXPECT_LT((s.center - target).norm(), 1e-9);
  EXPECT_LT(s.residual_rms, 1e-9);
}

TEST(Attention, SkewLinesMatchGridOracle) {
  // Lines {(t,0,0)} and {(0,s,1)}.
  const std::vector<PoseMatrix> poses = {
      PoseMatrix::from_axes(Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(-2, 0, 0)),
      PoseMatrix::from_axes(Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, -2, 1))};
  const AttentionSolution s = solve_attention_center(poses);
  EXPECT_LT((s.center - Vec3(0, 0, 0.5)).norm(), 1e-12);

  const std::vector<oracle::Line> lines = {{Vec3(0, 0, 0), Vec3(1, 0, 0)},
                                           {Vec3(0, 0, 1), Vec3(0, 1, 0)}};
  Vec3 argmin;
  const double grid = oracle::grid_minimum(lines, Vec3(-1, -1, -1), Vec3(1, 1, 2), 41, &argmin);
  EXPECT_LE(oracle::summed_squared_distance(s.center, lines), grid + 1e-12);
  EXPECT_NEAR(argmin.z(), 0.5, 0.05);
}

TEST(Attention, ParallelLinesAreDegenerate) {
  std::vector<PoseMatrix> poses;
  for (int i = 0; i < 4; ++i) {
    poses.push_back(PoseMatrix::from_axes(Vec3(1, 0, 0), Vec3(0, -1, 0), Vec3(0, 0, -1),
                                          Vec3(i, 2.0 * i, 5)));
  }
  EXPECT_THROW(solve_attention_center(poses), DegenerateGeometry);
}

TEST(Attention, SinglePoseIsDegenerate) {
  const std::vector<PoseMatrix> poses = {aimed(Vec3(1, 0, 0), Vec3::Zero())};
  EXPECT_THROW(solve_attention_center(poses), DegenerateGeometry);
}

TEST(Attention, ExactForConsistentScenesAtScale) {
  Rng rng(5);
  for (int scene = 0; scene < 40; ++scene) {
    const double scale = std::pow(10.0, rng.uniform(-1, 3));
    const Vec3 q(rng.uniform(-1, 1) * scale, rng.uniform(-1, 1) * scale, rng.uniform(-1, 1) * scale);
    const int n = 2 + static_cast<int>(rng.below(99));
    std::vector<PoseMatrix> poses;
    for (int i = 0; i < n; ++i) {
      Vec3 offset(rng.normal(), rng.normal(), rng.normal());
      poses.push_back(aimed(q + offset.normalized() * scale * rng.uniform(0.5, 2.0), q));
    }
    const AttentionSolution s = solve_attention_center(poses);
    EXPECT_LT((s.center - q).norm(), 1e-6) << "scene " << scene;
    EXPECT_LT(s.residual_rms, 1e-9 * std::max(1.0, scale));
  }
}

TEST(LookAt, SpecExamples) {
  const PoseMatrix a = look_at_pose(Vec3(0, 0, -1), Vec3::Zero(), Vec3(0, 1, 0));
  EXPECT_LT((a.forward() - Vec3(0, 0, 1)).norm(), 1e-15);
  const PoseMatrix b = look_at_pose(Vec3(3, 0, 0), Vec3::Zero(), Vec3(0, 0, 1));
  EXPECT_LT((b.forward() - Vec3(-1, 0, 0)).norm(), 1e-15);
  expect_frame(b, 1e-12);
  EXPECT_LT(b.orthonormality_error(), 1e-12);
}

TEST(LookAt, ParallelHintIsDegenerate) {
  EXPECT_THROW(look_at_pose(Vec3(0, 0, 5), Vec3::Zero(), Vec3(0, 0, 1)), DegenerateGeometry);
  EXPECT_THROW(look_at_pose(Vec3::Zero(), Vec3::Zero(), Vec3(0, 0, 1)), DegenerateGeometry);
}

TEST(LookAt, RandomFramesAreOrthonormal) {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const Vec3 t(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const Vec3 hint(rng.normal(), rng.normal(), rng.normal());
    expect_frame(look_at_pose(p, t, hint), 1e-9);
  }
}

TEST(PerpendicularBasis, PicksSmallestAxis) {
  const auto [u, w] = perpendicular_basis(Vec3(0, 0, 2));
  EXPECT_NEAR(u.dot(Vec3(0, 0, 1)), 0.0, 1e-15);
  EXPECT_NEAR(w.dot(Vec3(0, 0, 1)), 0.0, 1e-15);
  EXPECT_NEAR(u.dot(w), 0.0, 1e-15);
  // Smallest |component| is x (ties go to the lowest index): u = z x e_x = +y.
  EXPECT_LT((u - Vec3(0, 1, 0)).norm(), 1e-15);
}

TEST(Circular, EquidistantFourAroundOrigin) {
  const PoseMatrix pose = look_at_pose(Vec3::Zero(), Vec3(0, 0, 1), Vec3(0, 1, 0));
  const auto out = gen_circular(pose, Vec3(0, 0, 1), 0.5, 4, CircleMode::kEquidistant, 0);
  ASSERT_EQ(out.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j) {
    const Vec3 c = out[j].position();
    EXPECT_NEAR(c.norm(), 0.5, 1e-12);
    EXPECT_NEAR(c.z(), 0.0, 1e-15);
    const Vec3 next = out[(j + 1) % 4].position();
    EXPECT_NEAR(c.dot(next), 0.0, 1e-12);
    EXPECT_LT(((Vec3(0, 0, 1) - c).normalized() - out[j].forward()).norm(), 1e-12);
    expect_frame(out[j], 1e-12);
  }
}

TEST(Circular, SinglePoseEitherMode) {
  const PoseMatrix pose = look_at_pose(Vec3(2, 0, 0), Vec3::Zero(), Vec3(0, 0, 1));
  for (CircleMode mode : {CircleMode::kRandom, CircleMode::kEquidistant}) {
    const auto out = gen_circular(pose, Vec3::Zero(), 0.3, 1, mode, 17);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_NEAR((out[0].position() - pose.position()).norm(), 0.3, 1e-12);
  }
}

TEST(Circular, RandomIsSeedDeterministic) {
  const PoseMatrix pose = look_at_pose(Vec3(2, 1, 0.5), Vec3::Zero(), Vec3(0, 0, 1));
  const auto a = gen_circular(pose, Vec3::Zero(), 0.1, 64, CircleMode::kRandom, 42);
  const auto b = gen_circular(pose, Vec3::Zero(), 0.1, 64, CircleMode::kRandom, 42);
  const auto c = gen_circular(pose, Vec3::Zero(), 0.1, 64, CircleMode::kRandom, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (const PoseMatrix& p : a) {
    EXPECT_NEAR((p.position() - pose.position()).norm(), 0.1, 1e-9);
    // The circle lies in the plane perpendicular to the view direction.
    EXPECT_NEAR((p.position() - pose.position()).dot(pose.position().normalized()), 0.0, 1e-12);
  }
}

TEST(Circular, CenterAtPositionIsDegenerate) {
  const PoseMatrix pose = look_at_pose(Vec3(1, 1, 1), Vec3::Zero(), Vec3(0, 0, 1));
  EXPECT_THROW(gen_circular(pose, Vec3(1, 1, 1), 0.5, 4, CircleMode::kEquidistant, 0),
               DegenerateGeometry);
}

TEST(Circular, RejectsBadRadiusAndCount) {
  const PoseMatrix pose = look_at_pose(Vec3(1, 1, 1), Vec3::Zero(), Vec3(0, 0, 1));
  EXPECT_THROW(gen_circular(pose, Vec3::Zero(), 0.0, 4, CircleMode::kEquidistant, 0), ConfigError);
  EXPECT_THROW(gen_circular(pose, Vec3::Zero(), 0.5, 0, CircleMode::kEquidistant, 0), ConfigError);
}

TEST(Spherical, FibonacciTwoPointsAtSixtyAndOneTwenty) {
  const PoseMatrix pose = look_at_pose(Vec3(5, 0, 0), Vec3::Zero(), Vec3(0, 0, 1));
  const auto out = gen_spherical(pose, Vec3::Zero(), 1.0, 2, SphereMode::kFibonacci, 0);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_NEAR((out[0].position() - pose.position()).z(), 0.5, 1e-12);
  EXPECT_NEAR((out[1].position() - pose.position()).z(), -0.5, 1e-12);
}

TEST(Spherical, FibonacciMeanNearCenter) {
  const PoseMatrix pose = look_at_pose(Vec3(5, 0, 0), Vec3::Zero(), Vec3(0, 0, 1));
  const auto out = gen_spherical(pose, Vec3::Zero(), 0.8, 256, SphereMode::kFibonacci, 0);
  Vec3 mean = Vec3::Zero();
  for (const PoseMatrix& p : out) mean += p.position();
  mean /= out.size();
  EXPECT_LT((mean - pose.position()).norm(), 0.05 * 0.8);
}

TEST(Spherical, RandomUnitSphereReproducible) {
  const PoseMatrix pose = look_at_pose(Vec3(3, 3, 3), Vec3::Zero(), Vec3(0, 0, 1));
  const auto a = gen_spherical(pose, Vec3::Zero(), 1.0, 64, SphereMode::kRandom, 8);
  const auto b = gen_spherical(pose, Vec3::Zero(), 1.0, 64, SphereMode::kRandom, 8);
  EXPECT_EQ(a, b);
  for (const PoseMatrix& p : a) {
    EXPECT_NEAR((p.position() - pose.position()).norm(), 1.0, 1e-9);
    EXPECT_LT((p.position().normalized() * -1.0 - p.forward()).norm(), 1e-9);
    expect_frame(p, 1e-9);
  }
}

TEST(Spherical, PositionOnCenterIsDegenerate) {
  // With m = 1 the only lattice point is phi = 90 deg, theta = 0: +x.
  const PoseMatrix pose = look_at_pose(Vec3(0, 0, -1), Vec3(0, 0, 5), Vec3(0, 1, 0));
  EXPECT_THROW(gen_spherical(pose, Vec3(0.5, 0, -1), 0.5, 1, SphereMode::kFibonacci, 0),
               DegenerateGeometry);
}

TEST(Intrinsics, Validation) {
  EXPECT_NO_THROW((Intrinsics{100, 100, 50, 50, 100, 100}.validate()));
  EXPECT_THROW((Intrinsics{0, 100, 50, 50, 100, 100}.validate()), ConfigError);
  EXPECT_THROW((Intrinsics{100, 100, 150, 50, 100, 100}.validate()), ConfigError);
  EXPECT_THROW((Intrinsics{100, 100, 50, 50, 0, 100}.validate()), ConfigError);
}

TEST(PoseMatrix, FromMatrixChecksLastRow) {
  Mat4 m = Mat4::Identity();
  EXPECT_NO_THROW(PoseMatrix::from_matrix(m));
  m(3, 0) = 1e-30;
  EXPECT_THROW(PoseMatrix::from_matrix(m), ParseError);
}
