#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include "satsplat/errors.hpp"
#include "satsplat/image.hpp"
#include "satsplat/random.hpp"
#include "satsplat/renderer.hpp"
#include "satsplat/synthetic.hpp"
#include "../support/oracles.hpp"

using namespace satsplat;

namespace {

constexpr double kC0 = 0.28209479177387814;

PoseMatrix axis_camera() {
  return PoseMatrix::from_axes(Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3::Zero());
}

Intrinsics square(int size, double f) { return {f, f, size / 2.0, size / 2.0, size, size}; }

GaussianSplat colored(const Vec3& mean, const Vec3& rgb, double logit, double sigma) {
  GaussianSplat s;
  s.mean = mean;
  s.color_dc = (rgb - Vec3::Constant(0.5)) / kC0;
  s.opacity_logit = logit;
  s.log_scale = Vec3::Constant(std::log(sigma));
  return s;
}

}  // namespace

TEST(Projection, UnitCovarianceOnAxis) {
  const Intrinsics intr = square(64, 50);
  for (double z : {2.0, 5.0, 11.0}) {
    GaussianSplat s;
    s.mean = Vec3(0, 0, z);
    const auto p = project_gaussian(s, axis_camera(), intr, 0.01);
    ASSERT_TRUE(p.has_value());
    EXPECT_NEAR(p->mean2d.x(), 32.0, 1e-12);
    EXPECT_NEAR(p->mean2d.y(), 32.0, 1e-12);
    const double k = 50.0 * 50.0 / (z * z) + kLowPassFloor;
    EXPECT_NEAR(p->cov2d(0, 0), k, 1e-9);
    EXPECT_NEAR(p->cov2d(1, 1), k, 1e-9);
    EXPECT_NEAR(p->cov2d(0, 1), 0.0, 1e-12);
    EXPECT_EQ(p->depth, z);
    EXPECT_NEAR(p->alpha, 0.5, 1e-15);
  }
}

TEST(Projection, BehindCameraIsCulled) {
  GaussianSplat s;
  s.mean = Vec3(0, 0, -1);
  EXPECT_FALSE(project_gaussian(s, axis_camera(), square(64, 50), 0.01).has_value());
  s.mean = Vec3(0, 0, 0.005);
  EXPECT_FALSE(project_gaussian(s, axis_camera(), square(64, 50), 0.01).has_value());
}

TEST(Projection, FarOutsideViewportIsCulled) {
  GaussianSplat s;
  s.mean = Vec3(100, 0, 1);
  s.log_scale = Vec3::Constant(std::log(0.01));
  EXPECT_FALSE(project_gaussian(s, axis_camera(), square(64, 50), 0.01).has_value());
}

TEST(Projection, UpIsImageUp) {
  GaussianSplat s;
  s.mean = Vec3(0, 1, 5);
  const auto p = project_gaussian(s, axis_camera(), square(64, 50), 0.01);
  ASSERT_TRUE(p.has_value());
  EXPECT_LT(p->mean2d.y(), 32.0);
}

TEST(Projection, DepthDoublingQuartersEigenvalues) {
  Rng rng(4);
  const Intrinsics intr = square(256, 200);
  const Mat3 W = axis_camera().world_to_camera_rotation();
  for (int i = 0; i < 50; ++i) {
    GaussianSplat s;
    s.rotation = Eigen::Vector4d(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
    s.log_scale = Vec3(rng.uniform(-3, 0), rng.uniform(-3, 0), rng.uniform(-3, 0));
    const Mat3 cov = covariance_world(s);
    const double z = rng.uniform(1, 10);
    const Vec3 cam(0, 0, z);
    const Eigen::Matrix2d a = projected_covariance(cov, W, projection_jacobian(cam, intr));
    const Eigen::Matrix2d b = projected_covariance(cov, W, projection_jacobian(2 * cam, intr));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> ea(a), eb(b);
    for (int k = 0; k < 2; ++k) {
      EXPECT_NEAR(eb.eigenvalues()[k] * 4.0, ea.eigenvalues()[k], 1e-9 * ea.eigenvalues()[k]);
    }
  }
}

TEST(Projection, JacobianMatchesFiniteDifferences) {
  Rng rng(6);
  const Intrinsics intr = square(256, 300);
  for (int i = 0; i < 100; ++i) {
    const double z = rng.uniform(1, 20);
    const Vec3 cam(rng.uniform(-0.1, 0.1) * z, rng.uniform(-0.1, 0.1) * z, z);
    const auto J = projection_jacobian(cam, intr);
    const double h = 1e-5 * z;
    for (int k = 0; k < 3; ++k) {
      Vec3 dp = cam, dm = cam;
      dp[k] += h;
      dm[k] -= h;
      const Eigen::Vector2d fd = (project_camera_point(dp, intr) - project_camera_point(dm, intr)) / (2 * h);
      for (int r = 0; r < 2; ++r) {
        EXPECT_NEAR(fd[r], J(r, k), 1e-4 * std::max(1.0, std::abs(J(r, k))));
      }
    }
  }
}

TEST(Render, EmptyCloudIsBackground) {
  const Image black = render(SplatCloud{}, axis_camera(), square(32, 30), RenderConfig{});
  EXPECT_EQ(black, Image(32, 32, 0.0));
  RenderConfig cfg;
  cfg.background = Vec3(0.2, 0.4, 0.6);
  const Image bg = render(SplatCloud{}, axis_camera(), square(8, 8), cfg);
  EXPECT_EQ(bg.at(3, 5, 2), 0.6);
}

TEST(Render, SingleSplatPeaksAtPrincipalPoint) {
  SplatCloud cloud;
  cloud.splats.push_back(colored(Vec3(0, 0, 5), Vec3(1, 0, 0), 12.0, 0.3));
  RenderDiagnostics diag;
  const Image img = render(cloud, axis_camera(), square(64, 60), RenderConfig{}, &diag);
  double best = -1;
  int bx = -1, by = -1;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (img.at(x, y, 0) > best) {
        best = img.at(x, y, 0);
        bx = x;
        by = y;
      }
      EXPECT_EQ(img.at(x, y, 1), 0.0);
    }
  }
  EXPECT_EQ(bx, 32);
  EXPECT_EQ(by, 32);
  for (int r = 0; r + 1 < 10; ++r) EXPECT_GT(img.at(32 + r, 32, 0), img.at(33 + r, 32, 0));
  EXPECT_LE(diag.max_contribution, sigmoid(12.0));
  EXPECT_EQ(diag.visible_splats, 1u);
}

TEST(Render, OpaqueFrontSplatHidesBack) {
  SplatCloud cloud;
  cloud.splats.push_back(colored(Vec3(0, 0, 8), Vec3(0, 1, 0), 12.0, 0.5));
  cloud.splats.push_back(colored(Vec3(0, 0, 4), Vec3(1, 0, 0), 20.0, 0.5));
  const Image img = render(cloud, axis_camera(), square(64, 60), RenderConfig{});
  EXPECT_NEAR(img.at(32, 32, 0), 1.0, 1e-3);
  EXPECT_NEAR(img.at(32, 32, 1), 0.0, 1e-3);
  EXPECT_NEAR(img.at(32, 32, 2), 0.0, 1e-3);
}

TEST(Render, PermutationGivesBitIdenticalImage) {
  const SplatCloud cloud = make_random_cloud(2000, 1.0, 12);
  const PoseMatrix pose = look_at_pose(Vec3(0, -4, 0.5), Vec3::Zero(), Vec3(0, 0, 1));
  const Intrinsics intr = square(96, 90);
  const Image ref = render(cloud, pose, intr, RenderConfig{});
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 3; ++trial) {
    SplatCloud shuffled = cloud;
    std::shuffle(shuffled.splats.begin(), shuffled.splats.end(), gen);
    EXPECT_EQ(render(shuffled, pose, intr, RenderConfig{}), ref);
  }
}

TEST(Render, ThreadCountDoesNotChangeOutput) {
  const SplatCloud cloud = make_random_cloud(3000, 1.0, 9);
  const PoseMatrix pose = look_at_pose(Vec3(3, -3, 1), Vec3::Zero(), Vec3(0, 0, 1));
  RenderConfig one, many;
  one.threads = 1;
  many.threads = 4;
  many.tile_size = 7;
  EXPECT_EQ(render(cloud, pose, square(80, 70), one), render(cloud, pose, square(80, 70), many));
}

TEST(Render, TransmittanceInvariants) {
  const SplatCloud cloud = make_random_cloud(5000, 1.0, 21);
  const PoseMatrix pose = look_at_pose(Vec3(0, -3.5, 0.3), Vec3::Zero(), Vec3(0, 0, 1));
  RenderDiagnostics diag;
  const Image img = render(cloud, pose, square(128, 120), RenderConfig{}, &diag);
  EXPECT_EQ(diag.transmittance_increases, 0u);
  EXPECT_EQ(diag.transmittance_out_of_range, 0u);
  EXPECT_EQ(diag.nonfinite_values, 0u);
  EXPECT_GT(diag.visible_splats, 1000u);
  for (double v : img.data()) {
    ASSERT_TRUE(std::isfinite(v));
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
  for (double t : diag.final_transmittance) {
    ASSERT_GE(t, 0.0);
    ASSERT_LE(t, 1.0);
  }
}

TEST(RenderBatch, WritesPngsAndManifestDeterministically) {
  const auto dir = oracle::fresh_dir("batch");
  const SyntheticSatellite sat = make_synthetic_satellite(300, 2);
  const auto views = make_orbit_views(3, 5.0, square(48, 48), 0.0, 1);
  const auto out = render_batch(sat.cloud, views, RenderConfig{}, dir / "a");
  ASSERT_EQ(out.size(), 3u);
  render_batch(sat.cloud, views, RenderConfig{}, dir / "b");

  std::ifstream in(dir / "a" / kRenderManifestName);
  const auto manifest = nlohmann::json::parse(in);
  EXPECT_EQ(manifest.size(), 3u);
  for (const CameraView& v : views) {
    ASSERT_TRUE(manifest.contains(v.id));
    EXPECT_EQ(manifest[v.id]["width"], 48);
    const std::string name = v.id + ".png";
    EXPECT_EQ(manifest[v.id]["file"], name);
    auto slurp = [](const std::filesystem::path& p) {
      std::ifstream f(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(f), {});
    };
    EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name));
    const Image png = read_png(dir / "a" / name);
    const Image direct = render(sat.cloud, v.pose, v.intrinsics, RenderConfig{});
    for (std::size_t k = 0; k < png.data().size(); ++k) {
      EXPECT_NEAR(png.data()[k], direct.data()[k], 0.5 / 255 + 1e-12);
    }
  }
}

TEST(Image, PngRoundTripOfQuantizedValues) {
  const auto dir = oracle::fresh_dir("png");
  Image img(5, 3);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 5; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = ((x * 31 + y * 7 + c * 50) % 256) / 255.0;
    }
  }
  write_png(dir / "x.png", img);
  EXPECT_EQ(read_png(dir / "x.png"), img);
  EXPECT_THROW(read_png(dir / "none.png"), IoError);
}
