#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "satsplat/errors.hpp"
#include "satsplat/random.hpp"
#include "satsplat/splat_model.hpp"
#include "satsplat/synthetic.hpp"
#include "../support/oracles.hpp"

using namespace satsplat;

namespace {

GaussianSplat random_splat(Rng& rng, bool with_rest) {
  GaussianSplat s;
  s.mean = Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
  s.rotation = Eigen::Vector4d(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
  s.log_scale = Vec3(rng.uniform(-4, 1), rng.uniform(-4, 1), rng.uniform(-4, 1));
  s.opacity_logit = rng.uniform(-5, 5);
  s.color_dc = Vec3(rng.normal(), rng.normal(), rng.normal());
  if (with_rest) {
    for (double& c : s.color_rest) c = rng.normal(0, 0.2);
  }
  return s;
}

// Rounds every field to float32, as the file stores them.
GaussianSplat to_float(GaussianSplat s) {
  auto f = [](double v) { return static_cast<double>(static_cast<float>(v)); };
  for (int i = 0; i < 3; ++i) {
    s.mean[i] = f(s.mean[i]);
    s.log_scale[i] = f(s.log_scale[i]);
    s.color_dc[i] = f(s.color_dc[i]);
  }
  for (int i = 0; i < 4; ++i) s.rotation[i] = f(s.rotation[i]);
  s.opacity_logit = f(s.opacity_logit);
  for (double& c : s.color_rest) c = f(c);
  return s;
}

std::string one_vertex_ply(const char* format) {
  std::string header = std::string("ply\nformat ") + format +
                       " 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
                       "property float f_dc_0\nproperty float f_dc_1\nproperty float f_dc_2\n"
                       "property float opacity\nproperty float scale_0\nproperty float scale_1\n"
                       "property float scale_2\nproperty float rot_0\nproperty float rot_1\n"
                       "property float rot_2\nproperty float rot_3\nend_header\n";
  const float values[14] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0};
  header.append(reinterpret_cast<const char*>(values), sizeof(values));
  return header;
}

}  // namespace

TEST(Covariance, IdentityAndAxisScale) {
  GaussianSplat s;
  EXPECT_TRUE(covariance_world(s).isApprox(Mat3::Identity(), 1e-15));
  s.log_scale = Vec3(std::log(2.0), 0, 0);
  EXPECT_LT((covariance_world(s) - Vec3(4, 1, 1).asDiagonal().toDenseMatrix()).norm(), 1e-12);
}

TEST(Covariance, NinetyDegreesAboutZ) {
  GaussianSplat s;
  s.log_scale = Vec3(std::log(2.0), 0, 0);
  const double h = std::sqrt(0.5);
  s.rotation = Eigen::Vector4d(h, 0, 0, h);
  const Mat3 expected = Vec3(1, 4, 1).asDiagonal();
  EXPECT_LT((covariance_world(s) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Covariance, MatchesRodriguesOracle) {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const GaussianSplat s = random_splat(rng, false);
    const Mat3 R = oracle::rotation_from_quaternion(s.rotation[0], s.rotation[1], s.rotation[2],
                                                    s.rotation[3]);
    const Mat3 S = s.log_scale.array().exp().matrix().asDiagonal();
    const Mat3 expected = R * S * S.transpose() * R.transpose();
    const Mat3 got = covariance_world(s);
    EXPECT_LT((got - expected).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, expected.norm()));
    EXPECT_EQ(got, got.transpose());
    Eigen::SelfAdjointEigenSolver<Mat3> eig(got);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
    const double det = std::exp(2 * s.log_scale.sum());
    EXPECT_NEAR(got.determinant(), det, 1e-9 * det);
  }
}

TEST(Color, DegreeZeroOffsetAndIsotropy) {
  GaussianSplat s;
  const Vec3 c = eval_color(s, Vec3(0, 0, 1), 0);
  EXPECT_EQ(c, Vec3(0.5, 0.5, 0.5));
  s.color_dc = Vec3(0.3, -0.2, 5.0);
  EXPECT_EQ(eval_color(s, Vec3(0, 0, 1), 0), eval_color(s, Vec3(0.6, 0, 0.8), 0));
  EXPECT_EQ(eval_color(s, Vec3(1, 0, 0), 0).z(), 1.0);
}

TEST(Color, DegreeOneZTermSign) {
  for (double coef : {0.4, -0.4}) {
    GaussianSplat s;
    for (int c = 0; c < 3; ++c) s.color_rest[c * kShRestPerChannel + 1] = coef;
    const Vec3 up = eval_color(s, Vec3(0, 0, 1), 1);
    const Vec3 down = eval_color(s, Vec3(0, 0, -1), 1);
    for (int c = 0; c < 3; ++c) {
      EXPECT_GT((up[c] - down[c]) * coef, 0.0);
    }
    // Degree 0 ignores the coefficient.
    EXPECT_EQ(eval_color(s, Vec3(0, 0, 1), 0), eval_color(s, Vec3(0, 0, -1), 0));
  }
}

TEST(Ply, SingleIdentityVertex) {
  const SplatCloud cloud = parse_splat_ply(one_vertex_ply("binary_little_endian"));
  ASSERT_EQ(cloud.splats.size(), 1u);
  EXPECT_EQ(cloud.sh_degree, 0);
  EXPECT_TRUE(covariance_world(cloud.splats[0]).isApprox(Mat3::Identity(), 1e-15));
}

TEST(Ply, AsciiAndBigEndianUnsupported) {
  EXPECT_THROW(parse_splat_ply("ply\nformat ascii 1.0\nelement vertex 0\nend_header\n"),
               UnsupportedFormat);
  EXPECT_THROW(parse_splat_ply(one_vertex_ply("binary_big_endian")), UnsupportedFormat);
}

TEST(Ply, TruncatedPayloadReportsOffset) {
  SplatCloud cloud;
  Rng rng(1);
  for (int i = 0; i < 10; ++i) cloud.splats.push_back(random_splat(rng, false));
  std::string bytes = serialize_splat_ply(cloud);
  const std::size_t record = (bytes.size() - bytes.find("end_header\n") - 11) / 10;
  bytes.resize(bytes.size() - record);
  try {
    parse_splat_ply(bytes);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GT(e.byte_offset(), 0u);
    EXPECT_LE(e.byte_offset(), bytes.size());
  }
}

TEST(Ply, MalformedHeader) {
  EXPECT_THROW(parse_splat_ply("not a ply"), ParseError);
  EXPECT_THROW(parse_splat_ply("ply\nformat binary_little_endian 1.0\nelement vertex 1\n"),
               ParseError);
  EXPECT_THROW(parse_splat_ply("ply\nformat binary_little_endian 1.0\nelement vertex 1\n"
                               "property float x\nend_header\n\0\0\0\0"),
               ParseError);
}

TEST(Ply, RoundTripIsFieldExact) {
  Rng rng(77);
  for (int degree : {0, 3}) {
    SplatCloud cloud;
    cloud.sh_degree = degree;
    for (int i = 0; i < 100; ++i) cloud.splats.push_back(to_float(random_splat(rng, degree > 0)));
    const SplatCloud back = parse_splat_ply(serialize_splat_ply(cloud));
    ASSERT_EQ(back.splats.size(), cloud.splats.size());
    EXPECT_EQ(back.sh_degree, degree);
    for (std::size_t i = 0; i < cloud.splats.size(); ++i) {
      EXPECT_EQ(back.splats[i], cloud.splats[i]) << "splat " << i;
    }
    EXPECT_EQ(serialize_splat_ply(back), serialize_splat_ply(cloud));
  }
}

TEST(Ply, UnnormalizedQuaternionIsNormalizedOnLoad) {
  SplatCloud cloud;
  GaussianSplat s;
  s.rotation = Eigen::Vector4d(2, 0, 0, 0);
  cloud.splats.push_back(s);
  const SplatCloud back = parse_splat_ply(serialize_splat_ply(cloud));
  EXPECT_NEAR(back.splats[0].rotation.norm(), 1.0, 1e-12);
}

TEST(Ply, ZeroQuaternionRejected) {
  SplatCloud cloud;
  GaussianSplat s;
  s.rotation = Eigen::Vector4d::Zero();
  cloud.splats.push_back(s);
  EXPECT_THROW(parse_splat_ply(serialize_splat_ply(cloud)), Error);
}

TEST(Ply, FileRoundTrip) {
  const auto dir = oracle::fresh_dir("ply");
  const SyntheticSatellite sat = make_synthetic_satellite(200, 3);
  save_splat_ply(dir / "s.ply", sat.cloud);
  const SplatCloud back = load_splat_ply(dir / "s.ply");
  ASSERT_EQ(back.splats.size(), 200u);
  for (std::size_t i = 0; i < back.splats.size(); ++i) {
    EXPECT_EQ(back.splats[i].mean, to_float(sat.cloud.splats[i]).mean);
  }
  EXPECT_THROW(load_splat_ply(dir / "missing.ply"), IoError);
}
