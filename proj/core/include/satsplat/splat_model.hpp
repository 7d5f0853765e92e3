#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "satsplat/geometry.hpp"

namespace satsplat {

// Number of non-DC spherical-harmonic coefficients per channel at degree 3.
inline constexpr int kShRestPerChannel = 15;

struct GaussianSplat {
  Vec3 mean = Vec3::Zero();
  // Unit quaternion stored as (w, x, y, z).
  Eigen::Vector4d rotation{1.0, 0.0, 0.0, 0.0};
  // Natural log of the per-axis standard deviations.
  Vec3 log_scale = Vec3::Zero();
  // Pre-sigmoid opacity, as stored in exported files.
  double opacity_logit = 0.0;
  Vec3 color_dc = Vec3::Zero();
  // Higher-order SH coefficients, channel-major: color_rest[c * 15 + k] is
  // basis function k + 1 of channel c. Entries beyond the cloud's degree are 0.
  std::array<double, 3 * kShRestPerChannel> color_rest{};

  bool operator==(const GaussianSplat&) const = default;
};

struct SplatCloud {
  std::vector<GaussianSplat> splats;
  int sh_degree = 0;  // 0..3
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Rotation matrix of a (w, x, y, z) quaternion; assumes unit norm.
Mat3 quaternion_to_matrix(const Eigen::Vector4d& q);

// Sigma = R S S^T R^T with S = diag(exp(log_scale)).
Mat3 covariance_world(const GaussianSplat& splat);

// View-dependent color from the real SH basis up to sh_degree, plus 0.5,
// clamped to [0, 1]. view_dir points from the camera towards the splat.
Vec3 eval_color(const GaussianSplat& splat, const Vec3& view_dir, int sh_degree);

// Little-endian binary PLY with the usual Gaussian-splat vertex properties
// (x y z, f_dc_0..2, f_rest_*, opacity, scale_0..2, rot_0..3). Extra vertex
// properties are skipped. Quaternions are normalized when their norm differs
// from 1 by more than 1e-7.
SplatCloud load_splat_ply(const std::filesystem::path& path);
SplatCloud parse_splat_ply(std::string_view bytes);

// Writes the reference layout (including zero normals) with
// 3 * ((sh_degree + 1)^2 - 1) f_rest properties, all as float32.
void save_splat_ply(const std::filesystem::path& path, const SplatCloud& cloud);
std::string serialize_splat_ply(const SplatCloud& cloud);

}  // namespace satsplat
