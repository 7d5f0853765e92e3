#include "satsplat/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/SVD>

#include "satsplat/errors.hpp"
#include "satsplat/random.hpp"

namespace satsplat {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSingularCutoff = 1e-10;

Vec3 checked_unit(const Vec3& v, const char* what) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw DegenerateGeometry(std::string(what) + " has zero or non-finite length");
  }
  return v / n;
}

// New camera at `position` looking at `center`, keeping the source camera's
// up as the roll reference. When the new forward is parallel to that up
// (the camera pitched by 90 degrees) the source's negated forward is used.
PoseMatrix aimed_pose(const PoseMatrix& source, const Vec3& position,
                      const Vec3& center) {
  try {
    return look_at_pose(position, center, source.up());
  } catch (const DegenerateGeometry&) {
    return look_at_pose(position, center, -source.forward());
  }
}

}  // namespace

PoseMatrix::PoseMatrix() : m_(Mat4::Identity()) {}

PoseMatrix PoseMatrix::from_axes(const Vec3& right, const Vec3& up,
                                 const Vec3& forward, const Vec3& position) {
  Mat4 m = Mat4::Identity();
  m.block<3, 1>(0, 0) = right;
  m.block<3, 1>(0, 1) = up;
  m.block<3, 1>(0, 2) = forward;
  m.block<3, 1>(0, 3) = position;
  return PoseMatrix(m);
}

PoseMatrix PoseMatrix::from_matrix(const Mat4& matrix) {
  if (matrix(3, 0) != 0.0 || matrix(3, 1) != 0.0 || matrix(3, 2) != 0.0 ||
      matrix(3, 3) != 1.0) {
    throw ParseError("pose matrix last row must be (0, 0, 0, 1)", 0);
  }
  return PoseMatrix(matrix);
}

Mat3 PoseMatrix::world_to_camera_rotation() const {
  Mat3 r;
  r.row(0) = right().transpose();
  r.row(1) = -up().transpose();
  r.row(2) = forward().transpose();
  return r;
}

double PoseMatrix::orthonormality_error() const {
  const Mat3 axes = m_.block<3, 3>(0, 0);
  const double gram = (axes.transpose() * axes - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double hand = (right().cross(up()) - forward()).cwiseAbs().maxCoeff();
  return std::max(gram, hand);
}

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw ConfigError("intrinsics focal lengths must be positive");
  }
  if (width < 1 || height < 1) {
    throw ConfigError("intrinsics width and height must be >= 1");
  }
  if (!(cx >= 0.0 && cx <= width && cy >= 0.0 && cy <= height)) {
    throw ConfigError("intrinsics principal point lies outside the image");
  }
}

AttentionSolution solve_attention_center(std::span<const PoseMatrix> poses) {
  const auto n = static_cast<Eigen::Index>(poses.size());
  if (n < 2) {
    throw DegenerateGeometry("attention center needs at least 2 poses, got " +
                             std::to_string(n));
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3 * n, n + 3);
  Eigen::VectorXd c(3 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const PoseMatrix& pose = poses[static_cast<std::size_t>(i)];
    const Vec3 f = checked_unit(pose.forward(), "camera forward");
    a.block<3, 3>(3 * i, 0).setIdentity();
    a.block<3, 1>(3 * i, 3 + i) = -f;
    c.segment<3>(3 * i) = pose.position();
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double cutoff = kSingularCutoff * sigma(0);
  for (Eigen::Index k = 0; k < sigma.size(); ++k) {
    if (sigma(k) <= cutoff) {
      throw DegenerateGeometry(
          "camera forward lines are parallel; no unique attention center");
    }
  }
  const Eigen::VectorXd x = svd.solve(c);

  AttentionSolution out;
  out.center = x.head<3>();
  out.line_params.assign(x.data() + 3, x.data() + x.size());
  out.residual_rms = (a * x - c).norm() / std::sqrt(3.0 * static_cast<double>(n));
  return out;
}

PoseMatrix look_at_pose(const Vec3& position, const Vec3& target,
                        const Vec3& up_hint) {
  const Vec3 forward = checked_unit(target - position, "view direction");
  const Vec3 side = up_hint.cross(forward);
  const double hint_norm = up_hint.norm();
  if (!(hint_norm > 0.0) || side.norm() <= 1e-9 * hint_norm) {
    throw DegenerateGeometry("up hint is parallel to the view direction");
  }
  const Vec3 right = side.normalized();
  const Vec3 up = forward.cross(right);
  return PoseMatrix::from_axes(right, up, forward, position);
}

std::pair<Vec3, Vec3> perpendicular_basis(const Vec3& v) {
  int axis = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::abs(v(k)) < std::abs(v(axis))) axis = k;
  }
  const Vec3 e = Vec3::Unit(axis);
  const Vec3 u = checked_unit(v.cross(e), "perpendicular basis vector");
  const Vec3 w = checked_unit(v.cross(u), "perpendicular basis vector");
  return {u, w};
}

std::vector<PoseMatrix> gen_circular(const PoseMatrix& pose, const Vec3& center,
                                     double radius, int m, CircleMode mode,
                                     std::uint64_t seed) {
  if (!(radius > 0.0)) throw ConfigError("radius must be positive");
  if (m < 1) throw ConfigError("pose count must be >= 1");
  const Vec3 origin = pose.position();
  const Vec3 v = center - origin;
  if (v.norm() == 0.0) {
    throw DegenerateGeometry("attention center coincides with camera position");
  }
  const auto [u, w] = perpendicular_basis(v);

  Rng rng(seed);
  std::vector<PoseMatrix> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const double theta = mode == CircleMode::kEquidistant
                             ? kTwoPi * static_cast<double>(j) / m
                             : kTwoPi * rng.uniform();
    const Vec3 p = origin + radius * std::cos(theta) * u + radius * std::sin(theta) * w;
    out.push_back(aimed_pose(pose, p, center));
  }
  return out;
}

std::vector<PoseMatrix> gen_spherical(const PoseMatrix& pose,
                                      const Vec3& center, double radius, int m,
                                      SphereMode mode, std::uint64_t seed) {
  if (!(radius > 0.0)) throw ConfigError("radius must be positive");
  if (m < 1) throw ConfigError("pose count must be >= 1");
  const Vec3 origin = pose.position();
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;

  Rng rng(seed);
  std::vector<PoseMatrix> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    double phi = 0.0;
    double theta = 0.0;
    if (mode == SphereMode::kFibonacci) {
      phi = std::acos(1.0 - 2.0 * (j + 0.5) / m);
      theta = kTwoPi * j * golden;
    } else {
      phi = std::acos(1.0 - 2.0 * rng.uniform());
      theta = kTwoPi * rng.uniform();
    }
    const Vec3 dir(std::sin(phi) * std::cos(theta), std::sin(phi) * std::sin(theta),
                   std::cos(phi));
    const Vec3 p = origin + radius * dir;
    if ((center - p).norm() <= 1e-12 * std::max(1.0, radius)) {
      throw DegenerateGeometry("generated camera position coincides with the "
                               "attention center");
    }
    out.push_back(aimed_pose(pose, p, center));
  }
  return out;
}

}  // namespace satsplat
