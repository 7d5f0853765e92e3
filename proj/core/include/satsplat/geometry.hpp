#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace satsplat {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Camera-to-world transform. Columns are right, up, forward and position;
// the last row is (0, 0, 0, 1). Frames built by this module are orthonormal
// and right-handed (right x up = forward).
class PoseMatrix {
 public:
  PoseMatrix();

  static PoseMatrix from_axes(const Vec3& right, const Vec3& up,
                              const Vec3& forward, const Vec3& position);
  // Throws ParseError unless the last row is exactly (0, 0, 0, 1).
  static PoseMatrix from_matrix(const Mat4& matrix);

  Vec3 right() const { return m_.block<3, 1>(0, 0); }
  Vec3 up() const { return m_.block<3, 1>(0, 1); }
  Vec3 forward() const { return m_.block<3, 1>(0, 2); }
  Vec3 position() const { return m_.block<3, 1>(0, 3); }
  const Mat4& matrix() const { return m_; }

  // Rotation taking world directions to the camera frame used for
  // projection: x = right, y = -up (image rows grow downwards), z = forward.
  Mat3 world_to_camera_rotation() const;

  // Max deviation of the 3x3 block from an orthonormal right-handed frame.
  double orthonormality_error() const;

  bool operator==(const PoseMatrix& other) const { return m_ == other.m_; }

 private:
  explicit PoseMatrix(const Mat4& m) : m_(m) {}
  Mat4 m_;
};

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  // Throws ConfigError on non-positive focal lengths or sizes, or a
  // principal point outside the image.
  void validate() const;

  bool operator==(const Intrinsics&) const = default;
};

struct AttentionSolution {
  Vec3 center = Vec3::Zero();
  // One line parameter per camera, measured along the normalized forward.
  std::vector<double> line_params;
  double residual_rms = 0.0;
};

// Least-squares point nearest to all camera forward lines. Builds the
// 3n x (n + 3) system [I3 | -f_i e_i] [p; a] = [c_i] with unit forwards and
// solves it by SVD, treating singular values below 1e-10 * sigma_max as zero.
// Throws DegenerateGeometry for n < 2, zero forwards, or parallel lines.
AttentionSolution solve_attention_center(std::span<const PoseMatrix> poses);

// forward = normalize(target - position), right = normalize(up_hint x
// forward), up = forward x right.
PoseMatrix look_at_pose(const Vec3& position, const Vec3& target,
                        const Vec3& up_hint);

enum class CircleMode { kRandom, kEquidistant };
enum class SphereMode { kRandom, kFibonacci };

// Orthonormal pair spanning the plane perpendicular to v: u = normalize(v x e)
// with e the world axis of smallest |v| component (lowest index on ties),
// w = normalize(v x u).
std::pair<Vec3, Vec3> perpendicular_basis(const Vec3& v);

// m poses on the circle of `radius` around pose.position() in the plane
// perpendicular to (center - position), each looking at center.
std::vector<PoseMatrix> gen_circular(const PoseMatrix& pose, const Vec3& center,
                                     double radius, int m, CircleMode mode,
                                     std::uint64_t seed);

// m poses on the sphere of `radius` around pose.position(), each looking at
// center. Fibonacci: phi_j = acos(1 - 2 (j + 0.5) / m),
// theta_j = 2 pi j (sqrt(5) - 1) / 2.
std::vector<PoseMatrix> gen_spherical(const PoseMatrix& pose,
                                      const Vec3& center, double radius, int m,
                                      SphereMode mode, std::uint64_t seed);

}  // namespace satsplat
