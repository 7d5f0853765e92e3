#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "satsplat/geometry.hpp"
#include "satsplat/image.hpp"
#include "satsplat/pose_io.hpp"
#include "satsplat/splat_model.hpp"

namespace satsplat {

// Added to both diagonal entries of every projected covariance (pixels^2).
inline constexpr double kLowPassFloor = 0.3;
// Footprints are truncated at this Mahalanobis radius; splats whose
// truncated footprint misses the viewport are culled.
inline constexpr double kFootprintSigma = 3.0;

struct RenderConfig {
  Vec3 background = Vec3::Zero();
  double near = 0.01;
  // A pixel stops compositing once its transmittance drops below this.
  double termination = 1e-4;
  int tile_size = 16;
  // <= 0: default_thread_count(). Output never depends on this.
  int threads = 0;
};

struct Projected2DGaussian {
  Eigen::Vector2d mean2d = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov2d = Eigen::Matrix2d::Identity();  // includes the floor
  double depth = 0.0;
  Vec3 color = Vec3::Zero();
  double alpha = 0.0;
};

// Pinhole projection of a camera-space point: (fx x/z + cx, fy y/z + cy).
Eigen::Vector2d project_camera_point(const Vec3& cam, const Intrinsics& intr);
// d(project_camera_point)/d(x, y, z) at cam.
Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& cam,
                                                const Intrinsics& intr);
// J W Sigma W^T J^T without the low-pass floor.
Eigen::Matrix2d projected_covariance(const Mat3& cov_world, const Mat3& world_to_camera,
                                     const Eigen::Matrix<double, 2, 3>& jacobian);

// Returns nullopt when the splat is culled: camera depth <= near, or its
// 3-sigma footprint does not touch the viewport.
std::optional<Projected2DGaussian> project_gaussian(const GaussianSplat& splat,
                                                    const PoseMatrix& pose,
                                                    const Intrinsics& intr, double near,
                                                    int sh_degree = 0);

// Filled in by render() on request; used by property tests.
struct RenderDiagnostics {
  std::vector<double> final_transmittance;  // per pixel, row-major
  std::size_t transmittance_increases = 0;
  std::size_t transmittance_out_of_range = 0;
  std::size_t nonfinite_values = 0;
  double max_contribution = 0.0;  // largest alpha * g seen
  std::size_t visible_splats = 0;
};

Image render(const SplatCloud& cloud, const PoseMatrix& pose, const Intrinsics& intr,
             const RenderConfig& config, RenderDiagnostics* diagnostics = nullptr);

struct RenderedView {
  std::string id;
  std::filesystem::path file;
  int width = 0;
  int height = 0;
};

// Renders every view to <out_dir>/<id>.png and writes <out_dir>/manifest.json
// mapping id -> {file, width, height, color}. Parallel over views.
std::vector<RenderedView> render_batch(const SplatCloud& cloud,
                                       std::span<const CameraView> views,
                                       const RenderConfig& config,
                                       const std::filesystem::path& out_dir);

inline constexpr const char* kRenderManifestName = "manifest.json";

}  // namespace satsplat
