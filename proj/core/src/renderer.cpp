#include "satsplat/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "satsplat/errors.hpp"
#include "satsplat/parallel.hpp"

namespace satsplat {
namespace {

// Everything the compositing loop needs for one visible splat.
struct ScreenSplat {
  double mx, my;
  double conic_a, conic_b, conic_c;  // inverse of cov2d
  double alpha;
  double r, g, b;
  int x0, x1, y0, y1;  // inclusive pixel bounds of the footprint
  double depth;
  std::uint32_t index;
};

// Inclusive pixel bounds covering mean +- radius, padded by one pixel.
void footprint_bounds(const Eigen::Vector2d& mean, double radius, int& x0, int& x1,
                      int& y0, int& y1) {
  x0 = static_cast<int>(std::floor(mean.x() - radius)) - 1;
  x1 = static_cast<int>(std::ceil(mean.x() + radius)) + 1;
  y0 = static_cast<int>(std::floor(mean.y() - radius)) - 1;
  y1 = static_cast<int>(std::ceil(mean.y() + radius)) + 1;
}

double footprint_radius(const Eigen::Matrix2d& cov) {
  const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
  return kFootprintSigma * std::sqrt(lambda_max);
}

}  // namespace

Eigen::Vector2d project_camera_point(const Vec3& cam, const Intrinsics& intr) {
  return {intr.fx * cam.x() / cam.z() + intr.cx, intr.fy * cam.y() / cam.z() + intr.cy};
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& cam, const Intrinsics& intr) {
  const double inv_z = 1.0 / cam.z();
  const double inv_z2 = inv_z * inv_z;
  Eigen::Matrix<double, 2, 3> j;
  j << intr.fx * inv_z, 0.0, -intr.fx * cam.x() * inv_z2,
      0.0, intr.fy * inv_z, -intr.fy * cam.y() * inv_z2;
  return j;
}

Eigen::Matrix2d projected_covariance(const Mat3& cov_world, const Mat3& world_to_camera,
                                     const Eigen::Matrix<double, 2, 3>& jacobian) {
  const Eigen::Matrix<double, 2, 3> t = jacobian * world_to_camera;
  Eigen::Matrix2d cov = t * cov_world * t.transpose();
  cov(1, 0) = cov(0, 1);
  return cov;
}

std::optional<Projected2DGaussian> project_gaussian(const GaussianSplat& splat,
                                                    const PoseMatrix& pose,
                                                    const Intrinsics& intr, double near,
                                                    int sh_degree) {
  const Mat3 w = pose.world_to_camera_rotation();
  const Vec3 cam = w * (splat.mean - pose.position());
  if (!(cam.z() > near)) return std::nullopt;

  Projected2DGaussian out;
  out.mean2d = project_camera_point(cam, intr);
  out.cov2d = projected_covariance(covariance_world(splat), w, projection_jacobian(cam, intr));
  out.cov2d(0, 0) += kLowPassFloor;
  out.cov2d(1, 1) += kLowPassFloor;
  if (!out.mean2d.allFinite() || !out.cov2d.allFinite()) return std::nullopt;

  int x0, x1, y0, y1;
  footprint_bounds(out.mean2d, footprint_radius(out.cov2d), x0, x1, y0, y1);
  if (x1 < 0 || y1 < 0 || x0 > intr.width - 1 || y0 > intr.height - 1) return std::nullopt;

  out.depth = cam.z();
  const Vec3 view_dir = (splat.mean - pose.position()).normalized();
  out.color = eval_color(splat, view_dir, sh_degree);
  out.alpha = sigmoid(splat.opacity_logit);
  return out;
}

Image render(const SplatCloud& cloud, const PoseMatrix& pose, const Intrinsics& intr,
             const RenderConfig& config, RenderDiagnostics* diagnostics) {
  intr.validate();
  if (config.tile_size < 1) throw ConfigError("tile_size must be >= 1");
  const int width = intr.width;
  const int height = intr.height;
  const int threads = config.threads > 0 ? config.threads : default_thread_count();

  // Projection, one slot per input splat so the result is order independent.
  const std::size_t n = cloud.splats.size();
  std::vector<std::optional<Projected2DGaussian>> projected(n);
  constexpr std::size_t kChunk = 4096;
  parallel_for(
      (n + kChunk - 1) / kChunk,
      [&](std::size_t chunk) {
        const std::size_t end = std::min(n, (chunk + 1) * kChunk);
        for (std::size_t i = chunk * kChunk; i < end; ++i) {
          projected[i] = project_gaussian(cloud.splats[i], pose, intr, config.near,
                                          cloud.sh_degree);
        }
      },
      threads);

  std::vector<ScreenSplat> visible;
  visible.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!projected[i]) continue;
    const Projected2DGaussian& p = *projected[i];
    const double det = p.cov2d(0, 0) * p.cov2d(1, 1) - p.cov2d(0, 1) * p.cov2d(0, 1);
    if (!(det > 0.0) || !std::isfinite(det)) {
      throw NumericalError("projected covariance of splat " + std::to_string(i) +
                           " is not invertible after the low-pass floor");
    }
    ScreenSplat s;
    s.mx = p.mean2d.x();
    s.my = p.mean2d.y();
    s.conic_a = p.cov2d(1, 1) / det;
    s.conic_b = -p.cov2d(0, 1) / det;
    s.conic_c = p.cov2d(0, 0) / det;
    s.alpha = p.alpha;
    s.r = p.color.x();
    s.g = p.color.y();
    s.b = p.color.z();
    footprint_bounds(p.mean2d, footprint_radius(p.cov2d), s.x0, s.x1, s.y0, s.y1);
    s.x0 = std::max(s.x0, 0);
    s.y0 = std::max(s.y0, 0);
    s.x1 = std::min(s.x1, width - 1);
    s.y1 = std::min(s.y1, height - 1);
    s.depth = p.depth;
    s.index = static_cast<std::uint32_t>(i);
    visible.push_back(s);
  }
  std::sort(visible.begin(), visible.end(), [](const ScreenSplat& a, const ScreenSplat& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.index < b.index;
  });

  // Per-tile lists keep the global depth order.
  const int ts = config.tile_size;
  const int tiles_x = (width + ts - 1) / ts;
  const int tiles_y = (height + ts - 1) / ts;
  std::vector<std::vector<std::uint32_t>> tile_lists(
      static_cast<std::size_t>(tiles_x) * static_cast<std::size_t>(tiles_y));
  for (std::size_t k = 0; k < visible.size(); ++k) {
    const ScreenSplat& s = visible[k];
    for (int ty = s.y0 / ts; ty <= s.y1 / ts; ++ty) {
      for (int tx = s.x0 / ts; tx <= s.x1 / ts; ++tx) {
        tile_lists[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(
            static_cast<std::uint32_t>(k));
      }
    }
  }

  Image image(width, height);
  const double max_power = -0.5 * kFootprintSigma * kFootprintSigma;
  const double termination = config.termination;
  const Vec3 background = config.background;

  std::vector<double> final_t;
  if (diagnostics) {
    *diagnostics = RenderDiagnostics{};
    diagnostics->visible_splats = visible.size();
    final_t.assign(static_cast<std::size_t>(width) * height, 1.0);
  }
  std::vector<RenderDiagnostics> tile_diag(diagnostics ? tile_lists.size() : 0);

  parallel_for(
      tile_lists.size(),
      [&](std::size_t tile) {
        const auto& list = tile_lists[tile];
        const int tx = static_cast<int>(tile % tiles_x);
        const int ty = static_cast<int>(tile / tiles_x);
        const int px_begin = tx * ts;
        const int px_end = std::min(width, (tx + 1) * ts);
        const int py_end = std::min(height, (ty + 1) * ts);
        RenderDiagnostics* diag = diagnostics ? &tile_diag[tile] : nullptr;
        std::vector<ScreenSplat> local;
        local.reserve(list.size());
        for (std::uint32_t k : list) local.push_back(visible[k]);
        std::vector<const ScreenSplat*> row;
        row.reserve(local.size());
        for (int py = ty * ts; py < py_end; ++py) {
          row.clear();
          for (const ScreenSplat& s : local) {
            if (py >= s.y0 && py <= s.y1) row.push_back(&s);
          }
          for (int px = px_begin; px < px_end; ++px) {
            double t = 1.0;
            double cr = 0.0, cg = 0.0, cb = 0.0;
            for (const ScreenSplat* sp : row) {
              const ScreenSplat& s = *sp;
              if (px < s.x0 || px > s.x1) continue;
              const double dx = px - s.mx;
              const double dy = py - s.my;
              const double power =
                  -0.5 * (s.conic_a * dx * dx + 2.0 * s.conic_b * dx * dy + s.conic_c * dy * dy);
              if (power < max_power) continue;
              const double a = s.alpha * std::exp(power);
              const double weight = a * t;
              cr += s.r * weight;
              cg += s.g * weight;
              cb += s.b * weight;
              const double next_t = t * (1.0 - a);
              if (diag) {
                if (next_t > t) ++diag->transmittance_increases;
                if (next_t < 0.0 || next_t > 1.0) ++diag->transmittance_out_of_range;
                diag->max_contribution = std::max(diag->max_contribution, a);
              }
              t = next_t;
              if (t < termination) break;
            }
            const double out[3] = {cr + t * background.x(), cg + t * background.y(),
                                   cb + t * background.z()};
            for (int c = 0; c < 3; ++c) {
              if (diag && !std::isfinite(out[c])) ++diag->nonfinite_values;
              image.at(px, py, c) = std::clamp(out[c], 0.0, 1.0);
            }
            if (diagnostics) {
              final_t[static_cast<std::size_t>(py) * width + px] = t;
            }
          }
        }
      },
      threads);

  if (diagnostics) {
    for (const RenderDiagnostics& d : tile_diag) {
      diagnostics->transmittance_increases += d.transmittance_increases;
      diagnostics->transmittance_out_of_range += d.transmittance_out_of_range;
      diagnostics->nonfinite_values += d.nonfinite_values;
      diagnostics->max_contribution = std::max(diagnostics->max_contribution, d.max_contribution);
    }
    diagnostics->final_transmittance = std::move(final_t);
  }
  return image;
}

std::vector<RenderedView> render_batch(const SplatCloud& cloud,
                                       std::span<const CameraView> views,
                                       const RenderConfig& config,
                                       const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message(), out_dir.string());

  RenderConfig inner = config;
  inner.threads = 1;
  std::vector<RenderedView> results(views.size());
  parallel_for(
      views.size(),
      [&](std::size_t i) {
        const CameraView& view = views[i];
        if (!is_safe_view_id(view.id)) {
          throw IoError("pose id '" + view.id + "' cannot be used as a file name", view.id);
        }
        const Image image = render(cloud, view.pose, view.intrinsics, inner);
        RenderedView r{view.id, out_dir / (view.id + ".png"), image.width(), image.height()};
        try {
          write_png(r.file, image);
        } catch (const IoError& e) {
          throw IoError("pose " + view.id + ": " + e.what(), view.id);
        }
        results[i] = std::move(r);
      },
      config.threads);

  nlohmann::json manifest = nlohmann::json::object();
  for (const RenderedView& r : results) {
    if (manifest.contains(r.id)) throw IoError("duplicate pose id " + r.id, r.id);
    manifest[r.id] = {{"file", r.file.filename().string()},
                      {"width", r.width},
                      {"height", r.height},
                      {"color", "linear-8bit"}};
  }
  const auto manifest_path = out_dir / kRenderManifestName;
  std::ofstream out(manifest_path, std::ios::binary);
  out << manifest.dump(1) << "\n";
  if (!out) throw IoError("cannot write " + manifest_path.string(), manifest_path.string());
  return results;
}

}  // namespace satsplat
