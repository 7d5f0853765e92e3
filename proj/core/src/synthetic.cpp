#include "satsplat/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "satsplat/errors.hpp"
#include "satsplat/random.hpp"
#include "satsplat/splat_model.hpp"

namespace satsplat {
namespace {

constexpr double kShDc = 0.28209479177387814;

Vec3 dc_for_rgb(const Vec3& rgb) { return (rgb.array() - 0.5).matrix() / kShDc; }

Eigen::Vector4d random_quaternion(Rng& rng) {
  Eigen::Vector4d q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  const double n = q.norm();
  return n > 0.0 ? Eigen::Vector4d(q / n) : Eigen::Vector4d(1.0, 0.0, 0.0, 0.0);
}

// Uniform point on the surface of an axis-aligned box.
Vec3 box_surface_point(Rng& rng, const Vec3& half) {
  const double ax = half.y() * half.z();
  const double ay = half.x() * half.z();
  const double az = half.x() * half.y();
  const double pick = rng.uniform() * (ax + ay + az);
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  Vec3 p(rng.uniform(-half.x(), half.x()), rng.uniform(-half.y(), half.y()),
         rng.uniform(-half.z(), half.z()));
  if (pick < ax) {
    p.x() = sign * half.x();
  } else if (pick < ax + ay) {
    p.y() = sign * half.y();
  } else {
    p.z() = sign * half.z();
  }
  return p;
}

GaussianSplat make_splat(const Vec3& mean, const Vec3& sigma, const Vec3& rgb, Rng& rng) {
  GaussianSplat s;
  s.mean = mean;
  s.log_scale = sigma.array().log().matrix();
  s.rotation = Eigen::Vector4d(1.0, 0.0, 0.0, 0.0);
  s.opacity_logit = rng.uniform(2.5, 4.0);
  s.color_dc = dc_for_rgb(rgb);
  return s;
}

}  // namespace

SyntheticSatellite make_synthetic_satellite(int n_splats, std::uint64_t seed) {
  if (n_splats < 16) throw ConfigError("synthetic satellite needs at least 16 splats");
  Rng rng(seed);
  SyntheticSatellite sat;
  sat.cloud.sh_degree = 0;

  const int n_body = n_splats * 2 / 5;
  const int n_panel = n_splats / 5;
  const int n_dish = n_splats - n_body - 2 * n_panel;

  SatelliteComponent body{ClassId::kBody, {}};
  const Vec3 half(0.5, 0.4, 0.4);
  for (int i = 0; i < n_body; ++i) {
    const Vec3 p = box_surface_point(rng, half);
    body.points.push_back(p);
    sat.cloud.splats.push_back(make_splat(p, Vec3::Constant(rng.uniform(0.03, 0.05)),
                                          Vec3(0.8, 0.65, 0.2), rng));
  }
  sat.components.push_back(std::move(body));

  for (double side : {-1.0, 1.0}) {
    SatelliteComponent panel{ClassId::kSolar, {}};
    for (int i = 0; i < n_panel; ++i) {
      const Vec3 p(side * rng.uniform(0.65, 1.6), rng.uniform(-0.35, 0.35),
                   rng.uniform(-0.01, 0.01));
      panel.points.push_back(p);
      sat.cloud.splats.push_back(make_splat(p, Vec3(0.04, 0.04, 0.006), Vec3(0.15, 0.2, 0.6), rng));
    }
    sat.components.push_back(std::move(panel));
  }

  SatelliteComponent dish{ClassId::kAntenna, {}};
  constexpr double kRim = 0.35;
  for (int i = 0; i < n_dish; ++i) {
    const double r = kRim * std::sqrt(rng.uniform());
    const double a = 2.0 * std::numbers::pi * rng.uniform();
    const Vec3 p(r * std::cos(a), r * std::sin(a), 0.6 + 0.2 * (r * r) / (kRim * kRim));
    dish.points.push_back(p);
    sat.cloud.splats.push_back(make_splat(p, Vec3(0.035, 0.035, 0.01), Vec3(0.9, 0.9, 0.9), rng));
  }
  sat.components.push_back(std::move(dish));
  return sat;
}

SplatCloud make_random_cloud(int n_splats, double extent, std::uint64_t seed) {
  Rng rng(seed);
  SplatCloud cloud;
  cloud.sh_degree = 0;
  cloud.splats.reserve(static_cast<std::size_t>(std::max(n_splats, 0)));
  for (int i = 0; i < n_splats; ++i) {
    GaussianSplat s;
    s.mean = Vec3(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                  rng.uniform(-extent, extent));
    for (int k = 0; k < 3; ++k) s.log_scale(k) = std::log(rng.uniform(0.01, 0.05) * extent);
    s.rotation = random_quaternion(rng);
    s.opacity_logit = rng.uniform(-2.0, 4.0);
    s.color_dc = Vec3(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
    cloud.splats.push_back(s);
  }
  return cloud;
}

std::vector<CameraView> make_orbit_views(int n, double distance, const Intrinsics& intr,
                                         double aim_jitter, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CameraView> views;
  for (int i = 0; i < n; ++i) {
    const double azimuth = 2.0 * std::numbers::pi * i / n;
    const double elevation =
        (i % 2 == 0 ? 1.0 : -1.0) * (5.0 + 15.0 * rng.uniform()) * std::numbers::pi / 180.0;
    const Vec3 position = distance * Vec3(std::cos(elevation) * std::cos(azimuth),
                                          std::cos(elevation) * std::sin(azimuth),
                                          std::sin(elevation));
    const Vec3 target(rng.normal(0.0, aim_jitter), rng.normal(0.0, aim_jitter),
                      rng.normal(0.0, aim_jitter));
    char id[32];
    std::snprintf(id, sizeof(id), "view_%03d", i);
    views.push_back({id, look_at_pose(position, target, Vec3::UnitZ()), intr});
  }
  return views;
}

}  // namespace satsplat
