#pragma once

#include <cstdint>
#include <vector>

#include "satsplat/detections.hpp"
#include "satsplat/pose_io.hpp"
#include "satsplat/splat_model.hpp"

namespace satsplat {

// Labelled part of a synthetic target; points are the splat means that
// belong to it and define its image-space extent.
struct SatelliteComponent {
  ClassId class_id = ClassId::kBody;
  std::vector<Vec3> points;
};

struct SyntheticSatellite {
  SplatCloud cloud;
  std::vector<SatelliteComponent> components;
};

// Box body at the origin, two solar panels along +-x and a dish antenna on
// +z, sampled with n_splats Gaussians (at least 16).
SyntheticSatellite make_synthetic_satellite(int n_splats, std::uint64_t seed);

// Random cloud for renderer tests and benchmarks: means uniform in a cube of
// half-width `extent`, log-scales giving sigmas in [0.01, 0.05] * extent,
// random rotations, colors and opacities.
SplatCloud make_random_cloud(int n_splats, double extent, std::uint64_t seed);

// n views ringing the origin at `distance`, elevations alternating within
// +-20 degrees, each aimed at the origin plus N(0, aim_jitter) per axis so
// the forward lines do not intersect exactly. Ids are "view_000", ...
std::vector<CameraView> make_orbit_views(int n, double distance, const Intrinsics& intr,
                                         double aim_jitter, std::uint64_t seed);

}  // namespace satsplat
