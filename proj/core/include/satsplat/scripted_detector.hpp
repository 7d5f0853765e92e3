#pragma once

#include <cstdint>
#include <span>

#include "satsplat/ensemble.hpp"
#include "satsplat/synthetic.hpp"

namespace satsplat {

// Stand-in for the external detector: emits the projected extent of every
// visible component of a synthetic satellite, with optional planted errors.
// With all rates zero and no bias it produces ground truth (confidence 1).
struct ScriptedDetectorConfig {
  // Probability that a non-body component is reported with a wrong class.
  double misclass_rate = 0.0;
  // Probability that the body is reported as an antenna.
  double body_misclass_rate = 0.0;
  // Probability of an extra antenna detection lying over the body.
  double false_antenna_rate = 0.0;
  // Added to every box center (normalized units).
  Offset2D bias;
  // Std-dev of Gaussian noise on box center and size (normalized units).
  double box_jitter = 0.0;
  // Confidence range of correct detections; planted errors draw from
  // [error_conf_lo, error_conf_hi].
  double conf_lo = 1.0;
  double conf_hi = 1.0;
  double error_conf_lo = 0.3;
  double error_conf_hi = 0.6;
  std::uint64_t seed = 0;
};

// Normalized box of a component as seen from the view, or nullopt if fewer
// than two of its points are in front of the camera or the box misses the
// image.
std::optional<BBox> component_box(const SatelliteComponent& component, const CameraView& view);

ViewDetections scripted_detect(const SyntheticSatellite& target, const CameraView& view,
                               const ScriptedDetectorConfig& config);

std::vector<ViewDetections> scripted_detect_all(const SyntheticSatellite& target,
                                                std::span<const CameraView> views,
                                                const ScriptedDetectorConfig& config);

}  // namespace satsplat
