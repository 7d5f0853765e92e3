#include "satsplat/scripted_detector.hpp"

#include <algorithm>
#include <limits>

#include "satsplat/hashing.hpp"
#include "satsplat/random.hpp"
#include "satsplat/renderer.hpp"

namespace satsplat {
namespace {

constexpr double kMinBoxSide = 1e-3;

ClassId wrong_class(ClassId truth, Rng& rng) {
  // Any class but the true one and the body.
  std::vector<ClassId> options;
  for (ClassId c : kAllClasses) {
    if (c != truth && c != ClassId::kBody) options.push_back(c);
  }
  return options[static_cast<std::size_t>(rng.below(options.size()))];
}

std::optional<BBox> finalize(BBox box) {
  box = box.clipped();
  if (box.w < kMinBoxSide || box.h < kMinBoxSide) return std::nullopt;
  return box;
}

}  // namespace

std::optional<BBox> component_box(const SatelliteComponent& component, const CameraView& view) {
  const Mat3 w = view.pose.world_to_camera_rotation();
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  int visible = 0;
  for (const Vec3& p : component.points) {
    const Vec3 cam = w * (p - view.pose.position());
    if (cam.z() <= 1e-6) continue;
    const Eigen::Vector2d px = project_camera_point(cam, view.intrinsics);
    x0 = std::min(x0, px.x());
    x1 = std::max(x1, px.x());
    y0 = std::min(y0, px.y());
    y1 = std::max(y1, px.y());
    ++visible;
  }
  if (visible < 2) return std::nullopt;
  const double iw = view.intrinsics.width;
  const double ih = view.intrinsics.height;
  return finalize(BBox::from_corners(x0 / iw, y0 / ih, x1 / iw, y1 / ih));
}

ViewDetections scripted_detect(const SyntheticSatellite& target, const CameraView& view,
                               const ScriptedDetectorConfig& config) {
  Rng rng(mix_seed(config.seed, fnv1a64(view.id)));
  ViewDetections out{view.id, {}};
  std::optional<BBox> body_box;

  auto perturb = [&](BBox b) {
    if (config.box_jitter > 0.0) {
      b.cx += rng.normal(0.0, config.box_jitter);
      b.cy += rng.normal(0.0, config.box_jitter);
      b.w = std::max(kMinBoxSide, b.w + rng.normal(0.0, config.box_jitter));
      b.h = std::max(kMinBoxSide, b.h + rng.normal(0.0, config.box_jitter));
    }
    b.cx += config.bias.dx;
    b.cy += config.bias.dy;
    return finalize(b);
  };

  for (const SatelliteComponent& comp : target.components) {
    const auto box = component_box(comp, view);
    if (!box) continue;
    if (comp.class_id == ClassId::kBody) body_box = box;

    Detection d;
    d.class_id = comp.class_id;
    bool error = false;
    if (comp.class_id == ClassId::kBody) {
      if (rng.bernoulli(config.body_misclass_rate)) {
        d.class_id = ClassId::kAntenna;
        error = true;
      }
    } else if (rng.bernoulli(config.misclass_rate)) {
      d.class_id = wrong_class(comp.class_id, rng);
      error = true;
    }
    d.confidence = error ? rng.uniform(config.error_conf_lo, config.error_conf_hi)
                         : rng.uniform(config.conf_lo, config.conf_hi);
    if (const auto placed = perturb(*box)) {
      d.bbox = *placed;
      out.detections.push_back(d);
    }
  }

  if (body_box && rng.bernoulli(config.false_antenna_rate)) {
    BBox fake = *body_box;
    fake.w *= 0.9;
    fake.h *= 0.9;
    Detection d{ClassId::kAntenna, fake,
                rng.uniform(config.error_conf_lo, config.error_conf_hi)};
    if (const auto placed = perturb(fake)) {
      d.bbox = *placed;
      out.detections.push_back(d);
    }
  }
  return out;
}

std::vector<ViewDetections> scripted_detect_all(const SyntheticSatellite& target,
                                                std::span<const CameraView> views,
                                                const ScriptedDetectorConfig& config) {
  std::vector<ViewDetections> out;
  out.reserve(views.size());
  for (const CameraView& v : views) out.push_back(scripted_detect(target, v, config));
  return out;
}

}  // namespace satsplat
