#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "satsplat/detections.hpp"

namespace satsplat {

struct GroupMember {
  std::string view_id;
  Detection detection;

  bool operator==(const GroupMember&) const = default;
};

// Cluster of render detections. purity is the share of members voting for
// majority_class; mean_bbox averages member boxes in (cx, cy, w, h).
struct DetectionGroup {
  std::vector<GroupMember> members;
  ClassId majority_class = ClassId::kBody;
  double purity = 0.0;
  BBox mean_bbox;
  double mean_confidence = 0.0;

  // Sorts members into canonical order and computes the statistics. Majority
  // ties go to the lowest class id. members must be nonempty.
  static DetectionGroup from_members(std::vector<GroupMember> members);

  bool operator==(const DetectionGroup&) const = default;
};

struct EnsembleThresholds {
  double group_iou = 0.5;
  int min_group_size = 8;
  double purity_min = 0.7;
  double merge_iou = 0.5;

  // Throws ConfigError when any value is outside its range.
  void validate() const;
  bool operator==(const EnsembleThresholds&) const = default;
};

// Parameters of the translation correction and fusion steps.
struct FusionParams {
  double anchor_conf_min = 0.5;
  double match_iou = 0.25;

  void validate() const;
  bool operator==(const FusionParams&) const = default;
};

struct Offset2D {
  double dx = 0.0;
  double dy = 0.0;

  bool operator==(const Offset2D&) const = default;
};

// Connected components of the graph joining render detections whose IoU
// exceeds t.group_iou. Components smaller than t.min_group_size or with
// purity below t.purity_min are dropped. The result does not depend on the
// order of render_views.
std::vector<DetectionGroup> group_detections(std::span<const ViewDetections> render_views,
                                             const EnsembleThresholds& t);

// Unions same-class groups whose mean boxes overlap with IoU > t.merge_iou
// until no such pair remains.
std::vector<DetectionGroup> merge_groups(std::vector<DetectionGroup> groups,
                                         const EnsembleThresholds& t);

// Original center minus group mean center, anchored on the body: the
// largest body group against the most confident original body detection
// with confidence >= anchor_conf_min. Falls back to the most confident
// original detection whose class has a group, then to (0, 0).
Offset2D estimate_offset(std::span<const DetectionGroup> groups,
                         const ViewDetections& original, double anchor_conf_min);

struct FusionOutcome {
  ViewDetections detections;
  // Per group: index of the original detection it matched, or nullopt when
  // it produced a new detection (or was dropped after clipping).
  std::vector<std::optional<std::size_t>> group_matches;
};

// Shifts group mean boxes by offset and combines them with the original
// detections:
//  - body originals pass through unchanged (they may claim a body group);
//  - other originals matched to a group (IoU > match_iou, greedy by
//    descending IoU, one-to-one) take the group class, confidence
//    max(conf, purity) and the (conf, purity)-weighted average box;
//  - unmatched groups become new detections with confidence
//    purity * mean_confidence;
//  - unmatched non-body originals are removed.
FusionOutcome fuse_detailed(const ViewDetections& original,
                            std::span<const DetectionGroup> groups, const Offset2D& offset,
                            double match_iou);
ViewDetections fuse(const ViewDetections& original, std::span<const DetectionGroup> groups,
                    const Offset2D& offset, double match_iou);

struct EnsembleResult {
  ViewDetections corrected;
  std::vector<DetectionGroup> groups;  // after merging, before the shift
  Offset2D offset;
  std::vector<std::optional<std::size_t>> group_matches;
};

EnsembleResult ensemble_view_detailed(const ViewDetections& original,
                                      std::span<const ViewDetections> render_views,
                                      const EnsembleThresholds& t, const FusionParams& params);
ViewDetections ensemble_view(const ViewDetections& original,
                             std::span<const ViewDetections> render_views,
                             const EnsembleThresholds& t, const FusionParams& params = {});

// Audit record for one view: thresholds, offset, and per-group statistics.
std::string ensemble_sidecar_json(const EnsembleResult& result, const EnsembleThresholds& t,
                                  const FusionParams& params);

}  // namespace satsplat
