#include "satsplat/ensemble.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <tuple>

#include <json.hpp>

#include "satsplat/errors.hpp"

namespace satsplat {
namespace {

bool canonical_less(const GroupMember& a, const GroupMember& b) {
  const auto key = [](const GroupMember& m) {
    const Detection& d = m.detection;
    return std::tie(m.view_id, d.class_id, d.bbox.cx, d.bbox.cy, d.bbox.w, d.bbox.h,
                    d.confidence);
  };
  return key(a) < key(b);
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Smaller index becomes the root so roots are order independent.
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

BBox shifted(const BBox& box, const Offset2D& offset) {
  return {box.cx + offset.dx, box.cy + offset.dy, box.w, box.h};
}

Offset2D center_difference(const BBox& original, const BBox& group) {
  return {original.cx - group.cx, original.cy - group.cy};
}

// Largest group of the given class; lowest index on ties.
const DetectionGroup* largest_group(std::span<const DetectionGroup> groups, ClassId cls) {
  const DetectionGroup* best = nullptr;
  for (const DetectionGroup& g : groups) {
    if (g.majority_class != cls) continue;
    if (!best || g.members.size() > best->members.size()) best = &g;
  }
  return best;
}

struct Candidate {
  double iou;
  std::size_t group;
  std::size_t original;
};

// Greedy one-to-one assignment by (-IoU, group index, original index).
void greedy_match(std::vector<Candidate> candidates, std::vector<bool>& group_used,
                  std::vector<std::optional<std::size_t>>& original_match) {
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.group != b.group) return a.group < b.group;
    return a.original < b.original;
  });
  for (const Candidate& c : candidates) {
    if (group_used[c.group] || original_match[c.original]) continue;
    group_used[c.group] = true;
    original_match[c.original] = c.group;
  }
}

}  // namespace

DetectionGroup DetectionGroup::from_members(std::vector<GroupMember> members) {
  if (members.empty()) throw ConfigError("a detection group needs at least one member");
  std::sort(members.begin(), members.end(), canonical_less);

  DetectionGroup g;
  std::array<std::size_t, kNumClasses> votes{};
  double cx = 0.0, cy = 0.0, w = 0.0, h = 0.0, conf = 0.0;
  for (const GroupMember& m : members) {
    ++votes[static_cast<std::size_t>(to_int(m.detection.class_id))];
    cx += m.detection.bbox.cx;
    cy += m.detection.bbox.cy;
    w += m.detection.bbox.w;
    h += m.detection.bbox.h;
    conf += m.detection.confidence;
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c) {
    if (votes[c] > votes[best]) best = c;
  }
  const double n = static_cast<double>(members.size());
  g.majority_class = static_cast<ClassId>(best);
  g.purity = static_cast<double>(votes[best]) / n;
  g.mean_bbox = {cx / n, cy / n, w / n, h / n};
  g.mean_confidence = conf / n;
  g.members = std::move(members);
  return g;
}

void EnsembleThresholds::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(group_iou) || !unit(purity_min) || !unit(merge_iou)) {
    throw ConfigError("ensemble IoU and purity thresholds must lie in [0, 1]");
  }
  if (min_group_size < 1) throw ConfigError("min_group_size must be >= 1");
}

void FusionParams::validate() const {
  if (!(anchor_conf_min >= 0.0 && anchor_conf_min <= 1.0) ||
      !(match_iou >= 0.0 && match_iou <= 1.0)) {
    throw ConfigError("anchor_conf_min and match_iou must lie in [0, 1]");
  }
}

std::vector<DetectionGroup> group_detections(std::span<const ViewDetections> render_views,
                                             const EnsembleThresholds& t) {
  t.validate();
  std::vector<GroupMember> all;
  for (const ViewDetections& v : render_views) {
    for (const Detection& d : v.detections) all.push_back({v.view_id, d});
  }
  std::sort(all.begin(), all.end(), canonical_less);
  const std::size_t n = all.size();

  // Sweep along x: only boxes whose x-extents overlap can have IoU > 0.
  std::vector<std::size_t> by_x0(n);
  std::iota(by_x0.begin(), by_x0.end(), std::size_t{0});
  std::sort(by_x0.begin(), by_x0.end(), [&](std::size_t a, std::size_t b) {
    const double xa = all[a].detection.bbox.x0();
    const double xb = all[b].detection.bbox.x0();
    return xa != xb ? xa < xb : a < b;
  });
  DisjointSets sets(n);
  for (std::size_t p = 0; p < n; ++p) {
    const BBox& a = all[by_x0[p]].detection.bbox;
    for (std::size_t q = p + 1; q < n; ++q) {
      const BBox& b = all[by_x0[q]].detection.bbox;
      if (b.x0() >= a.x1()) break;
      if (iou(a, b) > t.group_iou) sets.unite(by_x0[p], by_x0[q]);
    }
  }

  // Components ordered by their smallest canonical member index.
  std::vector<std::vector<GroupMember>> components;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (slot[root] == n) {
      slot[root] = components.size();
      components.emplace_back();
    }
    components[slot[root]].push_back(all[i]);
  }

  std::vector<DetectionGroup> groups;
  for (auto& members : components) {
    if (members.size() < static_cast<std::size_t>(t.min_group_size)) continue;
    DetectionGroup g = DetectionGroup::from_members(std::move(members));
    if (g.purity < t.purity_min) continue;
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<DetectionGroup> merge_groups(std::vector<DetectionGroup> groups,
                                         const EnsembleThresholds& t) {
  t.validate();
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < groups.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        if (groups[i].majority_class != groups[j].majority_class) continue;
        if (!(iou(groups[i].mean_bbox, groups[j].mean_bbox) > t.merge_iou)) continue;
        std::vector<GroupMember> members = std::move(groups[i].members);
        members.insert(members.end(), groups[j].members.begin(), groups[j].members.end());
        groups[i] = DetectionGroup::from_members(std::move(members));
        groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(j));
        merged = true;
        break;
      }
    }
  }
  return groups;
}

Offset2D estimate_offset(std::span<const DetectionGroup> groups,
                         const ViewDetections& original, double anchor_conf_min) {
  if (const DetectionGroup* body = largest_group(groups, ClassId::kBody)) {
    const Detection* anchor = nullptr;
    for (const Detection& d : original.detections) {
      if (d.class_id != ClassId::kBody || d.confidence < anchor_conf_min) continue;
      if (!anchor || d.confidence > anchor->confidence) anchor = &d;
    }
    if (anchor) return center_difference(anchor->bbox, body->mean_bbox);
  }

  const Detection* fallback = nullptr;
  const DetectionGroup* partner = nullptr;
  for (const Detection& d : original.detections) {
    const DetectionGroup* g = largest_group(groups, d.class_id);
    if (!g) continue;
    if (!fallback || d.confidence > fallback->confidence) {
      fallback = &d;
      partner = g;
    }
  }
  if (fallback) return center_difference(fallback->bbox, partner->mean_bbox);
  return {};
}

FusionOutcome fuse_detailed(const ViewDetections& original,
                            std::span<const DetectionGroup> groups, const Offset2D& offset,
                            double match_iou) {
  const auto& dets = original.detections;
  std::vector<BBox> moved;
  moved.reserve(groups.size());
  for (const DetectionGroup& g : groups) moved.push_back(shifted(g.mean_bbox, offset));

  std::vector<bool> group_used(groups.size(), false);
  std::vector<std::optional<std::size_t>> original_match(dets.size());

  // Body originals claim body groups first so a body group can never be
  // spent on a detection overlapping the body.
  std::vector<Candidate> body_pairs;
  std::vector<Candidate> other_pairs;
  for (std::size_t o = 0; o < dets.size(); ++o) {
    const bool is_body = dets[o].class_id == ClassId::kBody;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (is_body && groups[g].majority_class != ClassId::kBody) continue;
      const double overlap = iou(dets[o].bbox, moved[g]);
      if (!(overlap > match_iou)) continue;
      (is_body ? body_pairs : other_pairs).push_back({overlap, g, o});
    }
  }
  greedy_match(std::move(body_pairs), group_used, original_match);
  greedy_match(std::move(other_pairs), group_used, original_match);

  FusionOutcome out;
  out.detections.view_id = original.view_id;
  out.group_matches.assign(groups.size(), std::nullopt);
  for (std::size_t o = 0; o < dets.size(); ++o) {
    const Detection& d = dets[o];
    if (original_match[o]) out.group_matches[*original_match[o]] = o;
    if (d.class_id == ClassId::kBody) {
      out.detections.detections.push_back(d);
      continue;
    }
    if (!original_match[o]) continue;  // unsupported by the renders
    const DetectionGroup& g = groups[*original_match[o]];
    const BBox& gb = moved[*original_match[o]];
    const double wo = d.confidence;
    const double wg = g.purity;
    const double norm = wo + wg;
    Detection fused;
    fused.class_id = g.majority_class;
    fused.confidence = std::max(d.confidence, g.purity);
    fused.bbox = {(wo * d.bbox.cx + wg * gb.cx) / norm, (wo * d.bbox.cy + wg * gb.cy) / norm,
                  (wo * d.bbox.w + wg * gb.w) / norm, (wo * d.bbox.h + wg * gb.h) / norm};
    fused.bbox = fused.bbox.clipped();
    if (fused.bbox.area() > 0.0) out.detections.detections.push_back(fused);
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (group_used[g]) continue;
    Detection added;
    added.class_id = groups[g].majority_class;
    added.bbox = moved[g].clipped();
    added.confidence = groups[g].purity * groups[g].mean_confidence;
    if (added.bbox.area() > 0.0) out.detections.detections.push_back(added);
  }
  return out;
}

ViewDetections fuse(const ViewDetections& original, std::span<const DetectionGroup> groups,
                    const Offset2D& offset, double match_iou) {
  return fuse_detailed(original, groups, offset, match_iou).detections;
}

EnsembleResult ensemble_view_detailed(const ViewDetections& original,
                                      std::span<const ViewDetections> render_views,
                                      const EnsembleThresholds& t, const FusionParams& params) {
  params.validate();
  EnsembleResult result;
  result.groups = merge_groups(group_detections(render_views, t), t);
  result.offset = estimate_offset(result.groups, original, params.anchor_conf_min);
  FusionOutcome fused = fuse_detailed(original, result.groups, result.offset, params.match_iou);
  result.corrected = std::move(fused.detections);
  result.group_matches = std::move(fused.group_matches);
  return result;
}

ViewDetections ensemble_view(const ViewDetections& original,
                             std::span<const ViewDetections> render_views,
                             const EnsembleThresholds& t, const FusionParams& params) {
  return ensemble_view_detailed(original, render_views, t, params).corrected;
}

std::string ensemble_sidecar_json(const EnsembleResult& result, const EnsembleThresholds& t,
                                  const FusionParams& params) {
  using nlohmann::json;
  json groups = json::array();
  for (std::size_t g = 0; g < result.groups.size(); ++g) {
    const DetectionGroup& grp = result.groups[g];
    const auto& match = result.group_matches.at(g);
    groups.push_back({{"class", class_name(grp.majority_class)},
                      {"class_id", to_int(grp.majority_class)},
                      {"members", grp.members.size()},
                      {"purity", grp.purity},
                      {"mean_confidence", grp.mean_confidence},
                      {"mean_bbox", {grp.mean_bbox.cx, grp.mean_bbox.cy, grp.mean_bbox.w,
                                     grp.mean_bbox.h}},
                      {"matched_original", match ? json(*match) : json(nullptr)}});
  }
  json doc = {{"view_id", result.corrected.view_id},
              {"thresholds",
               {{"group_iou", t.group_iou},
                {"min_group_size", t.min_group_size},
                {"purity_min", t.purity_min},
                {"merge_iou", t.merge_iou},
                {"anchor_conf_min", params.anchor_conf_min},
                {"match_iou", params.match_iou}}},
              {"offset_applied", {{"dx", result.offset.dx}, {"dy", result.offset.dy}}},
              {"groups", groups}};
  return doc.dump(1) + "\n";
}

}  // namespace satsplat
