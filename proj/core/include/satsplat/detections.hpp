#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace satsplat {

enum class ClassId : int { kSolar = 0, kBody = 1, kAntenna = 2, kThruster = 3 };
inline constexpr int kNumClasses = 4;
inline constexpr std::array<ClassId, kNumClasses> kAllClasses = {
    ClassId::kSolar, ClassId::kBody, ClassId::kAntenna, ClassId::kThruster};

const char* class_name(ClassId id);
std::optional<ClassId> class_from_int(long long value);
inline int to_int(ClassId id) { return static_cast<int>(id); }

// Header line written at the top of every detection file.
std::string class_map_comment();

// Axis-aligned box in center format, normalized to the image ([0, 1]).
struct BBox {
  double cx = 0.5;
  double cy = 0.5;
  double w = 0.0;
  double h = 0.0;

  double x0() const { return cx - 0.5 * w; }
  double x1() const { return cx + 0.5 * w; }
  double y0() const { return cy - 0.5 * h; }
  double y1() const { return cy + 0.5 * h; }
  double area() const { return w * h; }

  static BBox from_corners(double x0, double y0, double x1, double y1);
  // Intersection with the unit square; a zero-area box if disjoint.
  BBox clipped() const;

  bool operator==(const BBox&) const = default;
};

// area(a n b) / area(a u b), 0 when the boxes are disjoint.
double iou(const BBox& a, const BBox& b);

struct Detection {
  ClassId class_id = ClassId::kBody;
  BBox bbox;
  double confidence = 1.0;

  bool operator==(const Detection&) const = default;
};

struct ViewDetections {
  std::string view_id;
  std::vector<Detection> detections;

  bool operator==(const ViewDetections&) const = default;
};

// Parses "class cx cy w h [conf]" lines. A missing confidence means 1.0
// (ground-truth files). Blank lines and lines starting with '#' are skipped.
// Throws ParseError (with file and line) for malformed lines and RangeError
// for out-of-range class ids, coordinates or confidences.
std::vector<Detection> parse_detections(std::string_view text,
                                        const std::string& origin = "<memory>");
std::vector<Detection> load_detection_file(const std::filesystem::path& path);

// One file per view, <dir>/<view_id>.txt. A missing file is an empty view.
std::vector<ViewDetections> load_view_detections(const std::filesystem::path& dir,
                                                 std::span<const std::string> view_ids);

// Detections manifest: JSON object mapping view id -> detection file path
// (relative paths resolve against the manifest's directory). Missing files
// are empty views. Views are returned in manifest key order.
std::vector<ViewDetections> load_view_detections(const std::filesystem::path& manifest);

// Ids among view_ids whose <dir>/<id>.txt does not exist.
std::vector<std::string> missing_detection_files(const std::filesystem::path& dir,
                                                 std::span<const std::string> view_ids);

// Serializes with the class-map header; confidences always written.
std::string format_detections(const std::vector<Detection>& detections);
void write_detection_file(const std::filesystem::path& path,
                          const std::vector<Detection>& detections);

}  // namespace satsplat
