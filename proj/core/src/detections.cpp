#include "satsplat/detections.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "satsplat/errors.hpp"

namespace satsplat {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_number(std::string_view token, double& value) {
  // std::from_chars for double is available in libstdc++ 11.
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  return res.ec == std::errc() && res.ptr == token.data() + token.size() &&
         std::isfinite(value);
}

std::string format_double(double v) {
  // Shortest representation that round-trips exactly.
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string(), path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

const char* class_name(ClassId id) {
  switch (id) {
    case ClassId::kSolar: return "solar";
    case ClassId::kBody: return "body";
    case ClassId::kAntenna: return "antenna";
    case ClassId::kThruster: return "thruster";
  }
  return "unknown";
}

std::optional<ClassId> class_from_int(long long value) {
  if (value < 0 || value >= kNumClasses) return std::nullopt;
  return static_cast<ClassId>(value);
}

std::string class_map_comment() {
  return "# classes: 0=solar 1=body 2=antenna 3=thruster";
}

BBox BBox::from_corners(double x0, double y0, double x1, double y1) {
  return {0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0};
}

BBox BBox::clipped() const {
  const double nx0 = std::clamp(x0(), 0.0, 1.0);
  const double nx1 = std::clamp(x1(), 0.0, 1.0);
  const double ny0 = std::clamp(y0(), 0.0, 1.0);
  const double ny1 = std::clamp(y1(), 0.0, 1.0);
  return from_corners(nx0, ny0, std::max(nx0, nx1), std::max(ny0, ny1));
}

double iou(const BBox& a, const BBox& b) {
  const double ax0 = a.x0(), ax1 = a.x1(), ay0 = a.y0(), ay1 = a.y1();
  const double bx0 = b.x0(), bx1 = b.x1(), by0 = b.y0(), by1 = b.y1();
  const double ix = std::min(ax1, bx1) - std::max(ax0, bx0);
  const double iy = std::min(ay1, by1) - std::max(ay0, by0);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<Detection> parse_detections(std::string_view text, const std::string& origin) {
  std::vector<Detection> out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0].front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    if (tokens.size() != 5 && tokens.size() != 6) {
      throw ParseError("expected 'class cx cy w h [conf]', got " +
                           std::to_string(tokens.size()) + " fields",
                       origin, line_no);
    }
    long long cls = 0;
    const auto res = std::from_chars(tokens[0].data(), tokens[0].data() + tokens[0].size(), cls);
    if (res.ec != std::errc() || res.ptr != tokens[0].data() + tokens[0].size()) {
      throw ParseError("class id '" + std::string(tokens[0]) + "' is not an integer", origin,
                       line_no);
    }
    double values[5] = {0, 0, 0, 0, 1.0};
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      if (!parse_number(tokens[k], values[k - 1])) {
        throw ParseError("field '" + std::string(tokens[k]) + "' is not a finite number",
                         origin, line_no);
      }
    }
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    const auto class_id = class_from_int(cls);
    if (!class_id) throw RangeError(where + "class id " + std::to_string(cls) + " out of range");
    Detection d{*class_id, {values[0], values[1], values[2], values[3]}, values[4]};
    if (d.bbox.cx < 0.0 || d.bbox.cx > 1.0 || d.bbox.cy < 0.0 || d.bbox.cy > 1.0) {
      throw RangeError(where + "box center outside [0, 1]");
    }
    if (!(d.bbox.w > 0.0 && d.bbox.w <= 1.0 && d.bbox.h > 0.0 && d.bbox.h <= 1.0)) {
      throw RangeError(where + "box size outside (0, 1]");
    }
    if (d.confidence < 0.0 || d.confidence > 1.0) {
      throw RangeError(where + "confidence outside [0, 1]");
    }
    out.push_back(d);
    if (end == text.size()) break;
  }
  return out;
}

std::vector<Detection> load_detection_file(const std::filesystem::path& path) {
  return parse_detections(read_text(path), path.string());
}

std::vector<ViewDetections> load_view_detections(const std::filesystem::path& dir,
                                                 std::span<const std::string> view_ids) {
  std::vector<ViewDetections> views;
  views.reserve(view_ids.size());
  for (const std::string& id : view_ids) {
    ViewDetections v{id, {}};
    const auto path = dir / (id + ".txt");
    if (std::filesystem::exists(path)) v.detections = load_detection_file(path);
    views.push_back(std::move(v));
  }
  return views;
}

std::vector<ViewDetections> load_view_detections(const std::filesystem::path& manifest) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text(manifest));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(manifest.string() + ": " + e.what(), static_cast<std::uint64_t>(e.byte));
  }
  if (!doc.is_object()) {
    throw ConfigError(manifest.string() + ": detections manifest must be a JSON object");
  }
  const auto base = manifest.parent_path();
  std::vector<ViewDetections> views;
  for (const auto& [id, entry] : doc.items()) {
    if (!entry.is_string()) {
      throw ConfigError(manifest.string() + ": entry for '" + id + "' must be a path string");
    }
    std::filesystem::path file = entry.get<std::string>();
    if (file.is_relative()) file = base / file;
    ViewDetections v{id, {}};
    if (std::filesystem::exists(file)) v.detections = load_detection_file(file);
    views.push_back(std::move(v));
  }
  return views;
}

std::vector<std::string> missing_detection_files(const std::filesystem::path& dir,
                                                 std::span<const std::string> view_ids) {
  std::vector<std::string> missing;
  for (const std::string& id : view_ids) {
    if (!std::filesystem::exists(dir / (id + ".txt"))) missing.push_back(id);
  }
  return missing;
}

std::string format_detections(const std::vector<Detection>& detections) {
  std::string out = class_map_comment() + "\n";
  for (const Detection& d : detections) {
    out += std::to_string(to_int(d.class_id));
    for (double v : {d.bbox.cx, d.bbox.cy, d.bbox.w, d.bbox.h, d.confidence}) {
      out += ' ';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_detection_file(const std::filesystem::path& path,
                          const std::vector<Detection>& detections) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string(), path.string());
  out << format_detections(detections);
  if (!out) throw IoError("write failed for " + path.string(), path.string());
}

}  // namespace satsplat
