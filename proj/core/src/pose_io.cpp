#include "satsplat/pose_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "satsplat/errors.hpp"

namespace satsplat {

using nlohmann::json;

namespace {

constexpr double kOrthonormalTolerance = 1e-6;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string(), path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

bool is_safe_view_id(const std::string& id) {
  if (id.empty() || id.front() == '.') return false;
  for (char ch : id) {
    if (ch == '/' || ch == '\\' || ch == '\0' || ch == '\n' || ch == '\r') {
      return false;
    }
  }
  return true;
}

std::vector<CameraView> parse_pose_json(const std::string& text,
                                        const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what(), static_cast<std::uint64_t>(e.byte));
  }
  if (!doc.is_array()) throw ConfigError(origin + ": pose file must be a JSON array");

  std::vector<CameraView> views;
  std::set<std::string> seen;
  for (std::size_t k = 0; k < doc.size(); ++k) {
    const json& entry = doc[k];
    const std::string where = origin + "[" + std::to_string(k) + "]";
    try {
      CameraView view;
      view.id = entry.at("id").get<std::string>();
      if (!is_safe_view_id(view.id)) {
        throw ConfigError(where + ": unusable pose id '" + view.id + "'");
      }
      if (!seen.insert(view.id).second) {
        throw ConfigError(where + ": duplicate pose id '" + view.id + "'");
      }
      const json& mat = entry.at("matrix");
      if (!mat.is_array() || mat.size() != 16) {
        throw ConfigError(where + ": matrix must hold 16 numbers");
      }
      Mat4 m;
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) m(r, c) = mat.at(r * 4 + c).get<double>();
      }
      view.pose = PoseMatrix::from_matrix(m);
      if (view.pose.orthonormality_error() > kOrthonormalTolerance) {
        throw ConfigError(where + ": rotation block is not an orthonormal "
                                  "right-handed frame (right x up = forward)");
      }
      const json& in = entry.at("intrinsics");
      view.intrinsics.fx = in.at("fx").get<double>();
      view.intrinsics.fy = in.at("fy").get<double>();
      view.intrinsics.cx = in.at("cx").get<double>();
      view.intrinsics.cy = in.at("cy").get<double>();
      view.intrinsics.width = in.at("width").get<int>();
      view.intrinsics.height = in.at("height").get<int>();
      view.intrinsics.validate();
      views.push_back(std::move(view));
    } catch (const json::exception& e) {
      throw ConfigError(where + ": " + e.what());
    } catch (const ParseError&) {
      throw ConfigError(where + ": matrix last row must be (0, 0, 0, 1)");
    }
  }
  return views;
}

std::vector<CameraView> load_pose_file(const std::filesystem::path& path) {
  return parse_pose_json(read_text(path), path.string());
}

std::string pose_json(const std::vector<CameraView>& views) {
  json doc = json::array();
  for (const CameraView& v : views) {
    json mat = json::array();
    const Mat4& m = v.pose.matrix();
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) mat.push_back(m(r, c));
    }
    doc.push_back({{"id", v.id},
                   {"matrix", mat},
                   {"intrinsics",
                    {{"fx", v.intrinsics.fx},
                     {"fy", v.intrinsics.fy},
                     {"cx", v.intrinsics.cx},
                     {"cy", v.intrinsics.cy},
                     {"width", v.intrinsics.width},
                     {"height", v.intrinsics.height}}}});
  }
  return doc.dump(1) + "\n";
}

void save_pose_file(const std::filesystem::path& path,
                    const std::vector<CameraView>& views) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string(), path.string());
  out << pose_json(views);
  if (!out) throw IoError("write failed for " + path.string(), path.string());
}

}  // namespace satsplat
