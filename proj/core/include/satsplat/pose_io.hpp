#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "satsplat/geometry.hpp"

namespace satsplat {

struct CameraView {
  std::string id;
  PoseMatrix pose;
  Intrinsics intrinsics;
};

// Pose list file: a JSON array of
//   {"id": str, "matrix": [16 numbers, row-major camera-to-world],
//    "intrinsics": {"fx", "fy", "cx", "cy", "width", "height"}}.
// Loading rejects duplicate or path-unsafe ids, malformed matrices and
// frames that are not orthonormal within 1e-6.
std::vector<CameraView> load_pose_file(const std::filesystem::path& path);
std::vector<CameraView> parse_pose_json(const std::string& text,
                                        const std::string& origin = "<memory>");
void save_pose_file(const std::filesystem::path& path,
                    const std::vector<CameraView>& views);
std::string pose_json(const std::vector<CameraView>& views);

// Ids become file names downstream, so they must be non-empty and free of
// path separators and leading dots.
bool is_safe_view_id(const std::string& id);

}  // namespace satsplat
