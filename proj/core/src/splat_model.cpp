#include "satsplat/splat_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "satsplat/errors.hpp"

namespace satsplat {
namespace {

constexpr double kShC0 = 0.28209479177387814;
constexpr double kShC1 = 0.4886025119029199;
constexpr double kShC2[] = {1.0925484305920792, -1.0925484305920792,
                            0.31539156525252005, -1.0925484305920792,
                            0.5462742152960396};
constexpr double kShC3[] = {-0.5900435899266435, 2.890611442640554,
                            -0.4570457994644658, 0.3731763325901154,
                            -0.4570457994644658, 1.445305721320277,
                            -0.5900435899266435};

int rest_count_for_degree(int degree) {
  return 3 * ((degree + 1) * (degree + 1) - 1);
}

enum class ScalarType { kI8, kU8, kI16, kU16, kI32, kU32, kF32, kF64 };

std::optional<ScalarType> scalar_type(const std::string& name) {
  static const std::map<std::string, ScalarType> kTypes = {
      {"char", ScalarType::kI8},    {"int8", ScalarType::kI8},
      {"uchar", ScalarType::kU8},   {"uint8", ScalarType::kU8},
      {"short", ScalarType::kI16},  {"int16", ScalarType::kI16},
      {"ushort", ScalarType::kU16}, {"uint16", ScalarType::kU16},
      {"int", ScalarType::kI32},    {"int32", ScalarType::kI32},
      {"uint", ScalarType::kU32},   {"uint32", ScalarType::kU32},
      {"float", ScalarType::kF32},  {"float32", ScalarType::kF32},
      {"double", ScalarType::kF64}, {"float64", ScalarType::kF64},
  };
  const auto it = kTypes.find(name);
  if (it == kTypes.end()) return std::nullopt;
  return it->second;
}

std::size_t type_size(ScalarType t) {
  switch (t) {
    case ScalarType::kI8:
    case ScalarType::kU8: return 1;
    case ScalarType::kI16:
    case ScalarType::kU16: return 2;
    case ScalarType::kI32:
    case ScalarType::kU32:
    case ScalarType::kF32: return 4;
    case ScalarType::kF64: return 8;
  }
  return 0;
}

template <typename T>
T read_le(const char* p) {
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(raw, raw + sizeof(T));
  }
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

template <typename T>
void append_le(std::string& out, T value) {
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(raw, raw + sizeof(T));
  }
  out.append(reinterpret_cast<const char*>(raw), sizeof(T));
}

double read_scalar(ScalarType t, const char* p) {
  switch (t) {
    case ScalarType::kI8: return read_le<std::int8_t>(p);
    case ScalarType::kU8: return read_le<std::uint8_t>(p);
    case ScalarType::kI16: return read_le<std::int16_t>(p);
    case ScalarType::kU16: return read_le<std::uint16_t>(p);
    case ScalarType::kI32: return read_le<std::int32_t>(p);
    case ScalarType::kU32: return read_le<std::uint32_t>(p);
    case ScalarType::kF32: return read_le<float>(p);
    case ScalarType::kF64: return read_le<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  ScalarType type;
  std::size_t offset;
};

struct Element {
  std::string name;
  std::uint64_t count = 0;
  std::vector<Property> properties;
  std::size_t stride = 0;
  bool has_list = false;
};

struct Header {
  std::vector<Element> elements;
  std::size_t payload_offset = 0;
};

Header parse_header(std::string_view bytes) {
  constexpr std::string_view kMagic = "ply";
  std::size_t pos = 0;
  auto next_line = [&](std::string& line) -> bool {
    const std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos) return false;
    line.assign(bytes.substr(pos, end - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    return true;
  };

  std::string line;
  if (!next_line(line) || line != kMagic) {
    throw ParseError("missing 'ply' magic", 0);
  }
  Header header;
  bool saw_format = false;
  while (true) {
    const std::size_t line_start = pos;
    if (!next_line(line)) {
      throw ParseError("header is not terminated by end_header", line_start);
    }
    std::istringstream ss(line);
    std::string keyword;
    ss >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "end_header") break;
    if (keyword == "format") {
      std::string fmt, version;
      ss >> fmt >> version;
      if (fmt == "ascii" || fmt == "binary_big_endian") {
        throw UnsupportedFormat("PLY format '" + fmt +
                                "' is not supported; expected binary_little_endian");
      }
      if (fmt != "binary_little_endian") {
        throw ParseError("unknown PLY format '" + fmt + "'", line_start);
      }
      saw_format = true;
    } else if (keyword == "element") {
      Element e;
      long long count = -1;
      ss >> e.name >> count;
      if (e.name.empty() || count < 0 || ss.fail()) {
        throw ParseError("malformed element line '" + line + "'", line_start);
      }
      e.count = static_cast<std::uint64_t>(count);
      header.elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (header.elements.empty()) {
        throw ParseError("property before any element", line_start);
      }
      Element& e = header.elements.back();
      std::string type_name, name;
      ss >> type_name;
      if (type_name == "list") {
        e.has_list = true;
        continue;
      }
      ss >> name;
      const auto type = scalar_type(type_name);
      if (!type || name.empty()) {
        throw ParseError("malformed property line '" + line + "'", line_start);
      }
      e.properties.push_back({name, *type, e.stride});
      e.stride += type_size(*type);
    } else {
      throw ParseError("unexpected header keyword '" + keyword + "'", line_start);
    }
  }
  if (!saw_format) throw ParseError("header has no format line", 0);
  header.payload_offset = pos;
  return header;
}

Vec3 sh_basis_eval(const GaussianSplat& s, const Vec3& d, int degree) {
  Vec3 result = kShC0 * s.color_dc;
  if (degree < 1) return result;
  auto coeff = [&](int k) {
    return Vec3(s.color_rest[0 * kShRestPerChannel + k],
                s.color_rest[1 * kShRestPerChannel + k],
                s.color_rest[2 * kShRestPerChannel + k]);
  };
  const double x = d.x(), y = d.y(), z = d.z();
  result += -kShC1 * y * coeff(0) + kShC1 * z * coeff(1) - kShC1 * x * coeff(2);
  if (degree < 2) return result;
  const double xx = x * x, yy = y * y, zz = z * z;
  const double xy = x * y, yz = y * z, xz = x * z;
  result += kShC2[0] * xy * coeff(3) + kShC2[1] * yz * coeff(4) +
            kShC2[2] * (2.0 * zz - xx - yy) * coeff(5) + kShC2[3] * xz * coeff(6) +
            kShC2[4] * (xx - yy) * coeff(7);
  if (degree < 3) return result;
  result += kShC3[0] * y * (3.0 * xx - yy) * coeff(8) +
            kShC3[1] * xy * z * coeff(9) +
            kShC3[2] * y * (4.0 * zz - xx - yy) * coeff(10) +
            kShC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy) * coeff(11) +
            kShC3[4] * x * (4.0 * zz - xx - yy) * coeff(12) +
            kShC3[5] * z * (xx - yy) * coeff(13) +
            kShC3[6] * x * (xx - 3.0 * yy) * coeff(14);
  return result;
}

}  // namespace

Mat3 quaternion_to_matrix(const Eigen::Vector4d& q) {
  const double w = q(0), x = q(1), y = q(2), z = q(3);
  Mat3 r;
  r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
      2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
      2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
  return r;
}

Mat3 covariance_world(const GaussianSplat& splat) {
  const Mat3 m = quaternion_to_matrix(splat.rotation) *
                 splat.log_scale.array().exp().matrix().asDiagonal();
  const Mat3 sigma = m * m.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

Vec3 eval_color(const GaussianSplat& splat, const Vec3& view_dir, int sh_degree) {
  const Vec3 raw = sh_basis_eval(splat, view_dir, std::clamp(sh_degree, 0, 3));
  return (raw.array() + 0.5).cwiseMax(0.0).cwiseMin(1.0).matrix();
}

SplatCloud parse_splat_ply(std::string_view bytes) {
  const Header header = parse_header(bytes);

  std::size_t offset = header.payload_offset;
  const Element* vertex = nullptr;
  for (const Element& e : header.elements) {
    if (e.name == "vertex") {
      vertex = &e;
      break;
    }
    if (e.has_list) {
      throw ParseError("list-valued element '" + e.name + "' precedes vertex data",
                       offset);
    }
    offset += e.count * e.stride;
  }
  if (vertex == nullptr) throw ParseError("no vertex element in header", 0);
  if (vertex->has_list) throw ParseError("vertex element has list properties", 0);
  if (vertex->count == 0) throw ParseError("vertex element is empty", 0);

  std::map<std::string, const Property*> by_name;
  for (const Property& p : vertex->properties) by_name[p.name] = &p;
  auto require = [&](const std::string& name) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw ParseError("missing vertex property '" + name + "'", 0);
    }
    return it->second;
  };

  const Property* xyz[3] = {require("x"), require("y"), require("z")};
  const Property* dc[3] = {require("f_dc_0"), require("f_dc_1"), require("f_dc_2")};
  const Property* opacity = require("opacity");
  const Property* scale[3] = {require("scale_0"), require("scale_1"), require("scale_2")};
  const Property* rot[4] = {require("rot_0"), require("rot_1"), require("rot_2"),
                            require("rot_3")};
  int rest_count = 0;
  while (by_name.count("f_rest_" + std::to_string(rest_count))) ++rest_count;
  int degree = -1;
  for (int d = 0; d <= 3; ++d) {
    if (rest_count_for_degree(d) == rest_count) degree = d;
  }
  if (degree < 0) {
    throw ParseError("f_rest property count " + std::to_string(rest_count) +
                         " does not match any SH degree",
                     0);
  }
  std::vector<const Property*> rest;
  for (int k = 0; k < rest_count; ++k) rest.push_back(by_name["f_rest_" + std::to_string(k)]);
  const int rest_per_channel = rest_count / 3;

  SplatCloud cloud;
  cloud.sh_degree = degree;
  cloud.splats.resize(vertex->count);
  for (std::uint64_t i = 0; i < vertex->count; ++i) {
    const std::size_t base = offset + i * vertex->stride;
    if (base + vertex->stride > bytes.size()) {
      throw ParseError("truncated vertex payload: header declares " +
                           std::to_string(vertex->count) + " vertices, data ends in vertex " +
                           std::to_string(i),
                       base);
    }
    const char* row = bytes.data() + base;
    auto get = [&](const Property* p) { return read_scalar(p->type, row + p->offset); };

    GaussianSplat& s = cloud.splats[i];
    for (int k = 0; k < 3; ++k) {
      s.mean(k) = get(xyz[k]);
      s.color_dc(k) = get(dc[k]);
      s.log_scale(k) = get(scale[k]);
    }
    s.opacity_logit = get(opacity);
    for (int k = 0; k < 4; ++k) s.rotation(k) = get(rot[k]);
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < rest_per_channel; ++k) {
        s.color_rest[c * kShRestPerChannel + k] = get(rest[c * rest_per_channel + k]);
      }
    }

    const bool finite = s.mean.allFinite() && s.color_dc.allFinite() &&
                        s.rotation.allFinite() && std::isfinite(s.opacity_logit) &&
                        (s.log_scale.array().exp().isFinite()).all() &&
                        std::all_of(s.color_rest.begin(), s.color_rest.end(),
                                    [](double v) { return std::isfinite(v); });
    if (!finite) throw ParseError("non-finite splat attribute", base);
    const double qn = s.rotation.norm();
    if (!(qn > 0.0)) throw ParseError("zero-norm rotation quaternion", base);
    if (std::abs(qn - 1.0) > 1e-7) s.rotation /= qn;
  }
  return cloud;
}

SplatCloud load_splat_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string(), path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_splat_ply(ss.str());
}

std::string serialize_splat_ply(const SplatCloud& cloud) {
  const int degree = std::clamp(cloud.sh_degree, 0, 3);
  const int rest_count = rest_count_for_degree(degree);
  const int rest_per_channel = rest_count / 3;

  std::string out;
  out += "ply\nformat binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(cloud.splats.size()) + "\n";
  for (const char* name : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"}) {
    out += std::string("property float ") + name + "\n";
  }
  for (int k = 0; k < rest_count; ++k) {
    out += "property float f_rest_" + std::to_string(k) + "\n";
  }
  for (const char* name : {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1",
                           "rot_2", "rot_3"}) {
    out += std::string("property float ") + name + "\n";
  }
  out += "end_header\n";

  auto put = [&](double v) { append_le<float>(out, static_cast<float>(v)); };
  for (const GaussianSplat& s : cloud.splats) {
    for (int k = 0; k < 3; ++k) put(s.mean(k));
    for (int k = 0; k < 3; ++k) put(0.0);
    for (int k = 0; k < 3; ++k) put(s.color_dc(k));
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < rest_per_channel; ++k) put(s.color_rest[c * kShRestPerChannel + k]);
    }
    put(s.opacity_logit);
    for (int k = 0; k < 3; ++k) put(s.log_scale(k));
    for (int k = 0; k < 4; ++k) put(s.rotation(k));
  }
  return out;
}

void save_splat_ply(const std::filesystem::path& path, const SplatCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string(), path.string());
  const std::string bytes = serialize_splat_ply(cloud);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string(), path.string());
}

}  // namespace satsplat
