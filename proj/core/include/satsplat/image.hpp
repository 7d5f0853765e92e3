#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace satsplat {

// Interleaved RGB image with channel values in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * 3 + static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// 8-bit RGB PNG. Values are written linearly: byte = round(clamp(v) * 255).
void write_png(const std::filesystem::path& path, const Image& image);
// Reads 8/16-bit gray, gray+alpha, RGB or RGBA PNGs; alpha is dropped and
// values are scaled to [0, 1] linearly.
Image read_png(const std::filesystem::path& path);

}  // namespace satsplat
