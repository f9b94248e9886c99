#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace headgs {

/// Interleaved floating-point image, row-major, `channels` values per pixel.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  double at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool same_shape(const Image& o) const { return width == o.width && height == o.height && channels == o.channels; }
};

/// 8-bit PNG (values clamped to [0, 1]); 1 or 3 channels.
std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> bytes);
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

/// Channel-planar little-endian binary32 blob.
void write_raw_planar(const std::filesystem::path& path, const Image& image);

/// Peak signal-to-noise ratio for signals in [0, 1].
double psnr(const Image& a, const Image& b);

}  // namespace headgs
