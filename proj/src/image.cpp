#include "headgs/image.hpp"

#include "headgs/binary_io.hpp"
#include "headgs/errors.hpp"

#include <png.h>

#include <algorithm>
#include <limits>
#include <cmath>
#include <cstring>

namespace headgs {

namespace {

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep data, png_size_t length) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + length > cur->bytes.size()) png_error(png, "truncated PNG");
  std::memcpy(data, cur->bytes.data() + cur->offset, length);
  cur->offset += length;
}

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) { throw Error(std::string("png: ") + msg); }
void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw Error("PNG encoding supports 1 or 3 channels");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  try {
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<std::size_t>(image.width) * image.channels);
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x)
        for (int c = 0; c < image.channels; ++c)
          row[static_cast<std::size_t>(x) * image.channels + c] =
              static_cast<png_byte>(std::lround(std::clamp(image.at(x, y, c), 0.0, 1.0) * 255.0));
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw Error("not a PNG image");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  if (!png) throw Error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{bytes, 0};
  Image img;
  try {
    png_set_read_fn(png, &cursor, png_read_from_span);
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int c = png_get_channels(png, info);
    img = Image(w, h, c);
    std::vector<png_byte> row(png_get_rowbytes(png, info));
    for (int y = 0; y < h; ++y) {
      png_read_row(png, row.data(), nullptr);
      for (int x = 0; x < w; ++x)
        for (int k = 0; k < c; ++k) img.at(x, y, k) = row[static_cast<std::size_t>(x) * c + k] / 255.0;
    }
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::filesystem::path& path, const Image& image) { io::write_file(path, encode_png(image)); }

Image read_png(const std::filesystem::path& path) { return decode_png(io::read_file(path)); }

void write_raw_planar(const std::filesystem::path& path, const Image& image) {
  std::vector<std::uint8_t> out;
  out.reserve(image.data.size() * 4);
  for (int c = 0; c < image.channels; ++c)
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x) io::put(out, static_cast<float>(image.at(x, y, c)));
  io::write_file(path, out);
}

double psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimensionError("psnr: image shapes differ");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

}  // namespace headgs
