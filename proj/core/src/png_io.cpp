#include "spooftrace/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <stdexcept>

namespace spooftrace {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

unsigned char quant8(float v) {
  float x = v * 255.0f + 0.5f;
  if (x < 0.0f) x = 0.0f;
  if (x > 255.0f) x = 255.0f;
  return static_cast<unsigned char>(x);
}

unsigned short quant16(float v) {
  float x = v * 65535.0f + 0.5f;
  if (x < 0.0f) x = 0.0f;
  if (x > 65535.0f) x = 65535.0f;
  return static_cast<unsigned short>(x);
}

void write_png(const std::string& path, const Tensor<float>& img, int color_type, int bit_depth) {
  const Shape4 s = as4(img);
  const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  if (s.c != channels) throw std::invalid_argument("write_png: channel mismatch for " + path);

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng write failure: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, s.w, s.h, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  const size_t row_bytes = static_cast<size_t>(s.w) * channels * (bit_depth / 8);
  std::vector<unsigned char> row(row_bytes);
  for (int y = 0; y < s.h; ++y) {
    if (bit_depth == 8) {
      for (int x = 0; x < s.w; ++x)
        for (int c = 0; c < channels; ++c) row[x * channels + c] = quant8(img.at(y, x, c));
    } else {
      for (int x = 0; x < s.w; ++x)
        for (int c = 0; c < channels; ++c) {
          const unsigned short v = quant16(img.at(y, x, c));
          row[(x * channels + c) * 2] = static_cast<unsigned char>(v >> 8);
          row[(x * channels + c) * 2 + 1] = static_cast<unsigned char>(v & 0xff);
        }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor<float> read_png(const std::string& path, int want_channels, int want_depth) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open for reading: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng read failure: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  int depth = png_get_bit_depth(png, info);
  int color = png_get_color_type(png, info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (want_channels == 3 && (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA))
    png_set_gray_to_rgb(png);
  if (want_channels == 1 && (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
                             color == PNG_COLOR_TYPE_PALETTE))
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (want_depth == 8 && depth == 16) png_set_strip_16(png);
  png_read_update_info(png, info);
  depth = png_get_bit_depth(png, info);

  Tensor<float> out({h, w, want_channels});
  std::vector<unsigned char> row(png_get_rowbytes(png, info));
  const float scale = depth == 16 ? 1.0f / 65535.0f : 1.0f / 255.0f;
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < want_channels; ++c) {
        unsigned v;
        if (depth == 16) {
          const size_t i = (static_cast<size_t>(x) * want_channels + c) * 2;
          v = (static_cast<unsigned>(row[i]) << 8) | row[i + 1];
        } else {
          v = row[static_cast<size_t>(x) * want_channels + c];
        }
        out.at(y, x, c) = static_cast<float>(v) * scale;
      }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace

void write_png_rgb(const std::string& path, const Tensor<float>& img) {
  write_png(path, img, PNG_COLOR_TYPE_RGB, 8);
}

Tensor<float> read_png_rgb(const std::string& path) { return read_png(path, 3, 8); }

void write_png_gray(const std::string& path, const Tensor<float>& img) {
  write_png(path, img, PNG_COLOR_TYPE_GRAY, 8);
}

Tensor<float> read_png_gray(const std::string& path) { return read_png(path, 1, 8); }

void write_png_gray16(const std::string& path, const Tensor<float>& img) {
  write_png(path, img, PNG_COLOR_TYPE_GRAY, 16);
}

Tensor<float> read_png_gray16(const std::string& path) { return read_png(path, 1, 16); }

}  // namespace spooftrace
