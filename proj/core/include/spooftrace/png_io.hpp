#pragma once

#include <string>

#include "spooftrace/tensor.hpp"

namespace spooftrace {

/// 8-bit RGB; values clamped to [0,1] and quantized.
void write_png_rgb(const std::string& path, const Tensor<float>& img);
Tensor<float> read_png_rgb(const std::string& path);

/// 8-bit grayscale, for masks.
void write_png_gray(const std::string& path, const Tensor<float>& img);
Tensor<float> read_png_gray(const std::string& path);

/// 16-bit grayscale, for depth targets.
void write_png_gray16(const std::string& path, const Tensor<float>& img);
Tensor<float> read_png_gray16(const std::string& path);

}  // namespace spooftrace
