#pragma once

#include <filesystem>

#include "meshsplat/image.hpp"

namespace meshsplat::io {

// 8-bit PNGs only; channel values map to [0, 1] by /255. Gray and palette
// files are expanded to RGB(A). 16-bit files raise FormatError.
Image load_png(const std::filesystem::path& path);

struct PngInfo {
  int width = 0;
  int height = 0;
  int channels = 0;
};
PngInfo read_png_info(const std::filesystem::path& path);

// Writes 3- or 4-channel images, quantizing with round-half-up.
void save_png(const Image& img, const std::filesystem::path& path);

}  // namespace meshsplat::io
