#include "meshsplat/io/png.hpp"

#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "meshsplat/error.hpp"
#include "meshsplat/io/soup_file.hpp"

namespace meshsplat::io {

namespace {

struct ImageGuard {
  png_image* img;
  ~ImageGuard() { png_image_free(img); }
};

png_image open_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!std::filesystem::exists(path)) throw IoError("cannot open " + path.string());
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw FormatError("PNG " + path.string() + ": " + msg);
  }
  if (img.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&img);
    throw FormatError("PNG " + path.string() + ": unsupported bit depth (16-bit)");
  }
  return img;
}

}  // namespace

PngInfo read_png_info(const std::filesystem::path& path) {
  png_image img = open_png(path);
  PngInfo info{int(img.width), int(img.height), (img.format & PNG_FORMAT_FLAG_ALPHA) ? 4 : 3};
  png_image_free(&img);
  return info;
}

Image load_png(const std::filesystem::path& path) {
  png_image img = open_png(path);
  ImageGuard guard{&img};
  const bool alpha = (img.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  img.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  const int channels = alpha ? 4 : 3;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    throw FormatError("PNG " + path.string() + ": " + img.message);
  }
  Image out(int(img.width), int(img.height), channels);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = buffer[i] / 255.0;
  return out;
}

void save_png(const Image& img, const std::filesystem::path& path) {
  if (img.channels != 3 && img.channels != 4) {
    throw FormatError("save_png: need 3 or 4 channels, got " + std::to_string(img.channels));
  }
  std::vector<png_byte> buffer(img.data.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) buffer[i] = quantize_unit(img.data[i]);
  png_image out;
  std::memset(&out, 0, sizeof(out));
  out.version = PNG_IMAGE_VERSION;
  out.width = png_uint_32(img.width);
  out.height = png_uint_32(img.height);
  out.format = img.channels == 4 ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&out, path.string().c_str(), 0, buffer.data(), 0, nullptr)) {
    const std::string msg = out.message;
    png_image_free(&out);
    throw IoError("cannot write " + path.string() + ": " + msg);
  }
}

}  // namespace meshsplat::io
