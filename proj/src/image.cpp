#include "meshsplat/image.hpp"

#include <string>

#include "meshsplat/error.hpp"

namespace meshsplat {

Image rgb_of(const Image& img) {
  if (img.channels < 3) throw FormatError("image has fewer than 3 channels");
  Image out(img.width, img.height, 3);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) out.data[p * 3 + c] = img.data[p * img.channels + c];
  }
  return out;
}

Image flatten_alpha(const Image& rgba, double bg_r, double bg_g, double bg_b) {
  if (rgba.channels != 4) return rgb_of(rgba);
  const double bg[3] = {bg_r, bg_g, bg_b};
  Image out(rgba.width, rgba.height, 3);
  for (std::size_t p = 0; p < rgba.pixel_count(); ++p) {
    const double a = rgba.data[p * 4 + 3];
    for (int c = 0; c < 3; ++c) out.data[p * 3 + c] = rgba.data[p * 4 + c] * a + bg[c] * (1.0 - a);
  }
  return out;
}

Image to_straight_alpha(const Image& rgba, double background_alpha) {
  if (rgba.channels != 4) throw FormatError("to_straight_alpha: need 4 channels");
  Image out = rgba;
  for (std::size_t p = 0; p < rgba.pixel_count(); ++p) {
    const double a0 = rgba.data[p * 4 + 3];
    const double a = a0 + (1.0 - a0) * background_alpha;
    out.data[p * 4 + 3] = a;
    for (int c = 0; c < 3; ++c) out.data[p * 4 + c] = a > 0.0 ? rgba.data[p * 4 + c] / a : 0.0;
  }
  return out;
}

Image box_downsample(const Image& img, int factor) {
  if (factor < 1 || img.width % factor != 0 || img.height % factor != 0) {
    throw ConfigError("box_downsample: image size not divisible by factor " +
                      std::to_string(factor));
  }
  if (factor == 1) return img;
  Image out(img.width / factor, img.height / factor, img.channels);
  const double inv = 1.0 / (double(factor) * factor);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        double sum = 0.0;
        for (int dy = 0; dy < factor; ++dy) {
          for (int dx = 0; dx < factor; ++dx) sum += img.at(x * factor + dx, y * factor + dy, c);
        }
        out.at(x, y, c) = sum * inv;
      }
    }
  }
  return out;
}

}  // namespace meshsplat
