#pragma once

#include <cstddef>
#include <vector>

namespace meshsplat {

// Interleaved floating-point image, row 0 at the top. Values are linear
// [0, 1]; no gamma is applied anywhere in the pipeline.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), data(std::size_t(w) * h * c, fill) {}

  std::size_t index(int x, int y, int c = 0) const {
    return (std::size_t(y) * width + x) * channels + c;
  }
  double& at(int x, int y, int c) { return data[index(x, y, c)]; }
  double at(int x, int y, int c) const { return data[index(x, y, c)]; }
  std::size_t pixel_count() const { return std::size_t(width) * height; }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

// First three channels.
Image rgb_of(const Image& img);

// Composites a straight-alpha RGBA image over a premultiplied background
// color: rgb * a + (1 - a) * bg. Three-channel inputs are returned as is.
Image flatten_alpha(const Image& rgba, double bg_r, double bg_g, double bg_b);

// Renderer output (rgb already includes background_alpha * background) to a
// straight-alpha image, the convention of PNG files. The output alpha covers
// the background too. Fully transparent pixels become black.
Image to_straight_alpha(const Image& rgba, double background_alpha = 0.0);

// Averages factor x factor blocks. Dimensions must be divisible by factor.
Image box_downsample(const Image& img, int factor);

}  // namespace meshsplat
