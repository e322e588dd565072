#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "meshsplat/image.hpp"
#include "meshsplat/soup.hpp"

namespace meshsplat::raster {

// Pinhole camera. camera_to_world follows the usual NeRF/OpenGL manifest
// convention: the camera looks down its local -z with +y up.
struct Camera {
  int width = 1;
  int height = 1;
  double fov_x = 0.8;  // horizontal, radians
  Eigen::Matrix4d camera_to_world = Eigen::Matrix4d::Identity();
  double near = 0.01;
  double far = 100.0;

  double focal() const;  // pixels, shared by both axes
  void validate() const;  // throws InvalidCameraError
};

struct RenderConfig {
  int num_layers = 15;
  Eigen::Vector4d background = Eigen::Vector4d::Zero();  // rgb + alpha
};

// projection * inverse(camera_to_world). NDC z runs from -1 at the near plane
// to +1 at the far plane, i.e. +z points into the screen.
Eigen::Matrix4d build_mvp(const Camera& cam);

std::vector<Eigen::Vector4d> transform_vertices(const MeshSoup& soup, const Eigen::Matrix4d& mvp);

struct Fragment {
  std::int32_t face = -1;  // -1 marks an empty pixel
  Eigen::Vector3d bary = Eigen::Vector3d::Zero();  // perspective-correct, sums to 1
  double depth = 0.0;  // NDC z

  bool empty() const { return face < 0; }
};

// Per-pixel (depth, face) key of the last peeled fragment. Faces compare by
// index on equal depth, lower index nearer.
struct DepthBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<std::int32_t> face;
};

struct PeelResult {
  std::vector<Fragment> fragments;  // row-major, width * height
  DepthBuffer depth;
  std::size_t covered = 0;
};

// Screen-space setup shared by all peels of one frame.
class TriangleSetup {
 public:
  TriangleSetup(std::span<const Eigen::Vector4d> clip, std::span<const Face> faces, int width,
                int height, double near);

  int width() const { return width_; }
  int height() const { return height_; }

  struct Tri {
    std::int32_t face;
    std::array<int, 3> order;  // canonical vertex order (positive area)
    std::array<Eigen::Vector2d, 3> screen;
    std::array<double, 3> inv_w;
    std::array<double, 3> z_over_w;
    double inv_area;
    int x0, x1, y0, y1;  // inclusive pixel bounds
  };
  std::span<const Tri> triangles() const { return tris_; }

 private:
  int width_;
  int height_;
  std::vector<Tri> tris_;
};

// One depth-peeling pass: at each pixel, the covered fragment with the
// smallest (depth, face) key strictly greater than `prev` (any fragment when
// `prev` is null). Pixel centers sit at (x + 0.5, y + 0.5); coverage follows
// the top-left rule; both windings are rasterized.
PeelResult rasterize_peel(const TriangleSetup& setup, const DepthBuffer* prev);
PeelResult rasterize_peel(std::span<const Eigen::Vector4d> clip, std::span<const Face> faces,
                          int width, int height, double near, const DepthBuffer* prev);

Eigen::Vector4d interpolate_rgba(const Fragment& fragment, const Face& face,
                                 std::span<const Vertex> vertices);

// Front-to-back over operator: C += T * a * c, T *= (1 - a). The result's
// rgb is C + T * background.a * background.rgb and its alpha is 1 - T.
class Compositor {
 public:
  Compositor(int width, int height);
  void add_layer(const Image& rgba);
  void add(std::size_t pixel, const Eigen::Vector4d& rgba);
  Image finish(const RenderConfig& cfg) const;
  std::span<const double> transmittance() const { return transmittance_; }

 private:
  int width_;
  int height_;
  std::vector<double> color_;
  std::vector<double> transmittance_;
};

// Layers must be ordered near to far.
Image composite(std::span<const Image> layers, const RenderConfig& cfg);

struct LayeredFrame {
  int width = 0;
  int height = 0;
  Eigen::Matrix4d mvp = Eigen::Matrix4d::Identity();
  std::vector<Eigen::Vector4d> clip;
  // peels[k][pixel]; peeling stops early once a pass covers nothing.
  std::vector<std::vector<Fragment>> peels;
  std::vector<double> transmittance;  // after all peels
  Image image;  // final rgba
};

LayeredFrame render_layers(const MeshSoup& soup, const Camera& cam, const RenderConfig& cfg);
Image render(const MeshSoup& soup, const Camera& cam, const RenderConfig& cfg);

// Camera looking from `eye` toward `target` in the manifest convention.
Eigen::Matrix4d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                        const Eigen::Vector3d& up = Eigen::Vector3d::UnitY());

}  // namespace meshsplat::raster
