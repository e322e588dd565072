#include "meshsplat/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "meshsplat/error.hpp"
#include "meshsplat/parallel.hpp"

namespace meshsplat::raster {

namespace {

// Relative slack below the near plane before a vertex counts as behind it.
constexpr double kNearSlack = 1e-9;

bool key_less(double d0, std::int32_t f0, double d1, std::int32_t f1) {
  return d0 < d1 || (d0 == d1 && f0 < f1);
}

double edge_raw(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double px, double py) {
  return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

// Evaluated with the endpoints in a fixed order so that edge(a, b) is
// exactly -edge(b, a). Triangles sharing an edge then never both claim a
// pixel center that lies on it.
double edge(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double px, double py) {
  const bool swap = b.x() < a.x() || (b.x() == a.x() && b.y() < a.y());
  return swap ? -edge_raw(b, a, px, py) : edge_raw(a, b, px, py);
}

bool top_left(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const double dx = b.x() - a.x();
  const double dy = b.y() - a.y();
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

}  // namespace

double Camera::focal() const { return 0.5 * width / std::tan(0.5 * fov_x); }

void Camera::validate() const {
  if (width < 1 || height < 1) throw InvalidCameraError("camera: width and height must be >= 1");
  if (!(near > 0.0 && near < far)) throw InvalidCameraError("camera: need 0 < near < far");
  if (!(fov_x > 0.0 && fov_x < std::numbers::pi)) {
    throw InvalidCameraError("camera: fov_x must lie in (0, pi)");
  }
  if (!camera_to_world.allFinite()) {
    throw InvalidCameraError("camera: non-finite camera_to_world");
  }
  const double det = camera_to_world.determinant();
  if (!(std::abs(det) > 1e-12)) throw InvalidCameraError("camera: singular camera_to_world");
}

Eigen::Matrix4d build_mvp(const Camera& cam) {
  cam.validate();
  const Eigen::Matrix4d view = cam.camera_to_world.inverse();
  const double f = cam.focal();
  const double n = cam.near;
  const double fa = cam.far;
  Eigen::Matrix4d proj = Eigen::Matrix4d::Zero();
  proj(0, 0) = 2.0 * f / cam.width;
  proj(1, 1) = 2.0 * f / cam.height;
  proj(2, 2) = -(fa + n) / (fa - n);
  proj(2, 3) = -2.0 * fa * n / (fa - n);
  proj(3, 2) = -1.0;
  return proj * view;
}

std::vector<Eigen::Vector4d> transform_vertices(const MeshSoup& soup, const Eigen::Matrix4d& mvp) {
  std::vector<Eigen::Vector4d> out(soup.vertices.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = mvp * soup.vertices[i].position.homogeneous();
  }
  return out;
}

TriangleSetup::TriangleSetup(std::span<const Eigen::Vector4d> clip, std::span<const Face> faces,
                             int width, int height, double near)
    : width_(width), height_(height) {
  tris_.reserve(faces.size());
  const double min_w = near * (1.0 - kNearSlack);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& face = faces[f];
    Tri t;
    t.face = static_cast<std::int32_t>(f);
    std::array<Eigen::Vector2d, 3> s;
    bool ok = true;
    for (int j = 0; j < 3; ++j) {
      const Eigen::Vector4d& c = clip[face[j]];
      if (!(c.w() >= min_w) || !c.allFinite()) {
        ok = false;
        break;
      }
      s[j] = {(c.x() / c.w() + 1.0) * 0.5 * width, (1.0 - c.y() / c.w()) * 0.5 * height};
    }
    if (!ok) continue;
    const double area = edge(s[0], s[1], s[2].x(), s[2].y());
    if (!(area != 0.0) || !std::isfinite(area)) continue;
    t.order = area > 0.0 ? std::array<int, 3>{0, 1, 2} : std::array<int, 3>{0, 2, 1};
    for (int j = 0; j < 3; ++j) {
      const Eigen::Vector4d& c = clip[face[t.order[j]]];
      t.screen[j] = s[t.order[j]];
      t.inv_w[j] = 1.0 / c.w();
      t.z_over_w[j] = c.z() / c.w();
    }
    t.inv_area = 1.0 / edge(t.screen[0], t.screen[1], t.screen[2].x(), t.screen[2].y());
    if (!(t.inv_area > 0.0) || !std::isfinite(t.inv_area)) continue;

    double minx = s[0].x(), maxx = minx, miny = s[0].y(), maxy = miny;
    for (int j = 1; j < 3; ++j) {
      minx = std::min(minx, s[j].x());
      maxx = std::max(maxx, s[j].x());
      miny = std::min(miny, s[j].y());
      maxy = std::max(maxy, s[j].y());
    }
    const double bx0 = std::max(0.0, std::ceil(minx - 0.5));
    const double bx1 = std::min(double(width - 1), std::floor(maxx - 0.5));
    const double by0 = std::max(0.0, std::ceil(miny - 0.5));
    const double by1 = std::min(double(height - 1), std::floor(maxy - 0.5));
    if (bx0 > bx1 || by0 > by1) continue;
    t.x0 = int(bx0);
    t.x1 = int(bx1);
    t.y0 = int(by0);
    t.y1 = int(by1);
    tris_.push_back(t);
  }
}

PeelResult rasterize_peel(const TriangleSetup& setup, const DepthBuffer* prev) {
  const int W = setup.width();
  const int H = setup.height();
  const std::size_t npix = std::size_t(W) * H;
  if (prev != nullptr && (prev->width != W || prev->height != H)) {
    throw ConfigError("rasterize_peel: depth buffer size mismatch");
  }

  PeelResult out;
  out.fragments.assign(npix, Fragment{});
  out.depth.width = W;
  out.depth.height = H;
  out.depth.depth.assign(npix, std::numeric_limits<double>::infinity());
  out.depth.face.assign(npix, std::numeric_limits<std::int32_t>::max());

  const auto tris = setup.triangles();
  parallel_for(std::size_t(H), [&](std::size_t row0, std::size_t row1, unsigned) {
    for (const auto& t : tris) {
      const int y0 = std::max(t.y0, int(row0));
      const int y1 = std::min(t.y1, int(row1) - 1);
      if (y0 > y1) continue;
      const auto& a = t.screen[0];
      const auto& b = t.screen[1];
      const auto& c = t.screen[2];
      const bool tl_bc = top_left(b, c);
      const bool tl_ca = top_left(c, a);
      const bool tl_ab = top_left(a, b);
      for (int y = y0; y <= y1; ++y) {
        const double py = y + 0.5;
        for (int x = t.x0; x <= t.x1; ++x) {
          const double px = x + 0.5;
          const double e0 = edge(b, c, px, py);  // weight of vertex 0
          const double e1 = edge(c, a, px, py);
          const double e2 = edge(a, b, px, py);
          if (e0 < 0.0 || (e0 == 0.0 && !tl_bc)) continue;
          if (e1 < 0.0 || (e1 == 0.0 && !tl_ca)) continue;
          if (e2 < 0.0 || (e2 == 0.0 && !tl_ab)) continue;

          const double l0 = e0 * t.inv_area;
          const double l1 = e1 * t.inv_area;
          const double l2 = e2 * t.inv_area;
          const double depth = l0 * t.z_over_w[0] + l1 * t.z_over_w[1] + l2 * t.z_over_w[2];
          if (!(depth >= -1.0 && depth <= 1.0)) continue;

          const std::size_t pix = std::size_t(y) * W + x;
          if (prev != nullptr &&
              !key_less(prev->depth[pix], prev->face[pix], depth, t.face)) {
            continue;
          }
          if (!key_less(depth, t.face, out.depth.depth[pix], out.depth.face[pix])) continue;

          const double q0 = l0 * t.inv_w[0];
          const double q1 = l1 * t.inv_w[1];
          const double q2 = l2 * t.inv_w[2];
          const double inv_sum = 1.0 / (q0 + q1 + q2);
          Fragment& frag = out.fragments[pix];
          frag.face = t.face;
          frag.depth = depth;
          frag.bary[t.order[0]] = q0 * inv_sum;
          frag.bary[t.order[1]] = q1 * inv_sum;
          frag.bary[t.order[2]] = q2 * inv_sum;
          out.depth.depth[pix] = depth;
          out.depth.face[pix] = t.face;
        }
      }
    }
  });
  for (const auto& f : out.fragments) out.covered += f.empty() ? 0 : 1;
  return out;
}

PeelResult rasterize_peel(std::span<const Eigen::Vector4d> clip, std::span<const Face> faces,
                          int width, int height, double near, const DepthBuffer* prev) {
  return rasterize_peel(TriangleSetup(clip, faces, width, height, near), prev);
}

Eigen::Vector4d interpolate_rgba(const Fragment& fragment, const Face& face,
                                 std::span<const Vertex> vertices) {
  // Summed in vertex-index order so that reversing a face's winding gives
  // bit-identical results.
  std::array<int, 3> k{0, 1, 2};
  std::sort(k.begin(), k.end(), [&](int a, int b) { return face[a] < face[b]; });
  return fragment.bary[k[0]] * vertices[face[k[0]]].rgba +
         fragment.bary[k[1]] * vertices[face[k[1]]].rgba +
         fragment.bary[k[2]] * vertices[face[k[2]]].rgba;
}

Compositor::Compositor(int width, int height)
    : width_(width),
      height_(height),
      color_(std::size_t(width) * height * 3, 0.0),
      transmittance_(std::size_t(width) * height, 1.0) {}

void Compositor::add(std::size_t pixel, const Eigen::Vector4d& rgba) {
  const double T = transmittance_[pixel];
  const double a = rgba[3];
  for (int c = 0; c < 3; ++c) color_[pixel * 3 + c] += T * a * rgba[c];
  transmittance_[pixel] = T * (1.0 - a);
}

void Compositor::add_layer(const Image& rgba) {
  if (rgba.width != width_ || rgba.height != height_ || rgba.channels != 4) {
    throw ConfigError("composite: layer must be a " + std::to_string(width_) + "x" +
                      std::to_string(height_) + " rgba image");
  }
  for (std::size_t p = 0; p < rgba.pixel_count(); ++p) {
    add(p, Eigen::Vector4d(rgba.data[p * 4], rgba.data[p * 4 + 1], rgba.data[p * 4 + 2],
                           rgba.data[p * 4 + 3]));
  }
}

Image Compositor::finish(const RenderConfig& cfg) const {
  Image out(width_, height_, 4);
  const Eigen::Vector4d& bg = cfg.background;
  for (std::size_t p = 0; p < transmittance_.size(); ++p) {
    const double T = transmittance_[p];
    for (int c = 0; c < 3; ++c) out.data[p * 4 + c] = color_[p * 3 + c] + T * bg[3] * bg[c];
    out.data[p * 4 + 3] = 1.0 - T;
  }
  return out;
}

Image composite(std::span<const Image> layers, const RenderConfig& cfg) {
  if (layers.empty()) throw ConfigError("composite: no layers");
  Compositor comp(layers.front().width, layers.front().height);
  for (const Image& layer : layers) comp.add_layer(layer);
  return comp.finish(cfg);
}

LayeredFrame render_layers(const MeshSoup& soup, const Camera& cam, const RenderConfig& cfg) {
  if (cfg.num_layers < 1) throw ConfigError("render: num_layers must be >= 1");
  soup.validate();
  LayeredFrame frame;
  frame.width = cam.width;
  frame.height = cam.height;
  frame.mvp = build_mvp(cam);
  frame.clip = transform_vertices(soup, frame.mvp);

  Compositor comp(cam.width, cam.height);
  const TriangleSetup setup(frame.clip, soup.faces, cam.width, cam.height, cam.near);
  DepthBuffer prev;
  for (int k = 0; k < cfg.num_layers; ++k) {
    PeelResult peel = rasterize_peel(setup, k == 0 ? nullptr : &prev);
    if (peel.covered == 0) break;
    for (std::size_t p = 0; p < peel.fragments.size(); ++p) {
      const Fragment& f = peel.fragments[p];
      if (f.empty()) continue;
      comp.add(p, interpolate_rgba(f, soup.faces[f.face], soup.vertices));
    }
    frame.peels.push_back(std::move(peel.fragments));
    prev = std::move(peel.depth);
  }
  frame.transmittance.assign(comp.transmittance().begin(), comp.transmittance().end());
  frame.image = comp.finish(cfg);
  return frame;
}

Image render(const MeshSoup& soup, const Camera& cam, const RenderConfig& cfg) {
  return render_layers(soup, cam, cfg).image;
}

Eigen::Matrix4d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                        const Eigen::Vector3d& up) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d right = forward.cross(up);
  if (right.norm() < 1e-12) right = forward.cross(Eigen::Vector3d::UnitX());
  right.normalize();
  const Eigen::Vector3d true_up = right.cross(forward);
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 1>(0, 0) = right;
  m.block<3, 1>(0, 1) = true_up;
  m.block<3, 1>(0, 2) = -forward;
  m.block<3, 1>(0, 3) = eye;
  return m;
}

}  // namespace meshsplat::raster
