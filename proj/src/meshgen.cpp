#include "meshsplat/meshgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "meshsplat/error.hpp"
#include "meshsplat/parallel.hpp"

namespace meshsplat::mesh {

namespace {

// (cos, sin) of fan sample i. Quarter-turn samples are exact so that they
// coincide with the axis endpoints.
std::pair<double, double> unit_sample(int i, int n) {
  if ((4 * i) % n == 0) {
    switch ((4 * i) / n) {
      case 0: return {-1.0, 0.0};  // -pi
      case 1: return {0.0, -1.0};  // -pi/2
      case 2: return {1.0, 0.0};   // 0
      case 3: return {0.0, 1.0};   // pi/2
    }
  }
  const double theta = -std::numbers::pi + 2.0 * std::numbers::pi * i / n;
  return {std::cos(theta), std::sin(theta)};
}

Eigen::Vector4d rgba_of(const gs::Gaussian& g, double alpha) {
  return {double(g.color[0]), double(g.color[1]), double(g.color[2]), alpha};
}

void emit_flat(const gs::Gaussian& g, const MeshGenConfig& cfg, std::uint32_t id, Vertex* verts,
               Face* faces, std::uint32_t* ids, std::uint32_t base) {
  const auto [sr1, sr2] = flat_axes(g, cfg);
  const Eigen::Vector3d m = g.mean.cast<double>();
  const int n = cfg.no_triag;
  verts[0] = {m, rgba_of(g, double(g.opacity))};
  const Eigen::Vector4d edge = rgba_of(g, double(g.opacity) * cfg.opac_mul);
  for (int i = 0; i < n; ++i) {
    const auto [c, s] = unit_sample(i, n);
    verts[1 + i] = {m + (c * sr1 + s * sr2), edge};
  }
  for (int i = 0; i < n; ++i) {
    faces[i] = {base, base + 1 + std::uint32_t(i), base + 1 + std::uint32_t((i + 1) % n)};
    ids[i] = id;
  }
}

void emit_solid(const gs::Gaussian& g, const MeshGenConfig& cfg, std::uint32_t id, Vertex* verts,
                Face* faces, std::uint32_t* ids, std::uint32_t base) {
  const auto sr = solid_axes(g, cfg);
  const Eigen::Vector3d m = g.mean.cast<double>();
  const int n = cfg.no_triag;
  const Eigen::Vector4d edge = rgba_of(g, double(g.opacity) * cfg.opac_mul);

  // Layout: center, then +sr_k / -sr_k at 1 + 2k / 2 + 2k, then the
  // non-shared samples of each fan in plane order.
  verts[0] = {m, rgba_of(g, double(g.opacity))};
  for (int k = 0; k < 3; ++k) {
    verts[1 + 2 * k] = {m + sr[k], edge};
    verts[2 + 2 * k] = {m + (-sr[k]), edge};
  }
  constexpr int kPlanes[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  std::uint32_t next = 7;
  int face = 0;
  for (const auto& plane : kPlanes) {
    const int a = plane[0];
    const int b = plane[1];
    std::vector<std::uint32_t> ring(n);
    for (int i = 0; i < n; ++i) {
      if ((4 * i) % n == 0) {
        switch ((4 * i) / n) {
          case 0: ring[i] = 2 + 2 * a; break;  // -sr_a
          case 1: ring[i] = 2 + 2 * b; break;  // -sr_b
          case 2: ring[i] = 1 + 2 * a; break;  // +sr_a
          default: ring[i] = 1 + 2 * b; break;  // +sr_b
        }
      } else {
        const auto [c, s] = unit_sample(i, n);
        verts[next] = {m + (c * sr[a] + s * sr[b]), edge};
        ring[i] = next++;
      }
    }
    for (int i = 0; i < n; ++i) {
      faces[face] = {base, base + ring[i], base + ring[(i + 1) % n]};
      ids[face] = id;
      ++face;
    }
  }
}

MeshSoup single(const gs::Gaussian& g, const MeshGenConfig& cfg, std::uint32_t id) {
  MeshSoup out;
  out.vertices.resize(vertices_per_gaussian(cfg));
  out.faces.resize(faces_per_gaussian(cfg));
  out.face_gaussian_id.resize(out.faces.size());
  if (cfg.mode == Mode::kFlat) {
    emit_flat(g, cfg, id, out.vertices.data(), out.faces.data(), out.face_gaussian_id.data(), 0);
  } else {
    emit_solid(g, cfg, id, out.vertices.data(), out.faces.data(), out.face_gaussian_id.data(), 0);
  }
  return out;
}

}  // namespace

void MeshGenConfig::validate() const {
  if (no_triag < 3) throw ConfigError("no_triag must be >= 3, got " + std::to_string(no_triag));
  if (!(scale_mul > 0.0) || !std::isfinite(scale_mul)) {
    throw ConfigError("scale_mul must be positive");
  }
  if (!(opac_mul >= 0.0 && opac_mul <= 1.0)) throw ConfigError("opac_mul must lie in [0, 1]");
  if (mode == Mode::kSolid && no_triag % 4 != 0) {
    throw ConfigError("solid mode needs no_triag divisible by 4, got " + std::to_string(no_triag));
  }
}

std::vector<double> fan_angles(int no_triag) {
  std::vector<double> out(static_cast<std::size_t>(std::max(no_triag, 0)));
  for (int i = 0; i < no_triag; ++i) {
    out[i] = -std::numbers::pi + 2.0 * std::numbers::pi * i / no_triag;
  }
  return out;
}

int flat_dropped_axis(const gs::Gaussian& g) {
  int k = 0;
  for (int i = 1; i < 3; ++i) {
    if (g.log_scales[i] < g.log_scales[k]) k = i;
  }
  return k;
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> flat_axes(const gs::Gaussian& g,
                                                      const MeshGenConfig& cfg) {
  const int k = flat_dropped_axis(g);
  const int a = (k + 1) % 3;
  const int b = (k + 2) % 3;
  const Eigen::Matrix3d R = g.rotation.cast<double>();
  return {cfg.scale_mul * std::exp(double(g.log_scales[a])) * R.col(a),
          cfg.scale_mul * std::exp(double(g.log_scales[b])) * R.col(b)};
}

std::array<Eigen::Vector3d, 3> solid_axes(const gs::Gaussian& g, const MeshGenConfig& cfg) {
  const Eigen::Matrix3d R = g.rotation.cast<double>();
  std::array<Eigen::Vector3d, 3> out;
  for (int k = 0; k < 3; ++k) {
    out[k] = cfg.scale_mul * std::exp(double(g.log_scales[k])) * R.col(k);
  }
  return out;
}

MeshSoup flat_fan(const gs::Gaussian& g, const MeshGenConfig& cfg, std::uint32_t gaussian_id) {
  MeshGenConfig c = cfg;
  c.mode = Mode::kFlat;
  c.validate();
  return single(g, c, gaussian_id);
}

MeshSoup solid_fans(const gs::Gaussian& g, const MeshGenConfig& cfg, std::uint32_t gaussian_id) {
  MeshGenConfig c = cfg;
  c.mode = Mode::kSolid;
  c.validate();
  return single(g, c, gaussian_id);
}

std::size_t vertices_per_gaussian(const MeshGenConfig& cfg) {
  const auto n = static_cast<std::size_t>(cfg.no_triag);
  return cfg.mode == Mode::kFlat ? n + 1 : 3 * n - 5;
}

std::size_t faces_per_gaussian(const MeshGenConfig& cfg) {
  const auto n = static_cast<std::size_t>(cfg.no_triag);
  return cfg.mode == Mode::kFlat ? n : 3 * n;
}

MeshSoup convert_cloud(const gs::GaussianCloud& cloud, const MeshGenConfig& cfg) {
  cfg.validate();
  if (cloud.gaussians.empty()) throw ConfigError("convert: empty Gaussian cloud");
  if (cfg.mode == Mode::kSolid && cloud.source_mode == gs::SourceMode::kFlat) {
    throw ConfigError("convert: solid mode needs three scales per Gaussian, checkpoint has two");
  }
  const std::size_t count = cloud.gaussians.size();
  const std::size_t nv = vertices_per_gaussian(cfg);
  const std::size_t nf = faces_per_gaussian(cfg);
  if (count * nv > std::numeric_limits<std::uint32_t>::max()) {
    throw ConfigError("convert: too many vertices for 32-bit indices");
  }

  MeshSoup out;
  out.vertices.resize(count * nv);
  out.faces.resize(count * nf);
  out.face_gaussian_id.resize(count * nf);
  parallel_for(count, [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto base = static_cast<std::uint32_t>(i * nv);
      const auto id = static_cast<std::uint32_t>(i);
      if (cfg.mode == Mode::kFlat) {
        emit_flat(cloud.gaussians[i], cfg, id, &out.vertices[i * nv], &out.faces[i * nf],
                  &out.face_gaussian_id[i * nf], base);
      } else {
        emit_solid(cloud.gaussians[i], cfg, id, &out.vertices[i * nv], &out.faces[i * nf],
                   &out.face_gaussian_id[i * nf], base);
      }
    }
  });
  return out;
}

}  // namespace meshsplat::mesh
