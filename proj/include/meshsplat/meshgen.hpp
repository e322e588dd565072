#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "meshsplat/gaussian.hpp"
#include "meshsplat/soup.hpp"

namespace meshsplat::mesh {

enum class Mode { kFlat, kSolid };

struct MeshGenConfig {
  double scale_mul = 2.7;
  int no_triag = 8;
  double opac_mul = 0.2;
  Mode mode = Mode::kFlat;

  // Throws ConfigError. Solid mode additionally needs no_triag % 4 == 0 so
  // that fan samples land on the shared axis endpoints.
  void validate() const;
};

// theta_i = -pi + 2*pi*i/n for i in [0, n). The endpoint pi is excluded
// because it coincides with -pi.
std::vector<double> fan_angles(int no_triag);

// Index of the axis treated as negligible in flat mode: the smallest
// log-scale (lowest index on ties).
int flat_dropped_axis(const gs::Gaussian& g);

// The two scaled ellipse axes of a flat Gaussian. The surviving axes keep
// cyclic order after the smallest-scale axis is dropped, so sr1 x sr2 points
// along the dropped rotation column.
std::pair<Eigen::Vector3d, Eigen::Vector3d> flat_axes(const gs::Gaussian& g,
                                                      const MeshGenConfig& cfg);

std::array<Eigen::Vector3d, 3> solid_axes(const gs::Gaussian& g, const MeshGenConfig& cfg);

// One fan: a center vertex at the mean with alpha = opacity, and no_triag
// boundary vertices with alpha = opacity * opac_mul. Faces are
// (center, i, i + 1 mod n), counter-clockwise about sr1 x sr2.
MeshSoup flat_fan(const gs::Gaussian& g, const MeshGenConfig& cfg, std::uint32_t gaussian_id = 0);

// Three fans on the planes (sr1, sr2), (sr1, sr3), (sr2, sr3) sharing the
// center vertex and the six axis endpoints: 3n - 5 vertices, 3n faces.
MeshSoup solid_fans(const gs::Gaussian& g, const MeshGenConfig& cfg,
                    std::uint32_t gaussian_id = 0);

std::size_t vertices_per_gaussian(const MeshGenConfig& cfg);
std::size_t faces_per_gaussian(const MeshGenConfig& cfg);

// Per-Gaussian fragments concatenated in input order. Solid mode on a
// two-scale cloud is a ConfigError.
MeshSoup convert_cloud(const gs::GaussianCloud& cloud, const MeshGenConfig& cfg);

}  // namespace meshsplat::mesh
