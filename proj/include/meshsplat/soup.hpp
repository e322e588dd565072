#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace meshsplat {

struct Vertex {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector4d rgba = Eigen::Vector4d::Zero();  // channels in [0, 1]
};

using Face = std::array<std::uint32_t, 3>;

// Unstructured triangle soup. face_gaussian_id[i] is the index of the
// Gaussian that produced faces[i].
struct MeshSoup {
  std::vector<Vertex> vertices;
  std::vector<Face> faces;
  std::vector<std::uint32_t> face_gaussian_id;

  bool empty() const { return faces.empty(); }

  // Throws ConfigError on out-of-range or repeated face indices, mismatched
  // provenance length, non-finite positions or rgba outside [0, 1].
  void validate() const;

  // Appends `other`, offsetting its face indices.
  void append(const MeshSoup& other);
};

}  // namespace meshsplat
