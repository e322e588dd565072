#include "meshsplat/soup.hpp"

#include <cmath>
#include <string>

#include "meshsplat/error.hpp"

namespace meshsplat {

void MeshSoup::validate() const {
  if (face_gaussian_id.size() != faces.size()) {
    throw ConfigError("soup: face_gaussian_id has " + std::to_string(face_gaussian_id.size()) +
                      " entries for " + std::to_string(faces.size()) + " faces");
  }
  const std::size_t n = vertices.size();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& t = faces[f];
    if (t[0] >= n || t[1] >= n || t[2] >= n) {
      throw ConfigError("soup: face " + std::to_string(f) + " references a missing vertex");
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw ConfigError("soup: face " + std::to_string(f) + " is degenerate");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vertex& v = vertices[i];
    if (!v.position.allFinite()) {
      throw ConfigError("soup: vertex " + std::to_string(i) + " has a non-finite position");
    }
    if (!((v.rgba.array() >= 0.0).all() && (v.rgba.array() <= 1.0).all())) {
      throw ConfigError("soup: vertex " + std::to_string(i) + " has rgba outside [0, 1]");
    }
  }
}

void MeshSoup::append(const MeshSoup& other) {
  const auto base = static_cast<std::uint32_t>(vertices.size());
  vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
  faces.reserve(faces.size() + other.faces.size());
  for (const Face& f : other.faces) faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  face_gaussian_id.insert(face_gaussian_id.end(), other.face_gaussian_id.begin(),
                          other.face_gaussian_id.end());
}

}  // namespace meshsplat
