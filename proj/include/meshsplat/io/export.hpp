#pragma once

#include <filesystem>

#include "meshsplat/soup.hpp"

namespace meshsplat::io {

// Wavefront OBJ with "v x y z r g b" lines. Alpha is dropped.
void export_obj(const MeshSoup& soup, const std::filesystem::path& path);

// glTF 2.0: `path` receives the JSON and a sibling .bin file the buffer.
// COLOR_0 is a float VEC4 accessor; the material blends alpha and is
// double-sided.
void export_gltf(const MeshSoup& soup, const std::filesystem::path& path);

}  // namespace meshsplat::io
