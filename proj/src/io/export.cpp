#include "meshsplat/io/export.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "meshsplat/error.hpp"
#include "meshsplat/io/soup_file.hpp"
#include "meshsplat/ply.hpp"

namespace meshsplat::io {

namespace {

// glTF enums.
constexpr int kFloat = 5126;
constexpr int kUnsignedInt = 5125;
constexpr int kArrayBuffer = 34962;
constexpr int kElementArrayBuffer = 34963;
constexpr int kTriangles = 4;

void require_nonempty(const MeshSoup& soup) {
  if (soup.empty()) throw ConfigError("export: soup has no faces, nothing to export");
  soup.validate();
}

}  // namespace

void export_obj(const MeshSoup& soup, const std::filesystem::path& path) {
  require_nonempty(soup);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# meshsplat triangle soup; vertex alpha is not representable in OBJ and was dropped\n";
  char buf[160];
  for (const Vertex& v : soup.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g %.6g %.6g %.6g\n", v.position.x(),
                  v.position.y(), v.position.z(), v.rgba[0], v.rgba[1], v.rgba[2]);
    out << buf;
  }
  for (const Face& f : soup.faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
  if (!out) throw IoError("short write to " + path.string());
}

void export_gltf(const MeshSoup& soup, const std::filesystem::path& path) {
  using nlohmann::json;
  require_nonempty(soup);

  ply::ByteWriter bin;
  Eigen::Vector3f lo = Eigen::Vector3f::Constant(std::numeric_limits<float>::max());
  Eigen::Vector3f hi = -lo;
  for (const Vertex& v : soup.vertices) {
    const Eigen::Vector3f p = v.position.cast<float>();
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
    for (int k = 0; k < 3; ++k) bin.f32(p[k]);
  }
  const std::size_t pos_bytes = bin.bytes().size();
  for (const Vertex& v : soup.vertices) {
    for (int k = 0; k < 4; ++k) bin.f32(static_cast<float>(v.rgba[k]));
  }
  const std::size_t col_bytes = bin.bytes().size() - pos_bytes;
  for (const Face& f : soup.faces) {
    for (std::uint32_t idx : f) bin.u32(idx);
  }
  const std::size_t idx_bytes = bin.bytes().size() - pos_bytes - col_bytes;

  std::filesystem::path bin_path = path;
  bin_path.replace_extension(".bin");
  const std::size_t nv = soup.vertices.size();

  json doc;
  doc["asset"] = {{"version", "2.0"}, {"generator", "meshsplat"}};
  doc["extensionsUsed"] = {"KHR_materials_unlit"};
  doc["scene"] = 0;
  doc["scenes"] = {{{"nodes", {0}}}};
  doc["nodes"] = {{{"mesh", 0}}};
  doc["meshes"] = {{{"primitives",
                     {{{"attributes", {{"POSITION", 0}, {"COLOR_0", 1}}},
                       {"indices", 2},
                       {"material", 0},
                       {"mode", kTriangles}}}}}};
  doc["materials"] = {{{"name", "meshsplat"},
                       {"pbrMetallicRoughness",
                        {{"baseColorFactor", {1.0, 1.0, 1.0, 1.0}},
                         {"metallicFactor", 0.0},
                         {"roughnessFactor", 1.0}}},
                       {"alphaMode", "BLEND"},
                       {"doubleSided", true},
                       {"extensions", {{"KHR_materials_unlit", json::object()}}}}};
  doc["buffers"] = {{{"uri", bin_path.filename().string()}, {"byteLength", bin.bytes().size()}}};
  doc["bufferViews"] = {
      {{"buffer", 0}, {"byteOffset", 0}, {"byteLength", pos_bytes}, {"target", kArrayBuffer}},
      {{"buffer", 0}, {"byteOffset", pos_bytes}, {"byteLength", col_bytes}, {"target", kArrayBuffer}},
      {{"buffer", 0},
       {"byteOffset", pos_bytes + col_bytes},
       {"byteLength", idx_bytes},
       {"target", kElementArrayBuffer}}};
  doc["accessors"] = {
      {{"bufferView", 0},
       {"componentType", kFloat},
       {"count", nv},
       {"type", "VEC3"},
       {"min", {lo[0], lo[1], lo[2]}},
       {"max", {hi[0], hi[1], hi[2]}}},
      {{"bufferView", 1}, {"componentType", kFloat}, {"count", nv}, {"type", "VEC4"}},
      {{"bufferView", 2},
       {"componentType", kUnsignedInt},
       {"count", soup.faces.size() * 3},
       {"type", "SCALAR"}}};

  write_file(bin_path, bin.bytes());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace meshsplat::io
