#include "meshsplat/io/soup_file.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "meshsplat/error.hpp"
#include "meshsplat/ply.hpp"

namespace meshsplat::io {

namespace {

constexpr std::string_view kVersionPrefix = "meshsplat soup v";

const ply::Property& require(const ply::Element& e, const char* name, bool list) {
  const int k = e.find(name);
  if (k < 0) {
    throw FormatError(std::string("soup file: missing property '") + name + "' in element '" +
                      e.name + "'");
  }
  const ply::Property& p = e.properties[k];
  if (p.is_list != list) {
    throw FormatError(std::string("soup file: property '") + name + "' has the wrong kind");
  }
  return p;
}

}  // namespace

std::uint8_t quantize_unit(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

std::vector<std::byte> write_soup(const MeshSoup& soup) {
  soup.validate();
  ply::ByteWriter w;
  w.text("ply\nformat binary_little_endian 1.0\ncomment ");
  w.text(kSoupVersionComment);
  w.text("\nelement vertex " + std::to_string(soup.vertices.size()) + "\n");
  w.text(
      "property float x\nproperty float y\nproperty float z\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\nproperty uchar alpha\n");
  w.text("element face " + std::to_string(soup.faces.size()) + "\n");
  w.text("property list uchar uint vertex_indices\nproperty uint gaussian_id\nend_header\n");
  for (const Vertex& v : soup.vertices) {
    for (int k = 0; k < 3; ++k) w.f32(static_cast<float>(v.position[k]));
    for (int k = 0; k < 4; ++k) w.u8(quantize_unit(v.rgba[k]));
  }
  for (std::size_t f = 0; f < soup.faces.size(); ++f) {
    w.u8(3);
    for (std::uint32_t idx : soup.faces[f]) w.u32(idx);
    w.u32(soup.face_gaussian_id[f]);
  }
  return w.release();
}

MeshSoup read_soup(std::span<const std::byte> bytes) {
  const ply::Header header = ply::parse_header(bytes);
  bool versioned = false;
  for (const std::string& c : header.comments) {
    if (c.rfind(kVersionPrefix, 0) == 0) {
      if (c != kSoupVersionComment) throw FormatError("soup file: unsupported version '" + c + "'");
      versioned = true;
    }
  }
  if (!versioned) throw FormatError("soup file: missing '" + std::string(kSoupVersionComment) + "' comment");

  const ply::Element* ve = header.find("vertex");
  const ply::Element* fe = header.find("face");
  if (ve == nullptr) throw FormatError("soup file: missing element 'vertex'");
  if (fe == nullptr) throw FormatError("soup file: missing element 'face'");
  for (const char* name : {"x", "y", "z"}) {
    if (require(*ve, name, false).type != ply::ScalarType::kFloat32) {
      throw FormatError(std::string("soup file: property '") + name + "' must be float");
    }
  }
  for (const char* name : {"red", "green", "blue", "alpha"}) {
    if (require(*ve, name, false).type != ply::ScalarType::kUInt8) {
      throw FormatError(std::string("soup file: property '") + name + "' must be uchar");
    }
  }
  require(*fe, "vertex_indices", true);
  require(*fe, "gaussian_id", false);

  const auto body = ply::read_body(header, bytes);
  const auto vi = static_cast<std::size_t>(ve - header.elements.data());
  const auto fi = static_cast<std::size_t>(fe - header.elements.data());
  const auto& vd = body[vi];
  const auto& fd = body[fi];
  auto vcol = [&](const char* n) -> const std::vector<double>& {
    return vd.scalars[static_cast<std::size_t>(ve->find(n))];
  };

  MeshSoup soup;
  soup.vertices.resize(ve->count);
  const auto& x = vcol("x");
  const auto& y = vcol("y");
  const auto& z = vcol("z");
  const auto& r = vcol("red");
  const auto& g = vcol("green");
  const auto& b = vcol("blue");
  const auto& a = vcol("alpha");
  for (std::size_t i = 0; i < ve->count; ++i) {
    soup.vertices[i].position = {x[i], y[i], z[i]};
    soup.vertices[i].rgba = Eigen::Vector4d(r[i], g[i], b[i], a[i]) / 255.0;
  }

  const auto li = static_cast<std::size_t>(fe->find("vertex_indices"));
  const auto& values = fd.list_values[li];
  const auto& offsets = fd.list_offsets[li];
  const auto& ids = fd.scalars[static_cast<std::size_t>(fe->find("gaussian_id"))];
  soup.faces.resize(fe->count);
  soup.face_gaussian_id.resize(fe->count);
  for (std::size_t f = 0; f < fe->count; ++f) {
    if (offsets[f + 1] - offsets[f] != 3) {
      throw FormatError("soup file: face " + std::to_string(f) + " is not a triangle");
    }
    soup.faces[f] = {values[offsets[f]], values[offsets[f] + 1], values[offsets[f] + 2]};
    soup.face_gaussian_id[f] = static_cast<std::uint32_t>(ids[f]);
  }
  try {
    soup.validate();
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
  return soup;
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(raw.size());
  std::transform(raw.begin(), raw.end(), out.begin(), [](char c) { return std::byte(c); });
  return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

void save_soup(const MeshSoup& soup, const std::filesystem::path& path) {
  write_file(path, write_soup(soup));
}

MeshSoup load_soup(const std::filesystem::path& path) { return read_soup(read_file(path)); }

}  // namespace meshsplat::io
