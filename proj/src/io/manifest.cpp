#include "meshsplat/io/manifest.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include "meshsplat/error.hpp"
#include "meshsplat/io/png.hpp"

namespace meshsplat::io {

namespace {

using nlohmann::json;

std::string frame_tag(std::size_t i) { return "manifest frame " + std::to_string(i) + ": "; }

std::filesystem::path resolve_image(const std::filesystem::path& base, const std::string& rel) {
  std::filesystem::path p = base / rel;
  if (std::filesystem::is_regular_file(p)) return p;
  if (!p.has_extension() || p.extension() != ".png") {
    std::filesystem::path with_ext = p;
    with_ext += ".png";
    if (std::filesystem::is_regular_file(with_ext)) return with_ext;
  }
  return p;
}

}  // namespace

double DatasetManifest::focal() const { return 0.5 * width / std::tan(0.5 * fov_x); }

raster::Camera DatasetManifest::camera(std::size_t frame, double near, double far) const {
  if (frame >= frames.size()) {
    throw ConfigError("manifest has " + std::to_string(frames.size()) + " frames, asked for " +
                      std::to_string(frame));
  }
  raster::Camera cam;
  cam.width = width;
  cam.height = height;
  cam.fov_x = fov_x;
  cam.camera_to_world = frames[frame].camera_to_world;
  cam.near = near;
  cam.far = far;
  return cam;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::filesystem::path file = path;
  if (std::filesystem::is_directory(file)) file /= "transforms_train.json";
  std::ifstream in(file);
  if (!in) throw IoError("cannot open manifest " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("manifest " + file.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("camera_angle_x") || !doc["camera_angle_x"].is_number()) {
    throw FormatError("manifest: missing field 'camera_angle_x'");
  }
  if (!doc.contains("frames") || !doc["frames"].is_array()) {
    throw FormatError("manifest: missing field 'frames'");
  }

  DatasetManifest m;
  m.fov_x = doc["camera_angle_x"].get<double>();
  if (doc.contains("w")) m.width = doc["w"].get<int>();
  if (doc.contains("h")) m.height = doc["h"].get<int>();
  const auto& frames = doc["frames"];
  if (frames.empty()) throw FormatError("manifest: empty dataset (no frames)");

  const std::filesystem::path base = file.parent_path();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const json& f = frames[i];
    if (!f.contains("file_path") || !f["file_path"].is_string()) {
      throw FormatError(frame_tag(i) + "missing field 'file_path'");
    }
    if (!f.contains("transform_matrix") || !f["transform_matrix"].is_array() ||
        f["transform_matrix"].size() != 4) {
      throw FormatError(frame_tag(i) + "missing or malformed field 'transform_matrix'");
    }
    Frame frame;
    for (int r = 0; r < 4; ++r) {
      const json& row = f["transform_matrix"][r];
      if (!row.is_array() || row.size() != 4) {
        throw FormatError(frame_tag(i) + "transform_matrix must be 4x4");
      }
      for (int c = 0; c < 4; ++c) frame.camera_to_world(r, c) = row[c].get<double>();
    }
    if (!frame.camera_to_world.allFinite() || std::abs(frame.camera_to_world.determinant()) < 1e-12) {
      throw FormatError(frame_tag(i) + "transform_matrix is not invertible");
    }
    frame.image_path = resolve_image(base, f["file_path"].get<std::string>());
    PngInfo info;
    try {
      info = read_png_info(frame.image_path);
    } catch (const Error& e) {
      throw FormatError(frame_tag(i) + "unreadable image " + frame.image_path.string() + " (" +
                        e.what() + ")");
    }
    if (m.width == 0 && m.height == 0) {
      m.width = info.width;
      m.height = info.height;
    } else if (info.width != m.width || info.height != m.height) {
      throw FormatError(frame_tag(i) + "image is " + std::to_string(info.width) + "x" +
                        std::to_string(info.height) + ", manifest resolution is " +
                        std::to_string(m.width) + "x" + std::to_string(m.height));
    }
    m.frames.push_back(std::move(frame));
  }
  return m;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  json doc;
  doc["camera_angle_x"] = manifest.fov_x;
  doc["w"] = manifest.width;
  doc["h"] = manifest.height;
  doc["frames"] = json::array();
  const std::filesystem::path base = path.parent_path();
  for (const Frame& f : manifest.frames) {
    json rows = json::array();
    for (int r = 0; r < 4; ++r) {
      rows.push_back({f.camera_to_world(r, 0), f.camera_to_world(r, 1), f.camera_to_world(r, 2),
                      f.camera_to_world(r, 3)});
    }
    const std::string rel =
        "./" + std::filesystem::relative(f.image_path, base.empty() ? "." : base).generic_string();
    doc["frames"].push_back({{"file_path", rel}, {"transform_matrix", rows}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace meshsplat::io
