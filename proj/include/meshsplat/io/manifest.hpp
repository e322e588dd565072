#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "meshsplat/raster.hpp"

namespace meshsplat::io {

struct Frame {
  std::filesystem::path image_path;  // resolved, existing file
  Eigen::Matrix4d camera_to_world = Eigen::Matrix4d::Identity();
};

// NeRF-synthetic style transforms file: camera_angle_x plus a frames array of
// {file_path, transform_matrix}. Optional integer "w"/"h" must agree with the
// images.
struct DatasetManifest {
  std::vector<Frame> frames;
  double fov_x = 0.0;
  int width = 0;
  int height = 0;

  double focal() const;
  raster::Camera camera(std::size_t frame, double near = 0.01, double far = 100.0) const;
};

// Accepts a manifest file or a directory holding transforms_train.json.
// Throws FormatError with the frame index on missing fields, unreadable
// images or resolution mismatches, and for an empty frame list.
DatasetManifest load_manifest(const std::filesystem::path& path);

// file_path entries are written relative to the manifest's directory.
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace meshsplat::io
