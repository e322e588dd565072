#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "meshsplat/soup.hpp"

namespace meshsplat::io {

// Header comment identifying SoupFileV1.
inline constexpr std::string_view kSoupVersionComment = "meshsplat soup v1";

// Binary little-endian PLY: float32 xyz and uchar rgba per vertex; per face
// a uchar-counted uint32 index list and a uint32 gaussian_id. rgba is
// quantized with round-half-up.
std::vector<std::byte> write_soup(const MeshSoup& soup);
MeshSoup read_soup(std::span<const std::byte> bytes);

void save_soup(const MeshSoup& soup, const std::filesystem::path& path);
MeshSoup load_soup(const std::filesystem::path& path);

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

// round(v * 255) with halves rounded up, after clamping to [0, 1].
std::uint8_t quantize_unit(double v);

}  // namespace meshsplat::io
