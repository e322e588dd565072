#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace meshsplat::gs {

// Zeroth-order spherical harmonic basis constant.
inline constexpr float kShC0 = 0.28209479177387814f;

// Scale assigned to the suppressed axis of two-scale checkpoints.
inline constexpr float kFlatEpsilon = 1e-8f;

// Declared dimensionality of a checkpoint: two stored scales (flat) or three.
enum class SourceMode { kFlat, kSolid };

// One vertex row of a Gaussian Splatting checkpoint, before activation.
struct RawGaussianRecord {
  Eigen::Vector3f position = Eigen::Vector3f::Zero();
  Eigen::Vector3f f_dc = Eigen::Vector3f::Zero();
  float raw_opacity = 0.0f;
  std::array<float, 3> log_scales{};
  int scale_count = 3;  // 2 or 3
  Eigen::Vector4f quaternion{1.0f, 0.0f, 0.0f, 0.0f};  // (w, x, y, z)
};

struct Gaussian {
  Eigen::Vector3f mean = Eigen::Vector3f::Zero();
  // Columns r1, r2, r3. Orthonormal with det +1.
  Eigen::Matrix3f rotation = Eigen::Matrix3f::Identity();
  Eigen::Vector3f log_scales = Eigen::Vector3f::Zero();
  float opacity = 0.5f;
  Eigen::Vector3f color = Eigen::Vector3f::Constant(0.5f);
};

struct GaussianCloud {
  std::vector<Gaussian> gaussians;
  SourceMode source_mode = SourceMode::kSolid;
};

// Reads a binary little-endian GS checkpoint. Property order in the header
// is irrelevant; f_rest_* and normal properties are ignored.
std::vector<RawGaussianRecord> parse_gs_ply(std::span<const std::byte> bytes);

// Applies the standard activations: sigmoid opacity, DC color, normalized
// quaternion to rotation. Two-scale records get log(kFlatEpsilon) for s1 and
// their rotation columns cycled so that r1 is the disc normal. `index` is
// only used for error reporting.
Gaussian activate(const RawGaussianRecord& raw, std::size_t index = 0);

Eigen::Matrix3f quaternion_to_rotation(const Eigen::Vector4f& wxyz);

// R * S * S^T * R^T with S = diag(exp(s)). Evaluated in double; used for
// validation only.
Eigen::Matrix3d covariance(const Gaussian& g);

// parse_gs_ply + activate. Throws ParseError for an empty checkpoint.
GaussianCloud load_cloud(std::span<const std::byte> bytes);
GaussianCloud load_cloud_file(const std::filesystem::path& path);

}  // namespace meshsplat::gs
