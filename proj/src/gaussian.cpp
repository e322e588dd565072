#include "meshsplat/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include <Eigen/Geometry>

#include "meshsplat/error.hpp"
#include "meshsplat/ply.hpp"

namespace meshsplat::gs {

namespace {

constexpr const char* kRequired[] = {"x",       "y",       "z",     "f_dc_0", "f_dc_1",
                                     "f_dc_2",  "opacity", "scale_0", "scale_1", "rot_0",
                                     "rot_1",   "rot_2",   "rot_3"};

bool is_wanted(const std::string& name) {
  if (name == "scale_2") return true;
  for (const char* r : kRequired) {
    if (name == r) return true;
  }
  return false;
}

float sigmoid(float x) {
  const float s = 1.0f / (1.0f + std::exp(-x));
  // Keep the result inside the open interval even for saturated logits.
  return std::clamp(s, std::numeric_limits<float>::min(), std::nextafter(1.0f, 0.0f));
}

}  // namespace

std::vector<RawGaussianRecord> parse_gs_ply(std::span<const std::byte> bytes) {
  const ply::Header header = ply::parse_header(bytes);
  const ply::Element* vertex = header.find("vertex");
  if (vertex == nullptr) throw ParseError("GS checkpoint: missing element 'vertex'");
  for (const char* name : kRequired) {
    const int k = vertex->find(name);
    if (k < 0) throw ParseError(std::string("GS checkpoint: missing property '") + name + "'");
    if (vertex->properties[k].is_list) {
      throw ParseError(std::string("GS checkpoint: property '") + name + "' must be scalar");
    }
  }
  const bool three_scales = vertex->find("scale_2") >= 0;

  const auto body = ply::read_body(header, bytes, [](const ply::Element& e, const ply::Property& p) {
    return e.name == "vertex" && !p.is_list && is_wanted(p.name);
  });
  const std::size_t vi = static_cast<std::size_t>(vertex - header.elements.data());
  const ply::ElementData& data = body[vi];
  auto col = [&](const char* name) -> const std::vector<double>& {
    return data.scalars[static_cast<std::size_t>(vertex->find(name))];
  };
  const auto& x = col("x");
  const auto& y = col("y");
  const auto& z = col("z");
  const auto& dc0 = col("f_dc_0");
  const auto& dc1 = col("f_dc_1");
  const auto& dc2 = col("f_dc_2");
  const auto& op = col("opacity");
  const auto& s0 = col("scale_0");
  const auto& s1 = col("scale_1");
  const auto& r0 = col("rot_0");
  const auto& r1 = col("rot_1");
  const auto& r2 = col("rot_2");
  const auto& r3 = col("rot_3");
  const std::vector<double>* s2 = three_scales ? &col("scale_2") : nullptr;

  std::vector<RawGaussianRecord> records(vertex->count);
  for (std::size_t i = 0; i < vertex->count; ++i) {
    auto& r = records[i];
    r.position = {float(x[i]), float(y[i]), float(z[i])};
    r.f_dc = {float(dc0[i]), float(dc1[i]), float(dc2[i])};
    r.raw_opacity = float(op[i]);
    r.scale_count = three_scales ? 3 : 2;
    r.log_scales = {float(s0[i]), float(s1[i]), three_scales ? float((*s2)[i]) : 0.0f};
    r.quaternion = {float(r0[i]), float(r1[i]), float(r2[i]), float(r3[i])};
  }
  return records;
}

Eigen::Matrix3f quaternion_to_rotation(const Eigen::Vector4f& wxyz) {
  const Eigen::Vector4f q = wxyz.normalized();
  return Eigen::Quaternionf(q[0], q[1], q[2], q[3]).toRotationMatrix();
}

Gaussian activate(const RawGaussianRecord& raw, std::size_t index) {
  const float qn = raw.quaternion.norm();
  if (!(qn > 0.0f) || !std::isfinite(qn)) throw InvalidRecordError(index, "zero-norm quaternion");
  if (raw.scale_count != 2 && raw.scale_count != 3) {
    throw InvalidRecordError(index, "expected 2 or 3 scales");
  }

  Gaussian g;
  g.mean = raw.position;
  g.opacity = sigmoid(raw.raw_opacity);
  g.color = (Eigen::Vector3f::Constant(0.5f) + kShC0 * raw.f_dc)
                .cwiseMax(0.0f)
                .cwiseMin(1.0f);
  const Eigen::Matrix3f R = quaternion_to_rotation(raw.quaternion);
  if (raw.scale_count == 3) {
    g.rotation = R;
    g.log_scales = {raw.log_scales[0], raw.log_scales[1], raw.log_scales[2]};
  } else {
    // Stored scales belong to the first two columns; the third is the disc
    // normal and becomes r1. A cyclic permutation keeps det = +1.
    g.rotation.col(0) = R.col(2);
    g.rotation.col(1) = R.col(0);
    g.rotation.col(2) = R.col(1);
    g.log_scales = {std::log(kFlatEpsilon), raw.log_scales[0], raw.log_scales[1]};
  }
  return g;
}

Eigen::Matrix3d covariance(const Gaussian& g) {
  const Eigen::Matrix3d R = g.rotation.cast<double>();
  const Eigen::Vector3d s = g.log_scales.cast<double>().array().exp();
  const Eigen::Matrix3d RS = R * s.asDiagonal();
  return RS * RS.transpose();
}

GaussianCloud load_cloud(std::span<const std::byte> bytes) {
  const auto records = parse_gs_ply(bytes);
  if (records.empty()) throw ParseError("GS checkpoint: no Gaussians");
  GaussianCloud cloud;
  cloud.source_mode = records.front().scale_count == 2 ? SourceMode::kFlat : SourceMode::kSolid;
  cloud.gaussians.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) cloud.gaussians.push_back(activate(records[i], i));
  return cloud;
}

GaussianCloud load_cloud_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_cloud(std::as_bytes(std::span<const char>(raw)));
}

}  // namespace meshsplat::gs
