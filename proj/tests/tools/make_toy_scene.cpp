// Regenerates tests/data/toy: a 10-Gaussian two-scale checkpoint (8 visible
// Gaussians with perturbed colors plus 2 faint floaters), training views
// rendered from the clean scene, a held-out view, and a golden render of the
// converted checkpoint. All images come from the brute-force compositor.
//
//   make_toy_scene <output dir>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include <Eigen/Geometry>

#include "meshsplat/gaussian.hpp"
#include "meshsplat/image.hpp"
#include "meshsplat/io/manifest.hpp"
#include "meshsplat/io/png.hpp"
#include "meshsplat/io/soup_file.hpp"
#include "meshsplat/meshgen.hpp"
#include "oracle.hpp"

using namespace meshsplat;
namespace fs = std::filesystem;

namespace {

constexpr int kSize = 64;
constexpr int kTrainViews = 6;

float logit(float p) { return std::log(p / (1.0f - p)); }

// Checkpoint bytes -> soup as the CLI sees it after convert (8-bit rgba,
// float32 positions).
MeshSoup converted(const std::vector<oracle::GsRow>& rows, oracle::GsLayout layout) {
  const auto bytes = oracle::write_gs_ply(rows, layout);
  const MeshSoup soup = mesh::convert_cloud(gs::load_cloud(bytes), mesh::MeshGenConfig{});
  return io::read_soup(io::write_soup(soup));
}

void save_view(const MeshSoup& soup, const raster::Camera& cam, const fs::path& path) {
  io::save_png(to_straight_alpha(oracle::composite_bruteforce(soup, cam, Eigen::Vector4d::Zero())),
               path);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_toy_scene <output dir>\n");
    return 2;
  }
  const fs::path out = argv[1];
  fs::create_directories(out / "train");
  fs::create_directories(out / "test");

  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<oracle::GsRow> clean, noisy;
  for (int i = 0; i < 8; ++i) {
    oracle::GsRow r;
    r.x = 1.6f * u(rng) - 0.8f;
    r.y = 1.6f * u(rng) - 0.8f;
    r.z = 1.6f * u(rng) - 0.8f;
    for (float& c : r.f_dc) c = (0.15f + 0.7f * u(rng) - 0.5f) / gs::kShC0;
    r.opacity = logit(0.6f + 0.35f * u(rng));
    r.scale[0] = std::log(0.12f + 0.12f * u(rng));
    r.scale[1] = std::log(0.12f + 0.12f * u(rng));
    const Eigen::Vector4f q(n(rng), n(rng), n(rng), n(rng));
    for (int k = 0; k < 4; ++k) r.rot[k] = q[k];
    clean.push_back(r);
    for (float& c : r.f_dc) c += (0.2f * u(rng) - 0.1f) / gs::kShC0;
    noisy.push_back(r);
  }
  // Floaters: opacity below exp(-4), in front of the scene, absent from the
  // training images.
  for (int i = 0; i < 2; ++i) {
    oracle::GsRow r;
    r.x = 0.5f * (i ? 1.0f : -1.0f);
    r.y = 0.3f;
    r.z = 1.4f;
    for (float& c : r.f_dc) c = (0.9f - 0.5f) / gs::kShC0;
    r.opacity = logit(0.015f);
    r.scale[0] = std::log(0.1f);
    r.scale[1] = std::log(0.1f);
    r.rot[0] = 1.0f;
    noisy.push_back(r);
  }

  oracle::GsLayout layout;
  layout.scale_count = 2;
  layout.normals = true;
  io::write_file(out / "toy_gs.ply", oracle::write_gs_ply(noisy, layout));

  const MeshSoup truth = converted(clean, layout);
  io::DatasetManifest train;
  train.fov_x = 0.9;
  train.width = train.height = kSize;
  for (int i = 0; i < kTrainViews; ++i) {
    const raster::Camera cam =
        oracle::orbit_camera(2 * M_PI * i / kTrainViews, 0.9 * std::sin(1.7 * i), kSize);
    const fs::path png = out / "train" / ("r_" + std::to_string(i) + ".png");
    save_view(truth, cam, png);
    train.frames.push_back({png, cam.camera_to_world});
  }
  io::write_manifest(train, out / "transforms_train.json");

  io::DatasetManifest test = train;
  test.frames.clear();
  const raster::Camera held = oracle::orbit_camera(M_PI / kTrainViews, 0.2, kSize);
  save_view(truth, held, out / "test" / "r_0.png");
  test.frames.push_back({out / "test" / "r_0.png", held.camera_to_world});
  io::write_manifest(test, out / "transforms_test.json");

  // Golden: the converted checkpoint seen from training frame 0.
  const MeshSoup start = converted(noisy, layout);
  save_view(start, train.camera(0), out / "golden_frame0.png");

  std::printf("gaussians=%zu vertices=%zu faces=%zu\n", noisy.size(), start.vertices.size(),
              start.faces.size());
  return 0;
}
