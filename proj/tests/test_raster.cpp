#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <gtest/gtest.h>

#include "meshsplat/error.hpp"
#include "meshsplat/meshgen.hpp"
#include "meshsplat/raster.hpp"
#include "oracle.hpp"

using namespace meshsplat;
using namespace meshsplat::raster;

namespace {

Vertex vtx(double x, double y, double z, Eigen::Vector4d rgba = {1, 1, 1, 1}) {
  return {Eigen::Vector3d(x, y, z), rgba};
}

// Axis-aligned quad at depth d covering [-s, s]^2, as two triangles.
void add_quad(MeshSoup& soup, double d, double s, const Eigen::Vector4d& rgba) {
  const auto b = std::uint32_t(soup.vertices.size());
  soup.vertices.push_back(vtx(-s, -s, -d, rgba));
  soup.vertices.push_back(vtx(s, -s, -d, rgba));
  soup.vertices.push_back(vtx(s, s, -d, rgba));
  soup.vertices.push_back(vtx(-s, s, -d, rgba));
  soup.faces.push_back({b, b + 1, b + 2});
  soup.faces.push_back({b, b + 2, b + 3});
  const auto id = std::uint32_t(soup.face_gaussian_id.empty() ? 0 : soup.face_gaussian_id.back() + 1);
  soup.face_gaussian_id.push_back(id);
  soup.face_gaussian_id.push_back(id);
}

double max_abs_diff(const Image& a, const Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

Camera random_camera(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Camera cam;
  cam.width = w;
  cam.height = h;
  cam.fov_x = 0.7 + 0.5 * (u(rng) + 1.0);
  const Eigen::Vector3d eye(3.0 * u(rng), 3.0 * u(rng), 4.0 + u(rng));
  cam.camera_to_world = look_at(eye, Eigen::Vector3d(0.3 * u(rng), 0.3 * u(rng), 0.0));
  return cam;
}

// Random triangles near the world origin, for cameras from random_camera.
MeshSoup random_world_scene(std::mt19937_64& rng, int triangles) {
  MeshSoup soup = oracle::random_scene(rng, triangles, 1.0, 2.0, 1.0);
  for (auto& v : soup.vertices) v.position.z() += 1.5;
  return soup;
}

}  // namespace

TEST(Camera, FocalFromFov) {
  Camera cam;
  cam.width = 800;
  cam.height = 800;
  cam.fov_x = 0.6911;
  EXPECT_NEAR(cam.focal(), 0.5 * 800 / std::tan(0.6911 / 2), 1e-9);
  EXPECT_NEAR(cam.focal(), 1111.1, 0.1);
}

TEST(BuildMvp, OnAxisPointAndNearPlane) {
  Camera cam = oracle::front_camera(64, 48, 1.0);
  const Eigen::Matrix4d mvp = build_mvp(cam);
  const Eigen::Vector4d p = mvp * Eigen::Vector4d(0, 0, -3, 1);
  EXPECT_NEAR(p.x() / p.w(), 0.0, 1e-15);
  EXPECT_NEAR(p.y() / p.w(), 0.0, 1e-15);
  const Eigen::Vector4d n = mvp * Eigen::Vector4d(0, 0, -cam.near, 1);
  EXPECT_NEAR(n.z() / n.w(), -1.0, 1e-9);
  const Eigen::Vector4d f = mvp * Eigen::Vector4d(0, 0, -cam.far, 1);
  EXPECT_NEAR(f.z() / f.w(), 1.0, 1e-9);
}

TEST(BuildMvp, MatchesIndependentPinhole) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Camera cam = random_camera(rng, 40 + i % 7, 30 + i % 5);
    const Eigen::Matrix4d mvp = build_mvp(cam);
    const Eigen::Matrix3d R = cam.camera_to_world.topLeftCorner<3, 3>();
    const Eigen::Vector3d t = cam.camera_to_world.topRightCorner<3, 1>();
    const Eigen::Vector3d world(u(rng), u(rng), u(rng));
    const Eigen::Vector3d c = R.transpose() * (world - t);
    const double depth = -c.z();
    const double f = 0.5 * cam.width / std::tan(0.5 * cam.fov_x);
    const double sx = cam.width * 0.5 + f * c.x() / depth;
    const double sy = cam.height * 0.5 - f * c.y() / depth;
    const Eigen::Vector4d clip = mvp * world.homogeneous();
    const double ndc_x = clip.x() / clip.w();
    const double ndc_y = clip.y() / clip.w();
    EXPECT_NEAR((ndc_x + 1) * 0.5 * cam.width, sx, 1e-5);
    EXPECT_NEAR((1 - ndc_y) * 0.5 * cam.height, sy, 1e-5);
    EXPECT_NEAR(clip.w(), depth, 1e-9);
  }
}

TEST(BuildMvp, InvalidCameras) {
  Camera cam;
  cam.camera_to_world.setZero();
  EXPECT_THROW(build_mvp(cam), InvalidCameraError);
  cam = {};
  cam.near = 0.0;
  EXPECT_THROW(build_mvp(cam), InvalidCameraError);
  cam = {};
  cam.width = 0;
  EXPECT_THROW(build_mvp(cam), InvalidCameraError);
}

TEST(TransformVertices, IdentityTranslationAndRandom) {
  std::mt19937_64 rng(22);
  MeshSoup soup = oracle::random_scene(rng, 10);
  auto clip = transform_vertices(soup, Eigen::Matrix4d::Identity());
  for (std::size_t i = 0; i < clip.size(); ++i) {
    EXPECT_EQ(clip[i].head<3>(), soup.vertices[i].position);
    EXPECT_EQ(clip[i].w(), 1.0);
  }
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  T.topRightCorner<3, 1>() = Eigen::Vector3d(1, -2, 3);
  clip = transform_vertices(soup, T);
  for (std::size_t i = 0; i < clip.size(); ++i) {
    EXPECT_TRUE(clip[i].head<3>().isApprox(soup.vertices[i].position + Eigen::Vector3d(1, -2, 3)));
  }
  const Eigen::Matrix4d M = Eigen::Matrix4d::Random();
  clip = transform_vertices(soup, M);
  for (std::size_t i = 0; i < clip.size(); ++i) {
    Eigen::Vector4d direct = Eigen::Vector4d::Zero();
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 3; ++c) direct[r] += M(r, c) * soup.vertices[i].position[c];
      direct[r] += M(r, 3);
    }
    EXPECT_LT((clip[i] - direct).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(RasterizePeel, TwoFullScreenQuads) {
  MeshSoup soup;
  add_quad(soup, 2.0, 10.0, {1, 0, 0, 0.5});
  add_quad(soup, 3.0, 10.0, {0, 1, 0, 0.5});
  const Camera cam = oracle::front_camera(16, 12);
  const auto clip = transform_vertices(soup, build_mvp(cam));
  const PeelResult p1 = rasterize_peel(clip, soup.faces, 16, 12, cam.near, nullptr);
  const PeelResult p2 = rasterize_peel(clip, soup.faces, 16, 12, cam.near, &p1.depth);
  const PeelResult p3 = rasterize_peel(clip, soup.faces, 16, 12, cam.near, &p2.depth);
  EXPECT_EQ(p1.covered, 16u * 12u);
  EXPECT_EQ(p2.covered, 16u * 12u);
  EXPECT_EQ(p3.covered, 0u);
  for (std::size_t i = 0; i < p1.fragments.size(); ++i) {
    EXPECT_LT(p1.fragments[i].face, 2);
    EXPECT_GE(p2.fragments[i].face, 2);
    EXPECT_LT(p1.fragments[i].depth, p2.fragments[i].depth);
  }
}

TEST(RasterizePeel, HalfFrameTriangle) {
  // Screen-space triangle covering the lower-left half of a 16x16 frame.
  const std::vector<Eigen::Vector4d> clip = {{-1, -1, 0, 1}, {1, -1, 0, 1}, {-1, 1, 0, 1}};
  const std::vector<Face> faces = {{0, 1, 2}};
  const PeelResult p = rasterize_peel(clip, faces, 16, 16, 0.5, nullptr);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      // Inside iff the pixel center lies below the anti-diagonal x + y' < 16.
      const bool inside = (x + 0.5) + (16 - (y + 0.5)) < 16.0;
      EXPECT_EQ(!p.fragments[y * 16 + x].empty(), inside) << x << "," << y;
    }
  }
  EXPECT_EQ(p.covered, 120u);
}

TEST(RasterizePeel, SharedEdgesCoverEachPixelOnce) {
  // A fan of 8 triangles around a pixel center, edges passing through many
  // pixel centers. Every interior pixel must be claimed by exactly one face.
  const int W = 16;
  auto to_clip = [&](double sx, double sy) {
    return Eigen::Vector4d(sx / W * 2.0 - 1.0, 1.0 - sy / W * 2.0, 0.0, 1.0);
  };
  const std::vector<Eigen::Vector2d> ring = {{2.5, 2.5},  {8.5, 2.5},  {14.5, 2.5}, {14.5, 8.5},
                                             {14.5, 14.5}, {8.5, 14.5}, {2.5, 14.5}, {2.5, 8.5}};
  std::vector<Eigen::Vector4d> clip = {to_clip(8.5, 8.5)};
  for (const auto& p : ring) clip.push_back(to_clip(p.x(), p.y()));
  std::vector<Face> faces;
  for (std::uint32_t i = 0; i < 8; ++i) faces.push_back({0, 1 + i, 1 + (i + 1) % 8});

  std::vector<int> count(W * W, 0);
  for (const auto& f : faces) {
    const std::vector<Face> one = {f};
    const PeelResult p = rasterize_peel(clip, one, W, W, 0.5, nullptr);
    for (int i = 0; i < W * W; ++i) count[i] += p.fragments[i].empty() ? 0 : 1;
  }
  for (int y = 0; y < W; ++y) {
    for (int x = 0; x < W; ++x) {
      const bool interior = x >= 3 && x <= 13 && y >= 3 && y <= 13;
      if (interior) {
        EXPECT_EQ(count[y * W + x], 1) << x << "," << y;
      }
      EXPECT_LE(count[y * W + x], 1) << x << "," << y;
    }
  }
  // Reversed winding claims the same pixels.
  std::vector<int> flipped(W * W, 0);
  for (const auto& f : faces) {
    const std::vector<Face> one = {Face{f[0], f[2], f[1]}};
    const PeelResult p = rasterize_peel(clip, one, W, W, 0.5, nullptr);
    for (int i = 0; i < W * W; ++i) flipped[i] += p.fragments[i].empty() ? 0 : 1;
  }
  EXPECT_EQ(flipped, count);
}

TEST(RasterizePeel, DepthTieBrokenByFaceIndex) {
  MeshSoup soup;
  add_quad(soup, 2.0, 10.0, {1, 0, 0, 1});
  add_quad(soup, 2.0, 10.0, {0, 0, 1, 1});
  const Camera cam = oracle::front_camera(8, 8);
  const auto clip = transform_vertices(soup, build_mvp(cam));
  const PeelResult p1 = rasterize_peel(clip, soup.faces, 8, 8, cam.near, nullptr);
  const PeelResult p2 = rasterize_peel(clip, soup.faces, 8, 8, cam.near, &p1.depth);
  for (std::size_t i = 0; i < 64; ++i) {
    EXPECT_LT(p1.fragments[i].face, 2);
    EXPECT_GE(p2.fragments[i].face, 2);
  }
  const Image img = render(soup, cam, RenderConfig{});
  EXPECT_EQ(img.at(4, 4, 0), 1.0);
  EXPECT_EQ(img.at(4, 4, 2), 0.0);
}

TEST(RasterizePeel, FacesCrossingNearPlaneAreDropped) {
  MeshSoup soup;
  soup.vertices = {vtx(-1, -1, -2), vtx(1, -1, -2), vtx(0, 1, 0.5)};
  soup.faces = {{0, 1, 2}};
  soup.face_gaussian_id = {0};
  const Image img = render(soup, oracle::front_camera(8, 8), RenderConfig{});
  for (double v : img.data) EXPECT_EQ(v, 0.0);
}

TEST(RasterizePeel, FragmentsMatchOracleSortedLists) {
  std::mt19937_64 rng(23);
  for (int scene = 0; scene < 30; ++scene) {
    const MeshSoup soup = oracle::random_scene(rng, 20);
    const Camera cam = oracle::front_camera(16, 16);
    const auto expected = oracle::sorted_fragments(soup, cam);
    const auto clip = transform_vertices(soup, build_mvp(cam));
    const TriangleSetup setup(clip, soup.faces, 16, 16, cam.near);
    std::vector<std::vector<int>> got(256);
    PeelResult prev;
    for (int k = 0; k < 25; ++k) {
      PeelResult p = rasterize_peel(setup, k == 0 ? nullptr : &prev.depth);
      for (std::size_t i = 0; i < 256; ++i) {
        const Fragment& f = p.fragments[i];
        if (f.empty()) continue;
        got[i].push_back(f.face);
        EXPECT_NEAR(f.bary.sum(), 1.0, 1e-6);
        EXPECT_GE(f.bary.minCoeff(), -1e-6);
      }
      prev = std::move(p);
    }
    EXPECT_EQ(got, expected) << "scene " << scene;
  }
}

TEST(InterpolateRgba, ConstantAndOneHot) {
  std::vector<Vertex> verts = {vtx(0, 0, 0, {0.1, 0.2, 0.3, 0.4}), vtx(1, 0, 0, {0.1, 0.2, 0.3, 0.4}),
                               vtx(0, 1, 0, {0.1, 0.2, 0.3, 0.4})};
  Fragment f;
  f.face = 0;
  f.bary = {0.2, 0.3, 0.5};
  const Eigen::Vector4d c = interpolate_rgba(f, {0, 1, 2}, verts);
  EXPECT_LT((c - Eigen::Vector4d(0.1, 0.2, 0.3, 0.4)).cwiseAbs().maxCoeff(), 1e-15);
  verts[1].rgba = {1, 0, 0, 1};
  f.bary = {0, 1, 0};
  EXPECT_EQ(interpolate_rgba(f, {0, 1, 2}, verts), Eigen::Vector4d(1, 0, 0, 1));
}

TEST(InterpolateRgba, PerspectiveCorrectFormula) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    MeshSoup soup = oracle::random_scene(rng, 1, 1.0, 5.0);
    for (auto& v : soup.vertices) v.position.z() = -(0.5 + 6.0 * u(rng));
    const Camera cam = oracle::front_camera(32, 32);
    const auto clip = transform_vertices(soup, build_mvp(cam));
    const PeelResult p = rasterize_peel(clip, soup.faces, 32, 32, cam.near, nullptr);
    std::array<Eigen::Vector2d, 3> s;
    for (int j = 0; j < 3; ++j) {
      s[j] = {(clip[j].x() / clip[j].w() + 1) * 16, (1 - clip[j].y() / clip[j].w()) * 16};
    }
    for (int i = 0; i < 32 * 32; ++i) {
      const Fragment& f = p.fragments[i];
      if (f.empty()) continue;
      const Eigen::Vector2d px(i % 32 + 0.5, i / 32 + 0.5);
      // Screen-space barycentrics by solving the 2x2 system.
      Eigen::Matrix2d A;
      A.col(0) = s[1] - s[0];
      A.col(1) = s[2] - s[0];
      const Eigen::Vector2d ab = A.inverse() * (px - s[0]);
      const Eigen::Vector3d lam(1 - ab.x() - ab.y(), ab.x(), ab.y());
      Eigen::Vector4d num = Eigen::Vector4d::Zero();
      double den = 0.0;
      for (int j = 0; j < 3; ++j) {
        num += lam[j] * soup.vertices[j].rgba / clip[j].w();
        den += lam[j] / clip[j].w();
      }
      const Eigen::Vector4d expected = num / den;
      const Eigen::Vector4d got = interpolate_rgba(f, soup.faces[0], soup.vertices);
      EXPECT_LT((got - expected).cwiseAbs().maxCoeff(), 1e-6);
      ++checked;
    }
  }
  EXPECT_GT(checked, 1000);
}

TEST(Composite, Examples) {
  RenderConfig cfg;
  Image red(1, 1, 4);
  red.data = {1, 0, 0, 1};
  Image out = composite(std::vector<Image>{red}, cfg);
  EXPECT_EQ(out.data, (std::vector<double>{1, 0, 0, 1}));

  Image near(1, 1, 4), far(1, 1, 4);
  near.data = {1, 0, 0, 0.5};
  far.data = {0, 1, 0, 0.5};
  out = composite(std::vector<Image>{near, far}, cfg);
  EXPECT_DOUBLE_EQ(out.data[0], 0.5);
  EXPECT_DOUBLE_EQ(out.data[1], 0.25);
  EXPECT_DOUBLE_EQ(out.data[2], 0.0);
  EXPECT_DOUBLE_EQ(out.data[3], 0.75);

  Image empty(1, 1, 4);
  cfg.background = {1, 1, 1, 1};
  out = composite(std::vector<Image>{empty}, cfg);
  EXPECT_EQ(out.data[0], 1.0);
  EXPECT_EQ(out.data[1], 1.0);
  EXPECT_EQ(out.data[2], 1.0);
}

TEST(Render, EmptySoupIsBackground) {
  RenderConfig cfg;
  cfg.background = {0.2, 0.4, 0.6, 1.0};
  const Image img = render(MeshSoup{}, oracle::front_camera(5, 4), cfg);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    EXPECT_DOUBLE_EQ(img.data[p * 4 + 0], 0.2);
    EXPECT_DOUBLE_EQ(img.data[p * 4 + 1], 0.4);
    EXPECT_DOUBLE_EQ(img.data[p * 4 + 2], 0.6);
    EXPECT_DOUBLE_EQ(img.data[p * 4 + 3], 0.0);
  }
}

TEST(Render, FacingFanFadesRadially) {
  gs::Gaussian g;
  g.mean = {0.0f, 0.0f, -3.0f};
  // Disc in the xy plane: drop the z axis.
  g.log_scales = {-1.0f, -1.0f, std::log(gs::kFlatEpsilon)};
  g.opacity = 0.8f;
  g.color = {1.0f, 0.5f, 0.25f};
  mesh::MeshGenConfig mcfg;
  mcfg.no_triag = 64;
  const MeshSoup soup = mesh::flat_fan(g, mcfg);
  const Camera cam = oracle::front_camera(65, 65, 1.0);
  const Image img = render(soup, cam, RenderConfig{});
  // The center vertex projects onto the center of pixel (32, 32).
  EXPECT_NEAR(img.at(32, 32, 3), 0.8, 2e-2);
  // Radius 2.7 * e^-1 ~ 0.993 at depth 3; focal 65 / (2 tan 0.5) ~ 59.5 px,
  // so the rim is ~19.7 px out. One pixel inside it, alpha is close to 0.16.
  const double rim_px = 2.7 * std::exp(-1.0) / 3.0 * cam.focal();
  const int r = int(std::floor(rim_px - 1.0));
  const double a = img.at(32 + r, 32, 3);
  EXPECT_NEAR(a, 0.16 + (0.8 - 0.16) * (1.0 - (r + 0.0) / rim_px), 0.03);
  EXPECT_EQ(img.at(32 + int(rim_px) + 2, 32, 3), 0.0);
  // Monotone fade along the ray from the center.
  for (int x = 33; x <= 32 + r; ++x) EXPECT_LE(img.at(x, 32, 3), img.at(x - 1, 32, 3) + 1e-12);
}

TEST(Render, MatchesBruteForceOracle) {
  std::mt19937_64 rng(25);
  for (int scene = 0; scene < 50; ++scene) {
    const MeshSoup soup = oracle::random_scene(rng, 1 + scene % 20);
    const Camera cam = oracle::front_camera(16, 16);
    RenderConfig cfg;
    cfg.num_layers = 20;
    cfg.background = {0.1, 0.2, 0.3, scene % 2 ? 1.0 : 0.0};
    const Image got = render(soup, cam, cfg);
    const Image want = oracle::composite_bruteforce(soup, cam, cfg.background);
    EXPECT_LT(max_abs_diff(got, want), 1e-5) << "scene " << scene;
  }
}

TEST(Render, MatchesOracleFromArbitraryViewpoints) {
  std::mt19937_64 rng(26);
  for (int scene = 0; scene < 30; ++scene) {
    const MeshSoup soup = random_world_scene(rng, 15);
    const Camera cam = random_camera(rng, 20, 14);
    RenderConfig cfg;
    cfg.num_layers = 20;
    const Image got = render(soup, cam, cfg);
    const Image want = oracle::composite_bruteforce(soup, cam, cfg.background);
    EXPECT_LT(max_abs_diff(got, want), 1e-5) << "scene " << scene;
  }
}

TEST(Render, LayerLimitTruncatesLikeOracle) {
  std::mt19937_64 rng(27);
  const MeshSoup soup = oracle::random_scene(rng, 20);
  const Camera cam = oracle::front_camera(16, 16);
  for (int layers : {1, 2, 3, 5}) {
    RenderConfig cfg;
    cfg.num_layers = layers;
    EXPECT_LT(max_abs_diff(render(soup, cam, cfg),
                           oracle::composite_bruteforce(soup, cam, cfg.background, layers)),
              1e-5);
  }
}

TEST(Render, TransmittanceMonotoneAndAlphaGrowsWithLayers) {
  std::mt19937_64 rng(28);
  for (int scene = 0; scene < 20; ++scene) {
    const MeshSoup soup = oracle::random_scene(rng, 20);
    const Camera cam = oracle::front_camera(16, 16);
    Image prev;
    for (int layers = 1; layers <= 20; ++layers) {
      RenderConfig cfg;
      cfg.num_layers = layers;
      const Image img = render(soup, cam, cfg);
      if (!prev.data.empty()) {
        for (std::size_t p = 0; p < img.pixel_count(); ++p) {
          EXPECT_GE(img.data[p * 4 + 3], prev.data[p * 4 + 3]);
        }
      }
      for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        EXPECT_GE(img.data[p * 4 + 3], 0.0);
        EXPECT_LE(img.data[p * 4 + 3], 1.0);
      }
      prev = img;
    }
    // Once layers cover the depth complexity, more layers change nothing.
    const int depth = oracle::max_depth_complexity(soup, cam);
    RenderConfig a, b;
    a.num_layers = std::max(depth, 1);
    b.num_layers = depth + 5;
    EXPECT_EQ(render(soup, cam, a).data, render(soup, cam, b).data);
  }
}

TEST(Render, FaceOrderPermutationIsBitIdentical) {
  std::mt19937_64 rng(29);
  for (int scene = 0; scene < 20; ++scene) {
    const MeshSoup soup = oracle::random_scene(rng, 20);
    MeshSoup shuffled = soup;
    std::vector<std::size_t> perm(soup.faces.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      shuffled.faces[i] = soup.faces[perm[i]];
      shuffled.face_gaussian_id[i] = soup.face_gaussian_id[perm[i]];
    }
    const Camera cam = oracle::front_camera(16, 16);
    RenderConfig cfg;
    cfg.num_layers = 20;
    EXPECT_EQ(render(soup, cam, cfg).data, render(shuffled, cam, cfg).data);
  }
}

TEST(Render, WindingFlipIsBitIdentical) {
  std::mt19937_64 rng(30);
  for (int scene = 0; scene < 20; ++scene) {
    const MeshSoup soup = oracle::random_scene(rng, 20);
    MeshSoup flipped = soup;
    for (auto& f : flipped.faces) std::swap(f[1], f[2]);
    const Camera cam = oracle::front_camera(16, 16);
    RenderConfig cfg;
    cfg.num_layers = 20;
    EXPECT_EQ(render(soup, cam, cfg).data, render(flipped, cam, cfg).data);
  }
}

TEST(Render, ResolutionConsistencyOnSmoothScene) {
  // A few large, overlapping fans: smooth color fields.
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  gs::GaussianCloud cloud;
  for (int i = 0; i < 6; ++i) {
    gs::Gaussian g;
    g.mean = {u(rng) - 0.5f, u(rng) - 0.5f, -3.0f - u(rng)};
    g.log_scales = {-0.5f, -0.7f, std::log(gs::kFlatEpsilon)};
    g.rotation = Eigen::AngleAxisf(6.28f * u(rng), Eigen::Vector3f::UnitZ()).toRotationMatrix();
    g.opacity = 0.3f + 0.6f * u(rng);
    g.color = {u(rng), u(rng), u(rng)};
    cloud.gaussians.push_back(g);
  }
  mesh::MeshGenConfig mcfg;
  mcfg.no_triag = 32;
  const MeshSoup soup = mesh::convert_cloud(cloud, mcfg);
  const Image lo = render(soup, oracle::front_camera(32, 32), RenderConfig{});
  const Image hi = box_downsample(render(soup, oracle::front_camera(64, 64), RenderConfig{}), 2);
  double mae = 0.0;
  for (std::size_t i = 0; i < lo.data.size(); ++i) mae += std::abs(lo.data[i] - hi.data[i]);
  mae /= double(lo.data.size());
  EXPECT_LT(mae, 0.05);
}

TEST(Render, IndependentOfWorkerCount) {
  std::mt19937_64 rng(32);
  const MeshSoup soup = oracle::random_scene(rng, 20);
  const Camera cam = oracle::front_camera(33, 17);
  ::setenv("MESHSPLAT_THREADS", "1", 1);
  const Image a = render(soup, cam, RenderConfig{});
  ::setenv("MESHSPLAT_THREADS", "5", 1);
  const Image b = render(soup, cam, RenderConfig{});
  ::unsetenv("MESHSPLAT_THREADS");
  EXPECT_EQ(a.data, b.data);
}

TEST(Render, RejectsBadConfig) {
  RenderConfig cfg;
  cfg.num_layers = 0;
  EXPECT_THROW(render(MeshSoup{}, oracle::front_camera(4, 4), cfg), ConfigError);
}

TEST(LookAt, TargetProjectsToImageCenter) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d eye(u(rng), u(rng), u(rng));
    const Eigen::Vector3d target(u(rng) * 0.1, u(rng) * 0.1, u(rng) * 0.1);
    if ((eye - target).norm() < 0.5) continue;
    Camera cam;
    cam.width = 101;
    cam.height = 75;
    cam.camera_to_world = look_at(eye, target);
    const Eigen::Vector4d c = build_mvp(cam) * target.homogeneous();
    EXPECT_NEAR((c.x() / c.w() + 1) * 0.5 * cam.width, cam.width * 0.5, 1e-6);
    EXPECT_NEAR((1 - c.y() / c.w()) * 0.5 * cam.height, cam.height * 0.5, 1e-6);
  }
}
