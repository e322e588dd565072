#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "../vendor/CLI11.hpp"

#include "meshsplat/error.hpp"
#include "meshsplat/gaussian.hpp"
#include "meshsplat/image.hpp"
#include "meshsplat/io/export.hpp"
#include "meshsplat/io/manifest.hpp"
#include "meshsplat/io/metrics.hpp"
#include "meshsplat/io/png.hpp"
#include "meshsplat/io/soup_file.hpp"
#include "meshsplat/loss.hpp"
#include "meshsplat/meshgen.hpp"
#include "meshsplat/optim.hpp"
#include "meshsplat/raster.hpp"

namespace fs = std::filesystem;
using namespace meshsplat;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitNumerical = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::uint64_t seed = 0;
  bool deterministic = true;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

Eigen::Vector4d background_of(const std::vector<double>& v) {
  return Eigen::Vector4d(v[0], v[1], v[2], v[3]);
}

// Dataset images composited over the render background, so targets and
// renders agree on what an uncovered pixel looks like.
Image target_rgb(const Image& img, const Eigen::Vector4d& bg) {
  return flatten_alpha(img, bg[3] * bg[0], bg[3] * bg[1], bg[3] * bg[2]);
}

// ---------------------------------------------------------------- convert

struct ConvertOptions {
  std::string input;
  std::string output;
  std::string mode = "flat";
  mesh::MeshGenConfig gen;
};

void add_convert(CLI::App& app, ConvertOptions& o) {
  auto* sub = app.add_subcommand("convert", "Convert a Gaussian checkpoint to a mesh soup");
  sub->add_option("input", o.input, "Gaussian checkpoint (.ply)")->required()->check(CLI::ExistingFile);
  sub->add_option("-o,--output", o.output, "Output soup (.ply)")->required();
  sub->add_option("--mode", o.mode, "Fan layout")
      ->check(CLI::IsMember({"flat", "solid"}))
      ->capture_default_str();
  sub->add_option("--scale-mul", o.gen.scale_mul, "Fan radius in standard deviations")
      ->capture_default_str();
  sub->add_option("--triangles", o.gen.no_triag, "Triangles per fan")->capture_default_str();
  sub->add_option("--opacity-mul", o.gen.opac_mul, "Boundary opacity multiplier")
      ->capture_default_str();
}

int run_convert(ConvertOptions& o) {
  o.gen.mode = o.mode == "solid" ? mesh::Mode::kSolid : mesh::Mode::kFlat;
  const gs::GaussianCloud cloud = gs::load_cloud_file(o.input);
  const MeshSoup soup = mesh::convert_cloud(cloud, o.gen);
  io::save_soup(soup, o.output);
  std::cout << "gaussians=" << cloud.gaussians.size() << " vertices=" << soup.vertices.size()
            << " faces=" << soup.faces.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------- render

struct RenderOptions {
  std::string soup;
  std::string output;
  std::string manifest;
  std::size_t frame = 0;
  int width = 0;
  int height = 0;
  double fov_x = 0.0;
  std::vector<double> pose;
  double near = 0.01;
  double far = 100.0;
  int layers = 15;
  int downsample = 1;
  std::vector<double> background{0.0, 0.0, 0.0, 0.0};
};

void add_render(CLI::App& app, RenderOptions& o) {
  auto* sub = app.add_subcommand("render", "Render a mesh soup to an RGBA PNG");
  sub->add_option("soup", o.soup, "Mesh soup (.ply)")->required()->check(CLI::ExistingFile);
  sub->add_option("-o,--output", o.output, "Output PNG")->required();
  auto* manifest = sub->add_option("--manifest", o.manifest, "transforms.json or dataset dir");
  sub->add_option("--frame", o.frame, "Frame index in the manifest")
      ->capture_default_str()
      ->needs(manifest);
  auto* pose = sub->add_option("--pose", o.pose, "Camera-to-world matrix, 16 values row-major")
                   ->expected(16)
                   ->excludes(manifest);
  sub->add_option("--width", o.width, "Image width with --pose")->needs(pose);
  sub->add_option("--height", o.height, "Image height with --pose")->needs(pose);
  sub->add_option("--fov-x", o.fov_x, "Horizontal field of view in radians with --pose")
      ->needs(pose);
  sub->add_option("--near", o.near, "Near plane")->capture_default_str();
  sub->add_option("--far", o.far, "Far plane")->capture_default_str();
  sub->add_option("--layers", o.layers, "Depth-peeling layers")->capture_default_str();
  sub->add_option("--downsample", o.downsample, "Resolution divisor")->capture_default_str();
  sub->add_option("--background", o.background, "Background r g b a")
      ->expected(4)
      ->capture_default_str();
}

int run_render(const RenderOptions& o) {
  raster::Camera cam;
  if (!o.manifest.empty()) {
    const io::DatasetManifest m = io::load_manifest(o.manifest);
    if (o.frame >= m.frames.size()) {
      throw UsageError("frame " + std::to_string(o.frame) + " out of range (" +
                       std::to_string(m.frames.size()) + " frames)");
    }
    cam = m.camera(o.frame, o.near, o.far);
  } else if (!o.pose.empty()) {
    if (o.width <= 0 || o.height <= 0 || o.fov_x <= 0.0) {
      throw UsageError("--pose requires --width, --height and --fov-x");
    }
    cam.width = o.width;
    cam.height = o.height;
    cam.fov_x = o.fov_x;
    cam.near = o.near;
    cam.far = o.far;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) cam.camera_to_world(r, c) = o.pose[r * 4 + c];
    }
  } else {
    throw UsageError("render needs --manifest or --pose");
  }
  if (o.downsample < 1 || cam.width % o.downsample != 0 || cam.height % o.downsample != 0) {
    throw UsageError("--downsample must divide the image size");
  }
  cam.width /= o.downsample;
  cam.height /= o.downsample;

  const MeshSoup soup = io::load_soup(o.soup);
  raster::RenderConfig cfg;
  cfg.num_layers = o.layers;
  cfg.background = background_of(o.background);
  const raster::LayeredFrame frame = raster::render_layers(soup, cam, cfg);
  io::save_png(to_straight_alpha(frame.image, cfg.background[3]), o.output);
  std::cout << "resolution=" << cam.width << "x" << cam.height << " peels=" << frame.peels.size()
            << "/" << cfg.num_layers << "\n";
  return 0;
}

// ---------------------------------------------------------------- optimize

struct OptimizeOptions {
  std::string soup;
  std::string dataset;
  std::string output;
  std::string log;
  optim::OptimConfig optim;
  optim::LossConfig loss;
  int layers = 15;
  int downsample = 1;
  double near = 0.01;
  double far = 100.0;
  std::vector<double> background{0.0, 0.0, 0.0, 0.0};
};

void add_optimize(CLI::App& app, OptimizeOptions& o) {
  auto* sub = app.add_subcommand("optimize", "Fine-tune a mesh soup against posed images");
  sub->add_option("soup", o.soup, "Initial soup (.ply)")->required()->check(CLI::ExistingFile);
  sub->add_option("dataset", o.dataset, "Dataset dir or transforms.json")->required();
  sub->add_option("-o,--output", o.output, "Optimized soup (.ply)")->required();
  sub->add_option("--log", o.log, "Loss CSV (default: <output>.loss.csv)");
  sub->add_option("--epochs", o.optim.epochs, "Passes over the training views")
      ->capture_default_str();
  sub->add_option("--prune-every", o.optim.prune_every, "Prune interval in epochs, 0 disables")
      ->capture_default_str();
  sub->add_option("--lr-color", o.optim.lr_color, "Adam rate for color and alpha")
      ->capture_default_str();
  sub->add_option("--lambda", o.loss.lambda, "L1 weight in the loss")->capture_default_str();
  sub->add_option("--ssim-window", o.loss.ssim_window, "SSIM window size")->capture_default_str();
  sub->add_option("--layers", o.layers, "Depth-peeling layers")->capture_default_str();
  sub->add_option("--downsample", o.downsample, "Box-filter resolution divisor")
      ->capture_default_str();
  sub->add_option("--near", o.near, "Near plane")->capture_default_str();
  sub->add_option("--far", o.far, "Far plane")->capture_default_str();
  sub->add_option("--background", o.background, "Background r g b a")
      ->expected(4)
      ->capture_default_str();
}

int run_optimize(OptimizeOptions& o, const GlobalOptions& g) {
  o.optim.seed = g.seed;
  o.optim.deterministic = g.deterministic;
  o.optim.validate();
  o.loss.validate();

  const io::DatasetManifest manifest = io::load_manifest(o.dataset);
  raster::RenderConfig rcfg;
  rcfg.num_layers = o.layers;
  rcfg.background = background_of(o.background);

  std::vector<optim::TrainView> views;
  for (std::size_t i = 0; i < manifest.frames.size(); ++i) {
    raster::Camera cam = manifest.camera(i, o.near, o.far);
    Image img = io::load_png(manifest.frames[i].image_path);
    if (img.width != cam.width || img.height != cam.height) {
      throw FormatError(manifest.frames[i].image_path.string() + ": size " +
                        std::to_string(img.width) + "x" + std::to_string(img.height) +
                        " does not match the manifest");
    }
    img = box_downsample(img, o.downsample);
    cam.width /= o.downsample;
    cam.height /= o.downsample;
    views.push_back({cam, target_rgb(img, rcfg.background)});
  }

  const MeshSoup soup = io::load_soup(o.soup);
  const optim::OptimizeResult result = optim::optimize(
      soup, views, o.optim, o.loss, rcfg, [&](int epoch, const MeshSoup& s) {
        std::cout << "epoch " << epoch << " vertices=" << s.vertices.size()
                  << " faces=" << s.faces.size() << "\n";
      });
  for (const auto& [epoch, report] : result.prunes) {
    std::cout << "prune after epoch " << epoch << ": faces_removed=" << report.faces_removed
              << " vertices_removed=" << report.vertices_removed << "\n";
  }
  const std::vector<double> means = optim::epoch_mean_losses(result.log);
  for (std::size_t e = 0; e < means.size(); ++e) {
    std::cout << "epoch " << e + 1 << " mean_loss=" << fmt(means[e]) << "\n";
  }

  io::save_soup(result.soup, o.output);

  const std::vector<std::pair<std::string, std::string>> run_config = {
      {"soup", o.soup},
      {"dataset", o.dataset},
      {"epochs", std::to_string(o.optim.epochs)},
      {"prune_every", std::to_string(o.optim.prune_every)},
      {"lr_color", fmt(o.optim.lr_color)},
      {"lr_verts", fmt(o.optim.lr_verts())},
      {"lambda", fmt(o.loss.lambda)},
      {"ssim_window", std::to_string(o.loss.ssim_window)},
      {"layers", std::to_string(o.layers)},
      {"downsample", std::to_string(o.downsample)},
      {"near", fmt(o.near)},
      {"far", fmt(o.far)},
      {"background", fmt(o.background[0]) + " " + fmt(o.background[1]) + " " +
                         fmt(o.background[2]) + " " + fmt(o.background[3])},
      {"seed", std::to_string(g.seed)},
      {"deterministic", g.deterministic ? "1" : "0"},
  };
  const fs::path log_path = o.log.empty() ? fs::path(o.output + ".loss.csv") : fs::path(o.log);
  std::ofstream out(log_path);
  if (!out) throw IoError("cannot write " + log_path.string());
  optim::write_loss_csv(out, result.log, run_config);
  if (!out) throw IoError("failed writing " + log_path.string());
  return 0;
}

// ---------------------------------------------------------------- metrics

struct MetricsOptions {
  std::string renders;
  std::string gt;
  std::string output;
  std::vector<double> background{0.0, 0.0, 0.0, 0.0};
};

void add_metrics(CLI::App& app, MetricsOptions& o) {
  auto* sub = app.add_subcommand("metrics", "PSNR and SSIM of renders against references");
  sub->add_option("renders", o.renders, "Directory of rendered PNGs")
      ->required()
      ->check(CLI::ExistingDirectory);
  sub->add_option("gt", o.gt, "Directory of reference PNGs")
      ->required()
      ->check(CLI::ExistingDirectory);
  sub->add_option("-o,--output", o.output, "Also write the table to this CSV file");
  sub->add_option("--background", o.background, "Background for RGBA images, r g b a")
      ->expected(4)
      ->capture_default_str();
}

std::set<std::string> png_names(const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      names.insert(entry.path().filename().string());
    }
  }
  return names;
}

int run_metrics(const MetricsOptions& o) {
  const std::set<std::string> renders = png_names(o.renders);
  const std::set<std::string> gts = png_names(o.gt);
  for (const auto& name : renders) {
    if (!gts.count(name)) throw UsageError("missing reference image: " + (fs::path(o.gt) / name).string());
  }
  for (const auto& name : gts) {
    if (!renders.count(name)) throw UsageError("missing rendered image: " + (fs::path(o.renders) / name).string());
  }
  if (renders.empty()) throw UsageError("no PNG files in " + o.renders);

  const Eigen::Vector4d bg = background_of(o.background);
  std::ostringstream table;
  table << "image,psnr,ssim\n";
  double psnr_sum = 0.0;
  double ssim_sum = 0.0;
  for (const auto& name : renders) {
    const Image pred = target_rgb(io::load_png(fs::path(o.renders) / name), bg);
    const Image gt = target_rgb(io::load_png(fs::path(o.gt) / name), bg);
    if (!pred.same_shape(gt)) throw UsageError("size mismatch for " + name);
    const double p = io::psnr(pred, gt);
    const double s = optim::ssim(pred, gt);
    psnr_sum += p;
    ssim_sum += s;
    table << name << "," << fmt(p) << "," << fmt(s) << "\n";
  }
  const double n = double(renders.size());
  table << "mean," << fmt(psnr_sum / n) << "," << fmt(ssim_sum / n) << "\n";
  std::cout << table.str();
  if (!o.output.empty()) {
    std::ofstream out(o.output);
    out << table.str();
    if (!out) throw IoError("cannot write " + o.output);
  }
  return 0;
}

// ---------------------------------------------------------------- export

struct ExportOptions {
  std::string soup;
  std::string format;
  std::string output;
};

void add_export(CLI::App& app, ExportOptions& o) {
  auto* sub = app.add_subcommand("export", "Export a mesh soup for external renderers");
  sub->add_option("soup", o.soup, "Mesh soup (.ply)")->required()->check(CLI::ExistingFile);
  sub->add_option("--format", o.format, "ply, obj or gltf")
      ->required()
      ->check(CLI::IsMember({"ply", "obj", "gltf"}));
  sub->add_option("-o,--output", o.output, "Output path")->required();
}

int run_export(const ExportOptions& o) {
  const MeshSoup soup = io::load_soup(o.soup);
  if (o.format == "ply") {
    io::save_soup(soup, o.output);
  } else if (o.format == "obj") {
    std::cerr << "warning: OBJ has no vertex alpha; per-vertex opacity is dropped\n";
    io::export_obj(soup, o.output);
  } else {
    io::export_gltf(soup, o.output);
  }
  std::cout << "wrote " << o.output << " vertices=" << soup.vertices.size()
            << " faces=" << soup.faces.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mesh soup conversion, rendering and fine-tuning for Gaussian Splatting scenes"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Seed for the epoch shuffle")->capture_default_str();
  app.add_flag("--deterministic,!--no-deterministic", global.deterministic,
               "Fixed gradient reduction order, independent of thread count")
      ->capture_default_str();

  ConvertOptions convert;
  RenderOptions render;
  OptimizeOptions optimize;
  MetricsOptions metrics;
  ExportOptions exporter;
  add_convert(app, convert);
  add_render(app, render);
  add_optimize(app, optimize);
  add_metrics(app, metrics);
  add_export(app, exporter);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "convert") return run_convert(convert);
    if (cmd == "render") return run_render(render);
    if (cmd == "optimize") return run_optimize(optimize, global);
    if (cmd == "metrics") return run_metrics(metrics);
    return run_export(exporter);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}
