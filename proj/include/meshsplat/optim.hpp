#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "meshsplat/image.hpp"
#include "meshsplat/loss.hpp"
#include "meshsplat/raster.hpp"
#include "meshsplat/soup.hpp"

namespace meshsplat::optim {

// Faces whose three vertex alphas are all below this are pruned.
inline const double kPruneThreshold = std::exp(-4.0);
// Position learning rate relative to the color learning rate.
inline const double kVertexRateRatio = std::exp(-3.0);

struct OptimConfig {
  double lr_color = 0.01;
  int epochs = 15;
  int prune_every = 10;  // epochs; 0 disables pruning
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  bool deterministic = true;

  double lr_verts() const { return kVertexRateRatio * lr_color; }
  void validate() const;
};

struct ParamGrads {
  std::vector<Eigen::Vector3d> rgb;
  std::vector<double> alpha;
  std::vector<Eigen::Vector3d> position;

  explicit ParamGrads(std::size_t vertex_count = 0)
      : rgb(vertex_count, Eigen::Vector3d::Zero()),
        alpha(vertex_count, 0.0),
        position(vertex_count, Eigen::Vector3d::Zero()) {}
};

// Order in which per-pixel contributions are summed into vertex gradients.
enum class Accumulation {
  kDeterministic,  // fixed (layer, pixel) order, independent of thread count
  kPerWorker,      // per-worker partial sums reduced in worker order
};

// Backpropagates an image gradient dLoss/d(rgb of frame.image) to the soup.
// Coverage and the fragment-to-face assignment recorded in `frame` are held
// fixed; positions receive gradient through the perspective-correct
// barycentric weights only.
ParamGrads backward_image(const MeshSoup& soup, const raster::LayeredFrame& frame,
                          const raster::RenderConfig& cfg, const Image& d_rgb,
                          Accumulation mode = Accumulation::kDeterministic);

struct BackwardResult {
  LossValue loss;
  ParamGrads grads;
  Image prediction;  // rgb
};

// Renders, evaluates the loss against `target` (rgb) and returns exact
// gradients for every vertex rgb, alpha and position. Throws NumericalError
// naming the first vertex with a non-finite gradient.
BackwardResult backward(const MeshSoup& soup, const raster::Camera& cam,
                        const raster::RenderConfig& rcfg, const Image& target,
                        const LossConfig& lcfg, Accumulation mode = Accumulation::kDeterministic);

struct AdamState {
  static constexpr int kParamsPerVertex = 7;  // rgb, alpha, xyz
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  explicit AdamState(std::size_t vertex_count = 0)
      : m(vertex_count * kParamsPerVertex, 0.0), v(vertex_count * kParamsPerVertex, 0.0) {}
};

// One Adam update: lr_color for rgb and alpha, lr_verts for positions. A
// parameter whose gradient is exactly zero keeps its value while its moments
// decay. rgb and alpha are clamped to [0, 1] afterwards.
void adam_step(MeshSoup& soup, const ParamGrads& grads, AdamState& state, const OptimConfig& cfg);

struct PruneReport {
  std::size_t faces_removed = 0;
  std::size_t vertices_removed = 0;
  // Old vertex index -> new index, or -1 when removed.
  std::vector<std::int64_t> vertex_remap;
  std::vector<std::uint32_t> removed_face_gaussian_ids;
};

struct PruneResult {
  MeshSoup soup;
  PruneReport report;
};

PruneResult prune(const MeshSoup& soup, double threshold = kPruneThreshold);

// Drops and reorders moment entries according to a prune remap.
void remap_state(AdamState& state, const PruneReport& report);

struct TrainView {
  raster::Camera camera;
  Image target;  // rgb
};

struct LogEntry {
  int epoch = 0;  // 1-based
  std::size_t camera = 0;
  LossValue loss;
  std::size_t vertices = 0;
  std::size_t faces = 0;
};

struct OptimizeResult {
  MeshSoup soup;
  std::vector<LogEntry> log;
  std::vector<std::pair<int, PruneReport>> prunes;  // (epoch, report)
};

using EpochCallback = std::function<void(int epoch, const MeshSoup& soup)>;

// For each epoch: visit the views in a seeded shuffled order, one
// render/backward/Adam step per view; prune after every prune_every-th
// epoch.
OptimizeResult optimize(MeshSoup soup, std::span<const TrainView> views, const OptimConfig& ocfg,
                        const LossConfig& lcfg, const raster::RenderConfig& rcfg,
                        const EpochCallback& on_epoch = {});

// Mean logged loss per epoch, in epoch order.
std::vector<double> epoch_mean_losses(std::span<const LogEntry> log);

// CSV with '#'-prefixed key=value run-config lines, then the header
// epoch,camera,loss,l1,ssim,vertices,faces.
void write_loss_csv(std::ostream& out, std::span<const LogEntry> log,
                    std::span<const std::pair<std::string, std::string>> run_config);

}  // namespace meshsplat::optim
