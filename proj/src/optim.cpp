#include "meshsplat/optim.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include <Eigen/Geometry>

#include "meshsplat/error.hpp"
#include "meshsplat/parallel.hpp"

namespace meshsplat::optim {

namespace {

// Gradient of the loss with respect to one fragment's interpolated rgba and
// to the positions of its three vertices.
struct FragmentGrad {
  Eigen::Vector3d rgb = Eigen::Vector3d::Zero();
  double alpha = 0.0;
  std::array<Eigen::Vector3d, 3> position;
};

// Walks the peeled fragments of one pixel front to back, then back to front,
// calling emit(layer, grad) for every fragment.
template <typename Emit>
void backprop_pixel(const MeshSoup& soup, const raster::LayeredFrame& frame,
                    const raster::RenderConfig& cfg, const Image& d_rgb, std::size_t pixel,
                    std::vector<Eigen::Vector4d>& rgba, std::vector<double>& trans, Emit&& emit) {
  const std::size_t layers = frame.peels.size();
  rgba.clear();
  trans.clear();
  double T = 1.0;
  for (std::size_t k = 0; k < layers; ++k) {
    const raster::Fragment& f = frame.peels[k][pixel];
    if (f.empty()) break;
    rgba.push_back(raster::interpolate_rgba(f, soup.faces[f.face], soup.vertices));
    trans.push_back(T);
    T *= 1.0 - rgba.back()[3];
  }
  if (rgba.empty()) return;

  const Eigen::Vector3d dout(d_rgb.data[pixel * 3], d_rgb.data[pixel * 3 + 1],
                             d_rgb.data[pixel * 3 + 2]);
  const int x = int(pixel % std::size_t(frame.width));
  const int y = int(pixel / std::size_t(frame.width));
  const double px = 2.0 * (x + 0.5) / frame.width - 1.0;
  const double py = 1.0 - 2.0 * (y + 0.5) / frame.height;
  const Eigen::Matrix<double, 4, 3> dclip_dpos = frame.mvp.leftCols<3>();

  // Color seen behind the current layer, starting from the background.
  Eigen::Vector3d behind = cfg.background[3] * cfg.background.head<3>();
  for (std::size_t k = rgba.size(); k-- > 0;) {
    const raster::Fragment& f = frame.peels[k][pixel];
    const Face& face = soup.faces[f.face];
    const Eigen::Vector3d c = rgba[k].head<3>();
    const double a = rgba[k][3];

    FragmentGrad g;
    g.rgb = trans[k] * a * dout;
    g.alpha = trans[k] * dout.dot(c - behind);

    // dLoss/d(perspective-correct barycentrics).
    Eigen::Vector3d gp;
    for (int j = 0; j < 3; ++j) {
      const Vertex& v = soup.vertices[face[j]];
      gp[j] = g.rgb.dot(v.rgba.head<3>()) + g.alpha * v.rgba[3];
    }
    // Barycentrics solve sum_j b_j (x_j - px w_j) = 0, sum_j b_j (y_j - py w_j) = 0,
    // sum_j b_j = 1, so b = (U x V) / sum(U x V).
    Eigen::Vector3d U, V;
    for (int j = 0; j < 3; ++j) {
      const Eigen::Vector4d& cl = frame.clip[face[j]];
      U[j] = cl.x() - px * cl.w();
      V[j] = cl.y() - py * cl.w();
    }
    const Eigen::Vector3d n = U.cross(V);
    const double s = n.sum();
    const Eigen::Vector3d b = n / s;
    const Eigen::Vector3d gn = (gp - Eigen::Vector3d::Constant(gp.dot(b))) / s;
    const Eigen::Vector3d gU = V.cross(gn);
    const Eigen::Vector3d gV = gn.cross(U);
    for (int j = 0; j < 3; ++j) {
      const Eigen::Vector4d gclip(gU[j], gV[j], 0.0, -px * gU[j] - py * gV[j]);
      g.position[j] = dclip_dpos.transpose() * gclip;
    }
    emit(k, g);
    behind = a * c + (1.0 - a) * behind;
  }
}

void accumulate(ParamGrads& out, const MeshSoup& soup, const raster::Fragment& f,
                const FragmentGrad& g) {
  const Face& face = soup.faces[f.face];
  for (int j = 0; j < 3; ++j) {
    out.rgb[face[j]] += f.bary[j] * g.rgb;
    out.alpha[face[j]] += f.bary[j] * g.alpha;
    out.position[face[j]] += g.position[j];
  }
}

template <typename E>
[[noreturn]] void rethrow_with_context(const E& e, int epoch, std::size_t camera) {
  throw E("epoch " + std::to_string(epoch) + ", camera " + std::to_string(camera) + ": " +
          e.what());
}

}  // namespace

void OptimConfig::validate() const {
  if (!(lr_color > 0.0)) throw ConfigError("lr_color must be positive");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (prune_every < 0) throw ConfigError("prune_every must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

ParamGrads backward_image(const MeshSoup& soup, const raster::LayeredFrame& frame,
                          const raster::RenderConfig& cfg, const Image& d_rgb, Accumulation mode) {
  if (d_rgb.width != frame.width || d_rgb.height != frame.height || d_rgb.channels != 3) {
    throw ConfigError("backward: image gradient must be rgb at the frame resolution");
  }
  const std::size_t npix = std::size_t(frame.width) * frame.height;
  const std::size_t layers = frame.peels.size();
  ParamGrads grads(soup.vertices.size());

  if (mode == Accumulation::kDeterministic) {
    std::vector<std::vector<FragmentGrad>> per_layer(layers, std::vector<FragmentGrad>(npix));
    parallel_for(npix, [&](std::size_t begin, std::size_t end, unsigned) {
      std::vector<Eigen::Vector4d> rgba;
      std::vector<double> trans;
      for (std::size_t p = begin; p < end; ++p) {
        backprop_pixel(soup, frame, cfg, d_rgb, p, rgba, trans,
                       [&](std::size_t k, const FragmentGrad& g) { per_layer[k][p] = g; });
      }
    });
    for (std::size_t k = 0; k < layers; ++k) {
      for (std::size_t p = 0; p < npix; ++p) {
        const raster::Fragment& f = frame.peels[k][p];
        if (!f.empty()) accumulate(grads, soup, f, per_layer[k][p]);
      }
    }
    return grads;
  }

  const unsigned workers = std::max(1u, worker_count());
  std::vector<ParamGrads> partial(workers, ParamGrads(soup.vertices.size()));
  parallel_for(npix, [&](std::size_t begin, std::size_t end, unsigned w) {
    std::vector<Eigen::Vector4d> rgba;
    std::vector<double> trans;
    for (std::size_t p = begin; p < end; ++p) {
      backprop_pixel(soup, frame, cfg, d_rgb, p, rgba, trans,
                     [&](std::size_t k, const FragmentGrad& g) {
                       accumulate(partial[w], soup, frame.peels[k][p], g);
                     });
    }
  });
  for (const ParamGrads& part : partial) {
    for (std::size_t i = 0; i < grads.rgb.size(); ++i) {
      grads.rgb[i] += part.rgb[i];
      grads.alpha[i] += part.alpha[i];
      grads.position[i] += part.position[i];
    }
  }
  return grads;
}

BackwardResult backward(const MeshSoup& soup, const raster::Camera& cam,
                        const raster::RenderConfig& rcfg, const Image& target,
                        const LossConfig& lcfg, Accumulation mode) {
  const raster::LayeredFrame frame = raster::render_layers(soup, cam, rcfg);
  BackwardResult out;
  out.prediction = rgb_of(frame.image);
  Image d_rgb;
  out.loss = loss_with_grad(out.prediction, target, lcfg, d_rgb);
  out.grads = backward_image(soup, frame, rcfg, d_rgb, mode);
  for (std::size_t i = 0; i < soup.vertices.size(); ++i) {
    if (!out.grads.rgb[i].allFinite() || !std::isfinite(out.grads.alpha[i]) ||
        !out.grads.position[i].allFinite()) {
      throw NumericalError("non-finite gradient at vertex " + std::to_string(i));
    }
  }
  return out;
}

void adam_step(MeshSoup& soup, const ParamGrads& grads, AdamState& state, const OptimConfig& cfg) {
  const std::size_t n = soup.vertices.size();
  constexpr int P = AdamState::kParamsPerVertex;
  if (grads.rgb.size() != n || state.m.size() != n * P || state.v.size() != n * P) {
    throw ConfigError("adam_step: parameter, gradient and state sizes differ");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  const double lr_color = cfg.lr_color;
  const double lr_verts = cfg.lr_verts();

  for (std::size_t i = 0; i < n; ++i) {
    Vertex& vert = soup.vertices[i];
    double* params[P] = {&vert.rgba[0], &vert.rgba[1], &vert.rgba[2], &vert.rgba[3],
                         &vert.position[0], &vert.position[1], &vert.position[2]};
    const double g[P] = {grads.rgb[i][0], grads.rgb[i][1], grads.rgb[i][2], grads.alpha[i],
                         grads.position[i][0], grads.position[i][1], grads.position[i][2]};
    for (int k = 0; k < P; ++k) {
      const std::size_t idx = i * P + k;
      double& m = state.m[idx];
      double& v = state.v[idx];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g[k];
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g[k] * g[k];
      if (g[k] == 0.0) continue;
      const double lr = k < 4 ? lr_color : lr_verts;
      *params[k] -= lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.epsilon);
    }
    vert.rgba = vert.rgba.cwiseMax(0.0).cwiseMin(1.0);
  }
}

PruneResult prune(const MeshSoup& soup, double threshold) {
  PruneResult out;
  PruneReport& rep = out.report;
  const std::size_t nv = soup.vertices.size();
  std::vector<bool> used(nv, false);
  std::vector<std::size_t> kept_faces;
  kept_faces.reserve(soup.faces.size());
  for (std::size_t f = 0; f < soup.faces.size(); ++f) {
    const Face& t = soup.faces[f];
    const bool all_below = soup.vertices[t[0]].rgba[3] < threshold &&
                           soup.vertices[t[1]].rgba[3] < threshold &&
                           soup.vertices[t[2]].rgba[3] < threshold;
    if (all_below) {
      ++rep.faces_removed;
      rep.removed_face_gaussian_ids.push_back(soup.face_gaussian_id[f]);
      continue;
    }
    kept_faces.push_back(f);
    for (std::uint32_t v : t) used[v] = true;
  }

  rep.vertex_remap.assign(nv, -1);
  std::int64_t next = 0;
  out.soup.vertices.reserve(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    if (!used[i]) {
      ++rep.vertices_removed;
      continue;
    }
    rep.vertex_remap[i] = next++;
    out.soup.vertices.push_back(soup.vertices[i]);
  }
  out.soup.faces.reserve(kept_faces.size());
  out.soup.face_gaussian_id.reserve(kept_faces.size());
  for (std::size_t f : kept_faces) {
    const Face& t = soup.faces[f];
    out.soup.faces.push_back({std::uint32_t(rep.vertex_remap[t[0]]),
                              std::uint32_t(rep.vertex_remap[t[1]]),
                              std::uint32_t(rep.vertex_remap[t[2]])});
    out.soup.face_gaussian_id.push_back(soup.face_gaussian_id[f]);
  }
  return out;
}

void remap_state(AdamState& state, const PruneReport& report) {
  constexpr int P = AdamState::kParamsPerVertex;
  if (state.m.size() != report.vertex_remap.size() * P) {
    throw ConfigError("remap_state: state does not match the pruned soup");
  }
  AdamState out(report.vertex_remap.size() - report.vertices_removed);
  out.step = state.step;
  for (std::size_t i = 0; i < report.vertex_remap.size(); ++i) {
    const std::int64_t j = report.vertex_remap[i];
    if (j < 0) continue;
    for (int k = 0; k < P; ++k) {
      out.m[std::size_t(j) * P + k] = state.m[i * P + k];
      out.v[std::size_t(j) * P + k] = state.v[i * P + k];
    }
  }
  state = std::move(out);
}

OptimizeResult optimize(MeshSoup soup, std::span<const TrainView> views, const OptimConfig& ocfg,
                        const LossConfig& lcfg, const raster::RenderConfig& rcfg,
                        const EpochCallback& on_epoch) {
  ocfg.validate();
  lcfg.validate();
  if (views.empty()) throw ConfigError("optimize: dataset has no views");

  OptimizeResult result;
  AdamState state(soup.vertices.size());
  std::vector<std::size_t> order(views.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(ocfg.seed);
  const Accumulation mode =
      ocfg.deterministic ? Accumulation::kDeterministic : Accumulation::kPerWorker;

  for (int epoch = 1; epoch <= ocfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t cam : order) {
      BackwardResult br;
      try {
        br = backward(soup, views[cam].camera, rcfg, views[cam].target, lcfg, mode);
      } catch (const NumericalError& e) {
        rethrow_with_context(e, epoch, cam);
      } catch (const InvalidCameraError& e) {
        rethrow_with_context(e, epoch, cam);
      } catch (const ConfigError& e) {
        rethrow_with_context(e, epoch, cam);
      }
      result.log.push_back({epoch, cam, br.loss, soup.vertices.size(), soup.faces.size()});
      adam_step(soup, br.grads, state, ocfg);
    }
    if (ocfg.prune_every > 0 && epoch % ocfg.prune_every == 0) {
      PruneResult pr = prune(soup);
      remap_state(state, pr.report);
      soup = std::move(pr.soup);
      result.prunes.emplace_back(epoch, std::move(pr.report));
    }
    if (on_epoch) on_epoch(epoch, soup);
  }
  result.soup = std::move(soup);
  return result;
}

std::vector<double> epoch_mean_losses(std::span<const LogEntry> log) {
  std::map<int, std::pair<double, std::size_t>> acc;
  for (const LogEntry& e : log) {
    auto& [sum, count] = acc[e.epoch];
    sum += e.loss.total;
    ++count;
  }
  std::vector<double> out;
  out.reserve(acc.size());
  for (const auto& [epoch, sc] : acc) out.push_back(sc.first / double(sc.second));
  return out;
}

void write_loss_csv(std::ostream& out, std::span<const LogEntry> log,
                    std::span<const std::pair<std::string, std::string>> run_config) {
  for (const auto& [key, value] : run_config) out << "# " << key << '=' << value << '\n';
  out << "epoch,camera,loss,l1,ssim,vertices,faces\n";
  char buf[256];
  for (const LogEntry& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%zu,%.10g,%.10g,%.10g,%zu,%zu\n", e.epoch, e.camera,
                  e.loss.total, e.loss.l1, e.loss.ssim, e.vertices, e.faces);
    out << buf;
  }
}

}  // namespace meshsplat::optim
