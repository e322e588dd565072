#include "meshsplat/loss.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "meshsplat/error.hpp"

namespace meshsplat::optim {

namespace {

void check_shapes(const Image& pred, const Image& gt) {
  if (!pred.same_shape(gt)) {
    throw ConfigError("image dimension mismatch: " + std::to_string(pred.width) + "x" +
                      std::to_string(pred.height) + "x" + std::to_string(pred.channels) + " vs " +
                      std::to_string(gt.width) + "x" + std::to_string(gt.height) + "x" +
                      std::to_string(gt.channels));
  }
  if (pred.data.empty()) throw ConfigError("empty image");
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    k[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Single-channel plane.
struct Plane {
  int w = 0;
  int h = 0;
  std::vector<double> v;
  Plane(int w_, int h_) : w(w_), h(h_), v(std::size_t(w_) * h_, 0.0) {}
  double& operator()(int x, int y) { return v[std::size_t(y) * w + x]; }
  double operator()(int x, int y) const { return v[std::size_t(y) * w + x]; }
};

// Correlation keeping only fully-contained windows; output indexed by the
// window's top-left corner.
Plane filter_valid(const Plane& in, const std::vector<double>& k) {
  const int n = int(k.size());
  Plane tmp(in.w - n + 1, in.h);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < tmp.w; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * in(x + i, y);
      tmp(x, y) = s;
    }
  }
  Plane out(tmp.w, in.h - n + 1);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * tmp(x, y + i);
      out(x, y) = s;
    }
  }
  return out;
}

// Adjoint of filter_valid: scatters each window value back over its support.
Plane filter_adjoint(const Plane& in, const std::vector<double>& k, int w, int h) {
  const int n = int(k.size());
  Plane tmp(in.w, h);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      const double v = in(x, y);
      for (int i = 0; i < n; ++i) tmp(x, y + i) += k[i] * v;
    }
  }
  Plane out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      const double v = tmp(x, y);
      for (int i = 0; i < n; ++i) out(x + i, y) += k[i] * v;
    }
  }
  return out;
}

// Sum of the local SSIM map for one channel; optionally accumulates
// d(sum)/d(pred) * scale into grad.
double ssim_channel(const Image& pred, const Image& gt, int c, const LossConfig& cfg,
                    const std::vector<double>& k, Image* grad, double scale,
                    std::size_t& positions) {
  const int W = pred.width;
  const int H = pred.height;
  Plane x(W, H), y(W, H), xx(W, H), yy(W, H), xy(W, H);
  for (int j = 0; j < H; ++j) {
    for (int i = 0; i < W; ++i) {
      const double a = pred.at(i, j, c);
      const double b = gt.at(i, j, c);
      x(i, j) = a;
      y(i, j) = b;
      xx(i, j) = a * a;
      yy(i, j) = b * b;
      xy(i, j) = a * b;
    }
  }
  const Plane mx = filter_valid(x, k);
  const Plane my = filter_valid(y, k);
  const Plane fxx = filter_valid(xx, k);
  const Plane fyy = filter_valid(yy, k);
  const Plane fxy = filter_valid(xy, k);
  const double C1 = (cfg.ssim_k1) * (cfg.ssim_k1);
  const double C2 = (cfg.ssim_k2) * (cfg.ssim_k2);

  Plane A(mx.w, mx.h), B(mx.w, mx.h), C(mx.w, mx.h);
  double sum = 0.0;
  for (std::size_t p = 0; p < mx.v.size(); ++p) {
    const double ux = mx.v[p];
    const double uy = my.v[p];
    const double sxx = fxx.v[p] - ux * ux;
    const double syy = fyy.v[p] - uy * uy;
    const double sxy = fxy.v[p] - ux * uy;
    const double n1 = 2.0 * ux * uy + C1;
    const double n2 = 2.0 * sxy + C2;
    const double d1 = ux * ux + uy * uy + C1;
    const double d2 = sxx + syy + C2;
    const double s = (n1 * n2) / (d1 * d2);
    sum += s;
    if (grad != nullptr) {
      const double dmx = 2.0 * uy * n2 / (d1 * d2) - s * 2.0 * ux / d1;
      const double dsxx = -s / d2;
      const double dsxy = 2.0 * n1 / (d1 * d2);
      A.v[p] = dmx - 2.0 * dsxx * ux - dsxy * uy;
      B.v[p] = dsxx;
      C.v[p] = dsxy;
    }
  }
  positions = mx.v.size();
  // Identical channels sit at the maximum, where the gradient is exactly zero;
  // the general formula would leave rounding residue there.
  if (grad != nullptr && x.v != y.v) {
    const Plane gA = filter_adjoint(A, k, W, H);
    const Plane gB = filter_adjoint(B, k, W, H);
    const Plane gC = filter_adjoint(C, k, W, H);
    for (int j = 0; j < H; ++j) {
      for (int i = 0; i < W; ++i) {
        grad->at(i, j, c) +=
            scale * (gA(i, j) + 2.0 * x(i, j) * gB(i, j) + y(i, j) * gC(i, j));
      }
    }
  }
  return sum;
}

double ssim_impl(const Image& pred, const Image& gt, const LossConfig& cfg, Image* grad,
                 double grad_scale) {
  check_shapes(pred, gt);
  if (pred.width < cfg.ssim_window || pred.height < cfg.ssim_window) {
    throw ConfigError("ssim: image " + std::to_string(pred.width) + "x" +
                      std::to_string(pred.height) + " is smaller than the " +
                      std::to_string(cfg.ssim_window) + "-pixel window");
  }
  const auto k = gaussian_kernel(cfg.ssim_window, cfg.ssim_sigma);
  const std::size_t positions = std::size_t(pred.width - cfg.ssim_window + 1) *
                                std::size_t(pred.height - cfg.ssim_window + 1);
  const double norm = 1.0 / (double(positions) * pred.channels);
  double total = 0.0;
  for (int c = 0; c < pred.channels; ++c) {
    std::size_t n = 0;
    total += ssim_channel(pred, gt, c, cfg, k, grad, grad_scale * norm, n);
  }
  return total * norm;
}

// With lambda = 1 the SSIM term carries no weight; it is still reported when
// the image fits the window.
double report_only_ssim(const Image& pred, const Image& gt, const LossConfig& cfg) {
  if (pred.width < cfg.ssim_window || pred.height < cfg.ssim_window) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return ssim_impl(pred, gt, cfg, nullptr, 0.0);
}

}  // namespace

void LossConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (ssim_window < 1 || ssim_window % 2 == 0) throw ConfigError("ssim_window must be odd");
  if (!(ssim_sigma > 0.0)) throw ConfigError("ssim_sigma must be positive");
}

double l1(const Image& pred, const Image& gt) {
  check_shapes(pred, gt);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) sum += std::abs(pred.data[i] - gt.data[i]);
  return sum / double(pred.data.size());
}

double ssim(const Image& pred, const Image& gt, const LossConfig& cfg) {
  cfg.validate();
  return ssim_impl(pred, gt, cfg, nullptr, 0.0);
}

LossValue loss(const Image& pred, const Image& gt, const LossConfig& cfg) {
  cfg.validate();
  LossValue out;
  out.l1 = l1(pred, gt);
  if (cfg.lambda < 1.0) {
    out.ssim = ssim_impl(pred, gt, cfg, nullptr, 0.0);
    out.total = cfg.lambda * out.l1 + (1.0 - cfg.lambda) * (1.0 - out.ssim);
  } else {
    out.ssim = report_only_ssim(pred, gt, cfg);
    out.total = out.l1;
  }
  return out;
}

LossValue loss_with_grad(const Image& pred, const Image& gt, const LossConfig& cfg, Image& grad) {
  cfg.validate();
  check_shapes(pred, gt);
  grad = Image(pred.width, pred.height, pred.channels, 0.0);
  LossValue out;
  out.l1 = l1(pred, gt);
  const double gl1 = cfg.lambda / double(pred.data.size());
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - gt.data[i];
    grad.data[i] = d > 0.0 ? gl1 : (d < 0.0 ? -gl1 : 0.0);
  }
  if (cfg.lambda < 1.0) {
    out.ssim = ssim_impl(pred, gt, cfg, &grad, -(1.0 - cfg.lambda));
    out.total = cfg.lambda * out.l1 + (1.0 - cfg.lambda) * (1.0 - out.ssim);
  } else {
    out.ssim = report_only_ssim(pred, gt, cfg);
    out.total = out.l1;
  }
  return out;
}

}  // namespace meshsplat::optim
