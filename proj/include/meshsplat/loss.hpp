#pragma once

#include "meshsplat/image.hpp"

namespace meshsplat::optim {

struct LossConfig {
  double lambda = 0.6;
  int ssim_window = 11;
  double ssim_sigma = 1.5;
  double ssim_k1 = 0.01;
  double ssim_k2 = 0.03;

  void validate() const;  // throws ConfigError
};

// Mean absolute difference over all pixels and channels.
double l1(const Image& pred, const Image& gt);

// Mean local SSIM over all fully-contained windows (no padding), averaged
// over channels. Dynamic range 1.
double ssim(const Image& pred, const Image& gt, const LossConfig& cfg = {});

struct LossValue {
  double total = 0.0;
  double l1 = 0.0;
  double ssim = 1.0;
};

// lambda * L1 + (1 - lambda) * (1 - SSIM).
LossValue loss(const Image& pred, const Image& gt, const LossConfig& cfg = {});

// Same as loss(), additionally writing dLoss/dpred into `grad` (same shape as
// pred). The L1 subgradient at pred == gt is taken as zero.
LossValue loss_with_grad(const Image& pred, const Image& gt, const LossConfig& cfg, Image& grad);

}  // namespace meshsplat::optim
