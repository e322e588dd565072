#pragma once

#include "meshsplat/image.hpp"

namespace meshsplat::io {

// 10 * log10(1 / MSE) with peak 1; +infinity for identical images.
double psnr(const Image& pred, const Image& gt);

}  // namespace meshsplat::io
