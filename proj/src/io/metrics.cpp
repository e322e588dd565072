#include "meshsplat/io/metrics.hpp"

#include <cmath>
#include <limits>

#include "meshsplat/error.hpp"

namespace meshsplat::io {

double psnr(const Image& pred, const Image& gt) {
  if (!pred.same_shape(gt) || pred.data.empty()) throw ConfigError("psnr: dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - gt.data[i];
    sum += d * d;
  }
  const double mse = sum / double(pred.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace meshsplat::io
