// SPDX-License-Identifier: Apache-2.0
#include "waterflow/metrics.hpp"

#include <cmath>

#include "waterflow/kernels.hpp"

namespace wf {

double psnr(const RealTensor& a, const RealTensor& b) {
  const double m = kernels::mse(a, b);
  if (m == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(1.0 / m);
}

double ssim(const RealTensor& a, const RealTensor& b) { return kernels::ssim(a, b); }

double mse(const RealTensor& a, const RealTensor& b) { return kernels::mse(a, b); }

}  // namespace wf
