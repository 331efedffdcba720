// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>

#include "waterflow/tensor.hpp"

namespace wf {

/// PSNR returned for bit-identical inputs (MSE = 0).
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

inline bool psnr_is_identical(double db) { return db == kPsnrIdentical; }

/// Peak signal-to-noise ratio in dB with peak 1.0.
double psnr(const RealTensor& a, const RealTensor& b);

/// Mean SSIM over 8×8 windows at stride 1, C1 = 0.01², C2 = 0.03², L = 1.
double ssim(const RealTensor& a, const RealTensor& b);

double mse(const RealTensor& a, const RealTensor& b);

}  // namespace wf
