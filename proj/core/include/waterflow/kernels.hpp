// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "waterflow/tensor.hpp"

// Raw numeric kernels shared by the autodiff graph and the inference fast
// paths. Nothing here allocates graph state; all functions are pure.
namespace wf::kernels {

/// Conv weights are stored as (out_channels, in_channels, k*k).
std::size_t kernel_size(const Shape& weight_shape);

/// Stride-1 2-D convolution (cross-correlation) with zero padding k/2, so
/// the spatial size is preserved. `bias` may be empty.
RealTensor conv2d(const RealTensor& input, const RealTensor& weight, std::span<const double> bias);

/// Adjoint of conv2d with respect to its input.
RealTensor conv2d_grad_input(const RealTensor& grad_out, const RealTensor& weight);

/// Accumulates dL/dweight and dL/dbias into the given tensors (bias may be empty).
void conv2d_grad_params(const RealTensor& grad_out, const RealTensor& input, RealTensor& grad_weight,
                        std::span<double> grad_bias);

/// (1,m,k) x (1,k,n) -> (1,m,n)
RealTensor matmul(const RealTensor& a, const RealTensor& b);
/// a^T: (1,m,n) -> (1,n,m)
RealTensor transpose(const RealTensor& a);

enum class Activation { kIdentity, kLipSwish, kSiLU, kTanh, kReLU };

double activate(Activation kind, double x);
double activate_derivative(Activation kind, double x);
RealTensor activate(Activation kind, const RealTensor& x);

/// Uniform-window SSIM constants and geometry.
inline constexpr std::size_t kSsimWindow = 8;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Mean SSIM over every valid 8×8 window (stride 1) of every channel.
double ssim(const RealTensor& a, const RealTensor& b);

/// Gradient of the mean SSIM with respect to `a` (b held fixed), scaled by `upstream`.
RealTensor ssim_grad(const RealTensor& a, const RealTensor& b, double upstream);

double mse(const RealTensor& a, const RealTensor& b);

}  // namespace wf::kernels
