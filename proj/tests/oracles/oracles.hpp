// SPDX-License-Identifier: Apache-2.0
// Slow, direct reference implementations used only by the tests. None of
// these call into the library's numeric kernels.
#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "waterflow/tensor.hpp"

namespace oracle {

using wf::ComplexTensor;
using wf::RealTensor;

/// O(n⁴) centred DFT: S[u][v] = (hw)^-1/2 Σ x[m][n] exp(∓2πi((u-h/2)m/h + (v-w/2)n/w)).
/// The inverse takes a centred spectrum back to natural-order samples.
ComplexTensor dft_centered(const ComplexTensor& x, bool inverse = false);

/// Same-padded stride-1 convolution by four nested loops.
RealTensor conv2d(const RealTensor& x, const RealTensor& weight, const std::vector<double>& bias);

/// Mean over channels and every 8×8 window of the per-window SSIM.
double ssim_windowed(const RealTensor& a, const RealTensor& b);

/// Central differences of f at x, one coordinate at a time.
RealTensor numeric_gradient(const std::function<double(const RealTensor&)>& f, const RealTensor& x, double h = 1e-5);

/// |a-b| / max(|a|, |b|, floor), the usual gradient-check metric.
double rel_err(double a, double b, double floor = 1e-8);
double max_rel_err(const RealTensor& a, const RealTensor& b, double floor = 1e-8);

/// 8×8 DCT-II by the defining double sum.
std::vector<double> dct8x8(const std::vector<double>& block);

/// Pairwise-count AUC with ties as ½.
double auc_pairs(const std::vector<double>& pos, const std::vector<double>& neg);
/// Enumerates every threshold t ∈ scores ∪ {-inf} for the rule score > t and
/// returns the TPR of the smallest one with FPR ≤ fpr.
double tpr_enumerate(const std::vector<double>& pos, const std::vector<double>& neg, double fpr);

/// Samples of Σ(Z_i + μ_i)² with Σμ² = λ, via (Z + √λ)² + χ²_{q-1}.
std::vector<double> ncx2_samples(double q, double lambda, std::size_t n, std::uint64_t seed);

/// Textbook DDIM recurrence with ε evaluated through a callback (t = schedule index).
RealTensor ddim_generate_loop(const RealTensor& zT, const std::function<RealTensor(const RealTensor&, std::size_t)>& eps,
                              const std::vector<double>& alpha_bar);

/// Number of 4-connected components of cells above `threshold` in one channel.
std::size_t connected_components(const RealTensor& img, std::size_t channel, double threshold);

/// Dense matrix of a zero-padded conv acting on (in, h, w) inputs.
Eigen::MatrixXd conv_operator(const RealTensor& weight, std::size_t h, std::size_t w);
double largest_singular_value(const Eigen::MatrixXd& m);

/// Separable kernel applied as a dense 2-D convolution with mirror padding.
RealTensor blur_dense(const RealTensor& x, const std::vector<double>& k1d);

/// Cells with √(dx²+dy²) ≤ r around (h/2, w/2).
std::size_t mask_count(std::size_t h, std::size_t w, double r);

double lipswish(double x);

}  // namespace oracle
