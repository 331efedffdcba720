// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>

#include "waterflow/autodiff.hpp"
#include "waterflow/tensor.hpp"

namespace wf {

/// Orthonormal 2-D DFT of every channel, zero frequency moved to
/// (h/2, w/2). Height and width must be powers of two and at least 8.
ComplexTensor fft2_centered(const ComplexTensor& planes);
ComplexTensor fft2_centered(const RealTensor& planes);

/// Exact inverse of fft2_centered.
ComplexTensor ifft2_centered(const ComplexTensor& spectrum);

/// Real part of ifft2_centered. Non-Hermitian spectra lose their
/// anti-symmetric component here.
RealTensor ifft2_centered_real(const ComplexTensor& spectrum);

/// Index of frequency -k in centred layout: (n - k) mod n, i.e. the cell
/// holding the conjugate partner of row/column k for a real signal.
inline std::size_t mirror_index(std::size_t k, std::size_t n) { return (n - k) % n; }

/// Projects a centred spectrum onto the Hermitian-symmetric subspace:
/// S'(k) = (S(k) + conj(S(-k))) / 2. This is the part that survives
/// a round trip through a real-valued signal.
ComplexTensor hermitian_part(const ComplexTensor& spectrum);

bool is_power_of_two(std::size_t n);

/// Centred orthonormal DFT matrix D with D[u][m] = exp(-2πi(u-n/2)m/n)/√n,
/// returned as (real, imag) 1×n×n tensors. Forward transform is D·X·Dᵀ.
std::pair<RealTensor, RealTensor> centered_dft_matrix(std::size_t n);

/// Differentiable counterparts built from matmuls against constant DFT
/// matrices, one channel at a time.
CVar fft2_centered(CVar planes);
CVar ifft2_centered(CVar spectrum);
/// Real part of the inverse transform only.
Var ifft2_centered_real(CVar spectrum);

}  // namespace wf
