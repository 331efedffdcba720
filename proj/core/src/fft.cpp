// SPDX-License-Identifier: Apache-2.0
#include "waterflow/fft.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "waterflow/error.hpp"

namespace wf {
namespace {

using cd = std::complex<double>;

void check_dims(const Shape& s) {
  if (!is_power_of_two(s.h) || !is_power_of_two(s.w) || s.h < 8 || s.w < 8) {
    throw DimensionError("fft2_centered: plane " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                         " is not power-of-two >= 8");
  }
}

// In-place iterative radix-2 transform, unnormalised; sign=-1 forward.
void fft1d(std::vector<cd>& a, int sign) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t k = 0; k < len / 2; ++k) {
      const cd wk(std::cos(ang * static_cast<double>(k)), std::sin(ang * static_cast<double>(k)));
      for (std::size_t i = 0; i < n; i += len) {
        const cd u = a[i + k];
        const cd v = a[i + k + len / 2] * wk;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

// 2-D transform of one plane; `centred_in` / `centred_out` control the shift.
void transform_plane(std::span<const double> re_in, std::span<const double> im_in, std::span<double> re_out,
                     std::span<double> im_out, std::size_t h, std::size_t w, int sign) {
  std::vector<cd> buf(h * w);
  // Forward: natural input, shifted output. Inverse: shifted input, natural output.
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t sy = y, sx = x;
      if (sign > 0) {
        sy = (y + h / 2) % h;
        sx = (x + w / 2) % w;
      }
      buf[y * w + x] = cd(re_in[sy * w + sx], im_in[sy * w + sx]);
    }
  }
  std::vector<cd> line(std::max(h, w));
  line.resize(w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) line[x] = buf[y * w + x];
    fft1d(line, sign);
    for (std::size_t x = 0; x < w; ++x) buf[y * w + x] = line[x];
  }
  line.resize(h);
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t y = 0; y < h; ++y) line[y] = buf[y * w + x];
    fft1d(line, sign);
    for (std::size_t y = 0; y < h; ++y) buf[y * w + x] = line[y];
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(h * w));
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t dy = y, dx = x;
      if (sign < 0) {
        dy = (y + h / 2) % h;
        dx = (x + w / 2) % w;
      }
      const cd v = buf[y * w + x] * scale;
      re_out[dy * w + dx] = v.real();
      im_out[dy * w + dx] = v.imag();
    }
  }
}

ComplexTensor transform(const ComplexTensor& in, int sign) {
  const auto& s = in.shape();
  check_dims(s);
  ComplexTensor out(s);
  const auto n = s.plane();
  for (std::size_t c = 0; c < s.c; ++c) {
    transform_plane(in.re().subspan(c * n, n), in.im().subspan(c * n, n), out.re().subspan(c * n, n),
                    out.im().subspan(c * n, n), s.h, s.w, sign);
  }
  return out;
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

ComplexTensor fft2_centered(const ComplexTensor& planes) { return transform(planes, -1); }

ComplexTensor fft2_centered(const RealTensor& planes) { return transform(ComplexTensor(planes), -1); }

ComplexTensor ifft2_centered(const ComplexTensor& spectrum) { return transform(spectrum, +1); }

RealTensor ifft2_centered_real(const ComplexTensor& spectrum) { return ifft2_centered(spectrum).real_part(); }

ComplexTensor hermitian_part(const ComplexTensor& spectrum) {
  const auto& s = spectrum.shape();
  ComplexTensor out(s);
  const auto n = s.plane();
  for (std::size_t c = 0; c < s.c; ++c) {
    for (std::size_t y = 0; y < s.h; ++y) {
      for (std::size_t x = 0; x < s.w; ++x) {
        // Centred index k has frequency k - n/2; its negative sits at n - k (mod n).
        const std::size_t my = mirror_index(y, s.h);
        const std::size_t mx = mirror_index(x, s.w);
        const std::size_t i = c * n + y * s.w + x;
        const std::size_t j = c * n + my * s.w + mx;
        out.re()[i] = 0.5 * (spectrum.re()[i] + spectrum.re()[j]);
        out.im()[i] = 0.5 * (spectrum.im()[i] - spectrum.im()[j]);
      }
    }
  }
  return out;
}

std::pair<RealTensor, RealTensor> centered_dft_matrix(std::size_t n) {
  RealTensor re({1, n, n}), im({1, n, n});
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  const auto half = static_cast<std::ptrdiff_t>(n / 2);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t m = 0; m < n; ++m) {
      // Reduce the phase index mod n before scaling to keep the angle small.
      const auto k = ((static_cast<std::ptrdiff_t>(u) - half) * static_cast<std::ptrdiff_t>(m)) %
                     static_cast<std::ptrdiff_t>(n);
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      re[u * n + m] = norm * std::cos(ang);
      im[u * n + m] = norm * std::sin(ang);
    }
  }
  return {std::move(re), std::move(im)};
}

namespace {

struct ConstComplex {
  Var re, im;
};

// L·X for a constant complex L.
CVar left_mul(const ConstComplex& l, const CVar& x) {
  return {matmul(l.re, x.re) - matmul(l.im, x.im), matmul(l.re, x.im) + matmul(l.im, x.re)};
}

// X·R for a constant complex R.
CVar right_mul(const CVar& x, const ConstComplex& r) {
  return {matmul(x.re, r.re) - matmul(x.im, r.im), matmul(x.re, r.im) + matmul(x.im, r.re)};
}

ConstComplex constant(Graph& g, RealTensor re, RealTensor im) {
  return {g.constant(std::move(re)), g.constant(std::move(im))};
}

RealTensor negated(const RealTensor& t) {
  RealTensor out = t;
  for (auto& v : out.data()) v = -v;
  return out;
}

CVar transform_graph(CVar in, bool inverse) {
  const Shape s = in.re.shape();
  require_same_shape(s, in.im.shape(), "fft2_centered");
  check_dims(s);
  Graph& g = *in.re.graph();
  auto [hr, hi] = centered_dft_matrix(s.h);
  auto [wr, wi] = centered_dft_matrix(s.w);
  ConstComplex left, right;
  if (!inverse) {
    // S = D_h · X · D_wᵀ
    left = constant(g, std::move(hr), std::move(hi));
    right = constant(g, kernels::transpose(wr), kernels::transpose(wi));
  } else {
    // X = D_hᴴ · S · conj(D_w)
    left = constant(g, kernels::transpose(hr), negated(kernels::transpose(hi)));
    right = constant(g, std::move(wr), negated(wi));
  }
  std::vector<Var> re_parts, im_parts;
  for (std::size_t c = 0; c < s.c; ++c) {
    CVar plane{s.c == 1 ? in.re : split(in.re, c, 1), s.c == 1 ? in.im : split(in.im, c, 1)};
    CVar out = right_mul(left_mul(left, plane), right);
    re_parts.push_back(out.re);
    im_parts.push_back(out.im);
  }
  if (s.c == 1) return {re_parts[0], im_parts[0]};
  return {join(re_parts), join(im_parts)};
}

}  // namespace

CVar fft2_centered(CVar planes) { return transform_graph(planes, false); }

CVar ifft2_centered(CVar spectrum) { return transform_graph(spectrum, true); }

Var ifft2_centered_real(CVar spectrum) { return ifft2_centered(spectrum).re; }

}  // namespace wf
