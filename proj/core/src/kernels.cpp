// SPDX-License-Identifier: Apache-2.0
#include "waterflow/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "waterflow/error.hpp"

namespace wf::kernels {

std::size_t kernel_size(const Shape& weight_shape) {
  const auto k = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(weight_shape.w))));
  if (k * k != weight_shape.w || k % 2 == 0) throw DimensionError("conv weight must be (out, in, k*k) with odd k");
  return k;
}

RealTensor conv2d(const RealTensor& input, const RealTensor& weight, std::span<const double> bias) {
  const auto& is = input.shape();
  const auto& ws = weight.shape();
  if (ws.h != is.c) throw DimensionError("conv2d: weight expects " + std::to_string(ws.h) + " input channels, got " +
                                         std::to_string(is.c));
  if (!bias.empty() && bias.size() != ws.c) throw DimensionError("conv2d: bias length mismatch");
  const std::size_t k = kernel_size(ws);
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(is.h);
  const auto W = static_cast<std::ptrdiff_t>(is.w);
  RealTensor out({ws.c, is.h, is.w});
  const double* in = input.data().data();
  const double* wt = weight.data().data();
  double* o = out.data().data();
  for (std::size_t co = 0; co < ws.c; ++co) {
    double* oc = o + co * is.plane();
    if (!bias.empty()) std::fill(oc, oc + is.plane(), bias[co]);
    for (std::size_t ci = 0; ci < is.c; ++ci) {
      const double* ic = in + ci * is.plane();
      const double* kw = wt + (co * ws.h + ci) * ws.w;
      for (std::ptrdiff_t ky = 0; ky < static_cast<std::ptrdiff_t>(k); ++ky) {
        const std::ptrdiff_t dy = ky - pad;
        const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy);
        const std::ptrdiff_t y1 = std::min<std::ptrdiff_t>(H, H - dy);
        for (std::ptrdiff_t kx = 0; kx < static_cast<std::ptrdiff_t>(k); ++kx) {
          const std::ptrdiff_t dx = kx - pad;
          const double wv = kw[ky * static_cast<std::ptrdiff_t>(k) + kx];
          if (wv == 0.0) continue;
          const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
          const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(W, W - dx);
          for (std::ptrdiff_t y = y0; y < y1; ++y) {
            double* orow = oc + y * W;
            const double* irow = ic + (y + dy) * W + dx;
            for (std::ptrdiff_t x = x0; x < x1; ++x) orow[x] += wv * irow[x];
          }
        }
      }
    }
  }
  return out;
}

RealTensor conv2d_grad_input(const RealTensor& grad_out, const RealTensor& weight) {
  const auto& gs = grad_out.shape();
  const auto& ws = weight.shape();
  if (gs.c != ws.c) throw DimensionError("conv2d_grad_input: channel mismatch");
  const std::size_t k = kernel_size(ws);
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(gs.h);
  const auto W = static_cast<std::ptrdiff_t>(gs.w);
  RealTensor gin({ws.h, gs.h, gs.w});
  const double* g = grad_out.data().data();
  const double* wt = weight.data().data();
  double* gi = gin.data().data();
  for (std::size_t co = 0; co < ws.c; ++co) {
    const double* gc = g + co * gs.plane();
    for (std::size_t ci = 0; ci < ws.h; ++ci) {
      double* ic = gi + ci * gs.plane();
      const double* kw = wt + (co * ws.h + ci) * ws.w;
      for (std::ptrdiff_t ky = 0; ky < static_cast<std::ptrdiff_t>(k); ++ky) {
        const std::ptrdiff_t dy = ky - pad;
        const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy);
        const std::ptrdiff_t y1 = std::min<std::ptrdiff_t>(H, H - dy);
        for (std::ptrdiff_t kx = 0; kx < static_cast<std::ptrdiff_t>(k); ++kx) {
          const std::ptrdiff_t dx = kx - pad;
          const double wv = kw[ky * static_cast<std::ptrdiff_t>(k) + kx];
          if (wv == 0.0) continue;
          const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
          const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(W, W - dx);
          for (std::ptrdiff_t y = y0; y < y1; ++y) {
            const double* grow = gc + y * W;
            double* irow = ic + (y + dy) * W + dx;
            for (std::ptrdiff_t x = x0; x < x1; ++x) irow[x] += wv * grow[x];
          }
        }
      }
    }
  }
  return gin;
}

void conv2d_grad_params(const RealTensor& grad_out, const RealTensor& input, RealTensor& grad_weight,
                        std::span<double> grad_bias) {
  const auto& gs = grad_out.shape();
  const auto& is = input.shape();
  const auto& ws = grad_weight.shape();
  const std::size_t k = kernel_size(ws);
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(is.h);
  const auto W = static_cast<std::ptrdiff_t>(is.w);
  const double* g = grad_out.data().data();
  const double* in = input.data().data();
  double* gw = grad_weight.data().data();
  for (std::size_t co = 0; co < ws.c; ++co) {
    const double* gc = g + co * gs.plane();
    if (!grad_bias.empty()) {
      double s = 0.0;
      for (std::size_t i = 0; i < gs.plane(); ++i) s += gc[i];
      grad_bias[co] += s;
    }
    for (std::size_t ci = 0; ci < is.c; ++ci) {
      const double* ic = in + ci * is.plane();
      double* kw = gw + (co * ws.h + ci) * ws.w;
      for (std::ptrdiff_t ky = 0; ky < static_cast<std::ptrdiff_t>(k); ++ky) {
        const std::ptrdiff_t dy = ky - pad;
        const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy);
        const std::ptrdiff_t y1 = std::min<std::ptrdiff_t>(H, H - dy);
        for (std::ptrdiff_t kx = 0; kx < static_cast<std::ptrdiff_t>(k); ++kx) {
          const std::ptrdiff_t dx = kx - pad;
          const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
          const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(W, W - dx);
          double acc = 0.0;
          for (std::ptrdiff_t y = y0; y < y1; ++y) {
            const double* grow = gc + y * W;
            const double* irow = ic + (y + dy) * W + dx;
            for (std::ptrdiff_t x = x0; x < x1; ++x) acc += grow[x] * irow[x];
          }
          kw[ky * static_cast<std::ptrdiff_t>(k) + kx] += acc;
        }
      }
    }
  }
}

RealTensor matmul(const RealTensor& a, const RealTensor& b) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (as.c != 1 || bs.c != 1 || as.w != bs.h) {
    throw DimensionError("matmul: incompatible shapes " + to_string(as) + " x " + to_string(bs));
  }
  RealTensor out({1, as.h, bs.w});
  for (std::size_t i = 0; i < as.h; ++i) {
    double* orow = out.data().data() + i * bs.w;
    for (std::size_t p = 0; p < as.w; ++p) {
      const double av = a[i * as.w + p];
      if (av == 0.0) continue;
      const double* brow = b.data().data() + p * bs.w;
      for (std::size_t j = 0; j < bs.w; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

RealTensor transpose(const RealTensor& a) {
  const auto& s = a.shape();
  if (s.c != 1) throw DimensionError("transpose: expects a single matrix");
  RealTensor out({1, s.w, s.h});
  for (std::size_t i = 0; i < s.h; ++i)
    for (std::size_t j = 0; j < s.w; ++j) out[j * s.h + i] = a[i * s.w + j];
  return out;
}

namespace {
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
// Max slope of x*sigmoid(x) is ~1.0998, so dividing by 1.1 makes it 1-Lipschitz.
constexpr double kLipSwishScale = 1.1;
}  // namespace

double activate(Activation kind, double x) {
  switch (kind) {
    case Activation::kIdentity:
      return x;
    case Activation::kLipSwish:
      return x * sigmoid(x) / kLipSwishScale;
    case Activation::kSiLU:
      return x * sigmoid(x);
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kReLU:
      return x > 0 ? x : 0.0;
  }
  return x;
}

double activate_derivative(Activation kind, double x) {
  switch (kind) {
    case Activation::kIdentity:
      return 1.0;
    case Activation::kLipSwish: {
      const double s = sigmoid(x);
      return (s + x * s * (1.0 - s)) / kLipSwishScale;
    }
    case Activation::kSiLU: {
      const double s = sigmoid(x);
      return s + x * s * (1.0 - s);
    }
    case Activation::kTanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::kReLU:
      return x > 0 ? 1.0 : 0.0;
  }
  return 1.0;
}

RealTensor activate(Activation kind, const RealTensor& x) {
  RealTensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = activate(kind, x[i]);
  return out;
}

namespace {

struct WindowStats {
  double mu_a, mu_b, m_aa, m_bb, m_ab;
};

// Box sums over all valid 8×8 windows of one plane via a summed-area table.
class BoxSum {
 public:
  BoxSum(const double* p, std::size_t h, std::size_t w) : w_(w + 1), table_((h + 1) * (w + 1), 0.0) {
    for (std::size_t y = 0; y < h; ++y) {
      double row = 0.0;
      for (std::size_t x = 0; x < w; ++x) {
        row += p[y * w + x];
        table_[(y + 1) * w_ + x + 1] = table_[y * w_ + x + 1] + row;
      }
    }
  }
  double window(std::size_t y, std::size_t x, std::size_t n) const {
    return table_[(y + n) * w_ + x + n] - table_[y * w_ + x + n] - table_[(y + n) * w_ + x] + table_[y * w_ + x];
  }

 private:
  std::size_t w_;
  std::vector<double> table_;
};

void check_ssim_shapes(const RealTensor& a, const RealTensor& b) {
  require_same_shape(a.shape(), b.shape(), "ssim");
  if (a.shape().h < kSsimWindow || a.shape().w < kSsimWindow) throw DimensionError("ssim: plane smaller than window");
}

template <typename Fn>
void for_each_window(const RealTensor& a, const RealTensor& b, Fn&& fn) {
  const auto& s = a.shape();
  const std::size_t n = kSsimWindow;
  std::vector<double> aa(s.plane()), bb(s.plane()), ab(s.plane());
  for (std::size_t c = 0; c < s.c; ++c) {
    const double* pa = a.data().data() + c * s.plane();
    const double* pb = b.data().data() + c * s.plane();
    for (std::size_t i = 0; i < s.plane(); ++i) {
      aa[i] = pa[i] * pa[i];
      bb[i] = pb[i] * pb[i];
      ab[i] = pa[i] * pb[i];
    }
    BoxSum sa(pa, s.h, s.w), sb(pb, s.h, s.w), saa(aa.data(), s.h, s.w), sbb(bb.data(), s.h, s.w),
        sab(ab.data(), s.h, s.w);
    const double inv = 1.0 / static_cast<double>(n * n);
    for (std::size_t y = 0; y + n <= s.h; ++y) {
      for (std::size_t x = 0; x + n <= s.w; ++x) {
        WindowStats st{sa.window(y, x, n) * inv, sb.window(y, x, n) * inv, saa.window(y, x, n) * inv,
                       sbb.window(y, x, n) * inv, sab.window(y, x, n) * inv};
        fn(c, y, x, st);
      }
    }
  }
}

std::size_t window_count(const Shape& s) { return s.c * (s.h - kSsimWindow + 1) * (s.w - kSsimWindow + 1); }

}  // namespace

double ssim(const RealTensor& a, const RealTensor& b) {
  check_ssim_shapes(a, b);
  double total = 0.0;
  for_each_window(a, b, [&](std::size_t, std::size_t, std::size_t, const WindowStats& st) {
    const double va = st.m_aa - st.mu_a * st.mu_a;
    const double vb = st.m_bb - st.mu_b * st.mu_b;
    const double cov = st.m_ab - st.mu_a * st.mu_b;
    const double num = (2 * st.mu_a * st.mu_b + kSsimC1) * (2 * cov + kSsimC2);
    const double den = (st.mu_a * st.mu_a + st.mu_b * st.mu_b + kSsimC1) * (va + vb + kSsimC2);
    total += num / den;
  });
  return total / static_cast<double>(window_count(a.shape()));
}

RealTensor ssim_grad(const RealTensor& a, const RealTensor& b, double upstream) {
  check_ssim_shapes(a, b);
  const auto& s = a.shape();
  const std::size_t n = kSsimWindow;
  const std::size_t wh = s.h - n + 1, ww = s.w - n + 1;
  // Per-window partials w.r.t. the raw moments (mu_a, m_aa, m_ab).
  std::vector<double> g_mu(s.c * wh * ww), g_aa(s.c * wh * ww), g_ab(s.c * wh * ww);
  const double scale = upstream / static_cast<double>(window_count(s));
  for_each_window(a, b, [&](std::size_t c, std::size_t y, std::size_t x, const WindowStats& st) {
    const double a1 = 2 * st.mu_a * st.mu_b + kSsimC1;
    const double a2 = 2 * (st.m_ab - st.mu_a * st.mu_b) + kSsimC2;
    const double b1 = st.mu_a * st.mu_a + st.mu_b * st.mu_b + kSsimC1;
    const double b2 = st.m_aa - st.mu_a * st.mu_a + st.m_bb - st.mu_b * st.mu_b + kSsimC2;
    const double den = b1 * b2;
    const double val = a1 * a2 / den;
    const std::size_t i = (c * wh + y) * ww + x;
    g_mu[i] = scale * ((2 * st.mu_b * a2 - 2 * st.mu_b * a1) / den - val * (2 * st.mu_a / b1 - 2 * st.mu_a / b2));
    g_aa[i] = scale * (-val / b2);
    g_ab[i] = scale * (2 * a1 / den);
  });
  RealTensor grad(s);
  const double inv = 1.0 / static_cast<double>(n * n);
  for (std::size_t c = 0; c < s.c; ++c) {
    const double* pa = a.data().data() + c * s.plane();
    const double* pb = b.data().data() + c * s.plane();
    double* pg = grad.data().data() + c * s.plane();
    for (std::size_t y = 0; y < s.h; ++y) {
      const std::size_t wy0 = y >= n - 1 ? y - (n - 1) : 0;
      const std::size_t wy1 = std::min(y, wh - 1);
      for (std::size_t x = 0; x < s.w; ++x) {
        const std::size_t wx0 = x >= n - 1 ? x - (n - 1) : 0;
        const std::size_t wx1 = std::min(x, ww - 1);
        double smu = 0, saa = 0, sab = 0;
        for (std::size_t wy = wy0; wy <= wy1; ++wy) {
          for (std::size_t wx = wx0; wx <= wx1; ++wx) {
            const std::size_t i = (c * wh + wy) * ww + wx;
            smu += g_mu[i];
            saa += g_aa[i];
            sab += g_ab[i];
          }
        }
        const std::size_t p = y * s.w + x;
        pg[p] = inv * (smu + 2 * pa[p] * saa + pb[p] * sab);
      }
    }
  }
  return grad;
}

double mse(const RealTensor& a, const RealTensor& b) {
  require_same_shape(a.shape(), b.shape(), "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

}  // namespace wf::kernels
