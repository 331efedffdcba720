// SPDX-License-Identifier: Apache-2.0
#include "waterflow/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "waterflow/error.hpp"

namespace wf {

std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.c) + "," + std::to_string(s.h) + "," + std::to_string(s.w) + ")";
}

RealTensor::RealTensor(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

RealTensor::RealTensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         to_string(shape_));
  }
}

RealTensor RealTensor::channel_tensor(std::size_t c) const {
  if (c >= shape_.c) throw DimensionError("channel index out of range");
  auto ch = channel(c);
  return RealTensor({1, shape_.h, shape_.w}, std::vector<double>(ch.begin(), ch.end()));
}

bool RealTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

ComplexTensor::ComplexTensor(Shape shape) : shape_(shape), re_(shape.size(), 0.0), im_(shape.size(), 0.0) {}

ComplexTensor::ComplexTensor(Shape shape, std::vector<double> re, std::vector<double> im)
    : shape_(shape), re_(std::move(re)), im_(std::move(im)) {
  if (re_.size() != shape_.size() || im_.size() != shape_.size()) {
    throw DimensionError("complex tensor parts do not match shape " + to_string(shape_));
  }
}

ComplexTensor::ComplexTensor(const RealTensor& real)
    : shape_(real.shape()), re_(real.vec()), im_(real.size(), 0.0) {}

RealTensor ComplexTensor::real_part() const { return RealTensor(shape_, re_); }
RealTensor ComplexTensor::imag_part() const { return RealTensor(shape_, im_); }

ComplexTensor ComplexTensor::channel_tensor(std::size_t c) const {
  if (c >= shape_.c) throw DimensionError("channel index out of range");
  const auto n = shape_.plane();
  const auto off = static_cast<std::ptrdiff_t>(c * n);
  return ComplexTensor({1, shape_.h, shape_.w}, std::vector<double>(re_.begin() + off, re_.begin() + off + n),
                       std::vector<double>(im_.begin() + off, im_.begin() + off + n));
}

bool ComplexTensor::all_finite() const {
  auto fin = [](double v) { return std::isfinite(v); };
  return std::all_of(re_.begin(), re_.end(), fin) && std::all_of(im_.begin(), im_.end(), fin);
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b)) throw DimensionError(std::string(what) + ": shape " + to_string(a) + " vs " + to_string(b));
}

RealTensor concat_channels(std::span<const RealTensor> parts) {
  if (parts.empty()) throw ContractError("concat_channels: no inputs");
  const auto h = parts.front().shape().h;
  const auto w = parts.front().shape().w;
  std::size_t c = 0;
  for (const auto& p : parts) {
    if (p.shape().h != h || p.shape().w != w) throw DimensionError("concat_channels: spatial size mismatch");
    c += p.shape().c;
  }
  std::vector<double> data;
  data.reserve(c * h * w);
  for (const auto& p : parts) data.insert(data.end(), p.vec().begin(), p.vec().end());
  return RealTensor({c, h, w}, std::move(data));
}

double max_abs_diff(const RealTensor& a, const RealTensor& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::hypot(a.re()[i] - b.re()[i], a.im()[i] - b.im()[i]));
  }
  return m;
}

}  // namespace wf
