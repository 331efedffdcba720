// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace wf {

/// (channels, height, width). Everything in the library is at most rank 3;
/// vectors and matrices use leading unit dimensions.
struct Shape {
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  constexpr std::size_t size() const { return c * h * w; }
  constexpr std::size_t plane() const { return h * w; }
  friend constexpr bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Dense row-major c×h×w array of doubles.
class RealTensor {
 public:
  RealTensor() = default;
  explicit RealTensor(Shape shape, double fill = 0.0);
  RealTensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t c, std::size_t y, std::size_t x) { return data_[(c * shape_.h + y) * shape_.w + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const { return data_[(c * shape_.h + y) * shape_.w + x]; }

  std::span<double> channel(std::size_t c) { return {data_.data() + c * shape_.plane(), shape_.plane()}; }
  std::span<const double> channel(std::size_t c) const { return {data_.data() + c * shape_.plane(), shape_.plane()}; }

  /// Copy of a single channel as a 1×h×w tensor.
  RealTensor channel_tensor(std::size_t c) const;

  bool all_finite() const;

  friend bool operator==(const RealTensor&, const RealTensor&) = default;

 private:
  Shape shape_{};
  std::vector<double> data_;
};

/// Parallel real/imaginary planes with the same c×h×w layout as RealTensor.
class ComplexTensor {
 public:
  ComplexTensor() = default;
  explicit ComplexTensor(Shape shape);
  ComplexTensor(Shape shape, std::vector<double> re, std::vector<double> im);
  explicit ComplexTensor(const RealTensor& real);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return re_.size(); }

  std::span<double> re() { return re_; }
  std::span<const double> re() const { return re_; }
  std::span<double> im() { return im_; }
  std::span<const double> im() const { return im_; }

  RealTensor real_part() const;
  RealTensor imag_part() const;
  ComplexTensor channel_tensor(std::size_t c) const;

  bool all_finite() const;

  friend bool operator==(const ComplexTensor&, const ComplexTensor&) = default;

 private:
  Shape shape_{};
  std::vector<double> re_;
  std::vector<double> im_;
};

void require_same_shape(const Shape& a, const Shape& b, const char* what);

/// Stacks 1×h×w planes (or any c×h×w tensors with equal h, w) along channels.
RealTensor concat_channels(std::span<const RealTensor> parts);

double max_abs_diff(const RealTensor& a, const RealTensor& b);
double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b);

}  // namespace wf
