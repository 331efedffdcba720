// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "waterflow/tensor.hpp"

namespace wf {

enum class ImageFamily { kGradient, kDisk, kCheckerboard, kStripes };

ImageFamily parse_family(const std::string& name);
std::string family_name(ImageFamily f);

struct ToyDatasetConfig {
  std::uint64_t seed = 0;
  std::size_t count = 32;
  std::vector<ImageFamily> families{ImageFamily::kGradient, ImageFamily::kDisk, ImageFamily::kCheckerboard,
                                    ImageFamily::kStripes};
  Shape shape{4, 32, 32};
};

/// Image i uses family families[i % n] and its own seed stream, so any
/// prefix of a dataset is identical to the smaller dataset.
std::vector<RealTensor> generate_toy_dataset(const ToyDatasetConfig& cfg);

/// One procedural image. Each channel is lo + (hi-lo)·pattern with
/// lo ∈ [0, 0.4), hi ∈ [0.6, 1), so pattern values of 0 and 1 sit on
/// opposite sides of 0.5.
RealTensor make_toy_image(ImageFamily family, std::uint64_t seed, const Shape& shape);

}  // namespace wf
