// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "waterflow/tensor.hpp"

namespace wf {

/// Binary PGM (P5) for 1 channel, PPM (P6) for 3; any other channel count
/// is written as a PGM with the channels stacked vertically. Samples are
/// clamped to [0,1] and quantised to 8 bits.
void write_pnm(const std::filesystem::path& path, const RealTensor& image);

/// Reads P5/P6 with maxval up to 65535. A P5 file whose height is a
/// multiple of `channels` is split back into that many stacked channels.
RealTensor read_pnm(const std::filesystem::path& path, std::size_t channels = 1);

/// Dispatches on the extension: .ltns, .pgm or .ppm.
RealTensor read_image(const std::filesystem::path& path, std::size_t channels = 1);
void write_image(const std::filesystem::path& path, const RealTensor& image);

}  // namespace wf
