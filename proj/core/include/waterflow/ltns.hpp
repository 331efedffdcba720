// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "waterflow/tensor.hpp"

namespace wf {

/// LTNS container: the 8-byte magic "LTNSv001", a little-endian u64 header
/// length, a JSON header {"dtype":"f64","complex":bool,"shape":[c,h,w]},
/// then the f64 payload (real array, followed by the imaginary array if complex).
inline constexpr char kLtnsMagic[] = "LTNSv001";

std::string encode_ltns(const RealTensor& t);
std::string encode_ltns(const ComplexTensor& t);
/// Decodes either kind; real payloads yield a ComplexTensor only via read_ltns_complex.
std::variant<RealTensor, ComplexTensor> decode_ltns(const std::string& bytes);

void write_ltns(const std::filesystem::path& path, const RealTensor& t);
void write_ltns(const std::filesystem::path& path, const ComplexTensor& t);
RealTensor read_ltns_real(const std::filesystem::path& path);
ComplexTensor read_ltns_complex(const std::filesystem::path& path);

using NamedTensors = std::vector<std::pair<std::string, RealTensor>>;

/// A set of named tensors stored as `<stem>.json` (metadata plus a tensor
/// index with shapes and offsets) and `<stem>.ltns` (one flat payload).
struct TensorBundle {
  nlohmann::json metadata = nlohmann::json::object();
  NamedTensors tensors;

  const RealTensor& get(const std::string& name) const;
};

/// `manifest_path` must end in ".json"; the blob goes next to it with ".ltns".
void save_bundle(const std::filesystem::path& manifest_path, const TensorBundle& bundle);
TensorBundle load_bundle(const std::filesystem::path& manifest_path);

std::string read_file(const std::filesystem::path& path);
/// Writes atomically-ish (temp file then rename), creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace wf
