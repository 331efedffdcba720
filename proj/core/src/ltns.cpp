// SPDX-License-Identifier: Apache-2.0
#include "waterflow/ltns.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "waterflow/error.hpp"

namespace wf {
namespace {

static_assert(std::endian::native == std::endian::little, "LTNS I/O assumes a little-endian host");

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void put_doubles(std::string& out, std::span<const double> v) {
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

std::string encode(const Shape& s, bool is_complex, std::span<const double> re, std::span<const double> im) {
  const nlohmann::json header = {
      {"dtype", "f64"}, {"complex", is_complex}, {"shape", {s.c, s.h, s.w}}};
  const std::string h = header.dump();
  std::string out(kLtnsMagic, 8);
  put_u64(out, h.size());
  out += h;
  put_doubles(out, re);
  if (is_complex) put_doubles(out, im);
  return out;
}

std::vector<double> take_doubles(const std::string& bytes, std::size_t offset, std::size_t count) {
  if (offset + count * sizeof(double) > bytes.size()) throw IoError("LTNS payload truncated");
  std::vector<double> v(count);
  std::memcpy(v.data(), bytes.data() + offset, count * sizeof(double));
  return v;
}

}  // namespace

std::string encode_ltns(const RealTensor& t) { return encode(t.shape(), false, t.data(), {}); }

std::string encode_ltns(const ComplexTensor& t) { return encode(t.shape(), true, t.re(), t.im()); }

std::variant<RealTensor, ComplexTensor> decode_ltns(const std::string& bytes) {
  if (bytes.size() < 16 || bytes.compare(0, 8, kLtnsMagic) != 0) throw IoError("not an LTNS file (bad magic)");
  std::uint64_t hlen = 0;
  std::memcpy(&hlen, bytes.data() + 8, 8);
  if (16 + hlen > bytes.size()) throw IoError("LTNS header truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("LTNS header is not valid JSON: ") + e.what());
  }
  if (header.value("dtype", "") != "f64") throw IoError("LTNS dtype must be f64");
  const auto& sh = header.at("shape");
  if (!sh.is_array() || sh.size() != 3) throw IoError("LTNS shape must have three entries");
  const Shape s{sh[0].get<std::size_t>(), sh[1].get<std::size_t>(), sh[2].get<std::size_t>()};
  const bool is_complex = header.value("complex", false);
  const std::size_t off = 16 + hlen;
  const std::size_t expected = off + s.size() * sizeof(double) * (is_complex ? 2 : 1);
  if (bytes.size() != expected) throw IoError("LTNS payload size does not match header shape");
  auto re = take_doubles(bytes, off, s.size());
  if (!is_complex) return RealTensor(s, std::move(re));
  auto im = take_doubles(bytes, off + s.size() * sizeof(double), s.size());
  return ComplexTensor(s, std::move(re), std::move(im));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename into " + path.string() + ": " + ec.message());
}

void write_ltns(const std::filesystem::path& path, const RealTensor& t) { write_file(path, encode_ltns(t)); }
void write_ltns(const std::filesystem::path& path, const ComplexTensor& t) { write_file(path, encode_ltns(t)); }

RealTensor read_ltns_real(const std::filesystem::path& path) {
  auto v = decode_ltns(read_file(path));
  if (auto* r = std::get_if<RealTensor>(&v)) return std::move(*r);
  throw IoError(path.string() + " holds a complex tensor, expected real");
}

ComplexTensor read_ltns_complex(const std::filesystem::path& path) {
  auto v = decode_ltns(read_file(path));
  if (auto* c = std::get_if<ComplexTensor>(&v)) return std::move(*c);
  return ComplexTensor(std::get<RealTensor>(v));
}

const RealTensor& TensorBundle::get(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw ConfigError("bundle has no tensor named '" + name + "'");
}

void save_bundle(const std::filesystem::path& manifest_path, const TensorBundle& bundle) {
  if (manifest_path.extension() != ".json") throw ConfigError("bundle manifest must end in .json");
  auto blob_path = manifest_path;
  blob_path.replace_extension(".ltns");
  std::size_t total = 0;
  nlohmann::json index = nlohmann::json::array();
  for (const auto& [name, t] : bundle.tensors) {
    const auto& s = t.shape();
    index.push_back({{"name", name}, {"shape", {s.c, s.h, s.w}}, {"offset", total}});
    total += t.size();
  }
  std::vector<double> flat;
  flat.reserve(total);
  for (const auto& [name, t] : bundle.tensors) flat.insert(flat.end(), t.data().begin(), t.data().end());
  nlohmann::json manifest = bundle.metadata;
  manifest["tensors"] = index;
  manifest["blob"] = blob_path.filename().string();
  write_ltns(blob_path, RealTensor({1, 1, total}, std::move(flat)));
  write_file(manifest_path, manifest.dump(2) + "\n");
}

TensorBundle load_bundle(const std::filesystem::path& manifest_path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }
  if (!manifest.contains("tensors") || !manifest.contains("blob")) {
    throw ConfigError(manifest_path.string() + " is not a tensor bundle manifest");
  }
  const RealTensor blob = read_ltns_real(manifest_path.parent_path() / manifest.at("blob").get<std::string>());
  TensorBundle out;
  for (const auto& entry : manifest.at("tensors")) {
    const auto& sh = entry.at("shape");
    const Shape s{sh[0].get<std::size_t>(), sh[1].get<std::size_t>(), sh[2].get<std::size_t>()};
    const auto off = entry.at("offset").get<std::size_t>();
    if (off + s.size() > blob.size()) throw IoError("bundle index exceeds blob size");
    std::vector<double> v(blob.data().begin() + static_cast<std::ptrdiff_t>(off),
                          blob.data().begin() + static_cast<std::ptrdiff_t>(off + s.size()));
    out.tensors.emplace_back(entry.at("name").get<std::string>(), RealTensor(s, std::move(v)));
  }
  manifest.erase("tensors");
  manifest.erase("blob");
  out.metadata = std::move(manifest);
  return out;
}

}  // namespace wf
