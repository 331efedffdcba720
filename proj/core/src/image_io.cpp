// SPDX-License-Identifier: Apache-2.0
#include "waterflow/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "waterflow/error.hpp"
#include "waterflow/ltns.hpp"

namespace wf {
namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::size_t header_int(const std::string& bytes, std::size_t& pos, const std::string& path) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::size_t start = pos;
  while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) throw IoError(path + ": malformed PNM header");
  return std::stoul(bytes.substr(start, pos - start));
}

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

}  // namespace

void write_pnm(const std::filesystem::path& path, const RealTensor& image) {
  const auto& s = image.shape();
  const bool color = s.c == 3;
  const std::size_t rows = color ? s.h : s.c * s.h;
  std::string out = std::string(color ? "P6" : "P5") + "\n" + std::to_string(s.w) + " " + std::to_string(rows) + "\n255\n";
  auto q = [](double v) { return static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))); };
  if (color) {
    for (std::size_t y = 0; y < s.h; ++y)
      for (std::size_t x = 0; x < s.w; ++x)
        for (std::size_t c = 0; c < 3; ++c) out.push_back(q(image.at(c, y, x)));
  } else {
    for (double v : image.data()) out.push_back(q(v));
  }
  write_file(path, out);
}

RealTensor read_pnm(const std::filesystem::path& path, std::size_t channels) {
  const std::string bytes = read_file(path);
  const std::string name = path.string();
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw IoError(name + ": not a binary PGM/PPM file");
  const bool color = bytes[1] == '6';
  std::size_t pos = 2;
  const std::size_t w = header_int(bytes, pos, name);
  const std::size_t h = header_int(bytes, pos, name);
  const std::size_t maxval = header_int(bytes, pos, name);
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) throw IoError(name + ": bad PNM dimensions or maxval");
  ++pos;  // single whitespace before the raster
  const std::size_t depth = color ? 3 : 1;
  const std::size_t bps = maxval > 255 ? 2 : 1;
  if (bytes.size() < pos + w * h * depth * bps) throw IoError(name + ": truncated PNM raster");
  auto sample = [&](std::size_t i) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos + i * bps);
    const unsigned v = bps == 2 ? (static_cast<unsigned>(p[0]) << 8) | p[1] : p[0];
    return static_cast<double>(v) / static_cast<double>(maxval);
  };
  if (color) {
    RealTensor out({3, h, w});
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t c = 0; c < 3; ++c) out.at(c, y, x) = sample((y * w + x) * 3 + c);
    return out;
  }
  const std::size_t c = channels == 0 ? 1 : channels;
  if (h % c != 0) throw DimensionError(name + ": height " + std::to_string(h) + " is not divisible by " + std::to_string(c));
  RealTensor out({c, h / c, w});
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sample(i);
  return out;
}

RealTensor read_image(const std::filesystem::path& path, std::size_t channels) {
  const std::string e = lower_ext(path);
  if (e == ".pgm" || e == ".ppm" || e == ".pnm") return read_pnm(path, channels);
  return read_ltns_real(path);
}

void write_image(const std::filesystem::path& path, const RealTensor& image) {
  const std::string e = lower_ext(path);
  if (e == ".pgm" || e == ".ppm" || e == ".pnm") {
    write_pnm(path, image);
  } else {
    write_ltns(path, image);
  }
}

}  // namespace wf
