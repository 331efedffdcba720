// SPDX-License-Identifier: Apache-2.0
#include "log.hpp"

#include <cstdint>
#include <cstdio>
#include <iostream>

namespace wf::cli {

Log::Log() : start_(std::chrono::steady_clock::now()) {}

Log& Log::get() {
  static Log log;
  return log;
}

void Log::event(const std::string& name, nlohmann::json fields) {
  if (quiet_) return;
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  nlohmann::json line = {{"event", name}, {"elapsed_s", elapsed}};
  for (auto& [k, v] : fields.items()) line[k] = v;
  std::cerr << line.dump() << "\n" << std::flush;
}

void Log::error(const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json({{"event", "error"}, {"kind", kind}, {"message", message}}).dump() << "\n" << std::flush;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace wf::cli
