// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <string>

#include <nlohmann/json.hpp>

namespace wf::cli {

/// One JSON object per line on stderr.
class Log {
 public:
  static Log& get();

  void event(const std::string& name, nlohmann::json fields = nlohmann::json::object());
  void error(const std::string& kind, const std::string& message);
  void set_quiet(bool quiet) { quiet_ = quiet; }

 private:
  Log();
  std::chrono::steady_clock::time_point start_;
  bool quiet_ = false;
};

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace wf::cli
