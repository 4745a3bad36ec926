#pragma once

#include "kloosterlab/arith.hpp"

#include <algorithm>
#include <complex>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kloosterlab {

inline constexpr const char* kVersion = "kloosterlab 1.0.0";

/// One computed sum with its parameters and, once attached, its envelope.
struct SumReport {
  std::string kind;
  std::complex<double> value{};
  u64 terms = 0;
  std::vector<std::pair<std::string, std::string>> params;
  std::optional<double> x; ///< plotting abscissa (M or N)
  std::optional<std::string> envelope_kind;
  std::optional<double> envelope;
  std::optional<double> ratio;
  std::vector<std::string> flags;
  u64 seed = 0;
  std::string version = kVersion;
  std::string timestamp;

  SumReport& set(const std::string& key, std::string value) {
    for (auto& [k, v] : params) {
      if (k == key) {
        v = std::move(value);
        return *this;
      }
    }
    params.emplace_back(key, std::move(value));
    return *this;
  }
  SumReport& set(const std::string& key, const char* value) { return set(key, std::string(value)); }
  SumReport& set(const std::string& key, bool value) { return set(key, std::string(value ? "true" : "false")); }
  SumReport& set(const std::string& key, double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return set(key, std::string(buf));
  }
  template <class Int>
    requires std::is_integral_v<Int>
  SumReport& set(const std::string& key, Int value) {
    return set(key, std::to_string(value));
  }

  std::optional<std::string> param(const std::string& key) const {
    for (const auto& [k, v] : params)
      if (k == key) return v;
    return std::nullopt;
  }

  void flag(const std::string& f) {
    if (!has_flag(f)) flags.push_back(f);
  }
  bool has_flag(const std::string& f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
  }
};

} // namespace kloosterlab
