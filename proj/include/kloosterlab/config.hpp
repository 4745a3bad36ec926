#pragma once

// Run configuration: flat key=value files, the calibration file with the
// pilot-derived thresholds, and the cache directory lookup.

#include "kloosterlab/arith.hpp"
#include "kloosterlab/envelopes.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kloosterlab {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Parses `key = value` lines. Blank lines and text after '#' are ignored;
/// a repeated key keeps its last value.
inline std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& source = "<input>") {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    out[std::move(key)] = trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

inline std::map<std::string, std::string> load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return parse_key_values(in, path.string());
}

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("'" + key + "': not a number: " + v);
  return d;
}

inline u64 parse_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  u64 n = 0;
  try {
    if (!v.empty() && v[0] != '-') n = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("'" + key + "': not a nonnegative integer: " + v);
  return n;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "': not a boolean: " + v);
}

} // namespace detail

struct RunConfig {
  double theta = kDefaultTheta;
  unsigned threads = 1;
  std::string format = "csv";
  std::string output; ///< empty means stdout
  std::string cache_dir;
  u64 seed = 0;
  std::string calibration;
  bool deterministic = false;

  void validate() const {
    if (!(theta >= 0.0 && theta <= 0.5)) throw ConfigError("theta must lie in [0, 1/2]");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
  }

  /// Overlays recognised keys from a config file; unknown keys are errors.
  void apply(const std::map<std::string, std::string>& kv) {
    for (const auto& [k, v] : kv) {
      if (k == "theta") theta = detail::parse_double(k, v);
      else if (k == "threads") threads = static_cast<unsigned>(detail::parse_u64(k, v));
      else if (k == "format") format = v;
      else if (k == "output") output = v;
      else if (k == "cache_dir") cache_dir = v;
      else if (k == "seed") seed = detail::parse_u64(k, v);
      else if (k == "calibration") calibration = v;
      else if (k == "deterministic") deterministic = detail::parse_bool(k, v);
      else throw ConfigError("unknown config key '" + k + "'");
    }
  }
};

/// KLOOSTERLAB_CACHE wins over the configured directory. No directory means
/// tables are recomputed and never written.
inline std::optional<std::filesystem::path> resolve_cache_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("KLOOSTERLAB_CACHE"); env && *env) return std::filesystem::path(env);
  if (!cfg.cache_dir.empty()) return std::filesystem::path(cfg.cache_dir);
  return std::nullopt;
}

/// Pilot-calibrated thresholds. Every threshold has a built-in default equal
/// to the shipped calibration file, so a missing file never loosens a check.
struct Calibration {
  std::string version = "1";
  double linnik_selberg_exponent = 0.8;
  u64 linnik_selberg_from = u64{1} << 14;
  double incomp_c7 = 0.3;
  double kfree_ratio_max = 0.3;
  double phi_ratio_max = 0.06;
  double vertical_c9 = 0.02;

  static Calibration from_key_values(const std::map<std::string, std::string>& kv) {
    Calibration c;
    for (const auto& [k, v] : kv) {
      if (k == "version") c.version = v;
      else if (k == "linnik_selberg_exponent") c.linnik_selberg_exponent = detail::parse_double(k, v);
      else if (k == "linnik_selberg_from") c.linnik_selberg_from = detail::parse_u64(k, v);
      else if (k == "incomp_c7") c.incomp_c7 = detail::parse_double(k, v);
      else if (k == "kfree_ratio_max") c.kfree_ratio_max = detail::parse_double(k, v);
      else if (k == "phi_ratio_max") c.phi_ratio_max = detail::parse_double(k, v);
      else if (k == "vertical_c9") c.vertical_c9 = detail::parse_double(k, v);
      else throw ConfigError("unknown calibration key '" + k + "'");
    }
    return c;
  }

  static Calibration load(const std::filesystem::path& path) { return from_key_values(load_key_values(path)); }
};

} // namespace kloosterlab
