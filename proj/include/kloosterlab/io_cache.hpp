#pragma once

// On-disk formats: binary vertical tables (KLTB1) and CSV/JSON report streams.
//
// Table layout, all integers little-endian:
//   bytes  0..7   magic "KLTB1" padded with zeros
//   bytes  8..15  modulus m
//   bytes 16..23  entry count (== m)
//   bytes 24..31  FNV-1a 64 digest of the payload bytes
//   bytes 32..    m IEEE-754 doubles, K_m(0) .. K_m(m-1)

#include "kloosterlab/arith.hpp"
#include "kloosterlab/kloosterman.hpp"
#include "kloosterlab/reduce.hpp"
#include "kloosterlab/report.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace kloosterlab {

class TableFormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::array<char, 8> kTableMagic = {'K', 'L', 'T', 'B', '1', 0, 0, 0};

inline u64 fnv1a64(const unsigned char* data, std::size_t size, u64 h = 0xcbf29ce484222325ull) {
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace detail {

inline void put_u64(unsigned char* out, u64 v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
}

inline u64 get_u64(const unsigned char* in) {
  u64 v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<u64>(in[i]) << (8 * i);
  return v;
}

inline std::vector<unsigned char> encode_payload(const std::vector<double>& values) {
  std::vector<unsigned char> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) put_u64(bytes.data() + 8 * i, std::bit_cast<u64>(values[i]));
  return bytes;
}

} // namespace detail

/// Writes to a sibling temporary file, then renames into place.
inline void save_table(const VerticalTable& t, const std::filesystem::path& path) {
  if (t.values.size() != t.modulus) throw std::invalid_argument("save_table: table size differs from modulus");
  const std::vector<unsigned char> payload = detail::encode_payload(t.values);
  unsigned char header[32];
  std::memcpy(header, kTableMagic.data(), 8);
  detail::put_u64(header + 8, t.modulus);
  detail::put_u64(header + 16, t.values.size());
  detail::put_u64(header + 24, fnv1a64(payload.data(), payload.size()));
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_table: cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!out) throw std::runtime_error("save_table: write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("save_table: cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

/// Sum of entries vanishes and the sum of squares equals phi(m).
inline void verify_table(const VerticalTable& t, const std::string& context = {}) {
  const u64 m = t.modulus;
  CompensatedSum sum, squares;
  for (double v : t.values) {
    sum.add(v);
    squares.add(v * v);
  }
  const double phi = static_cast<double>(factorize(m).phi());
  if (std::abs(sum.value()) > 1e-8 * std::max(1.0, std::sqrt(static_cast<double>(m))))
    throw TableFormatError("table orthogonality check failed" + context);
  if (std::abs(squares.value() - phi) > 1e-8 * phi) throw TableFormatError("table Parseval check failed" + context);
}

inline VerticalTable load_table(const std::filesystem::path& path, bool verify = true) {
  const std::string ctx = " (" + path.string() + ")";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_table: cannot open" + ctx);
  unsigned char header[32];
  in.read(reinterpret_cast<char*>(header), 8);
  if (in.gcount() != 8 || std::memcmp(header, kTableMagic.data(), 8) != 0)
    throw TableFormatError("not a table file" + ctx);
  in.read(reinterpret_cast<char*>(header + 8), 24);
  if (in.gcount() != 24) throw TableFormatError("checksum mismatch" + ctx);
  const u64 m = detail::get_u64(header + 8);
  const u64 count = detail::get_u64(header + 16);
  const u64 digest = detail::get_u64(header + 24);
  if (count != m || m < 2 || m > kMaxModulus) throw TableFormatError("corrupt table header" + ctx);
  std::vector<unsigned char> payload(count * 8);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<u64>(in.gcount()) != payload.size() || in.peek() != std::char_traits<char>::eof() ||
      fnv1a64(payload.data(), payload.size()) != digest)
    throw TableFormatError("checksum mismatch" + ctx);
  VerticalTable t;
  t.modulus = m;
  t.values.resize(count);
  for (u64 i = 0; i < count; ++i) t.values[i] = std::bit_cast<double>(detail::get_u64(payload.data() + 8 * i));
  if (verify) verify_table(t, ctx);
  return t;
}

/// Cached table for m under `dir`, computed and stored on a miss.
inline VerticalTable cached_table(const std::filesystem::path& dir, const FactoredModulus& f,
                                  u64 limit = kDefaultTableLimit) {
  const auto path = dir / ("table_" + std::to_string(f.m()) + ".kltb");
  if (std::filesystem::exists(path)) return load_table(path);
  VerticalTable t = vertical_table(f, limit);
  std::filesystem::create_directories(dir);
  save_table(t, path);
  return t;
}

// ---------------------------------------------------------------------------
// Report streams

enum class ReportFormat { Csv, Json };

inline ReportFormat parse_report_format(std::string_view token) {
  if (token == "csv") return ReportFormat::Csv;
  if (token == "json") return ReportFormat::Json;
  throw std::invalid_argument("unknown output format '" + std::string(token) + "' (expected csv or json)");
}

inline constexpr std::array<const char*, 13> kReportColumns = {
    "kind", "params", "x", "terms", "value_re", "value_im", "envelope_kind",
    "envelope", "ratio", "flags", "seed", "version", "timestamp"};

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string joined_params(const SumReport& r) {
  std::string out;
  for (std::size_t i = 0; i < r.params.size(); ++i)
    out += (i ? ";" : "") + r.params[i].first + "=" + r.params[i].second;
  return out;
}

inline std::string joined_flags(const SumReport& r) {
  std::string out;
  for (std::size_t i = 0; i < r.flags.size(); ++i) out += (i ? ";" : "") + r.flags[i];
  return out;
}

} // namespace detail

/// Streams reports in a fixed column / key order. CSV gets its header on
/// construction; JSON is a top-level array closed by finish().
class ReportWriter {
public:
  ReportWriter(std::ostream& out, ReportFormat format) : out_(out), format_(format) {
    if (format_ == ReportFormat::Csv) {
      for (std::size_t i = 0; i < kReportColumns.size(); ++i) out_ << (i ? "," : "") << kReportColumns[i];
      out_ << "\n";
    } else {
      out_ << "[";
    }
  }
  ReportWriter(const ReportWriter&) = delete;
  ReportWriter& operator=(const ReportWriter&) = delete;
  ~ReportWriter() {
    try {
      finish();
    } catch (...) {
    }
  }

  void write(const SumReport& r) {
    if (finished_) throw std::logic_error("ReportWriter: write after finish");
    if (format_ == ReportFormat::Csv) write_csv(r);
    else write_json(r);
    ++count_;
    if (!out_) throw std::runtime_error("ReportWriter: output stream failed");
  }

  void finish() {
    if (finished_) return;
    finished_ = true;
    if (format_ == ReportFormat::Json) out_ << (count_ ? "\n]\n" : "]\n");
    out_.flush();
  }

  std::size_t count() const { return count_; }

private:
  void write_csv(const SumReport& r) {
    using detail::csv_field;
    using detail::fmt17;
    const std::string fields[] = {
        csv_field(r.kind),
        csv_field(detail::joined_params(r)),
        r.x ? fmt17(*r.x) : "",
        std::to_string(r.terms),
        fmt17(r.value.real()),
        fmt17(r.value.imag()),
        csv_field(r.envelope_kind.value_or("")),
        r.envelope ? fmt17(*r.envelope) : "",
        r.ratio ? fmt17(*r.ratio) : "",
        csv_field(detail::joined_flags(r)),
        std::to_string(r.seed),
        csv_field(r.version),
        csv_field(r.timestamp)};
    for (std::size_t i = 0; i < std::size(fields); ++i) out_ << (i ? "," : "") << fields[i];
    out_ << "\n";
  }

  void write_json(const SumReport& r) {
    nlohmann::ordered_json j;
    j["kind"] = r.kind;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.params) params[k] = v;
    j["params"] = params;
    j["x"] = r.x ? nlohmann::ordered_json(*r.x) : nlohmann::ordered_json(nullptr);
    j["terms"] = r.terms;
    j["value_re"] = r.value.real();
    j["value_im"] = r.value.imag();
    j["envelope_kind"] = r.envelope_kind ? nlohmann::ordered_json(*r.envelope_kind) : nlohmann::ordered_json(nullptr);
    j["envelope"] = r.envelope ? nlohmann::ordered_json(*r.envelope) : nlohmann::ordered_json(nullptr);
    j["ratio"] = r.ratio ? nlohmann::ordered_json(*r.ratio) : nlohmann::ordered_json(nullptr);
    j["flags"] = r.flags;
    j["seed"] = r.seed;
    j["version"] = r.version;
    j["timestamp"] = r.timestamp;
    out_ << (count_ ? ",\n" : "\n") << j.dump();
  }

  std::ostream& out_;
  ReportFormat format_;
  std::size_t count_ = 0;
  bool finished_ = false;
};

/// Splits CSV text into records (RFC 4180 quoting).
inline std::vector<std::vector<std::string>> read_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace kloosterlab
