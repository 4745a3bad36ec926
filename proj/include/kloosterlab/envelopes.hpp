#pragma once

// Bound formulas evaluated as numeric envelopes. Implied constants and o(1)
// exponent slack are not included; the ratio |value| / envelope exposes them.
// Logarithms are natural.

#include "kloosterlab/arith.hpp"
#include "kloosterlab/report.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace kloosterlab {

inline constexpr double kDefaultTheta = 7.0 / 64.0;

/// max(1/6, 2 theta).
inline double gamma(double theta) {
  if (!(theta >= 0.0 && theta <= 0.5)) throw std::invalid_argument("gamma: theta must lie in [0, 1/2]");
  return std::max(1.0 / 6.0, 2.0 * theta);
}

/// 2^omega(m) times the 2-adic factor 1, 2^{1/2}, 2, 2^{3/2} for
/// 2^5 not dividing m, 2^5 || m, 2^6 || m, 2^7 | m.
inline double weil_envelope(const FactoredModulus& f) {
  const unsigned v2 = f.valuation(2);
  double two_adic = 1.0;
  if (v2 == 5) two_adic = std::numbers::sqrt2;
  else if (v2 == 6) two_adic = 2.0;
  else if (v2 >= 7) two_adic = 2.0 * std::numbers::sqrt2;
  return std::ldexp(two_adic, static_cast<int>(f.omega()));
}

namespace envelope {

struct Weil {
  FactoredModulus f;
};
struct TrivialAP {
  u64 M = 1, q = 1;
};
struct AP {
  u64 M = 1, q = 1;
  double alpha = 0.0;
};
struct LinnikSelberg {
  u64 M = 1;
};
struct KFree {
  u64 M = 1;
  unsigned k = 2;
};
struct Phi {
  u64 M = 1;
};
struct LinPoly {
  u64 N = 1, p = 3;
  unsigned d = 0;
};
struct IncompCorr {
  u64 N = 1, p = 3;
};
struct CompleteCorr {
  u64 p = 3;
};
struct FMStarLower {
  u64 M = 16;
  double r = 1.0;
};
struct FMStarUpper {
  u64 M = 16;
};
struct FMAbsLower {
  u64 M = 16;
  double r = 1.0;
};
struct FMAbsUpper {
  u64 M = 16;
};

} // namespace envelope

using EnvelopeKind =
    std::variant<envelope::Weil, envelope::TrivialAP, envelope::AP, envelope::LinnikSelberg,
                 envelope::KFree, envelope::Phi, envelope::LinPoly, envelope::IncompCorr,
                 envelope::CompleteCorr, envelope::FMStarLower, envelope::FMStarUpper,
                 envelope::FMAbsLower, envelope::FMAbsUpper>;

/// Stable CLI token of an envelope kind.
inline std::string envelope_token(const EnvelopeKind& kind) {
  static constexpr const char* names[] = {"weil",     "ap-trivial",    "ap",           "linnik-selberg",
                                          "kfree",    "phi",           "linpoly",      "incomp",
                                          "complete", "fm-star-lower", "fm-star-upper", "fm-abs-lower",
                                          "fm-abs-upper"};
  return names[kind.index()];
}

namespace detail {

inline void require_positive(u64 v, const char* what) {
  if (v < 1) throw std::invalid_argument(std::string("envelope: ") + what + " must be >= 1");
}

inline double log_p(u64 p) {
  if (p < 3) throw std::invalid_argument("envelope: p must be >= 3 for logarithmic factors");
  return std::log(static_cast<double>(p));
}

// log M and log log M, both required positive
inline std::pair<double, double> fm_logs(u64 M) {
  if (M < 16) throw std::invalid_argument("envelope: Fouvry-Michel envelopes need M >= 16");
  const double l = std::log(static_cast<double>(M));
  return {l, std::log(l)};
}

} // namespace detail

/// Literal right-hand side of the bound named by `kind`; gamma defaults to
/// gamma(7/64).
inline double evaluate(const EnvelopeKind& kind, double gamma_value = gamma(kDefaultTheta)) {
  using namespace envelope;
  return std::visit(
      [&](const auto& e) -> double {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, Weil>) {
          return weil_envelope(e.f);
        } else if constexpr (std::is_same_v<T, TrivialAP>) {
          detail::require_positive(e.M, "M");
          detail::require_positive(e.q, "q");
          return std::sqrt(static_cast<double>(e.M)) / static_cast<double>(e.q);
        } else if constexpr (std::is_same_v<T, AP>) {
          detail::require_positive(e.M, "M");
          detail::require_positive(e.q, "q");
          if (!(e.alpha >= -0.5)) throw std::invalid_argument("envelope: alpha must be >= -1/2");
          const double M = static_cast<double>(e.M), q = static_cast<double>(e.q);
          return std::pow(M, e.alpha + 0.5) * std::pow(M / (q * q), gamma_value);
        } else if constexpr (std::is_same_v<T, LinnikSelberg>) {
          detail::require_positive(e.M, "M");
          return std::pow(static_cast<double>(e.M), 2.0 / 3.0);
        } else if constexpr (std::is_same_v<T, KFree>) {
          detail::require_positive(e.M, "M");
          if (e.k < 2) throw std::invalid_argument("envelope: k must be >= 2");
          const double M = static_cast<double>(e.M);
          return std::pow(M, 0.5 + gamma_value) + std::pow(M, 0.5 + 1.0 / (2.0 * e.k));
        } else if constexpr (std::is_same_v<T, Phi>) {
          detail::require_positive(e.M, "M");
          return std::pow(static_cast<double>(e.M), 1.5 + gamma_value);
        } else if constexpr (std::is_same_v<T, LinPoly>) {
          detail::require_positive(e.N, "N");
          const double lp = detail::log_p(e.p);
          const double w = std::ldexp(1.0, -static_cast<int>(e.d));
          return std::pow(static_cast<double>(e.N), 1.0 - w) * std::pow(static_cast<double>(e.p), w / 2.0) *
                 std::pow(lp, w);
        } else if constexpr (std::is_same_v<T, IncompCorr>) {
          detail::require_positive(e.N, "N");
          if (e.p < 2) throw std::invalid_argument("envelope: p must be prime");
          return std::sqrt(static_cast<double>(e.N)) * std::pow(static_cast<double>(e.p), 0.25);
        } else if constexpr (std::is_same_v<T, CompleteCorr>) {
          return std::sqrt(static_cast<double>(e.p)) * detail::log_p(e.p);
        } else if constexpr (std::is_same_v<T, FMStarLower> || std::is_same_v<T, FMAbsLower>) {
          const auto [l, ll] = detail::fm_logs(e.M);
          return static_cast<double>(e.M) * std::pow(ll, e.r) / l;
        } else if constexpr (std::is_same_v<T, FMStarUpper>) {
          const auto [l, ll] = detail::fm_logs(e.M);
          return static_cast<double>(e.M) * std::pow(ll / l, 1.0 - 4.0 / (3.0 * std::numbers::pi));
        } else {
          static_assert(std::is_same_v<T, FMAbsUpper>);
          const auto [l, ll] = detail::fm_logs(e.M);
          const double c = 8.0 / (3.0 * std::numbers::pi);
          return static_cast<double>(e.M) * std::pow(ll, 2.0 - c) / std::pow(l, 1.0 - c);
        }
      },
      kind);
}

namespace detail {

inline std::optional<u64> report_u64(const SumReport& r, const std::string& key) {
  const auto v = r.param(key);
  if (!v) return std::nullopt;
  return std::stoull(*v);
}

inline void require_match(const SumReport& r, const std::string& key, u64 expected) {
  if (const auto v = report_u64(r, key); v && *v != expected)
    throw std::invalid_argument("attach: envelope " + key + "=" + std::to_string(expected) +
                                " does not match report " + key + "=" + std::to_string(*v));
}

} // namespace detail

/// Fills envelope and ratio. Parameters the envelope shares with the report
/// must agree. Correlation envelopes attached to a non-normal shift vector
/// are still evaluated but flagged as inapplicable.
inline SumReport attach(SumReport report, const EnvelopeKind& kind,
                        double gamma_value = gamma(kDefaultTheta)) {
  using namespace envelope;
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, Weil>) {
          detail::require_match(report, "m", e.f.m());
        } else if constexpr (requires { e.M; }) {
          detail::require_match(report, "M", e.M);
          if constexpr (requires { e.q; }) detail::require_match(report, "q", e.q);
        } else {
          if constexpr (requires { e.N; }) detail::require_match(report, "N", e.N);
          detail::require_match(report, "p", e.p);
          detail::require_match(report, "m", e.p);
        }
        if constexpr (std::is_same_v<T, LinPoly> || std::is_same_v<T, IncompCorr> ||
                      std::is_same_v<T, CompleteCorr>) {
          if (report.param("normal") == std::optional<std::string>("false")) report.flag("envelope-inapplicable");
        }
      },
      kind);
  const double env = evaluate(kind, gamma_value);
  report.envelope_kind = envelope_token(kind);
  report.envelope = env;
  report.ratio = env > 0 ? std::optional<double>(std::abs(report.value) / env) : std::nullopt;
  report.set("gamma", gamma_value);
  if (std::holds_alternative<envelope::LinPoly>(kind) || std::holds_alternative<envelope::CompleteCorr>(kind) ||
      kind.index() >= EnvelopeKind(envelope::FMStarLower{}).index())
    report.set("log", "natural");
  return report;
}

struct EnvelopeOptions {
  double fm_r = 1.0;
};

/// Builds the envelope named by `token` from the parameters a report carries.
inline EnvelopeKind envelope_for(std::string_view token, const SumReport& r, const EnvelopeOptions& opts = {}) {
  using namespace envelope;
  auto need = [&](const char* key) {
    const auto v = detail::report_u64(r, key);
    if (!v) throw std::invalid_argument("envelope '" + std::string(token) + "' needs report parameter " + key);
    return *v;
  };
  if (token == "weil") return Weil{factorize(need("m"))};
  if (token == "ap-trivial") return TrivialAP{need("M"), r.param("q") ? need("q") : 1};
  if (token == "ap") {
    const double alpha = r.param("alpha") ? std::stod(*r.param("alpha")) : 0.0;
    return AP{need("M"), r.param("q") ? need("q") : 1, alpha};
  }
  if (token == "linnik-selberg") return LinnikSelberg{need("M")};
  if (token == "kfree") {
    unsigned k = 2;
    if (const auto w = r.param("weight"); w && w->rfind("kfree:", 0) == 0) k = static_cast<unsigned>(std::stoul(w->substr(6)));
    return KFree{need("M"), k};
  }
  if (token == "phi") return Phi{need("M")};
  if (token == "linpoly") return LinPoly{need("N"), need("p"), static_cast<unsigned>(r.param("d") ? need("d") : 0)};
  if (token == "incomp") {
    const u64 p = r.param("p") ? need("p") : need("m");
    return IncompCorr{need("N"), p};
  }
  if (token == "complete") return CompleteCorr{r.param("p") ? need("p") : need("m")};
  if (token == "fm-star-lower") return FMStarLower{need("M"), opts.fm_r};
  if (token == "fm-star-upper") return FMStarUpper{need("M")};
  if (token == "fm-abs-lower") return FMAbsLower{need("M"), opts.fm_r};
  if (token == "fm-abs-upper") return FMAbsUpper{need("M")};
  throw std::invalid_argument("unknown envelope '" + std::string(token) + "'");
}

} // namespace kloosterlab
