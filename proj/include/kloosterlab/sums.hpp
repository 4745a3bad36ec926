#pragma once

// Horizontal sums over the modulus, vertical sums over the argument, and the
// correlation variants built from them. Every sum is a deterministic block
// reduction in ascending index order.

#include "kloosterlab/arith.hpp"
#include "kloosterlab/kloosterman.hpp"
#include "kloosterlab/reduce.hpp"
#include "kloosterlab/report.hpp"
#include "kloosterlab/sequences.hpp"

#include <cmath>
#include <complex>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kloosterlab {

enum class VerticalPath { Auto, Table, PerEntry };

struct SumOptions {
  unsigned threads = 1;
  u64 seed = 0;
  u64 table_limit = kDefaultTableLimit;
  /// Vertical sums switch to the whole-row table when N > crossover * m / log2(m).
  double crossover = 1.0;
  VerticalPath vertical_path = VerticalPath::Auto;
  /// Slack used by the digital-sum regime flags.
  double digital_delta = 0.05;
  std::shared_ptr<const FactorSieve> sieve;
  /// Reused by vertical sums when its modulus matches.
  std::shared_ptr<const VerticalTable> table;
};

namespace detail {

inline SumReport make_report(std::string kind, const SumOptions& opts) {
  SumReport r;
  r.kind = std::move(kind);
  r.seed = opts.seed;
  return r;
}

inline std::string join(const std::vector<i64>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

template <class T>
std::string join_unsigned(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

inline std::shared_ptr<const FactorSieve> sieve_for(u64 limit, const SumOptions& opts) {
  if (opts.sieve && opts.sieve->limit() >= limit) return opts.sieve;
  return std::make_shared<const FactorSieve>(std::max<u64>(limit, 2));
}

inline std::shared_ptr<const VerticalTable> table_for(u64 p, const SumOptions& opts) {
  if (opts.table && opts.table->modulus == p) return opts.table;
  return std::make_shared<const VerticalTable>(vertical_table(factorize(p), opts.table_limit));
}

// Sign products borrow the row of their own prime, which may already be the
// caller's table.
inline Weight bind_weight(const WeightSpec& spec, std::shared_ptr<const FactorSieve> sieve,
                          const SumOptions& opts) {
  if (const auto* sp = std::get_if<weights::SignProduct>(&spec))
    return Weight(spec, std::move(sieve), table_for(sp->p, opts));
  return Weight(spec, std::move(sieve));
}

inline void require_prime(u64 p, const char* who) {
  if (!is_prime(p)) throw std::invalid_argument(std::string(who) + ": p must be prime");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Horizontal aspect

/// sum_{m <= M} xi(m) K_m(a), or xi(m) K*_m(a) when star is set.
inline SumReport horizontal_sum(const HorizontalRow& row, const Weight& w, u64 M, bool star,
                                const SumOptions& opts = {}) {
  if (M < 1) throw std::invalid_argument("horizontal_sum: M must be >= 1");
  if (M > row.limit()) throw std::out_of_range("horizontal_sum: M exceeds the row limit");
  SumReport r = detail::make_report("horizontal", opts);
  r.value = deterministic_sum(1, M + 1, opts.threads, [&](std::size_t m) {
    return w(m) * (star ? row.star(m) : row.values[m]);
  });
  r.terms = M;
  r.x = static_cast<double>(M);
  r.set("a", row.argument).set("weight", format_weight_spec(w.spec())).set("M", M).set("star", star);
  return r;
}

inline SumReport horizontal_sum(i64 a, const WeightSpec& w, u64 M, bool star,
                                const SumOptions& opts = {}) {
  if (M < 1) throw std::invalid_argument("horizontal_sum: M must be >= 1");
  const auto sieve = detail::sieve_for(M, opts);
  const HorizontalRow row = horizontal_row(a, M, opts.threads, sieve);
  return horizontal_sum(row, detail::bind_weight(w, sieve, opts), M, star, opts);
}

/// sum_{m <= M} |K_m(a)| or sum K*_m(a).
inline SumReport horizontal_abs(const HorizontalRow& row, u64 M, bool star,
                                const SumOptions& opts = {}) {
  if (M < 1) throw std::invalid_argument("horizontal_abs: M must be >= 1");
  if (M > row.limit()) throw std::out_of_range("horizontal_abs: M exceeds the row limit");
  SumReport r = detail::make_report("horizontal-abs", opts);
  r.value = deterministic_sum(1, M + 1, opts.threads, [&](std::size_t m) {
    return star ? row.star(m) : std::abs(row.values[m]);
  });
  r.terms = M;
  r.x = static_cast<double>(M);
  r.set("a", row.argument).set("M", M).set("star", star);
  return r;
}

inline SumReport horizontal_abs(i64 a, u64 M, bool star, const SumOptions& opts = {}) {
  if (M < 1) throw std::invalid_argument("horizontal_abs: M must be >= 1");
  return horizontal_abs(horizontal_row(a, M, opts.threads, detail::sieve_for(M, opts)), M, star, opts);
}

/// (1/M) sum_{m <= M} prod_j K*_{m+h_j}(a)^{nu_j}.
inline SumReport horizontal_moment(const HorizontalRow& row, const ShiftMoment& sm, u64 M,
                                   const SumOptions& opts = {}) {
  sm.validate();
  if (M < 1) throw std::invalid_argument("horizontal_moment: M must be >= 1");
  if (M + sm.shifts.back() > row.limit())
    throw std::out_of_range("horizontal_moment: M + h_s exceeds the row limit");
  SumReport r = detail::make_report("horizontal-moment", opts);
  const std::complex<double> total = deterministic_sum(1, M + 1, opts.threads, [&](std::size_t m) {
    double prod = 1.0;
    for (std::size_t j = 0; j < sm.shifts.size(); ++j)
      prod *= std::pow(row.star(m + sm.shifts[j]), static_cast<int>(sm.exponents[j]));
    return prod;
  });
  r.value = total / static_cast<double>(M);
  r.terms = M;
  r.x = static_cast<double>(M);
  // benchmark Hbar*(M)/M and the smallest A with |value| <= (A benchmark)^{sum nu}
  const double bench =
      deterministic_sum(1, M + 1, opts.threads, [&](std::size_t m) { return row.star(m); }).real() /
      static_cast<double>(M);
  unsigned order = 0;
  for (unsigned e : sm.exponents) order += e;
  r.set("a", row.argument)
      .set("shifts", detail::join_unsigned(sm.shifts))
      .set("exponents", detail::join_unsigned(sm.exponents))
      .set("M", M)
      .set("unaveraged", total.real())
      .set("benchmark", bench)
      .set("A_fit", std::pow(std::abs(r.value), 1.0 / order) / bench);
  if (sm.all_even()) r.flag("all-even");
  return r;
}

inline SumReport horizontal_moment(i64 a, const ShiftMoment& sm, u64 M, const SumOptions& opts = {}) {
  sm.validate();
  if (M < 1) throw std::invalid_argument("horizontal_moment: M must be >= 1");
  const u64 limit = M + sm.shifts.back();
  return horizontal_moment(horizontal_row(a, limit, opts.threads, detail::sieve_for(limit, opts)), sm,
                           M, opts);
}

/// sum_{m <= M, q | m} m^alpha K_m(a), alpha >= -1/2.
inline SumReport ap_sum(i64 a, u64 q, double alpha, u64 M, const SumOptions& opts = {},
                        const HorizontalRow* row = nullptr) {
  if (q < 1) throw std::invalid_argument("ap_sum: q must be >= 1");
  if (!(alpha >= -0.5)) throw std::invalid_argument("ap_sum: alpha must be >= -1/2");
  SumReport r = detail::make_report("ap", opts);
  const u64 count = M / q;
  r.terms = count;
  r.x = static_cast<double>(M);
  r.set("a", a).set("q", q).set("alpha", alpha).set("M", M);
  if (count == 0) return r;
  std::optional<HorizontalRow> own;
  if (row == nullptr || row->limit() < M) {
    // few terms: per-modulus evaluation beats building the whole row
    if (count < 64) {
      r.value = deterministic_sum(1, count + 1, opts.threads, [&](std::size_t k) {
        const u64 m = k * q;
        return std::pow(static_cast<double>(m), alpha) * kloosterman_eval(a, factorize(m)).value;
      });
      return r;
    }
    own = horizontal_row(a, M, opts.threads, detail::sieve_for(M, opts));
    row = &*own;
  }
  r.value = deterministic_sum(1, count + 1, opts.threads, [&](std::size_t k) {
    const u64 m = k * q;
    return std::pow(static_cast<double>(m), alpha) * row->values[m];
  });
  return r;
}

// ---------------------------------------------------------------------------
// Vertical aspect

namespace detail {

inline bool use_table(const FactoredModulus& f, u64 N, const SumOptions& opts) {
  const u64 m = f.m();
  if (opts.vertical_path == VerticalPath::Table) return true;
  if (opts.vertical_path == VerticalPath::PerEntry || m < 2 || m > opts.table_limit) return false;
  return static_cast<double>(N) > opts.crossover * static_cast<double>(m) / std::log2(static_cast<double>(m));
}

// K_m(n) for n in [1, N] by table lookup or per-entry dispatch.
class VerticalSource {
public:
  VerticalSource(const FactoredModulus& f, u64 N, const SumOptions& opts) : f_(f) {
    if (use_table(f, N, opts)) {
      table_ = (opts.table && opts.table->modulus == f.m())
                   ? opts.table
                   : std::make_shared<const VerticalTable>(vertical_table(f, opts.table_limit));
    }
  }
  bool tabulated() const { return table_ != nullptr; }
  double operator()(u64 n) const {
    return table_ ? table_->at(static_cast<i64>(n)) : kloosterman_eval(static_cast<i64>(n), f_).value;
  }

private:
  FactoredModulus f_;
  std::shared_ptr<const VerticalTable> table_;
};

} // namespace detail

/// sum_{n <= N} xi(n) K_m(n).
inline SumReport vertical_sum(const FactoredModulus& f, const WeightSpec& w, u64 N,
                              const SumOptions& opts = {}) {
  if (N < 1) throw std::invalid_argument("vertical_sum: N must be >= 1");
  const detail::VerticalSource source(f, N, opts);
  const Weight weight = detail::bind_weight(w, detail::sieve_for(std::min<u64>(N, u64{1} << 26), opts), opts);
  SumReport r = detail::make_report("vertical", opts);
  r.value = deterministic_sum(1, N + 1, opts.threads, [&](std::size_t n) { return weight(n) * source(n); });
  r.terms = N;
  r.x = static_cast<double>(N);
  r.set("m", f.m()).set("weight", format_weight_spec(w)).set("N", N).set("path", source.tabulated() ? "table" : "per-entry");
  if (N >= f.m()) r.flag("complete-sum");
  return r;
}

/// sum_{n <= N} |K_m(n)|.
inline SumReport vertical_abs(const FactoredModulus& f, u64 N, const SumOptions& opts = {}) {
  if (N < 1) throw std::invalid_argument("vertical_abs: N must be >= 1");
  const detail::VerticalSource source(f, N, opts);
  SumReport r = detail::make_report("vertical-abs", opts);
  r.value = deterministic_sum(1, N + 1, opts.threads, [&](std::size_t n) { return std::abs(source(n)); });
  r.terms = N;
  r.x = static_cast<double>(N);
  r.set("m", f.m()).set("N", N).set("path", source.tabulated() ? "table" : "per-entry");
  return r;
}

/// sum_{n <= N} prod_j K_p(n + h_j) e(g(n)) e_p(b n), N <= p.
inline SumReport vertical_shifted_product(u64 p, const std::vector<i64>& shifts,
                                          const weights::PolynomialPhase& g, u64 N, i64 b,
                                          const SumOptions& opts = {}) {
  detail::require_prime(p, "vertical_shifted_product");
  if (shifts.empty()) throw std::invalid_argument("vertical_shifted_product: empty shift list");
  if (N < 1 || N > p) throw std::invalid_argument("vertical_shifted_product: need 1 <= N <= p");
  validate(WeightSpec{g});
  const auto table = detail::table_for(p, opts);
  const u64 br = reduce(b, p);
  SumReport r = detail::make_report("shifted-product", opts);
  r.value = deterministic_sum(1, N + 1, opts.threads, [&](std::size_t n) {
    double prod = 1.0;
    for (i64 h : shifts) prod *= table->at(static_cast<i64>(n) + h);
    const double phase = polynomial_phase_fraction(g.coefficients, n);
    return prod * e1(phase) * fft::unit_root(mulmod(br, n, p), p);
  });
  r.terms = N;
  r.x = static_cast<double>(N);
  const bool normal = is_normal_mod_p(shifts, p);
  r.set("p", p)
      .set("shifts", detail::join(shifts))
      .set("g", format_weight_spec(WeightSpec{g}))
      .set("d", g.degree())
      .set("N", N)
      .set("b", b)
      .set("normal", normal);
  if (!normal) r.flag("non-normal");
  if (N == p) r.flag("complete-sum");
  return r;
}

/// sum_{n <= N} prod_j sign K_p(n + h_j), sign(0) = 0.
inline SumReport vertical_sign_product(u64 p, const std::vector<i64>& shifts, u64 N,
                                       const SumOptions& opts = {}) {
  detail::require_prime(p, "vertical_sign_product");
  if (shifts.empty()) throw std::invalid_argument("vertical_sign_product: empty shift list");
  if (N < 1 || N > p) throw std::invalid_argument("vertical_sign_product: need 1 <= N <= p");
  const auto table = detail::table_for(p, opts);
  SumReport r = detail::make_report("sign-product", opts);
  r.value = deterministic_sum(1, N + 1, opts.threads, [&](std::size_t n) {
    int s = 1;
    for (i64 h : shifts) s *= sign_of(table->at(static_cast<i64>(n) + h));
    return static_cast<double>(s);
  });
  r.terms = N;
  r.x = static_cast<double>(N);
  const bool normal = is_normal_mod_p(shifts, p);
  r.set("p", p).set("shifts", detail::join(shifts)).set("N", N).set("normal", normal);
  r.flag("sign-zero-as-zero");
  if (!normal) r.flag("non-normal");
  return r;
}

/// sum_{n in G_s(r), n >= 1} K_p(n), indices reduced mod p.
inline SumReport digital_vertical_sum(u64 p, unsigned r, unsigned s, const SumOptions& opts = {}) {
  detail::require_prime(p, "digital_vertical_sum");
  if (r > 40) throw std::invalid_argument("digital_vertical_sum: r must be <= 40");
  if (s > r) throw std::invalid_argument("digital_vertical_sum: s must be <= r");
  const auto table = detail::table_for(p, opts);
  std::vector<u64> members = digital_members(r, s);
  if (!members.empty() && members.front() == 0) members.erase(members.begin());
  SumReport rep = detail::make_report("digital", opts);
  rep.value = deterministic_sum(0, members.size(), opts.threads,
                                [&](std::size_t i) { return table->at(static_cast<i64>(members[i] % p)); });
  rep.terms = members.size();
  rep.x = static_cast<double>(r);
  const double rho0 = rho_zero();
  const double delta = opts.digital_delta;
  const double size_ratio = r * std::log(2.0) / std::log(static_cast<double>(p));
  rep.set("p", p)
      .set("r", r)
      .set("s", s)
      .set("binomial", binomial(r, s))
      .set("delta", delta)
      .set("size_regime", std::abs(size_ratio - 1.0) <= delta)
      .set("density_regime", s >= (rho0 + delta) * r && 2 * s <= r);
  return rep;
}

/// Type I (beta absent) or Type II bilinear sum sum_{k<=K} sum_{n<=N} alpha_k beta_n K_m(kn).
inline SumReport bilinear_sum(const FactoredModulus& f, const std::vector<std::complex<double>>& alpha,
                              const std::optional<std::vector<std::complex<double>>>& beta, u64 N,
                              const SumOptions& opts = {}) {
  if (alpha.empty()) throw std::invalid_argument("bilinear_sum: alpha must be nonempty");
  if (beta) {
    if (beta->empty()) throw std::invalid_argument("bilinear_sum: beta must be nonempty");
    N = beta->size();
  }
  if (N < 1) throw std::invalid_argument("bilinear_sum: N must be >= 1");
  const u64 K = alpha.size();
  SumOptions local = opts;
  if (local.vertical_path == VerticalPath::Auto && f.m() >= 2 && f.m() <= opts.table_limit)
    local.vertical_path = VerticalPath::Table;
  const detail::VerticalSource source(f, K * N, local);
  const u64 m = f.m();
  SumReport r = detail::make_report("bilinear", opts);
  r.value = deterministic_sum(0, K * N, opts.threads, [&](std::size_t i) {
    const u64 k = i / N + 1, n = i % N + 1;
    const std::complex<double> wb = beta ? (*beta)[n - 1] : std::complex<double>(1.0);
    return alpha[k - 1] * wb * source(mulmod(k % m, n % m, m));
  });
  r.terms = K * N;
  r.set("m", m).set("K", K).set("N", N).set("type", beta ? "II" : "I");
  return r;
}

} // namespace kloosterlab
