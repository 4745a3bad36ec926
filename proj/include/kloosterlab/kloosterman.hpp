#pragma once

// Normalized Kloosterman sums
//
//   K_m(a) = m^{-1/2} sum_{x in (Z/mZ)^*} e_m(a x + xbar)
//
// evaluated by four routes: direct summation, the stationary-phase closed
// form on odd prime powers, twisted multiplicativity across the coprime
// prime-power parts of m, and a whole-row DFT giving K_m(n) for every n.
// K_1(a) is 1 for every a.

#include "kloosterlab/arith.hpp"
#include "kloosterlab/fft.hpp"
#include "kloosterlab/reduce.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace kloosterlab {

/// Largest imaginary residue tolerated before a computed value is rejected.
inline constexpr double kRealnessTolerance = 1e-8;

/// Default memory contract for whole-row tables (entries).
inline constexpr u64 kDefaultTableLimit = u64{1} << 24;

class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct KloostermanValue {
  double value = 0.0;
  u64 modulus = 1;
  u64 argument = 0;       ///< a reduced into [0, m)
  double imag_residue = 0.0; ///< |imaginary part| discarded from the accumulator
};

namespace detail {

// Visits every unit x of Z/mZ in ascending order together with its inverse.
// Inverses come from Montgomery's batch trick, one extended gcd per chunk.
template <class Visit>
void for_each_unit(const FactoredModulus& f, Visit&& visit) {
  const u64 m = f.m();
  if (m == 1) {
    visit(u64{0}, u64{0});
    return;
  }
  const bool narrow = m < (u64{1} << 32);
  auto mm = [&](u64 x, u64 y) -> u64 { return narrow ? (x * y) % m : mulmod(x, y, m); };
  constexpr std::size_t kChunk = 4096;
  std::vector<u64> xs, prefix;
  xs.reserve(kChunk);
  prefix.reserve(kChunk);
  std::vector<u64> inverses(kChunk);
  auto flush = [&] {
    if (xs.empty()) return;
    u64 inv = mod_inverse(static_cast<i64>(prefix.back()), m);
    for (std::size_t i = xs.size(); i-- > 0;) {
      inverses[i] = i == 0 ? inv : mm(inv, prefix[i - 1]);
      inv = mm(inv, xs[i]);
    }
    for (std::size_t i = 0; i < xs.size(); ++i) visit(xs[i], inverses[i]);
    xs.clear();
    prefix.clear();
  };
  for (u64 x = 1; x < m; ++x) {
    bool unit = true;
    for (const auto& pp : f.factors()) {
      if (x % pp.prime == 0) {
        unit = false;
        break;
      }
    }
    if (!unit) continue;
    prefix.push_back(prefix.empty() ? x : mm(prefix.back(), x));
    xs.push_back(x);
    if (xs.size() == kChunk) flush();
  }
  flush();
}

inline void check_realness(double imag, u64 m) {
  if (!(std::abs(imag) < kRealnessTolerance))
    throw NumericalError("realness check failed for modulus " + std::to_string(m));
}

} // namespace detail

/// Direct summation in ascending x with compensated accumulation.
inline KloostermanValue kloosterman_direct(i64 a, const FactoredModulus& f) {
  const u64 m = f.m();
  if (m == 1) return {1.0, 1, 0, 0.0};
  const u64 ar = reduce(a, m);
  CompensatedComplexSum acc;
  detail::for_each_unit(f, [&](u64 x, u64 xinv) {
    const u64 t = static_cast<u64>((static_cast<u128>(ar) * x + xinv) % m);
    acc.add(fft::unit_root(t, m));
  });
  const std::complex<double> s = acc.value() / std::sqrt(static_cast<double>(m));
  detail::check_realness(s.imag(), m);
  return {s.real(), m, ar, std::abs(s.imag())};
}

/// Closed form on q = p^k for odd p, k >= 2 and p not dividing a. The sum
/// vanishes unless a is a square mod p; otherwise the stationary points
/// +-l with l^2 = a (mod q) give 2 cos(4 pi l / q) for even k, and for odd k
/// the same with the factor (l/p), rotated by the quartic root of unity
/// when p = 3 (mod 4).
inline KloostermanValue kloosterman_prime_power(i64 a, u64 p, unsigned k) {
  if (p == 2) throw std::invalid_argument("kloosterman_prime_power: p = 2 needs direct summation");
  if (k < 2) throw std::invalid_argument("kloosterman_prime_power: k must be >= 2");
  if (!is_prime(p)) throw std::invalid_argument("kloosterman_prime_power: p must be prime");
  u64 q = 1;
  for (unsigned i = 0; i < k; ++i) {
    if (static_cast<u128>(q) * p > kMaxModulus)
      throw std::out_of_range("kloosterman_prime_power: p^k exceeds 2^62");
    q *= p;
  }
  const u64 ar = reduce(a, q);
  if (ar % p == 0) throw std::invalid_argument("kloosterman_prime_power: p divides a");
  if (jacobi_symbol(static_cast<i64>(ar % p), p) != 1) return {0.0, q, ar, 0.0};
  const u64 root = sqrt_mod_prime_power(ar, p, q);
  const std::complex<double> phase = fft::unit_root(mulmod(2, root, q), q);
  double value = 2.0 * phase.real();
  if (k % 2 == 1) {
    const int chi = jacobi_symbol(static_cast<i64>(root % p), p);
    value = (p % 4 == 1) ? chi * 2.0 * phase.real() : -chi * 2.0 * phase.imag();
  }
  return {value, q, ar, 0.0};
}

/// K_p(b) for a fixed odd prime p and any b, from the point count
///   #{x : b x + xbar = t} = 1 + (t^2 - 4b / p),
/// which gives  sqrt(p) K_p(b) = (-4b/p) + 2 sum_{t=1}^{(p-1)/2} (t^2-4b/p) cos(2 pi t/p).
/// Building costs O(p); each evaluation is one pass over (p-1)/2 table entries.
class PrimeKernel {
public:
  PrimeKernel() = default;
  explicit PrimeKernel(u64 p) { reset(p); }

  void reset(u64 p) {
    if (p < 3 || p % 2 == 0 || p >= (u64{1} << 32) || !is_prime(p))
      throw std::invalid_argument("PrimeKernel: p must be an odd prime below 2^32");
    p_ = p;
    half_ = (p - 1) / 2;
    chi_.assign(p, -1);
    chi_[0] = 0;
    square_.resize(half_ + 1);
    twice_cos_.resize(half_ + 1);
    u64 s = 0;
    for (u64 t = 1; t <= half_; ++t) {
      s += 2 * t - 1;
      if (s >= p) s -= p;
      square_[t] = static_cast<std::uint32_t>(s);
      chi_[s] = 1;
    }
    // cos(2 pi t / p) via e(hi B / p) e(lo / p): two short exact tables
    constexpr u64 kSplit = 1024;
    const u64 hi_count = half_ / kSplit + 1;
    std::vector<std::complex<double>> lo(kSplit), hi(hi_count);
    for (u64 r = 0; r < kSplit; ++r) lo[r] = fft::unit_root(r, p);
    for (u64 h = 0; h < hi_count; ++h) hi[h] = fft::unit_root(h * kSplit, p);
    for (u64 t = 0; t <= half_; ++t) {
      const auto& a = hi[t / kSplit];
      const auto& b = lo[t % kSplit];
      twice_cos_[t] = 2.0 * (a.real() * b.real() - a.imag() * b.imag());
    }
    inv_sqrt_p_ = 1.0 / std::sqrt(static_cast<double>(p));
  }

  u64 prime() const { return p_; }

  /// Normalized K_p(b).
  double operator()(u64 b) const {
    b %= p_;
    if (b == 0) return -inv_sqrt_p_;
    const std::uint32_t c = static_cast<std::uint32_t>(mulmod(4, b, p_));
    const std::uint32_t p = static_cast<std::uint32_t>(p_);
    CompensatedSum acc;
    acc.add(static_cast<double>(chi_[p - c]));
    const std::uint32_t shift = p - c;
    auto term = [&](u64 t) {
      std::uint32_t u = square_[t] + shift;
      u -= (u >= p) ? p : 0;
      return static_cast<double>(chi_[u]) * twice_cos_[t];
    };
    // four independent lanes per block keep the adds from serializing
    constexpr u64 kBlock = 512;
    for (u64 lo = 1; lo <= half_; lo += kBlock) {
      const u64 hi = std::min(half_ + 1, lo + kBlock);
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      u64 t = lo;
      for (; t + 4 <= hi; t += 4) {
        s0 += term(t);
        s1 += term(t + 1);
        s2 += term(t + 2);
        s3 += term(t + 3);
      }
      for (; t < hi; ++t) s0 += term(t);
      acc.add((s0 + s1) + (s2 + s3));
    }
    return acc.value() * inv_sqrt_p_;
  }

private:
  u64 p_ = 0;
  u64 half_ = 0;
  std::vector<std::int8_t> chi_;
  std::vector<std::uint32_t> square_;
  std::vector<double> twice_cos_;
  double inv_sqrt_p_ = 0.0;
};

/// Read-only kernels for every odd prime up to a bound, built once.
class KernelCache {
public:
  KernelCache() = default;
  explicit KernelCache(u64 bound) : bound_(bound) {
    kernels_.resize(bound + 1);
    for (u64 p = 3; p <= bound; p += 2)
      if (is_prime(p)) kernels_[p] = std::make_unique<PrimeKernel>(p);
  }
  const PrimeKernel* find(u64 p) const {
    return p <= bound_ && p < kernels_.size() ? kernels_[p].get() : nullptr;
  }

private:
  u64 bound_ = 0;
  std::vector<std::unique_ptr<PrimeKernel>> kernels_;
};

namespace detail {

// Value on one prime-power part q = p^e of the modulus at argument b.
inline double prime_power_part(u64 b, const PrimePower& pp, const KernelCache* cache) {
  const u64 q = pp.value();
  b %= q;
  if (pp.prime != 2) {
    if (pp.exponent == 1 && pp.prime < (u64{1} << 32)) {
      if (cache != nullptr) {
        if (const PrimeKernel* k = cache->find(pp.prime)) return (*k)(b);
      }
      return PrimeKernel(pp.prime)(b);
    }
    if (pp.exponent >= 2 && b % pp.prime != 0)
      return kloosterman_prime_power(static_cast<i64>(b), pp.prime, pp.exponent).value;
  }
  return kloosterman_direct(static_cast<i64>(b), FactoredModulus::from_factors({pp})).value;
}

// Twisted multiplicativity: for m = prod q_i,
//   K_m(a) = prod_i K_{q_i}(a * (m/q_i)^{-2} mod q_i).
inline double dispatch(u64 ar, const FactoredModulus& f, const KernelCache* cache) {
  const u64 m = f.m();
  double value = 1.0;
  for (const auto& pp : f.factors()) {
    const u64 q = pp.value();
    const u64 co = m / q;
    const u64 inv = mod_inverse(static_cast<i64>(co % q), q);
    const u64 b = mulmod(ar % q, mulmod(inv, inv, q), q);
    value *= prime_power_part(b, pp, cache);
  }
  return value;
}

} // namespace detail

/// Twisted-multiplicativity dispatcher: closed form on odd prime powers not
/// dividing the argument, the point-count kernel on odd primes, direct
/// summation otherwise.
inline KloostermanValue kloosterman_eval(i64 a, const FactoredModulus& f,
                                         const KernelCache* cache = nullptr) {
  const u64 m = f.m();
  if (m == 1) return {1.0, 1, 0, 0.0};
  const u64 ar = reduce(a, m);
  return {detail::dispatch(ar, f, cache), m, ar, 0.0};
}

/// |K_m(a)| / 2^omega(m).
inline double kloosterman_star(i64 a, const FactoredModulus& f) {
  return std::abs(kloosterman_eval(a, f).value) / std::ldexp(1.0, static_cast<int>(f.omega()));
}

/// Entry n is K_m(n), n = 0..m-1.
struct VerticalTable {
  u64 modulus = 0;
  std::vector<double> values;
  double max_imag_residue = 0.0;

  /// K_m(n) for any integer n.
  double at(i64 n) const { return values[reduce(n, modulus)]; }
  double operator[](std::size_t n) const { return values[n]; }
  std::size_t size() const { return values.size(); }
};

/// Length-m DFT of g(x) = e_m(xbar) on units (0 elsewhere), scaled by m^{-1/2}.
inline VerticalTable vertical_table(const FactoredModulus& f, u64 limit = kDefaultTableLimit) {
  const u64 m = f.m();
  if (m < 2) throw std::invalid_argument("vertical_table: modulus must be >= 2");
  if (m > limit)
    throw std::length_error("vertical_table: modulus " + std::to_string(m) +
                            " exceeds the table limit " + std::to_string(limit));
  std::vector<fft::cplx> g(m, fft::cplx{});
  detail::for_each_unit(f, [&](u64 x, u64 xinv) { g[x] = fft::unit_root(xinv, m); });
  const std::vector<fft::cplx> spectrum = fft::dft(g, +1);
  VerticalTable t;
  t.modulus = m;
  t.values.resize(m);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (u64 n = 0; n < m; ++n) {
    t.values[n] = spectrum[n].real() * scale;
    t.max_imag_residue = std::max(t.max_imag_residue, std::abs(spectrum[n].imag()) * scale);
  }
  detail::check_realness(t.max_imag_residue, m);
  return t;
}

/// K_m(a) for every m in [1, limit] at a fixed argument: the horizontal row.
struct HorizontalRow {
  i64 argument = 0;
  std::vector<double> values; ///< index m; values[0] unused
  std::vector<std::uint8_t> omega;
  std::shared_ptr<const FactorSieve> sieve;

  u64 limit() const { return values.empty() ? 0 : values.size() - 1; }
  double star(u64 m) const { return std::abs(values[m]) / std::ldexp(1.0, omega[m]); }
};

inline u64 isqrt(u64 n) {
  u64 r = static_cast<u64>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

/// Streams over m with a shared factor sieve, for several arguments at once.
/// Prime factors above sqrt(limit) occur at most once per m; they are
/// evaluated prime by prime over all their multiples, so each kernel is built
/// once and serves every argument. Every value is written by exactly one task,
/// so the output is identical for any thread count.
inline std::vector<HorizontalRow> horizontal_rows(const std::vector<i64>& args, u64 limit,
                                                  unsigned threads = 1,
                                                  std::shared_ptr<const FactorSieve> sieve = nullptr) {
  if (limit < 1) throw std::invalid_argument("horizontal_row: limit must be >= 1");
  if (!sieve || sieve->limit() < limit) sieve = std::make_shared<const FactorSieve>(std::max<u64>(limit, 2));
  std::vector<HorizontalRow> rows(args.size());
  std::vector<std::uint8_t> omega(limit + 1, 0);
  for (std::size_t i = 0; i < args.size(); ++i) {
    rows[i].argument = args[i];
    rows[i].sieve = sieve;
    rows[i].values.assign(limit + 1, 1.0);
  }
  const u64 split = isqrt(limit);
  const KernelCache small_kernels(split);

  const std::size_t m_blocks = (limit + kReductionBlock) / kReductionBlock;
  parallel_for_blocks(m_blocks, threads, [&](std::size_t blk) {
    const u64 lo = std::max<u64>(1, blk * kReductionBlock);
    const u64 hi = std::min<u64>(limit, (blk + 1) * kReductionBlock - 1);
    for (u64 m = lo; m <= hi; ++m) {
      const FactoredModulus f = sieve->factorize(m);
      omega[m] = static_cast<std::uint8_t>(f.omega());
      for (auto& row : rows) {
        double v = 1.0;
        for (const auto& pp : f.factors()) {
          if (pp.prime > split) continue;
          const u64 q = pp.value();
          const u64 inv = mod_inverse(static_cast<i64>((m / q) % q), q);
          const u64 b = mulmod(reduce(row.argument, q), mulmod(inv, inv, q), q);
          v *= detail::prime_power_part(b, pp, &small_kernels);
        }
        row.values[m] = v;
      }
    }
  });

  std::vector<u64> large;
  for (u64 p = split + 1; p <= limit; ++p)
    if (sieve->is_prime(p)) large.push_back(p);
  constexpr std::size_t kPrimeBlock = 64;
  const std::size_t p_blocks = (large.size() + kPrimeBlock - 1) / kPrimeBlock;
  parallel_for_blocks(p_blocks, threads, [&](std::size_t blk) {
    PrimeKernel kernel;
    const std::size_t end = std::min(large.size(), (blk + 1) * kPrimeBlock);
    for (std::size_t i = blk * kPrimeBlock; i < end; ++i) {
      const u64 p = large[i];
      if (p == 2) {
        // only reachable for limit < 4, where m = 2 is the single multiple
        for (auto& row : rows)
          row.values[2] *= kloosterman_direct(row.argument, FactoredModulus::from_factors({{2, 1}})).value;
        continue;
      }
      kernel.reset(p);
      for (u64 r = 1; r * p <= limit; ++r) {
        const u64 inv = mod_inverse(static_cast<i64>(r), p);
        const u64 inv2 = mulmod(inv, inv, p);
        for (auto& row : rows) row.values[r * p] *= kernel(mulmod(reduce(row.argument, p), inv2, p));
      }
    }
  });
  for (auto& row : rows) row.omega = omega;
  return rows;
}

inline HorizontalRow horizontal_row(i64 a, u64 limit, unsigned threads = 1,
                                    std::shared_ptr<const FactorSieve> sieve = nullptr) {
  return std::move(horizontal_rows({a}, limit, threads, std::move(sieve)).front());
}

} // namespace kloosterlab
