#pragma once

// Exact 64-bit integer arithmetic: factorization, multiplicative functions,
// modular inverses and residue symbols. Everything downstream builds on this.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kloosterlab {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

/// Largest modulus accepted anywhere in the library.
inline constexpr u64 kMaxModulus = u64{1} << 62;

class NotInvertible : public std::domain_error {
public:
  NotInvertible(i64 a, u64 m)
      : std::domain_error("not invertible: gcd(" + std::to_string(a) + ", " +
                          std::to_string(m) + ") > 1") {}
};

inline u64 mulmod(u64 a, u64 b, u64 m) {
  return static_cast<u64>((static_cast<u128>(a) * b) % m);
}

inline u64 powmod(u64 base, u64 exp, u64 m) {
  if (m == 1) return 0;
  u64 result = 1;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return result;
}

/// Reduce a signed integer into [0, m).
inline u64 reduce(i64 a, u64 m) {
  const i128 r = static_cast<i128>(a) % static_cast<i128>(m);
  return static_cast<u64>(r < 0 ? r + m : r);
}

/// a * result == 1 (mod m). For m == 1 the answer is 0.
inline u64 mod_inverse(i64 a, u64 m) {
  if (m == 0) throw std::invalid_argument("mod_inverse: modulus must be >= 1");
  if (m == 1) return 0;
  // extended Euclid; every intermediate stays below m <= 2^62 in magnitude
  i64 r0 = static_cast<i64>(m), r1 = static_cast<i64>(reduce(a, m));
  i64 s0 = 0, s1 = 1;
  while (r1 != 0) {
    const i64 q = r0 / r1;
    const i64 r2 = r0 - q * r1;
    r0 = r1;
    r1 = r2;
    const i64 s2 = s0 - q * s1;
    s0 = s1;
    s1 = s2;
  }
  if (r0 != 1) throw NotInvertible(a, m);
  i64 inv = s0 % static_cast<i64>(m);
  if (inv < 0) inv += static_cast<i64>(m);
  return static_cast<u64>(inv);
}

/// Jacobi symbol (a/n) for odd n >= 1.
inline int jacobi_symbol(i64 a_in, u64 n) {
  if (n == 0 || n % 2 == 0)
    throw std::invalid_argument("jacobi_symbol: n must be odd and positive");
  u64 a = reduce(a_in, n);
  int result = 1;
  while (a != 0) {
    while (a % 2 == 0) {
      a /= 2;
      const u64 r = n % 8;
      if (r == 3 || r == 5) result = -result;
    }
    std::swap(a, n);
    if (a % 4 == 3 && n % 4 == 3) result = -result;
    a %= n;
  }
  return n == 1 ? result : 0;
}

namespace detail {

inline bool miller_rabin_witness(u64 n, u64 a, u64 d, int s) {
  a %= n;
  if (a == 0) return false;
  u64 x = powmod(a, d, n);
  if (x == 1 || x == n - 1) return false;
  for (int r = 1; r < s; ++r) {
    x = mulmod(x, x, n);
    if (x == n - 1) return false;
  }
  return true;
}

} // namespace detail

/// Deterministic for every 64-bit input (Jaeschke/Sinclair base set).
inline bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  if (n < 37 * 37) return true;
  u64 d = n - 1;
  int s = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++s;
  }
  for (u64 a : {2ull, 325ull, 9375ull, 28178ull, 450775ull, 9780504ull, 1795265022ull}) {
    if (detail::miller_rabin_witness(n, a, d, s)) return false;
  }
  return true;
}

struct PrimePower {
  u64 prime = 0;
  unsigned exponent = 0;

  u64 value() const {
    u64 v = 1;
    for (unsigned i = 0; i < exponent; ++i) v *= prime;
    return v;
  }
  friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

/// A positive integer together with its factorization and the cached
/// multiplicative data omega, mu and phi. m == 1 has no factors, omega 0,
/// mu 1 and phi 1.
class FactoredModulus {
public:
  FactoredModulus() = default;

  /// Validates that the factors are strictly increasing primes with positive
  /// exponents and that their product stays within kMaxModulus.
  static FactoredModulus from_factors(std::vector<PrimePower> factors) {
    u64 m = 1;
    u64 prev = 0;
    for (const auto& pp : factors) {
      if (pp.exponent == 0) throw std::invalid_argument("FactoredModulus: zero exponent");
      if (pp.prime <= prev) throw std::invalid_argument("FactoredModulus: primes not increasing");
      if (!is_prime(pp.prime)) throw std::invalid_argument("FactoredModulus: composite factor");
      prev = pp.prime;
      for (unsigned i = 0; i < pp.exponent; ++i) {
        if (static_cast<u128>(m) * pp.prime > kMaxModulus)
          throw std::out_of_range("FactoredModulus: product exceeds 2^62");
        m *= pp.prime;
      }
    }
    FactoredModulus f;
    f.m_ = m;
    f.factors_ = std::move(factors);
    f.moebius_ = 1;
    f.phi_ = 1;
    for (const auto& pp : f.factors_) {
      if (pp.exponent >= 2) f.moebius_ = 0;
      else f.moebius_ = -f.moebius_;
      f.phi_ *= pp.value() / pp.prime * (pp.prime - 1);
    }
    return f;
  }

  u64 m() const { return m_; }
  const std::vector<PrimePower>& factors() const { return factors_; }
  unsigned omega() const { return static_cast<unsigned>(factors_.size()); }
  int moebius() const { return moebius_; }
  u64 phi() const { return phi_; }

  /// Exponent of p in m (0 if p does not divide m).
  unsigned valuation(u64 p) const {
    for (const auto& pp : factors_)
      if (pp.prime == p) return pp.exponent;
    return 0;
  }

  friend bool operator==(const FactoredModulus& a, const FactoredModulus& b) {
    return a.m_ == b.m_ && a.factors_ == b.factors_;
  }

private:
  u64 m_ = 1;
  std::vector<PrimePower> factors_;
  int moebius_ = 1;
  u64 phi_ = 1;
};

namespace detail {

inline constexpr u64 kTrialDivisionBound = 1'000'000;
inline constexpr u64 kDefaultRhoSeed = 0x6b6c6f6f73746572ull;

inline const std::vector<std::uint32_t>& small_primes() {
  static const std::vector<std::uint32_t> primes = [] {
    std::vector<bool> composite(kTrialDivisionBound + 1, false);
    std::vector<std::uint32_t> out;
    for (u64 i = 2; i <= kTrialDivisionBound; ++i) {
      if (composite[i]) continue;
      out.push_back(static_cast<std::uint32_t>(i));
      for (u64 j = i * i; j <= kTrialDivisionBound; j += i) composite[j] = true;
    }
    return out;
  }();
  return primes;
}

// Brent's variant of Pollard rho. n is odd, composite, and has no factor
// below the trial-division bound.
inline u64 rho_brent(u64 n, std::mt19937_64& rng) {
  std::uniform_int_distribution<u64> dist(1, n - 1);
  for (;;) {
    const u64 c = dist(rng);
    u64 y = dist(rng), x = y, q = 1, g = 1, ys = y;
    const u64 block = 128;
    u64 r = 1;
    auto f = [&](u64 v) { return (mulmod(v, v, n) + c) % n; };
    do {
      x = y;
      for (u64 i = 0; i < r; ++i) y = f(y);
      u64 k = 0;
      do {
        ys = y;
        for (u64 i = 0; i < std::min(block, r - k); ++i) {
          y = f(y);
          q = mulmod(q, x > y ? x - y : y - x, n);
        }
        g = std::gcd(q, n);
        k += block;
      } while (k < r && g == 1);
      r *= 2;
    } while (g == 1);
    if (g == n) {
      do {
        ys = f(ys);
        g = std::gcd(x > ys ? x - ys : ys - x, n);
      } while (g == 1);
    }
    if (g != n) return g;
  }
}

inline void split_large(u64 n, std::mt19937_64& rng, std::vector<u64>& primes) {
  if (n == 1) return;
  if (is_prime(n)) {
    primes.push_back(n);
    return;
  }
  const u64 d = rho_brent(n, rng);
  split_large(d, rng, primes);
  split_large(n / d, rng, primes);
}

inline std::vector<PrimePower> collect(std::vector<u64> primes) {
  std::sort(primes.begin(), primes.end());
  std::vector<PrimePower> out;
  for (u64 p : primes) {
    if (!out.empty() && out.back().prime == p) ++out.back().exponent;
    else out.push_back({p, 1});
  }
  return out;
}

} // namespace detail

/// Trial division below 10^6, then seeded Brent rho with Miller-Rabin
/// certification. Output does not depend on the seed.
inline FactoredModulus factorize(u64 m, u64 seed = detail::kDefaultRhoSeed) {
  if (m == 0) throw std::invalid_argument("factorize: m must be >= 1");
  if (m > kMaxModulus) throw std::out_of_range("factorize: m exceeds 2^62");
  std::vector<u64> primes;
  u64 rest = m;
  for (std::uint32_t p : detail::small_primes()) {
    if (static_cast<u64>(p) * p > rest) break;
    while (rest % p == 0) {
      primes.push_back(p);
      rest /= p;
    }
  }
  if (rest > 1) {
    if (rest <= detail::kTrialDivisionBound * detail::kTrialDivisionBound || is_prime(rest)) {
      primes.push_back(rest);
    } else {
      std::mt19937_64 rng(seed ^ m);
      detail::split_large(rest, rng, primes);
    }
  }
  return FactoredModulus::from_factors(detail::collect(std::move(primes)));
}

/// Smallest-prime-factor table: O(log m) factorization for m <= limit.
/// Immutable after construction, so it can be shared across threads.
class FactorSieve {
public:
  explicit FactorSieve(u64 limit) : limit_(limit), spf_(limit + 1, 0) {
    if (limit > (u64{1} << 32))
      throw std::out_of_range("FactorSieve: limit exceeds 2^32");
    // linear sieve
    std::vector<std::uint32_t> primes;
    for (u64 i = 2; i <= limit; ++i) {
      if (spf_[i] == 0) {
        spf_[i] = static_cast<std::uint32_t>(i);
        primes.push_back(static_cast<std::uint32_t>(i));
      }
      for (std::uint32_t p : primes) {
        if (p > spf_[i] || i * p > limit) break;
        spf_[i * p] = p;
      }
    }
  }

  u64 limit() const { return limit_; }

  u64 smallest_prime_factor(u64 m) const { return spf_.at(m); }

  bool is_prime(u64 m) const { return m >= 2 && m <= limit_ && spf_[m] == m; }

  FactoredModulus factorize(u64 m) const {
    if (m == 0) throw std::invalid_argument("FactorSieve::factorize: m must be >= 1");
    if (m > limit_) return kloosterlab::factorize(m);
    std::vector<PrimePower> factors;
    while (m > 1) {
      const u64 p = spf_[m];
      unsigned e = 0;
      while (m % p == 0) {
        m /= p;
        ++e;
      }
      factors.push_back({p, e});
    }
    return FactoredModulus::from_factors(std::move(factors));
  }

private:
  u64 limit_;
  std::vector<std::uint32_t> spf_;
};

/// 1 iff no exponent of f reaches k.
inline int kfree_indicator(unsigned k, const FactoredModulus& f) {
  if (k < 2) throw std::invalid_argument("kfree_indicator: k must be >= 2");
  for (const auto& pp : f.factors())
    if (pp.exponent >= k) return 0;
  return 1;
}

/// Square root of a modulo an odd prime p (Tonelli-Shanks). a must be a
/// nonzero quadratic residue.
inline u64 sqrt_mod_prime(u64 a, u64 p) {
  a %= p;
  if (a == 0) return 0;
  if (powmod(a, (p - 1) / 2, p) != 1)
    throw std::domain_error("sqrt_mod_prime: not a quadratic residue");
  if (p % 4 == 3) return powmod(a, (p + 1) / 4, p);
  u64 q = p - 1;
  unsigned s = 0;
  while (q % 2 == 0) {
    q /= 2;
    ++s;
  }
  u64 z = 2;
  while (powmod(z, (p - 1) / 2, p) != p - 1) ++z;
  u64 c = powmod(z, q, p), r = powmod(a, (q + 1) / 2, p), t = powmod(a, q, p);
  unsigned msb = s;
  while (t != 1) {
    unsigned i = 0;
    u64 tt = t;
    while (tt != 1) {
      tt = mulmod(tt, tt, p);
      ++i;
    }
    u64 b = c;
    for (unsigned j = 0; j + i + 1 < msb; ++j) b = mulmod(b, b, p);
    msb = i;
    c = mulmod(b, b, p);
    t = mulmod(t, c, p);
    r = mulmod(r, b, p);
  }
  return r;
}

/// Lift a square root of a mod p to one mod q = p^k (Hensel / Newton).
inline u64 sqrt_mod_prime_power(u64 a, u64 p, u64 q) {
  u64 root = sqrt_mod_prime(a % p, p);
  u64 mod = p;
  while (mod < q) {
    mod = (static_cast<u128>(mod) * mod > q) ? q : mod * mod;
    // root <- root - (root^2 - a) / (2 root)
    const u64 aa = a % mod;
    const u64 sq = mulmod(root, root, mod);
    const u64 diff = (sq + mod - aa) % mod;
    const u64 inv2r = mod_inverse(static_cast<i64>(mulmod(2, root, mod)), mod);
    root = (root + mod - mulmod(diff, inv2r, mod)) % mod;
  }
  return root;
}

} // namespace kloosterlab
