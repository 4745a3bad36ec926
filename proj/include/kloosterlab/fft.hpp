#pragma once

// Complex DFT of arbitrary length. Power-of-two lengths use an iterative
// radix-2 transform; every other length goes through the chirp-z (Bluestein)
// reduction to a power-of-two circular convolution.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace kloosterlab::fft {

using cplx = std::complex<double>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// e(num / den) = exp(2 pi i num / den) with num reduced into [0, den) first.
inline cplx unit_root(std::uint64_t num, std::uint64_t den) {
  num %= den;
  // fold into (-den/2, den/2] so the angle stays small
  const double frac = (2 * num > den) ? -static_cast<double>(den - num) / static_cast<double>(den)
                                      : static_cast<double>(num) / static_cast<double>(den);
  const double angle = 2.0 * std::numbers::pi * frac;
  return {std::cos(angle), std::sin(angle)};
}

namespace detail {

inline void bit_reverse(std::vector<cplx>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
}

} // namespace detail

/// In-place radix-2 transform: a[k] <- sum_j a[j] e(sign * jk / n).
inline void radix2(std::vector<cplx>& a, int sign) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) throw std::invalid_argument("radix2: length must be a power of two");
  if (n == 1) return;
  detail::bit_reverse(a);
  // twiddles computed directly, not by recurrence
  std::vector<cplx> w(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const cplx r = unit_root(k, n);
    w[k] = sign > 0 ? r : std::conj(r);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2, stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const cplx u = a[i + j];
        const cplx v = a[i + j + half] * w[j * stride];
        a[i + j] = u + v;
        a[i + j + half] = u - v;
      }
    }
  }
}

/// out[k] = sum_j in[j] e(sign * jk / n) for any n >= 1.
inline std::vector<cplx> dft(const std::vector<cplx>& in, int sign) {
  const std::size_t n = in.size();
  if (n == 0) return {};
  if (is_power_of_two(n)) {
    std::vector<cplx> a = in;
    radix2(a, sign);
    return a;
  }
  // jk = (j^2 + k^2 - (k - j)^2) / 2, so with c_t = e(sign t^2 / 2n):
  // out[k] = c_k sum_j (in[j] c_j) conj(c_{k-j})
  const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(n);
  std::vector<cplx> chirp(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::uint64_t sq = (static_cast<std::uint64_t>(t) * t) % two_n;
    const cplx r = unit_root(sq, two_n);
    chirp[t] = sign > 0 ? r : std::conj(r);
  }
  const std::size_t len = next_power_of_two(2 * n - 1);
  std::vector<cplx> a(len, cplx{}), b(len, cplx{});
  for (std::size_t j = 0; j < n; ++j) a[j] = in[j] * chirp[j];
  b[0] = std::conj(chirp[0]);
  for (std::size_t t = 1; t < n; ++t) b[t] = b[len - t] = std::conj(chirp[t]);
  radix2(a, -1);
  radix2(b, -1);
  for (std::size_t i = 0; i < len; ++i) a[i] *= b[i];
  radix2(a, +1);
  std::vector<cplx> out(n);
  const double scale = 1.0 / static_cast<double>(len);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * scale * chirp[k];
  return out;
}

} // namespace kloosterlab::fft
