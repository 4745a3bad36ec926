#pragma once

// Invariant suites behind `kloosterlab verify`: Weil conformance and
// realness, the exact identities, evaluator agreement against direct
// summation, and the calibrated finite-range diagnostics.

#include "kloosterlab/arith.hpp"
#include "kloosterlab/config.hpp"
#include "kloosterlab/envelopes.hpp"
#include "kloosterlab/fft.hpp"
#include "kloosterlab/kloosterman.hpp"
#include "kloosterlab/report.hpp"
#include "kloosterlab/sequences.hpp"
#include "kloosterlab/sums.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace kloosterlab {

struct SuiteResult {
  std::string name;
  bool passed = true;
  u64 checks = 0;
  u64 violations = 0;
  double worst = 0.0; ///< largest observed error or ratio, suite-specific
  std::string detail;
  std::vector<SumReport> reports;
};

struct VerifyLimits {
  u64 weil_max_m = 3000;
  u64 random_samples = 1000;
  u64 random_max_m = 1000000;
  u64 identity_max_m = 2000;
  u64 twisted_max_p = 1000;
  u64 prime_power_max_p = 50;
  u64 prime_power_max_q = 1000000;
  unsigned prime_power_samples = 20;
  u64 dispatch_samples = 1000;
  u64 dispatch_max_m = 100000;
  u64 dft_max_m = 2000;
  u64 linnik_selberg_max_M = u64{1} << 20;
  u64 kfree_max_M = u64{1} << 18;
  u64 dyadic_min_M = 1024;
  u64 seed = 0;
  unsigned threads = 1;
  double theta = kDefaultTheta;
};

/// Agreement test used by the evaluator suites: |x - y| <= tol * max(1, |y|).
inline bool close_rel(double x, double y, double tol) {
  return std::abs(x - y) <= tol * std::max(1.0, std::abs(y));
}

namespace detail {

inline void record(SuiteResult& r, bool ok, double err) {
  ++r.checks;
  if (!ok) ++r.violations;
  r.worst = std::max(r.worst, err);
}

inline void finish(SuiteResult& r) { r.passed = r.violations == 0; }

inline std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Whole row K_m(n), n = 0..m-1, by direct summation over units with the
// phases read from a table of m-th roots of unity.
inline std::vector<double> direct_row(const FactoredModulus& f) {
  const u64 m = f.m();
  if (m == 1) return {1.0};
  std::vector<double> roots(m);
  for (u64 t = 0; t < m; ++t) roots[t] = fft::unit_root(t, m).real();
  std::vector<u64> xs, xinv;
  for_each_unit(f, [&](u64 x, u64 xi) {
    xs.push_back(x);
    xinv.push_back(xi);
  });
  std::vector<double> row(m);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (u64 n = 0; n < m; ++n) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < xs.size(); ++i) acc.add(roots[(n * xs[i] + xinv[i]) % m]);
    row[n] = acc.value() * scale;
  }
  return row;
}

inline u64 draw(std::mt19937_64& rng, u64 lo, u64 hi) { return lo + rng() % (hi - lo + 1); }

} // namespace detail

/// |K_m(a)| <= weil_envelope(m) + 1e-9 for every m <= weil_max_m and every a,
/// through vertical tables; plus seeded random (a, m) through the dispatcher.
/// `worst` is the largest |K| / envelope; the realness residue goes in detail.
inline SuiteResult verify_weil(const VerifyLimits& lim) {
  SuiteResult r;
  r.name = "weil";
  double max_imag = 0.0;
  std::vector<u64> ms(lim.weil_max_m);
  for (u64 i = 0; i < ms.size(); ++i) ms[i] = i + 1;
  std::vector<double> worst_by_m(ms.size(), 0.0), imag_by_m(ms.size(), 0.0);
  std::vector<u64> bad_by_m(ms.size(), 0);
  parallel_for_blocks(ms.size(), lim.threads, [&](std::size_t i) {
    const u64 m = ms[i];
    const FactoredModulus f = factorize(m);
    const double env = weil_envelope(f);
    if (m == 1) {
      worst_by_m[i] = 1.0 / env;
      return;
    }
    const VerticalTable t = vertical_table(f);
    imag_by_m[i] = t.max_imag_residue;
    for (double v : t.values) {
      if (!(std::abs(v) <= env + 1e-9)) ++bad_by_m[i];
      worst_by_m[i] = std::max(worst_by_m[i], std::abs(v) / env);
    }
  });
  for (std::size_t i = 0; i < ms.size(); ++i) {
    r.checks += ms[i];
    r.violations += bad_by_m[i];
    r.worst = std::max(r.worst, worst_by_m[i]);
    max_imag = std::max(max_imag, imag_by_m[i]);
  }
  std::mt19937_64 rng(lim.seed);
  for (u64 s = 0; s < lim.random_samples; ++s) {
    const u64 m = detail::draw(rng, 1, lim.random_max_m);
    const u64 a = detail::draw(rng, 0, m - 1);
    const FactoredModulus f = factorize(m);
    const KloostermanValue v = kloosterman_eval(static_cast<i64>(a), f);
    const double env = weil_envelope(f);
    detail::record(r, std::abs(v.value) <= env + 1e-9, std::abs(v.value) / env);
    max_imag = std::max(max_imag, v.imag_residue);
  }
  if (!(max_imag < kRealnessTolerance)) ++r.violations;
  r.detail = "max |K|/envelope " + detail::format_g(r.worst) + ", max imaginary residue " + detail::format_g(max_imag);
  detail::finish(r);
  return r;
}

/// Orthogonality, Parseval and Ramanujan for every m <= identity_max_m,
/// twisted multiplicativity on the tables (CRT), and the complete twisted
/// sum |sum_n K_p(n) e_p(bn)| = sqrt(p) for primes p <= twisted_max_p.
inline SuiteResult verify_identities(const VerifyLimits& lim) {
  SuiteResult r;
  r.name = "identities";
  const u64 M = lim.identity_max_m;
  std::vector<std::shared_ptr<const VerticalTable>> tables(M + 1);
  parallel_for_blocks(M + 1, lim.threads, [&](std::size_t m) {
    if (m >= 2) tables[m] = std::make_shared<const VerticalTable>(vertical_table(factorize(m)));
  });
  double worst_orth = 0, worst_pars = 0, worst_ram = 0, worst_crt = 0, worst_twist = 0;
  for (u64 m = 2; m <= M; ++m) {
    const FactoredModulus f = factorize(m);
    const VerticalTable& t = *tables[m];
    CompensatedSum sum, sq;
    for (double v : t.values) {
      sum.add(v);
      sq.add(v * v);
    }
    const double phi = static_cast<double>(f.phi());
    const double orth = std::abs(sum.value());
    const double pars = std::abs(sq.value() - phi) / phi;
    const double ram = std::abs(std::sqrt(static_cast<double>(m)) * t[0] - f.moebius());
    detail::record(r, orth <= 1e-8 * std::max(1.0, std::sqrt(static_cast<double>(m))), orth);
    detail::record(r, pars <= 1e-8, pars);
    detail::record(r, ram <= 1e-8, ram);
    worst_orth = std::max(worst_orth, orth);
    worst_pars = std::max(worst_pars, pars);
    worst_ram = std::max(worst_ram, ram);
    if (f.omega() >= 2) {
      // split off the first prime-power part
      const u64 q = f.factors().front().value(), n = m / q;
      const u64 nq = mod_inverse(static_cast<i64>(n % q), q), qn = mod_inverse(static_cast<i64>(q % n), n);
      for (u64 a = 0; a < m; ++a) {
        const double lhs = tables[q]->at(static_cast<i64>(mulmod(a % q, mulmod(nq, nq, q), q))) *
                           tables[n]->at(static_cast<i64>(mulmod(a % n, mulmod(qn, qn, n), n)));
        const double err = std::abs(lhs - t[a]);
        detail::record(r, err <= 1e-8, err);
        worst_crt = std::max(worst_crt, err);
      }
    }
  }
  SumOptions opts;
  opts.threads = 1;
  for (u64 p = 2; p <= lim.twisted_max_p; ++p) {
    if (!is_prime(p)) continue;
    opts.table = p <= M ? tables[p] : std::make_shared<const VerticalTable>(vertical_table(factorize(p)));
    const double root = std::sqrt(static_cast<double>(p));
    for (u64 b = 1; b < p; ++b) {
      const SumReport s = vertical_shifted_product(p, {0}, weights::PolynomialPhase{}, p, static_cast<i64>(b), opts);
      const double err = std::abs(std::abs(s.value) - root);
      detail::record(r, err <= 1e-6, err);
      worst_twist = std::max(worst_twist, err);
    }
  }
  r.worst = std::max({worst_orth, worst_pars, worst_ram, worst_crt, worst_twist});
  r.detail = "orthogonality " + detail::format_g(worst_orth) + ", Parseval (rel) " + detail::format_g(worst_pars) +
             ", Ramanujan " + detail::format_g(worst_ram) + ", CRT " + detail::format_g(worst_crt) +
             ", complete twisted " + detail::format_g(worst_twist);
  detail::finish(r);
  return r;
}

/// Closed form vs direct on odd prime powers, dispatcher vs direct on random
/// composite moduli, and whole-row tables vs direct rows.
inline SuiteResult verify_oracles(const VerifyLimits& lim) {
  SuiteResult r;
  r.name = "oracles";
  std::mt19937_64 rng(lim.seed);
  double worst_pp = 0, worst_disp = 0, worst_dft = 0;
  for (u64 p = 3; p <= lim.prime_power_max_p; p += 2) {
    if (!is_prime(p)) continue;
    u64 q = p * p;
    for (unsigned k = 2; q <= lim.prime_power_max_q; ++k, q *= p) {
      const FactoredModulus f = FactoredModulus::from_factors({{p, k}});
      for (unsigned s = 0; s < lim.prime_power_samples; ++s) {
        u64 a = detail::draw(rng, 1, q - 1);
        if (a % p == 0) a += 1;
        const double closed = kloosterman_prime_power(static_cast<i64>(a), p, k).value;
        const double direct = kloosterman_direct(static_cast<i64>(a), f).value;
        const double err = std::abs(closed - direct);
        detail::record(r, close_rel(closed, direct, 1e-8), err);
        worst_pp = std::max(worst_pp, err);
      }
    }
  }
  for (u64 s = 0; s < lim.dispatch_samples; ++s) {
    u64 m;
    do m = detail::draw(rng, 4, lim.dispatch_max_m);
    while (is_prime(m));
    const u64 a = detail::draw(rng, 0, m - 1);
    const FactoredModulus f = factorize(m);
    const double disp = kloosterman_eval(static_cast<i64>(a), f).value;
    const double direct = kloosterman_direct(static_cast<i64>(a), f).value;
    const double err = std::abs(disp - direct);
    detail::record(r, close_rel(disp, direct, 1e-8), err);
    worst_disp = std::max(worst_disp, err);
  }
  std::vector<double> worst_by_m(lim.dft_max_m + 1, 0.0);
  std::vector<u64> bad_by_m(lim.dft_max_m + 1, 0);
  parallel_for_blocks(lim.dft_max_m + 1, lim.threads, [&](std::size_t m) {
    if (m < 2) return;
    const FactoredModulus f = factorize(m);
    const VerticalTable t = vertical_table(f);
    const std::vector<double> row = detail::direct_row(f);
    for (u64 n = 0; n < m; ++n) {
      const double err = std::abs(t[n] - row[n]);
      if (!(err <= 1e-8)) ++bad_by_m[m];
      worst_by_m[m] = std::max(worst_by_m[m], err);
    }
  });
  for (u64 m = 2; m <= lim.dft_max_m; ++m) {
    r.checks += m;
    r.violations += bad_by_m[m];
    worst_dft = std::max(worst_dft, worst_by_m[m]);
  }
  r.worst = std::max({worst_pp, worst_disp, worst_dft});
  r.detail = "prime powers " + detail::format_g(worst_pp) + ", dispatch " + detail::format_g(worst_disp) +
             ", tables " + detail::format_g(worst_dft);
  detail::finish(r);
  return r;
}

/// Golden-ratio rotation with a single harmonic, f(t) = e(t).
inline weights::Rotation golden_rotation() {
  return weights::Rotation{std::numbers::phi - 1.0, {0.0, 1.0}};
}

/// Calibrated finite-range checks. Every computed sum is returned as a report
/// so the ratios can be plotted.
inline SuiteResult verify_diagnostics(const VerifyLimits& lim, const Calibration& cal) {
  SuiteResult r;
  r.name = "diagnostics";
  const double g = gamma(lim.theta);
  SumOptions opts;
  opts.threads = lim.threads;
  opts.seed = lim.seed;
  double worst_ls = 0, worst_c7 = 0, worst_kfree = 0, worst_phi = 0, worst_c9 = 0;
  u64 strict_failures = 0;

  // Linnik-Selberg: |H_{a,1}(M)| <= M^exponent from the calibrated M on.
  {
    const u64 L = lim.linnik_selberg_max_M;
    opts.sieve = std::make_shared<const FactorSieve>(std::max<u64>(L, 2));
    const auto rows = horizontal_rows({1, 2, 3}, L, lim.threads, opts.sieve);
    for (const auto& row : rows) {
      for (u64 M = lim.dyadic_min_M; M <= L; M *= 2) {
        SumReport s = attach(horizontal_sum(row, Weight(weights::Unit{}, opts.sieve), M, false, opts),
                             envelope::LinnikSelberg{M}, g);
        if (M >= cal.linnik_selberg_from) {
          const double expo = std::log(std::abs(s.value)) / std::log(static_cast<double>(M));
          detail::record(r, std::abs(s.value) <= std::pow(static_cast<double>(M), cal.linnik_selberg_exponent),
                         0.0);
          worst_ls = std::max(worst_ls, expo);
        }
        r.reports.push_back(std::move(s));
      }
    }
  }

  // Incomplete correlation with normal shifts (0, 1) at N = floor(p^{3/4}).
  for (u64 p : {u64{10007}, u64{100003}}) {
    const u64 N = static_cast<u64>(std::floor(std::pow(static_cast<double>(p), 0.75)));
    SumOptions local = opts;
    local.table = nullptr;
    SumReport s = attach(vertical_shifted_product(p, {0, 1}, weights::PolynomialPhase{}, N, 0, local),
                         envelope::IncompCorr{N, p}, g);
    detail::record(r, *s.ratio <= cal.incomp_c7, *s.ratio);
    worst_c7 = std::max(worst_c7, *s.ratio);
    r.reports.push_back(std::move(s));
  }

  // k-free and phi weights at a = 1, and strict cancellation against the
  // absolute benchmark for every M >= 2^10.
  {
    const u64 L = lim.kfree_max_M;
    opts.sieve = std::make_shared<const FactorSieve>(std::max<u64>(L, 2));
    const HorizontalRow row = horizontal_row(1, L, lim.threads, opts.sieve);
    for (u64 M = lim.dyadic_min_M; M <= L; M *= 2) {
      SumReport k = attach(horizontal_sum(row, Weight(weights::KFree{2}, opts.sieve), M, false, opts),
                           envelope::KFree{M, 2}, g);
      SumReport ph = attach(horizontal_sum(row, Weight(weights::EulerPhi{}, opts.sieve), M, false, opts),
                            envelope::Phi{M}, g);
      detail::record(r, *k.ratio <= cal.kfree_ratio_max, *k.ratio);
      detail::record(r, *ph.ratio <= cal.phi_ratio_max, *ph.ratio);
      worst_kfree = std::max(worst_kfree, *k.ratio);
      worst_phi = std::max(worst_phi, *ph.ratio);
      r.reports.push_back(std::move(k));
      r.reports.push_back(std::move(ph));
    }
    CompensatedSum weighted, absolute;
    for (u64 M = 1; M <= L; ++M) {
      const double v = row.values[M];
      if (kfree_indicator(2, opts.sieve->factorize(M))) weighted.add(v);
      absolute.add(std::abs(v));
      if (M >= 1024) {
        const bool ok = std::abs(weighted.value()) < absolute.value();
        ++r.checks;
        if (!ok) {
          ++r.violations;
          ++strict_failures;
        }
      }
    }
  }

  // Zero-entropy weights on the vertical aspect at p = 100003.
  {
    const u64 p = 100003;
    const u64 N = static_cast<u64>(std::floor(std::pow(static_cast<double>(p), 0.6)));
    SumOptions local = opts;
    local.sieve = nullptr;
    local.table = std::make_shared<const VerticalTable>(vertical_table(factorize(p)));
    const double bound_unit = std::sqrt(static_cast<double>(N)) * std::pow(static_cast<double>(p), 0.25) *
                              std::log(static_cast<double>(p));
    for (const WeightSpec& w : {WeightSpec{weights::ThueMorse{}}, WeightSpec{golden_rotation()}}) {
      SumReport s = vertical_sum(factorize(p), w, N, local);
      const double c = std::abs(s.value) / bound_unit;
      s.set("value_over_N", std::abs(s.value) / static_cast<double>(N));
      s.set("c9_ratio", c);
      detail::record(r, c <= cal.vertical_c9, c);
      worst_c9 = std::max(worst_c9, c);
      r.reports.push_back(std::move(s));
    }
  }

  r.worst = std::max({worst_c7, worst_kfree, worst_phi, worst_c9});
  r.detail = "Linnik-Selberg max exponent " + detail::format_g(worst_ls) + " (limit " +
             detail::format_g(cal.linnik_selberg_exponent) + "), C7 " + detail::format_g(worst_c7) + " (limit " +
             detail::format_g(cal.incomp_c7) + "), kfree " + detail::format_g(worst_kfree) + " (limit " +
             detail::format_g(cal.kfree_ratio_max) + "), phi " + detail::format_g(worst_phi) + " (limit " +
             detail::format_g(cal.phi_ratio_max) + "), C9 " + detail::format_g(worst_c9) + " (limit " +
             detail::format_g(cal.vertical_c9) + "), strict cancellation failures " +
             std::to_string(strict_failures);
  detail::finish(r);
  return r;
}

} // namespace kloosterlab
