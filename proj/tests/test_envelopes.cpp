#include "kloosterlab/envelopes.hpp"
#include "kloosterlab/sums.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace kloosterlab;
using namespace kloosterlab::envelope;

TEST(Gamma, Examples) {
  EXPECT_EQ(kloosterlab::gamma(7.0 / 64.0), 7.0 / 32.0);
  EXPECT_EQ(kloosterlab::gamma(7.0 / 64.0), 0.21875);
  EXPECT_EQ(kloosterlab::gamma(0.0), 1.0 / 6.0);
  EXPECT_EQ(kloosterlab::gamma(1.0 / 12.0), 1.0 / 6.0);
  EXPECT_THROW(kloosterlab::gamma(-0.01), std::invalid_argument);
  EXPECT_THROW(kloosterlab::gamma(0.51), std::invalid_argument);
}

TEST(WeilEnvelope, Examples) {
  EXPECT_EQ(weil_envelope(factorize(12)), 4.0);
  EXPECT_NEAR(weil_envelope(factorize(96)), 5.65685425, 1e-8);
  EXPECT_EQ(weil_envelope(factorize(1)), 1.0);
  EXPECT_EQ(weil_envelope(factorize(64 * 3)), 8.0);
  EXPECT_NEAR(weil_envelope(factorize(128 * 5)), 8.0 * std::numbers::sqrt2, 1e-12);
  for (u64 m = 1; m <= 5000; ++m) ASSERT_DOUBLE_EQ(weil_envelope(factorize(m)), oracle::weil(m)) << m;
}

TEST(WeilEnvelope, MultiplicativeUpToTwoAdicFactor) {
  for (u64 m = 1; m <= 300; m += 2)
    for (u64 n = 1; n <= 300; ++n) {
      if (std::gcd(m, n) != 1) continue;
      ASSERT_DOUBLE_EQ(weil_envelope(factorize(m * n)), weil_envelope(factorize(m)) * weil_envelope(factorize(n)));
    }
}

TEST(Evaluate, Examples) {
  const u64 p = 10007;
  EXPECT_NEAR(evaluate(LinPoly{100, p, 0}), evaluate(CompleteCorr{p}), 1e-9);
  EXPECT_NEAR(evaluate(CompleteCorr{p}), std::sqrt(10007.0) * std::log(10007.0), 1e-9);
  EXPECT_NEAR(evaluate(IncompCorr{p, p}), std::pow(10007.0, 0.75), 1e-9);
  for (u64 M : {1ull, 1000ull, 1ull << 20})
    EXPECT_NEAR(evaluate(KFree{M, 2}), std::pow(M, 0.71875) + std::pow(M, 0.75), 1e-9 * M);
  EXPECT_NEAR(evaluate(KFree{1, 2}), 2.0, 1e-15);
  EXPECT_NEAR(evaluate(AP{4096, 1, -0.5}), std::pow(4096.0, 0.21875), 1e-12);
  EXPECT_NEAR(evaluate(TrivialAP{400, 5}), 4.0, 1e-15);
  EXPECT_NEAR(evaluate(LinnikSelberg{1 << 15}), 1024.0, 1e-9);
  EXPECT_NEAR(evaluate(Phi{1024}), std::pow(1024.0, 1.5 + 0.21875), 1e-6);
  EXPECT_NEAR(evaluate(LinPoly{1000, p, 2}),
              std::pow(1000.0, 0.75) * std::pow(10007.0, 0.125) * std::pow(std::log(10007.0), 0.25), 1e-9);
  EXPECT_NEAR(evaluate(KFree{1 << 16, 3}, kloosterlab::gamma(0.0)), std::pow(65536.0, 0.5 + 1.0 / 6) + std::pow(65536.0, 0.5 + 1.0 / 6),
              1e-6);
}

TEST(Evaluate, FouvryMichel) {
  const double M = 1 << 20, l = std::log(M), ll = std::log(l);
  EXPECT_NEAR(evaluate(FMStarLower{1 << 20, 1.0}), M * ll / l, 1e-6);
  EXPECT_NEAR(evaluate(FMAbsLower{1 << 20, 2.0}), M * ll * ll / l, 1e-6);
  EXPECT_NEAR(evaluate(FMStarUpper{1 << 20}), M * std::pow(ll / l, 1 - 4 / (3 * std::numbers::pi)), 1e-6);
  const double c = 8 / (3 * std::numbers::pi);
  EXPECT_NEAR(evaluate(FMAbsUpper{1 << 20}), M * std::pow(ll, 2 - c) / std::pow(l, 1 - c), 1e-6);
  EXPECT_THROW(evaluate(FMStarUpper{15}), std::invalid_argument);
}

TEST(Evaluate, RejectsDegenerateLogs) {
  EXPECT_THROW(evaluate(CompleteCorr{2}), std::invalid_argument);
  EXPECT_THROW(evaluate(LinPoly{10, 2, 1}), std::invalid_argument);
  EXPECT_THROW(evaluate(AP{10, 1, -1.0}), std::invalid_argument);
  EXPECT_THROW(evaluate(KFree{10, 1}), std::invalid_argument);
  EXPECT_THROW(evaluate(LinnikSelberg{0}), std::invalid_argument);
}

TEST(Evaluate, MonotoneInSize) {
  const double g = kloosterlab::gamma(kDefaultTheta);
  for (u64 x = 16; x < 4000000; x = x * 3 / 2) {
    const u64 y = x * 3 / 2;
    EXPECT_LE(evaluate(TrivialAP{x, 3}, g), evaluate(TrivialAP{y, 3}, g));
    EXPECT_LE(evaluate(AP{x, 3, 0.2}, g), evaluate(AP{y, 3, 0.2}, g));
    EXPECT_LE(evaluate(LinnikSelberg{x}, g), evaluate(LinnikSelberg{y}, g));
    EXPECT_LE(evaluate(KFree{x, 3}, g), evaluate(KFree{y, 3}, g));
    EXPECT_LE(evaluate(Phi{x}, g), evaluate(Phi{y}, g));
    EXPECT_LE(evaluate(LinPoly{x, 10007, 3}, g), evaluate(LinPoly{y, 10007, 3}, g));
    EXPECT_LE(evaluate(IncompCorr{x, 10007}, g), evaluate(IncompCorr{y, 10007}, g));
    EXPECT_LE(evaluate(FMStarLower{x, 1.0}, g), evaluate(FMStarLower{y, 1.0}, g));
    EXPECT_LE(evaluate(FMStarUpper{x}, g), evaluate(FMStarUpper{y}, g));
    EXPECT_LE(evaluate(FMAbsLower{x, 1.0}, g), evaluate(FMAbsLower{y, 1.0}, g));
    EXPECT_LE(evaluate(FMAbsUpper{x}, g), evaluate(FMAbsUpper{y}, g));
  }
}

TEST(Tokens, Stable) {
  EXPECT_EQ(envelope_token(Weil{factorize(6)}), "weil");
  EXPECT_EQ(envelope_token(TrivialAP{}), "ap-trivial");
  EXPECT_EQ(envelope_token(AP{}), "ap");
  EXPECT_EQ(envelope_token(LinnikSelberg{}), "linnik-selberg");
  EXPECT_EQ(envelope_token(KFree{}), "kfree");
  EXPECT_EQ(envelope_token(Phi{}), "phi");
  EXPECT_EQ(envelope_token(LinPoly{}), "linpoly");
  EXPECT_EQ(envelope_token(IncompCorr{}), "incomp");
  EXPECT_EQ(envelope_token(CompleteCorr{}), "complete");
  EXPECT_EQ(envelope_token(FMStarLower{}), "fm-star-lower");
  EXPECT_EQ(envelope_token(FMStarUpper{}), "fm-star-upper");
  EXPECT_EQ(envelope_token(FMAbsLower{}), "fm-abs-lower");
  EXPECT_EQ(envelope_token(FMAbsUpper{}), "fm-abs-upper");
}

TEST(Attach, RatioAndEnvelope) {
  SumReport zero;
  zero.set("M", 100);
  const SumReport z = attach(zero, LinnikSelberg{100});
  EXPECT_EQ(*z.ratio, 0.0);
  EXPECT_EQ(z.envelope_kind, "linnik-selberg");
  EXPECT_EQ(z.param("gamma"), "0.21875");

  const SumReport r = horizontal_sum(1, weights::Unit{}, 1000, false);
  const SumReport a = attach(r, LinnikSelberg{1000});
  EXPECT_NEAR(*a.envelope, 100.0, 1e-9);
  EXPECT_NEAR(*a.ratio, std::abs(r.value) / 100.0, 1e-15);
  EXPECT_FALSE(a.param("log").has_value());
  EXPECT_EQ(attach(r, FMStarUpper{1000}).param("log"), "natural");
  const SumReport v = vertical_sum(factorize(101), weights::Unit{}, 101);
  EXPECT_EQ(attach(v, CompleteCorr{101}).param("log"), "natural");
}

TEST(Attach, WeilOnSingleValues) {
  for (u64 m : {6ull, 96ull, 128ull, 9973ull}) {
    const auto f = factorize(m);
    for (i64 a : {0, 1, 2, 77}) {
      SumReport r;
      r.value = kloosterman_eval(a, f).value;
      r.set("m", m);
      EXPECT_LE(*attach(r, Weil{f}).ratio, 1.0 + 1e-9);
    }
  }
}

TEST(Attach, RejectsMismatchedParameters) {
  const SumReport r = horizontal_sum(1, weights::Unit{}, 100, false);
  EXPECT_THROW(attach(r, LinnikSelberg{200}), std::invalid_argument);
  const SumReport v = vertical_sum(factorize(101), weights::Unit{}, 50);
  EXPECT_THROW(attach(v, IncompCorr{50, 103}), std::invalid_argument);
  EXPECT_THROW(attach(v, IncompCorr{60, 101}), std::invalid_argument);
  EXPECT_NO_THROW(attach(v, IncompCorr{50, 101}));
}

TEST(Attach, NonNormalFlag) {
  const SumReport s = vertical_shifted_product(101, {0, 0}, {}, 50, 0);
  const SumReport a = attach(s, LinPoly{50, 101, 0});
  EXPECT_TRUE(a.has_flag("envelope-inapplicable"));
  EXPECT_TRUE(a.ratio.has_value());
  const SumReport n = attach(vertical_shifted_product(101, {0, 1}, {}, 50, 0), IncompCorr{50, 101});
  EXPECT_FALSE(n.has_flag("envelope-inapplicable"));
}

TEST(EnvelopeFor, BuildsFromReportParams) {
  const SumReport h = horizontal_sum(1, weights::KFree{3}, 500, false);
  const EnvelopeKind k = envelope_for("kfree", h);
  ASSERT_TRUE(std::holds_alternative<KFree>(k));
  EXPECT_EQ(std::get<KFree>(k).k, 3u);
  EXPECT_EQ(std::get<KFree>(k).M, 500u);
  const SumReport v = vertical_sum(factorize(101), weights::Unit{}, 50);
  EXPECT_EQ(std::get<IncompCorr>(envelope_for("incomp", v)).p, 101u);
  EXPECT_THROW(envelope_for("nope", h), std::invalid_argument);
  EXPECT_THROW(envelope_for("complete", h), std::invalid_argument);
  EnvelopeOptions eo;
  eo.fm_r = 2.5;
  EXPECT_EQ(std::get<FMStarLower>(envelope_for("fm-star-lower", h, eo)).r, 2.5);
}
