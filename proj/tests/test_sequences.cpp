#include "kloosterlab/sequences.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>

using namespace kloosterlab;

TEST(Weights, Examples) {
  EXPECT_EQ(weight_eval(weights::Moebius{}, 6), 1.0);
  EXPECT_EQ(weight_eval(weights::Digital{3, 1}, 2), 1.0);
  EXPECT_EQ(weight_eval(weights::Digital{3, 1}, 3), 0.0);
  EXPECT_EQ(weight_eval(weights::Digital{3, 1}, 8), 0.0);
  const auto e = weight_eval(weights::PolynomialPhase{{0.0, 0.0, 0.5}}, 3);
  EXPECT_NEAR(e.real(), -1.0, 1e-12);
  EXPECT_NEAR(e.imag(), 0.0, 1e-12);
  EXPECT_EQ(weight_eval(weights::ThueMorse{}, 3), 1.0);
  EXPECT_EQ(weight_eval(weights::ThueMorse{}, 7), -1.0);
  EXPECT_EQ(weight_eval(weights::Unit{}, 99), 1.0);
  EXPECT_EQ(weight_eval(weights::EulerPhi{}, 12), 4.0);
  EXPECT_EQ(weight_eval(weights::KFree{3}, 12), 1.0);
  EXPECT_EQ(weight_eval(weights::KFree{3}, 24), 0.0);
  EXPECT_THROW(weight_eval(weights::Unit{}, 0), std::invalid_argument);
}

TEST(Weights, KFreeTwoIsAbsMoebius) {
  const auto sieve = std::make_shared<const FactorSieve>(100000);
  const Weight k2(weights::KFree{2}, sieve), mu(weights::Moebius{}, sieve);
  for (u64 n = 1; n <= 100000; ++n) ASSERT_EQ(k2(n), std::abs(mu(n))) << n;
}

TEST(Weights, SieveAndFactorizeAgree) {
  const auto sieve = std::make_shared<const FactorSieve>(1000);
  const Weight a(weights::EulerPhi{}, sieve), b(weights::EulerPhi{});
  for (u64 n = 1; n <= 3000; ++n) ASSERT_EQ(a(n), b(n));
}

TEST(Weights, ThueMorseMatchesRecurrence) {
  // t(2n) = t(n), t(2n+1) = -t(n), t(0) = 1
  std::vector<int> t(4096);
  t[0] = 1;
  for (std::size_t n = 1; n < t.size(); ++n) t[n] = (n % 2 == 0) ? t[n / 2] : -t[n / 2];
  for (u64 n = 1; n < t.size(); ++n) ASSERT_EQ(weight_eval(weights::ThueMorse{}, n).real(), t[n]);
}

TEST(Weights, RotationBoundedByCoefficientMass) {
  const weights::Rotation rot{std::numbers::phi - 1.0, {{0.5, 0.0}, {0.25, -0.25}, {0.0, 1.0}}};
  double mass = 0;
  for (auto c : rot.coefficients) mass += std::abs(c);
  const Weight w(rot);
  for (u64 n = 1; n <= 10000; ++n) ASSERT_LE(std::abs(w(n)), mass + 1e-12);
  for (u64 n = 1; n <= 10000; ++n) ASSERT_LE(std::abs(weight_eval(weights::ThueMorse{}, n)), 1.0);
}

TEST(Weights, RotationSingleHarmonic) {
  const double alpha = std::numbers::phi - 1.0;
  const Weight w(weights::Rotation{alpha, {0.0, 1.0}});
  for (u64 n = 1; n <= 50; ++n) {
    const double t = n * alpha - std::floor(n * alpha);
    EXPECT_NEAR(w(n).real(), std::cos(2 * std::numbers::pi * t), 1e-9);
    EXPECT_NEAR(w(n).imag(), std::sin(2 * std::numbers::pi * t), 1e-9);
  }
}

TEST(Weights, PolynomialPhaseLargeArguments) {
  // g = X^2 / 3 at n = 3k is an integer, so e(g(n)) = 1 exactly
  const Weight w(weights::PolynomialPhase{{0.0, 0.0, 1.0 / 3.0}});
  for (u64 n = 3; n < 3000000; n += 300003) EXPECT_NEAR(w(n).real(), 1.0, 1e-6) << n;
  EXPECT_EQ((weights::PolynomialPhase{{0.5, 0, 0.25, 0}}.degree()), 2u);
  EXPECT_EQ((weights::PolynomialPhase{{}}.degree()), 0u);
}

TEST(Weights, ValidationRejects) {
  EXPECT_THROW(Weight(weights::KFree{1}), std::invalid_argument);
  EXPECT_THROW(Weight(weights::Digital{63, 1}), std::invalid_argument);
  EXPECT_THROW(Weight(weights::Digital{3, 4}), std::invalid_argument);
  EXPECT_THROW(Weight(weights::Rotation{1.0, {1.0}}), std::invalid_argument);
  EXPECT_THROW(Weight(weights::PolynomialPhase{{NAN}}), std::invalid_argument);
  EXPECT_THROW(Weight(weights::SignProduct{9, {0}}), std::invalid_argument);
  EXPECT_THROW(Weight(weights::SignProduct{7, {}}), std::invalid_argument);
}

TEST(Weights, SignProduct) {
  const Weight w(weights::SignProduct{7, {0, 1}});
  const auto t = vertical_table(factorize(7));
  for (u64 n = 1; n <= 20; ++n) EXPECT_EQ(w(n).real(), sign_of(t.at(n)) * sign_of(t.at(n + 1)));
  EXPECT_EQ(sign_of(0.0), 0);
  EXPECT_EQ(sign_of(1e-12), 0);
  EXPECT_EQ(sign_of(-0.3), -1);
}

TEST(Digital, Examples) {
  EXPECT_EQ(digital_members(3, 1), (std::vector<u64>{1, 2, 4}));
  EXPECT_EQ(digital_members(7, 0), (std::vector<u64>{0}));
  EXPECT_EQ(digital_members(4, 4), (std::vector<u64>{15}));
  EXPECT_THROW(digital_members(3, 4), std::invalid_argument);
}

TEST(Digital, ExhaustiveCountsAndMembership) {
  for (unsigned r = 0; r <= 20; ++r) {
    std::vector<u64> counts(r + 1, 0);
    for (u64 n = 0; n < (u64{1} << r); ++n) ++counts[oracle::popcount(n)];
    for (unsigned s = 0; s <= r; ++s) {
      const auto members = digital_members(r, s);
      ASSERT_EQ(members.size(), counts[s]);
      ASSERT_EQ(static_cast<double>(members.size()), binomial(r, s));
      ASSERT_TRUE(std::is_sorted(members.begin(), members.end()));
      for (u64 n : members) ASSERT_EQ(oracle::popcount(n), s);
    }
  }
}

TEST(Entropy, Examples) {
  EXPECT_DOUBLE_EQ(binary_entropy(0.5), 1.0);
  EXPECT_EQ(binary_entropy(0.0), 0.0);
  EXPECT_EQ(binary_entropy(1.0), 0.0);
  EXPECT_NEAR(binary_entropy(0.11002786), 0.5, 1e-7);
  EXPECT_THROW(binary_entropy(-0.1), std::invalid_argument);
  EXPECT_THROW(binary_entropy(1.5), std::invalid_argument);
  for (double g = 0.01; g < 1.0; g += 0.01) EXPECT_NEAR(binary_entropy(g), oracle::entropy(g), 1e-12);
}

TEST(Entropy, StrictlyIncreasingOnLowerHalf) {
  double prev = 0.0;
  for (int i = 1; i < 10000; ++i) {
    const double h = binary_entropy(0.5 * i / 10000.0);
    ASSERT_GT(h, prev);
    prev = h;
  }
}

TEST(RhoZero, RootOfHalfEntropy) {
  const double r = rho_zero();
  EXPECT_NEAR(r, 0.11002786, 5e-9);
  EXPECT_NEAR(binary_entropy(r), 0.5, 1e-10);
  EXPECT_LT(r, 0.5);
}

TEST(Normality, Examples) {
  EXPECT_TRUE(is_normal_mod_p({0}, 5));
  EXPECT_FALSE(is_normal_mod_p({0, 0}, 5));
  EXPECT_FALSE(is_normal_mod_p({1, 4}, 3));
  EXPECT_TRUE(is_normal_mod_p({0, 1, 1}, 5));
  EXPECT_THROW(is_normal_mod_p({}, 5), std::invalid_argument);
}

TEST(Normality, DoubledListsAndFreshResidue) {
  for (u64 p : {3ull, 7ull, 101ull}) {
    const std::vector<i64> base = {0, 2, 5, 9};
    std::vector<i64> doubled;
    for (i64 h : base) {
      doubled.push_back(h);
      doubled.push_back(h);
    }
    EXPECT_FALSE(is_normal_mod_p(doubled, p));
    // a residue class not hit by base: at most 4 classes are used
    i64 fresh = 0;
    while (std::any_of(base.begin(), base.end(), [&](i64 h) { return reduce(h - fresh, p) == 0; })) ++fresh;
    doubled.push_back(fresh);
    EXPECT_TRUE(is_normal_mod_p(doubled, p));
  }
}

TEST(Normality, PermutationInvariant) {
  std::vector<i64> h = {0, 3, 3, 8, 11};
  const bool expected = is_normal_mod_p(h, 11);
  std::sort(h.begin(), h.end());
  do ASSERT_EQ(is_normal_mod_p(h, 11), expected);
  while (std::next_permutation(h.begin(), h.end()));
}

TEST(ShiftMoment, Validation) {
  EXPECT_NO_THROW((ShiftMoment{{0, 2}, {2, 2}}.validate()));
  EXPECT_THROW((ShiftMoment{{}, {}}.validate()), std::invalid_argument);
  EXPECT_THROW((ShiftMoment{{2, 2}, {1, 1}}.validate()), std::invalid_argument);
  EXPECT_THROW((ShiftMoment{{0, 1}, {1}}.validate()), std::invalid_argument);
  EXPECT_THROW((ShiftMoment{{0}, {0}}.validate()), std::invalid_argument);
  EXPECT_TRUE((ShiftMoment{{0, 2}, {2, 4}}.all_even()));
  EXPECT_FALSE((ShiftMoment{{0, 2}, {2, 3}}.all_even()));
}

TEST(SpecText, RoundTrip) {
  for (const char* text : {"unit", "moebius", "kfree:3", "phi", "digital:12:4", "thue-morse", "poly:0.5,0,0.25",
                           "sign:p=10007:h=0,1,3", "rotation:0.618034:0,1", "rotation:0.25:1,0.5-2i,3i"}) {
    const WeightSpec spec = parse_weight_spec(text);
    EXPECT_EQ(format_weight_spec(parse_weight_spec(format_weight_spec(spec))), format_weight_spec(spec)) << text;
  }
  EXPECT_EQ(format_weight_spec(parse_weight_spec("kfree:3")), "kfree:3");
  EXPECT_EQ(format_weight_spec(parse_weight_spec("digital:12:4")), "digital:12:4");
  const auto rot = std::get<weights::Rotation>(parse_weight_spec("rotation:0.25:1,0.5-2i,3i"));
  ASSERT_EQ(rot.coefficients.size(), 3u);
  EXPECT_EQ(rot.coefficients[1], std::complex<double>(0.5, -2.0));
  EXPECT_EQ(rot.coefficients[2], std::complex<double>(0.0, 3.0));
  const auto sp = std::get<weights::SignProduct>(parse_weight_spec("sign:p=10007:h=0,1,3"));
  EXPECT_EQ(sp.p, 10007u);
  EXPECT_EQ(sp.shifts, (std::vector<i64>{0, 1, 3}));
}

TEST(SpecText, ErrorsCarryPosition) {
  auto position = [](const char* text) -> std::size_t {
    try {
      parse_weight_spec(text);
    } catch (const ParseError& e) {
      return e.position();
    }
    return std::string::npos;
  };
  EXPECT_EQ(position("bogus"), 0u);
  EXPECT_EQ(position("kfree:1"), 6u);
  EXPECT_EQ(position("kfree:x"), 6u);
  EXPECT_EQ(position("digital:3:4"), 10u);
  EXPECT_EQ(position("unit:3"), 4u);
  EXPECT_EQ(position("sign:p=10:h=0"), 7u);
  EXPECT_EQ(position("rotation:1.5:1"), 9u);
  EXPECT_EQ(position("poly:1,,2"), 7u);
}

TEST(SpecText, Lists) {
  EXPECT_EQ(parse_integer_list("0,-1,5"), (std::vector<i64>{0, -1, 5}));
  EXPECT_EQ(parse_real_list("0.5,2"), (std::vector<double>{0.5, 2.0}));
  EXPECT_EQ(parse_complex_list("1,1+1i")[1], std::complex<double>(1.0, 1.0));
  EXPECT_THROW(parse_integer_list("1,"), ParseError);
}
