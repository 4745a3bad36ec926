#pragma once

// Weight sequences xi(n) paired with Kloosterman sums, digital sets G_s(r),
// the binary entropy function, and normality of shift vectors mod p.

#include "kloosterlab/arith.hpp"
#include "kloosterlab/kloosterman.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace kloosterlab {

namespace weights {

struct Unit {};
struct Moebius {};
struct KFree {
  unsigned k = 2;
};
struct EulerPhi {};
/// Indicator of n in [0, 2^r) with exactly s set bits.
struct Digital {
  unsigned r = 0;
  unsigned s = 0;
};
/// f(n alpha mod 1) with f(t) = sum_k c_k e(k t), a trigonometric polynomial.
struct Rotation {
  double alpha = 0.0;
  std::vector<std::complex<double>> coefficients;
};
/// e(g(n)), g given by ascending coefficients g_0 + g_1 X + ...
struct PolynomialPhase {
  std::vector<double> coefficients;
  /// Index of the last nonzero coefficient (0 for the zero polynomial).
  unsigned degree() const {
    for (std::size_t i = coefficients.size(); i-- > 0;)
      if (coefficients[i] != 0.0) return static_cast<unsigned>(i);
    return 0;
  }
};
struct ThueMorse {};
/// prod_j sign K_p(n + h_j), sign(0) = 0.
struct SignProduct {
  u64 p = 0;
  std::vector<i64> shifts;
};

} // namespace weights

using WeightSpec = std::variant<weights::Unit, weights::Moebius, weights::KFree, weights::EulerPhi,
                                weights::Digital, weights::Rotation, weights::PolynomialPhase,
                                weights::ThueMorse, weights::SignProduct>;

/// Values with magnitude below this are treated as exact zeros by sign().
inline constexpr double kSignZeroThreshold = 1e-9;

inline int sign_of(double v) {
  if (std::abs(v) < kSignZeroThreshold) return 0;
  return v > 0 ? 1 : -1;
}

inline void validate(const WeightSpec& spec) {
  std::visit(
      [](const auto& w) {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, weights::KFree>) {
          if (w.k < 2) throw std::invalid_argument("kfree weight: k must be >= 2");
        } else if constexpr (std::is_same_v<T, weights::Digital>) {
          if (w.r > 62 || w.s > w.r)
            throw std::invalid_argument("digital weight: need 0 <= s <= r <= 62");
        } else if constexpr (std::is_same_v<T, weights::Rotation>) {
          if (!(w.alpha >= 0.0 && w.alpha < 1.0))
            throw std::invalid_argument("rotation weight: alpha must lie in [0, 1)");
          for (const auto& c : w.coefficients)
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
              throw std::invalid_argument("rotation weight: non-finite coefficient");
        } else if constexpr (std::is_same_v<T, weights::PolynomialPhase>) {
          for (double c : w.coefficients)
            if (!std::isfinite(c))
              throw std::invalid_argument("polynomial phase: non-finite coefficient");
        } else if constexpr (std::is_same_v<T, weights::SignProduct>) {
          if (!is_prime(w.p)) throw std::invalid_argument("sign product: p must be prime");
          if (w.shifts.empty()) throw std::invalid_argument("sign product: empty shift list");
        }
      },
      spec);
}

/// frac(g(n)) evaluated coefficient by coefficient; frac(c n^j) is built as
/// frac(frac(c n^{j-1}) n) so the integer part never accumulates.
inline double polynomial_phase_fraction(const std::vector<double>& g, u64 n) {
  long double total = 0.0L;
  const long double nn = static_cast<long double>(n);
  for (std::size_t j = 0; j < g.size(); ++j) {
    long double term = g[j] - std::floor(static_cast<long double>(g[j]));
    for (std::size_t e = 0; e < j; ++e) {
      term *= nn;
      term -= std::floor(term);
    }
    total += term;
  }
  return static_cast<double>(total - std::floor(total));
}

inline std::complex<double> e1(double t) {
  const double angle = 2.0 * std::numbers::pi * (t - std::round(t));
  return {std::cos(angle), std::sin(angle)};
}

/// A weight bound to the resources it needs: a factor sieve for the
/// arithmetic weights and the vertical row of K_p for sign products.
class Weight {
public:
  explicit Weight(WeightSpec spec, std::shared_ptr<const FactorSieve> sieve = nullptr)
      : spec_(std::move(spec)), sieve_(std::move(sieve)) {
    validate(spec_);
    if (const auto* sp = std::get_if<weights::SignProduct>(&spec_))
      table_ = std::make_shared<const VerticalTable>(vertical_table(factorize(sp->p)));
  }

  Weight(WeightSpec spec, std::shared_ptr<const FactorSieve> sieve,
         std::shared_ptr<const VerticalTable> table)
      : spec_(std::move(spec)), sieve_(std::move(sieve)), table_(std::move(table)) {
    validate(spec_);
    if (const auto* sp = std::get_if<weights::SignProduct>(&spec_)) {
      if (!table_ || table_->modulus != sp->p)
        throw std::invalid_argument("sign product: table modulus does not match p");
    }
  }

  const WeightSpec& spec() const { return spec_; }

  std::complex<double> operator()(u64 n) const {
    if (n == 0) throw std::invalid_argument("weight: n must be >= 1");
    return std::visit([&](const auto& w) { return eval(w, n); }, spec_);
  }

private:
  FactoredModulus factor(u64 n) const {
    return sieve_ && n <= sieve_->limit() ? sieve_->factorize(n) : factorize(n);
  }

  std::complex<double> eval(const weights::Unit&, u64) const { return 1.0; }
  std::complex<double> eval(const weights::Moebius&, u64 n) const {
    return static_cast<double>(factor(n).moebius());
  }
  std::complex<double> eval(const weights::KFree& w, u64 n) const {
    return static_cast<double>(kfree_indicator(w.k, factor(n)));
  }
  std::complex<double> eval(const weights::EulerPhi&, u64 n) const {
    return static_cast<double>(factor(n).phi());
  }
  std::complex<double> eval(const weights::Digital& w, u64 n) const {
    const bool in_range = w.r >= 64 || n < (u64{1} << w.r);
    return (in_range && static_cast<unsigned>(std::popcount(n)) == w.s) ? 1.0 : 0.0;
  }
  std::complex<double> eval(const weights::Rotation& w, u64 n) const {
    long double t = static_cast<long double>(n) * w.alpha;
    t -= std::floor(t);
    std::complex<double> out{};
    for (std::size_t k = 0; k < w.coefficients.size(); ++k) {
      long double kt = t * static_cast<long double>(k);
      kt -= std::floor(kt);
      out += w.coefficients[k] * e1(static_cast<double>(kt));
    }
    return out;
  }
  std::complex<double> eval(const weights::PolynomialPhase& w, u64 n) const {
    return e1(polynomial_phase_fraction(w.coefficients, n));
  }
  std::complex<double> eval(const weights::ThueMorse&, u64 n) const {
    return (std::popcount(n) % 2 == 0) ? 1.0 : -1.0;
  }
  std::complex<double> eval(const weights::SignProduct& w, u64 n) const {
    int s = 1;
    for (i64 h : w.shifts) s *= sign_of(table_->at(static_cast<i64>(n) + h));
    return static_cast<double>(s);
  }

  WeightSpec spec_;
  std::shared_ptr<const FactorSieve> sieve_;
  std::shared_ptr<const VerticalTable> table_;
};

inline std::complex<double> weight_eval(const WeightSpec& spec, u64 n) { return Weight(spec)(n); }

/// Ordered distinct shifts h_1 < ... < h_s with exponents nu_j >= 1.
struct ShiftMoment {
  std::vector<u64> shifts;
  std::vector<unsigned> exponents;

  void validate() const {
    if (shifts.empty()) throw std::invalid_argument("shift moment: need at least one shift");
    if (shifts.size() != exponents.size())
      throw std::invalid_argument("shift moment: shifts and exponents differ in length");
    for (std::size_t i = 1; i < shifts.size(); ++i)
      if (shifts[i] <= shifts[i - 1])
        throw std::invalid_argument("shift moment: shifts must be strictly increasing");
    for (unsigned e : exponents)
      if (e == 0) throw std::invalid_argument("shift moment: exponents must be >= 1");
  }
  bool all_even() const {
    for (unsigned e : exponents)
      if (e % 2 != 0) return false;
    return true;
  }
};

/// All n in [0, 2^r) with exactly s set bits, ascending.
inline std::vector<u64> digital_members(unsigned r, unsigned s) {
  if (r > 62) throw std::invalid_argument("digital_members: r must be <= 62");
  if (s > r) throw std::invalid_argument("digital_members: s must be <= r");
  std::vector<u64> out;
  if (s == 0) return {0};
  const u64 end = u64{1} << r;
  u64 v = (u64{1} << s) - 1;
  while (v < end) {
    out.push_back(v);
    // Gosper's hack: next integer with the same popcount
    const u64 c = v & (~v + 1);
    const u64 rr = v + c;
    v = (((rr ^ v) >> 2) / c) | rr;
  }
  return out;
}

inline double binomial(unsigned n, unsigned k) {
  if (k > n) return 0.0;
  double out = 1.0;
  for (unsigned i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return std::round(out);
}

/// H(g) = (-g log g - (1-g) log(1-g)) / log 2, with H(0) = H(1) = 0.
inline double binary_entropy(double g) {
  if (!(g >= 0.0 && g <= 1.0)) throw std::invalid_argument("binary_entropy: g must lie in [0, 1]");
  if (g == 0.0 || g == 1.0) return 0.0;
  return (-g * std::log(g) - (1.0 - g) * std::log1p(-g)) / std::numbers::ln2;
}

/// Root of H(t) = 1/2 on (0, 1/2) by bisection to 1e-12.
inline double rho_zero() {
  double lo = 0.0, hi = 0.5;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (binary_entropy(mid) < 0.5) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// True iff some residue class mod p holds an odd number of the shifts.
inline bool is_normal_mod_p(const std::vector<i64>& shifts, u64 p) {
  if (shifts.empty()) throw std::invalid_argument("is_normal_mod_p: empty shift list");
  if (!is_prime(p)) throw std::invalid_argument("is_normal_mod_p: p must be prime");
  std::map<u64, unsigned> counts;
  for (i64 h : shifts) ++counts[reduce(h, p)];
  for (const auto& [cls, c] : counts)
    if (c % 2 == 1) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Canonical text form: unit, moebius, kfree:3, phi, digital:12:4,
// rotation:0.618034:c0,c1,..., poly:0.5,0,0.25, thue-morse, sign:p=10007:h=0,1,3

class ParseError : public std::invalid_argument {
public:
  ParseError(const std::string& what, std::size_t position)
      : std::invalid_argument(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

private:
  std::size_t position_;
};

namespace detail {

class SpecCursor {
public:
  explicit SpecCursor(std::string_view text) : text_(text) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return done() ? '\0' : text_[pos_]; }

  void expect(char c) {
    if (peek() != c) throw ParseError(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }
  void expect_literal(std::string_view lit) {
    if (text_.substr(pos_, lit.size()) != lit)
      throw ParseError("expected '" + std::string(lit) + "'", pos_);
    pos_ += lit.size();
  }
  void expect_end() {
    if (!done()) throw ParseError("unexpected trailing input", pos_);
  }

  std::string_view word() {
    const std::size_t start = pos_;
    while (!done() && peek() != ':') ++pos_;
    return text_.substr(start, pos_ - start);
  }

  double real() {
    double v = 0.0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || !std::isfinite(v)) throw ParseError("expected a number", pos_);
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return v;
  }

  i64 integer() {
    i64 v = 0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc()) throw ParseError("expected an integer", pos_);
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return v;
  }

  u64 natural() {
    const std::size_t at = pos_;
    const i64 v = integer();
    if (v < 0) throw ParseError("expected a nonnegative integer", at);
    return static_cast<u64>(v);
  }

  // x, x+yi, x-yi
  std::complex<double> complex_number() {
    const double re = real();
    if (peek() == '+' || peek() == '-') {
      const double im = real();
      expect('i');
      return {re, im};
    }
    if (peek() == 'i') {
      ++pos_;
      return {0.0, re};
    }
    return {re, 0.0};
  }

private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

inline std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

} // namespace detail

inline WeightSpec parse_weight_spec(std::string_view text) {
  detail::SpecCursor cur(text);
  const std::size_t name_pos = cur.pos();
  const std::string_view name = cur.word();
  WeightSpec spec;
  if (name == "unit") {
    spec = weights::Unit{};
  } else if (name == "moebius") {
    spec = weights::Moebius{};
  } else if (name == "phi") {
    spec = weights::EulerPhi{};
  } else if (name == "thue-morse") {
    spec = weights::ThueMorse{};
  } else if (name == "kfree") {
    cur.expect(':');
    const std::size_t at = cur.pos();
    const u64 k = cur.natural();
    if (k < 2) throw ParseError("kfree: k must be >= 2", at);
    spec = weights::KFree{static_cast<unsigned>(k)};
  } else if (name == "digital") {
    cur.expect(':');
    const std::size_t at_r = cur.pos();
    const u64 r = cur.natural();
    cur.expect(':');
    const std::size_t at_s = cur.pos();
    const u64 s = cur.natural();
    if (r > 62) throw ParseError("digital: r must be <= 62", at_r);
    if (s > r) throw ParseError("digital: s must be <= r", at_s);
    spec = weights::Digital{static_cast<unsigned>(r), static_cast<unsigned>(s)};
  } else if (name == "rotation") {
    cur.expect(':');
    const std::size_t at = cur.pos();
    weights::Rotation rot;
    rot.alpha = cur.real();
    if (!(rot.alpha >= 0.0 && rot.alpha < 1.0)) throw ParseError("rotation: alpha must lie in [0, 1)", at);
    cur.expect(':');
    rot.coefficients.push_back(cur.complex_number());
    while (cur.peek() == ',') {
      cur.expect(',');
      rot.coefficients.push_back(cur.complex_number());
    }
    spec = std::move(rot);
  } else if (name == "poly") {
    cur.expect(':');
    weights::PolynomialPhase poly;
    poly.coefficients.push_back(cur.real());
    while (cur.peek() == ',') {
      cur.expect(',');
      poly.coefficients.push_back(cur.real());
    }
    spec = std::move(poly);
  } else if (name == "sign") {
    cur.expect(':');
    cur.expect_literal("p=");
    const std::size_t at_p = cur.pos();
    weights::SignProduct sp;
    sp.p = cur.natural();
    if (!is_prime(sp.p)) throw ParseError("sign: p must be prime", at_p);
    cur.expect(':');
    cur.expect_literal("h=");
    sp.shifts.push_back(cur.integer());
    while (cur.peek() == ',') {
      cur.expect(',');
      sp.shifts.push_back(cur.integer());
    }
    spec = std::move(sp);
  } else {
    throw ParseError("unknown weight '" + std::string(name) + "'", name_pos);
  }
  cur.expect_end();
  return spec;
}

inline std::string format_weight_spec(const WeightSpec& spec) {
  using detail::format_real;
  return std::visit(
      [](const auto& w) -> std::string {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, weights::Unit>) return "unit";
        else if constexpr (std::is_same_v<T, weights::Moebius>) return "moebius";
        else if constexpr (std::is_same_v<T, weights::EulerPhi>) return "phi";
        else if constexpr (std::is_same_v<T, weights::ThueMorse>) return "thue-morse";
        else if constexpr (std::is_same_v<T, weights::KFree>) return "kfree:" + std::to_string(w.k);
        else if constexpr (std::is_same_v<T, weights::Digital>)
          return "digital:" + std::to_string(w.r) + ":" + std::to_string(w.s);
        else if constexpr (std::is_same_v<T, weights::Rotation>) {
          std::string out = "rotation:" + format_real(w.alpha) + ":";
          for (std::size_t i = 0; i < w.coefficients.size(); ++i) {
            if (i) out += ",";
            const auto c = w.coefficients[i];
            out += format_real(c.real());
            if (c.imag() != 0.0) out += (c.imag() > 0 ? "+" : "") + format_real(c.imag()) + "i";
          }
          return out;
        } else if constexpr (std::is_same_v<T, weights::PolynomialPhase>) {
          if (w.coefficients.empty()) return "poly:0";
          std::string out = "poly:";
          for (std::size_t i = 0; i < w.coefficients.size(); ++i)
            out += (i ? "," : "") + format_real(w.coefficients[i]);
          return out;
        } else {
          std::string out = "sign:p=" + std::to_string(w.p) + ":h=";
          for (std::size_t i = 0; i < w.shifts.size(); ++i)
            out += (i ? "," : "") + std::to_string(w.shifts[i]);
          return out;
        }
      },
      spec);
}

/// Comma-separated lists in the same number syntax as weight specs.
inline std::vector<std::complex<double>> parse_complex_list(std::string_view text) {
  detail::SpecCursor cur(text);
  std::vector<std::complex<double>> out{cur.complex_number()};
  while (cur.peek() == ',') {
    cur.expect(',');
    out.push_back(cur.complex_number());
  }
  cur.expect_end();
  return out;
}

inline std::vector<i64> parse_integer_list(std::string_view text) {
  detail::SpecCursor cur(text);
  std::vector<i64> out{cur.integer()};
  while (cur.peek() == ',') {
    cur.expect(',');
    out.push_back(cur.integer());
  }
  cur.expect_end();
  return out;
}

inline std::vector<double> parse_real_list(std::string_view text) {
  detail::SpecCursor cur(text);
  std::vector<double> out{cur.real()};
  while (cur.peek() == ',') {
    cur.expect(',');
    out.push_back(cur.real());
  }
  cur.expect_end();
  return out;
}

} // namespace kloosterlab
