// kloosterlab: evaluate Kloosterman sums and their correlation sums, attach
// bound envelopes, and run the invariant suites.

#include "kloosterlab/kloosterlab.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace kl = kloosterlab;

namespace {

struct GlobalFlags {
  std::string config;
  double theta = kl::kDefaultTheta;
  unsigned threads = 1;
  std::string format = "csv";
  std::string output;
  std::string cache_dir;
  kl::u64 seed = 0;
  std::string calibration;
  bool deterministic = false;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Shared state for one invocation: resolved config plus the report sink.
class Session {
public:
  explicit Session(kl::RunConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (!cfg_.output.empty()) {
      file_ = std::make_unique<std::ofstream>(cfg_.output);
      if (!*file_) throw std::runtime_error("cannot open output file " + cfg_.output);
    }
    stamp_ = cfg_.deterministic ? std::string() : utc_timestamp();
  }

  const kl::RunConfig& config() const { return cfg_; }
  double gamma() const { return kl::gamma(cfg_.theta); }

  kl::SumOptions options() const {
    kl::SumOptions o;
    o.threads = cfg_.threads;
    o.seed = cfg_.seed;
    return o;
  }

  std::shared_ptr<const kl::VerticalTable> table(kl::u64 m) const {
    const auto dir = kl::resolve_cache_dir(cfg_);
    if (dir) return std::make_shared<const kl::VerticalTable>(kl::cached_table(*dir, kl::factorize(m)));
    return std::make_shared<const kl::VerticalTable>(kl::vertical_table(kl::factorize(m)));
  }

  void emit(kl::SumReport r) {
    r.timestamp = stamp_;
    writer().write(r);
  }

  void finish() {
    if (writer_) writer_->finish();
  }

private:
  kl::ReportWriter& writer() {
    if (!writer_) {
      std::ostream& os = file_ ? static_cast<std::ostream&>(*file_) : std::cout;
      writer_ = std::make_unique<kl::ReportWriter>(os, kl::parse_report_format(cfg_.format));
    }
    return *writer_;
  }

  kl::RunConfig cfg_;
  std::unique_ptr<std::ofstream> file_;
  std::unique_ptr<kl::ReportWriter> writer_;
  std::string stamp_;
};

kl::SumReport with_envelope(kl::SumReport r, const std::string& token, const Session& s, double fm_r) {
  if (token.empty()) return r;
  kl::EnvelopeOptions eo;
  eo.fm_r = fm_r;
  const kl::EnvelopeKind kind = kl::envelope_for(token, r, eo);
  return kl::attach(std::move(r), kind, s.gamma());
}

std::vector<kl::u64> dyadic_grid(kl::u64 lo, kl::u64 M) {
  std::vector<kl::u64> grid;
  kl::u64 x = 1;
  while (x < lo) x *= 2;
  for (; x <= M; x *= 2) grid.push_back(x);
  if (grid.empty())
    throw std::invalid_argument("no power of two in [" + std::to_string(lo) + ", " + std::to_string(M) + "]");
  return grid;
}

void print_suite(const kl::SuiteResult& r) {
  std::printf("%-12s %s  checks=%llu violations=%llu  %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL",
              static_cast<unsigned long long>(r.checks), static_cast<unsigned long long>(r.violations),
              r.detail.c_str());
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kloosterman sum evaluation, correlation sums and bound diagnostics"};
  app.set_version_flag("--version", std::string(kl::kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  auto* opt_config = app.add_option("--config", g.config, "key=value file; flags override its values");
  auto* opt_theta = app.add_option("--theta", g.theta, "exponent theta in gamma = max(1/6, 2 theta)");
  auto* opt_threads = app.add_option("--threads", g.threads, "worker threads");
  auto* opt_format = app.add_option("--format", g.format, "csv or json");
  auto* opt_output = app.add_option("--output", g.output, "output file (default stdout)");
  auto* opt_cache = app.add_option("--cache-dir", g.cache_dir, "vertical table cache (KLOOSTERLAB_CACHE overrides)");
  auto* opt_seed = app.add_option("--seed", g.seed, "random seed, recorded in every report");
  auto* opt_cal = app.add_option("--calibration", g.calibration, "calibration file for the diagnostics suite");
  auto* opt_det = app.add_flag("--deterministic", g.deterministic, "leave the timestamp field empty");
  (void)opt_config;

  // eval
  auto* eval = app.add_subcommand("eval", "K_m(a), its star value and the Weil envelope");
  kl::i64 eval_a = 0;
  kl::u64 eval_m = 1;
  eval->add_option("--a", eval_a)->required();
  eval->add_option("--m", eval_m)->required();

  // horizontal
  auto* hor = app.add_subcommand("horizontal", "sums over the modulus");
  kl::i64 hor_a = 1;
  std::string hor_weight = "unit", hor_env;
  kl::u64 hor_M = 1, hor_min = 1024;
  bool hor_star = false, hor_dyadic = false, hor_abs = false;
  double fm_r = 1.0;
  hor->add_option("--a", hor_a)->required();
  hor->add_option("--weight", hor_weight, "weight spec");
  hor->add_option("--M", hor_M)->required();
  hor->add_flag("--star", hor_star, "use K* instead of K");
  hor->add_flag("--abs", hor_abs, "absolute benchmark sum instead of the weighted sum");
  hor->add_flag("--dyadic", hor_dyadic, "one report per power of two in [--dyadic-min, M]");
  hor->add_option("--dyadic-min", hor_min, "smallest dyadic point");
  hor->add_option("--envelope", hor_env, "envelope kind to attach");
  hor->add_option("--fm-r", fm_r, "exponent r of the Fouvry-Michel lower envelopes");

  // vertical
  auto* ver = app.add_subcommand("vertical", "sums over the argument");
  kl::u64 ver_m = 2, ver_N = 1;
  std::string ver_weight = "unit", ver_env, ver_path = "auto";
  bool ver_abs = false;
  ver->add_option("--m", ver_m)->required();
  ver->add_option("--weight", ver_weight, "weight spec");
  ver->add_option("--N", ver_N)->required();
  ver->add_flag("--abs", ver_abs, "absolute benchmark sum");
  ver->add_option("--path", ver_path, "auto, table or per-entry")->check(CLI::IsMember({"auto", "table", "per-entry"}));
  ver->add_option("--envelope", ver_env, "envelope kind to attach");

  // correlate
  auto* cor = app.add_subcommand("correlate", "shifted moments and shifted products");
  kl::i64 cor_a = 1, cor_b = 0;
  kl::u64 cor_p = 0, cor_N = 0, cor_M = 0;
  std::string cor_shifts = "0", cor_exps, cor_g = "0", cor_env;
  bool cor_moment = false, cor_product = false, cor_sign = false;
  cor->add_option("--a", cor_a);
  cor->add_option("--p", cor_p);
  cor->add_option("--shifts", cor_shifts, "comma-separated shifts");
  cor->add_option("--exponents", cor_exps, "comma-separated exponents (moment)");
  cor->add_option("--g", cor_g, "polynomial phase coefficients g0,g1,... (product)");
  cor->add_option("--N", cor_N);
  cor->add_option("--M", cor_M);
  cor->add_option("--b", cor_b, "additive twist e_p(bn) (product)");
  auto* f_moment = cor->add_flag("--moment", cor_moment, "(1/M) sum prod K*_{m+h}(a)^nu");
  auto* f_product = cor->add_flag("--product", cor_product, "sum prod K_p(n+h) e(g(n)) e_p(bn)");
  auto* f_sign = cor->add_flag("--sign", cor_sign, "sum prod sign K_p(n+h)");
  f_moment->excludes(f_product)->excludes(f_sign);
  f_product->excludes(f_sign);
  cor->add_option("--envelope", cor_env, "envelope kind to attach");

  // ap
  auto* ap = app.add_subcommand("ap", "sum over m <= M, q | m of m^alpha K_m(a)");
  kl::i64 ap_a = 1;
  kl::u64 ap_q = 1, ap_M = 1;
  double ap_alpha = 0.0;
  std::string ap_env;
  ap->add_option("--a", ap_a)->required();
  ap->add_option("--q", ap_q)->required();
  ap->add_option("--alpha", ap_alpha);
  ap->add_option("--M", ap_M)->required();
  ap->add_option("--envelope", ap_env, "envelope kind to attach");

  // digital
  auto* dig = app.add_subcommand("digital", "sum of K_p(n) over n with s of r binary digits set");
  kl::u64 dig_p = 0;
  unsigned dig_r = 0, dig_s = 0;
  double dig_delta = 0.05;
  dig->add_option("--p", dig_p)->required();
  dig->add_option("--r", dig_r)->required();
  dig->add_option("--s", dig_s)->required();
  dig->add_option("--delta", dig_delta, "slack of the regime flags");

  // bilinear
  auto* bil = app.add_subcommand("bilinear", "Type I / Type II sums of K_m(kn)");
  kl::u64 bil_m = 2, bil_N = 1;
  std::string bil_alpha, bil_beta;
  bil->add_option("--m", bil_m)->required();
  bil->add_option("--alpha", bil_alpha, "comma-separated coefficients alpha_k")->required();
  bil->add_option("--beta", bil_beta, "comma-separated coefficients beta_n (Type II)");
  bil->add_option("--N", bil_N, "inner length for Type I");

  // verify
  auto* ver_cmd = app.add_subcommand("verify", "invariant suites: weil, identities, oracles, diagnostics, all");
  std::string suite = "all";
  kl::VerifyLimits lim;
  ver_cmd->add_option("suite", suite)->check(CLI::IsMember({"weil", "identities", "oracles", "diagnostics", "all"}));
  auto* opt_max_m = ver_cmd->add_option("--max-m", lim.weil_max_m, "largest modulus of the weil / identities sweeps");
  ver_cmd->add_option("--samples", lim.random_samples, "random samples for weil and dispatch checks");
  ver_cmd->add_option("--prime-powers", lim.prime_power_max_p, "largest odd prime of the closed-form check");
  ver_cmd->add_option("--dft-max-m", lim.dft_max_m, "largest modulus of the table vs direct check");
  ver_cmd->add_option("--twisted-max-p", lim.twisted_max_p, "largest prime of the complete twisted identity");
  ver_cmd->add_option("--ls-max-M", lim.linnik_selberg_max_M, "largest M of the Linnik-Selberg diagnostic");
  ver_cmd->add_option("--kfree-max-M", lim.kfree_max_M, "largest M of the kfree / phi diagnostic");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    kl::RunConfig cfg;
    if (!g.config.empty()) cfg.apply(kl::load_key_values(g.config));
    if (opt_theta->count()) cfg.theta = g.theta;
    if (opt_threads->count()) cfg.threads = g.threads;
    if (opt_format->count()) cfg.format = g.format;
    if (opt_output->count()) cfg.output = g.output;
    if (opt_cache->count()) cfg.cache_dir = g.cache_dir;
    if (opt_seed->count()) cfg.seed = g.seed;
    if (opt_cal->count()) cfg.calibration = g.calibration;
    if (opt_det->count()) cfg.deterministic = true;
    Session session(cfg);
    const kl::SumOptions opts = session.options();

    if (eval->parsed()) {
      const kl::FactoredModulus f = kl::factorize(eval_m);
      const kl::KloostermanValue v = kl::kloosterman_eval(eval_a, f);
      kl::SumReport r;
      r.kind = "eval";
      r.seed = cfg.seed;
      r.value = v.value;
      r.terms = f.phi();
      r.set("a", v.argument).set("m", f.m()).set("omega", f.omega());
      r.set("star", std::abs(v.value) / std::ldexp(1.0, static_cast<int>(f.omega())));
      session.emit(kl::attach(r, kl::envelope::Weil{f}, session.gamma()));
    } else if (hor->parsed()) {
      const kl::WeightSpec spec = kl::parse_weight_spec(hor_weight);
      const std::vector<kl::u64> grid = hor_dyadic ? dyadic_grid(hor_min, hor_M) : std::vector<kl::u64>{hor_M};
      if (hor_M < 1) throw std::invalid_argument("M must be >= 1");
      kl::SumOptions o = opts;
      o.sieve = std::make_shared<const kl::FactorSieve>(std::max<kl::u64>(hor_M, 2));
      std::shared_ptr<const kl::VerticalTable> sign_table;
      if (const auto* sp = std::get_if<kl::weights::SignProduct>(&spec)) sign_table = session.table(sp->p);
      const kl::HorizontalRow row = kl::horizontal_row(hor_a, grid.back(), cfg.threads, o.sieve);
      const kl::Weight w = sign_table ? kl::Weight(spec, o.sieve, sign_table) : kl::Weight(spec, o.sieve);
      for (kl::u64 M : grid) {
        kl::SumReport r = hor_abs ? kl::horizontal_abs(row, M, hor_star, o) : kl::horizontal_sum(row, w, M, hor_star, o);
        session.emit(with_envelope(std::move(r), hor_env, session, fm_r));
      }
    } else if (ver->parsed()) {
      const kl::FactoredModulus f = kl::factorize(ver_m);
      kl::SumOptions o = opts;
      o.vertical_path = ver_path == "table" ? kl::VerticalPath::Table
                        : ver_path == "per-entry" ? kl::VerticalPath::PerEntry
                                                  : kl::VerticalPath::Auto;
      const kl::WeightSpec spec = kl::parse_weight_spec(ver_weight);
      if (kl::detail::use_table(f, ver_N, o)) o.table = session.table(ver_m);
      if (const auto* sp = std::get_if<kl::weights::SignProduct>(&spec); sp && sp->p != ver_m) {
        // the sign weight needs the row of its own prime
        if (!o.table) o.table = session.table(sp->p);
      }
      kl::SumReport r = ver_abs ? kl::vertical_abs(f, ver_N, o) : kl::vertical_sum(f, spec, ver_N, o);
      session.emit(with_envelope(std::move(r), ver_env, session, fm_r));
    } else if (cor->parsed()) {
      if (!cor_moment && !cor_product && !cor_sign)
        throw std::invalid_argument("correlate: choose one of --moment, --product, --sign");
      const std::vector<kl::i64> shifts = kl::parse_integer_list(cor_shifts);
      kl::SumReport r;
      if (cor_moment) {
        if (cor_M < 1) throw std::invalid_argument("correlate --moment needs --M >= 1");
        kl::ShiftMoment sm;
        for (kl::i64 h : shifts) {
          if (h < 0) throw std::invalid_argument("correlate --moment: shifts must be nonnegative");
          sm.shifts.push_back(static_cast<kl::u64>(h));
        }
        if (cor_exps.empty()) {
          sm.exponents.assign(shifts.size(), 1);
        } else {
          for (kl::i64 e : kl::parse_integer_list(cor_exps)) {
            if (e < 1) throw std::invalid_argument("correlate --moment: exponents must be >= 1");
            sm.exponents.push_back(static_cast<unsigned>(e));
          }
        }
        r = kl::horizontal_moment(cor_a, sm, cor_M, opts);
      } else {
        if (cor_p == 0) throw std::invalid_argument("correlate needs --p");
        if (cor_N == 0) cor_N = cor_p;
        kl::SumOptions o = opts;
        o.table = session.table(cor_p);
        if (cor_product) {
          kl::weights::PolynomialPhase poly{kl::parse_real_list(cor_g)};
          r = kl::vertical_shifted_product(cor_p, shifts, poly, cor_N, cor_b, o);
        } else {
          r = kl::vertical_sign_product(cor_p, shifts, cor_N, o);
        }
      }
      session.emit(with_envelope(std::move(r), cor_env, session, fm_r));
    } else if (ap->parsed()) {
      session.emit(with_envelope(kl::ap_sum(ap_a, ap_q, ap_alpha, ap_M, opts), ap_env, session, fm_r));
    } else if (dig->parsed()) {
      kl::SumOptions o = opts;
      o.digital_delta = dig_delta;
      o.table = session.table(dig_p);
      session.emit(kl::digital_vertical_sum(dig_p, dig_r, dig_s, o));
    } else if (bil->parsed()) {
      const auto alpha = kl::parse_complex_list(bil_alpha);
      std::optional<std::vector<std::complex<double>>> beta;
      if (!bil_beta.empty()) beta = kl::parse_complex_list(bil_beta);
      kl::SumOptions o = opts;
      o.table = session.table(bil_m);
      session.emit(kl::bilinear_sum(kl::factorize(bil_m), alpha, beta, bil_N, o));
    } else if (ver_cmd->parsed()) {
      lim.seed = cfg.seed;
      lim.threads = cfg.threads;
      lim.theta = cfg.theta;
      if (opt_max_m->count()) lim.identity_max_m = lim.weil_max_m;
      lim.dispatch_samples = lim.random_samples;
      const kl::Calibration cal = cfg.calibration.empty() ? kl::Calibration{} : kl::Calibration::load(cfg.calibration);
      std::vector<kl::SuiteResult> results;
      if (suite == "weil" || suite == "all") results.push_back(kl::verify_weil(lim));
      if (suite == "identities" || suite == "all") results.push_back(kl::verify_identities(lim));
      if (suite == "oracles" || suite == "all") results.push_back(kl::verify_oracles(lim));
      if (suite == "diagnostics" || suite == "all") results.push_back(kl::verify_diagnostics(lim, cal));
      bool ok = true;
      std::size_t reports = 0;
      for (const auto& r : results) {
        print_suite(r);
        ok = ok && r.passed;
        reports += r.reports.size();
      }
      if (reports > 0 && !cfg.output.empty()) {
        for (const auto& r : results)
          for (const auto& rep : r.reports) session.emit(rep);
      }
      session.finish();
      std::fflush(stdout);
      return ok ? 0 : 1;
    }
    session.finish();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "kloosterlab: " << e.what() << "\n";
    return 2;
  }
}
