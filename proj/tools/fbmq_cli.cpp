// Command-line front end: parses flags, runs one study, appends the record to
// <out>/records.jsonl and writes a table next to it.
//
// Exit codes: 0 success, 2 configuration error (message names the flag),
// 1 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fbmq/fbmq.hpp"

namespace fs = std::filesystem;
using namespace fbmq;

namespace {

struct Shared {
  double h = 0.75;
  double c = 1.0;
  double u = 1.0;
  std::vector<double> u_list;
  double T = 0.5;
  double S = 1.0;
  std::vector<double> s_list;
  double step = 0.0;
  double kappa = 5.0;
  std::uint64_t reps = 10000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string out = "results";
  std::string format = "csv";
};

void add_h(CLI::App* cmd, Shared& s) {
  cmd->add_option("--h", s.h, "Hurst index H of the input, dimensionless, 0 < H < 1")->capture_default_str();
}
void add_c(CLI::App* cmd, Shared& s) {
  cmd->add_option("--c", s.c, "service (drain) rate c, input units per unit time, > 0")->capture_default_str();
}
void add_u(CLI::App* cmd, Shared& s) {
  cmd->add_option("--u", s.u, "buffer level u, input units, > 0")->capture_default_str();
}
void add_u_list(CLI::App* cmd, Shared& s, std::vector<double> def) {
  s.u_list = std::move(def);
  cmd->add_option("--u", s.u_list, "buffer levels u, input units, comma separated")
      ->delimiter(',')
      ->capture_default_str();
}
void add_T(CLI::App* cmd, Shared& s, const char* what = "window length T, time units, >= 0") {
  cmd->add_option("--T", s.T, what)->capture_default_str();
}
void add_S(CLI::App* cmd, Shared& s, const char* what) { cmd->add_option("--S", s.S, what)->capture_default_str(); }
void add_s_list(CLI::App* cmd, Shared& s, std::vector<double> def) {
  s.s_list = std::move(def);
  cmd->add_option("--S", s.s_list, "window lengths S, time units, comma separated")
      ->delimiter(',')
      ->capture_default_str();
}
void add_step(CLI::App* cmd, Shared& s, const char* what = "grid step, time units; 0 picks the default") {
  cmd->add_option("--step", s.step, what)->capture_default_str();
}
void add_kappa(CLI::App* cmd, Shared& s) {
  cmd->add_option("--kappa", s.kappa, "lag horizon multiplier, dimensionless; horizon = kappa * u * tau0")
      ->capture_default_str();
}
void add_run(CLI::App* cmd, Shared& s, std::uint64_t reps) {
  s.reps = reps;
  cmd->add_option("--reps", s.reps, "Monte Carlo replicates, count")->capture_default_str();
  cmd->add_option("--seed", s.seed, "random seed, integer")->capture_default_str();
  cmd->add_option("--workers", s.workers, "worker threads, count; 0 uses all cores")->capture_default_str();
}
void add_output(CLI::App* cmd, Shared& s) {
  cmd->add_option("--out", s.out, "output directory for records.jsonl and tables")->capture_default_str();
  cmd->add_option("--format", s.format, "table format written next to the store")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
}

// --- validation ------------------------------------------------------------

Hurst hurst_flag(double h) {
  if (!(h > 0.0 && h < 1.0)) throw ConfigError("h", "Hurst index must satisfy 0 < H < 1");
  return Hurst(h);
}
void positive(const char* key, double v) {
  if (!(v > 0.0)) throw ConfigError(key, "must be positive");
}
void non_negative(const char* key, double v) {
  if (!(v >= 0.0)) throw ConfigError(key, "must be non-negative");
}
void check_run(const Shared& s, std::uint64_t min_reps = 1) {
  if (s.reps < min_reps) throw ConfigError("reps", "must be at least " + std::to_string(min_reps));
  non_negative("step", s.step);
}

// --- output ----------------------------------------------------------------

fs::path prepare_out(const Shared& s) {
  const fs::path dir(s.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + s.out + ": " + ec.message());
  return dir;
}

std::string append_record(const Shared& s, const ExperimentRecord& r) {
  const auto path = (prepare_out(s) / "records.jsonl").string();
  ExperimentStore(path).append(r);
  return path;
}

std::string write_rows(const Shared& s, const std::string& stem, const std::vector<SummaryRow>& rows) {
  const fs::path dir = prepare_out(s);
  const fs::path path = dir / (stem + (s.format == "csv" ? ".csv" : ".json"));
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  if (s.format == "csv") {
    write_summary_csv(os, rows);
  } else {
    json arr = json::array();
    for (const auto& r : rows) arr.push_back(r.to_json());
    os << arr.dump(2) << '\n';
  }
  return path.string();
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

// --- commands --------------------------------------------------------------

struct GenOpts {
  std::string method = "circulant";
};

void cmd_gen(const Shared& s, const GenOpts& g) {
  const Hurst h = hurst_flag(s.h);
  positive("T", s.T);
  const double step = s.step > 0.0 ? s.step : s.T / 1024.0;
  const auto count = static_cast<std::size_t>(std::llround(s.T / step));
  if (count < 1) throw ConfigError("step", "must not exceed the path length T");
  if (g.method != "circulant" && g.method != "cholesky") throw ConfigError("method", "expected circulant|cholesky");
  if (g.method == "cholesky" && count > kCholeskyMaxCount)
    throw ConfigError("step", "cholesky sampling is limited to " + std::to_string(kCholeskyMaxCount) + " points");

  Stopwatch sw;
  const Grid grid(step, count);
  const RngStream stream{s.seed, 0};
  const SamplePath p = g.method == "cholesky" ? sample_fbm_cholesky(grid, h, stream)
                                              : sample_fbm(build_embedding(count, h, step), stream);
  const fs::path path = prepare_out(s) / (s.format == "csv" ? "path.csv" : "path.json");
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  if (s.format == "csv") {
    write_path_csv(os, p);
  } else {
    os << json{{"step", step}, {"values", p.values}}.dump() << '\n';
  }

  ExperimentRecord r;
  r.experiment = "gen";
  r.seed = s.seed;
  r.params = {{"h", s.h}, {"T", s.T}, {"step", step}, {"method", g.method}};
  r.results = {{"points", p.values.size()}, {"file", path.filename().string()}, {"end_value", p.values.back()}};
  stamp(r, sw);
  append_record(s, r);
  std::cout << "gen H=" << s.h << " points=" << p.values.size() << " B(T)=" << fmt(p.values.back()) << " -> "
            << path.string() << '\n';
}

struct QtailOpts {
  std::string dump;
  bool no_horizon_check = false;
};

void cmd_qtail(const Shared& s, const QtailOpts& o) {
  hurst_flag(s.h);
  positive("c", s.c);
  positive("u", s.u);
  non_negative("T", s.T);
  check_run(s);
  QtailConfig q{s.h, s.c, s.u, s.T, s.step, s.kappa, s.reps, s.seed, s.workers, !o.no_horizon_check};

  std::ofstream dump;
  std::function<void(const ReplicateStat&)> on_rep;
  if (!o.dump.empty()) {
    dump.open(o.dump);
    if (!dump) throw ConfigError("dump", "cannot open " + o.dump);
    dump << std::setprecision(17);
    on_rep = [&](const ReplicateStat& r) {
      dump << json{{"stream_id", r.stream_id},
                   {"q_zero", r.stat.q_zero},
                   {"q_inf", r.stat.q_inf},
                   {"q_sup", r.stat.q_sup},
                   {"q_integral", r.stat.q_integral}}
                  .dump()
           << '\n';
    };
  }
  std::vector<SummaryRow> rows;
  const auto rec = run_qtail(q, &rows, on_rep);
  const auto store = append_record(s, rec);
  const auto table = write_rows(s, "qtail", rows);
  const auto& r = rows.front();
  std::cout << "qtail H=" << s.h << " c=" << s.c << " u=" << s.u << " T=" << s.T << ": p_inf=" << fmt(r.p_inf)
            << " p_zero=" << fmt(r.p_zero) << " p_sup=" << fmt(r.p_sup) << " (n=" << s.reps << ") -> " << store
            << ", " << table << '\n';
}

struct PickandsOpts {
  std::string phi = "sup";
  double S2 = 0.0;
  double a = 1.0;
  bool no_refine = false;
};

void cmd_pickands(const Shared& s, const PickandsOpts& o) {
  const Hurst h = hurst_flag(s.h);
  const Functional phi = Functional::parse(o.phi);
  non_negative("S", s.S);
  check_run(s, 100);
  ConstantConfig cfg{s.reps, s.seed, s.workers, !o.no_refine};
  Stopwatch sw;
  ConstantEstimate e;
  json params = {{"phi", phi.name()}, {"h", s.h}, {"S", s.S}, {"reps", s.reps}, {"workers", s.workers},
                 {"refine", cfg.refine}};
  if (phi.needs_field()) {
    positive("S", s.S);
    const double s2 = o.S2 > 0.0 ? o.S2 : s.S;
    positive("a", o.a);
    const double step = s.step > 0.0 ? s.step : std::min(s.S, s2) / 32.0;
    params["S2"] = s2;
    params["a"] = o.a;
    params["step"] = step;
    try {
      e = estimate_H_phi(FieldDomain{h, o.a, s.S, s2, step}, phi, cfg);
    } catch (const GridMismatch& g) {
      throw ConfigError("step", g.what());
    }
  } else {
    const double step = s.step > 0.0 ? s.step : (s.S > 0.0 ? s.S / 256.0 : 0.01);
    params["step"] = step;
    try {
      e = estimate_H_phi(FbmDomain{h, s.S, step}, phi, cfg);
    } catch (const GridMismatch& g) {
      throw ConfigError("step", g.what());
    }
  }
  ExperimentRecord r;
  r.experiment = "pickands";
  r.seed = s.seed;
  r.params = params;
  r.results = {{"value", e.value},         {"se", e.stderr},
               {"coarse_value", e.coarse_value}, {"refined_value", e.refined_value},
               {"refined_se", e.refined_stderr}, {"grid_step", e.grid_step},
               {"n", e.n_reps}};
  if (h.is_brownian() && !phi.needs_field()) {
    if (phi.kind == FunctionalKind::Sup) r.results["closed_form"] = analytics::brownian_pickands_sup(s.S);
    if (phi.kind == FunctionalKind::Inf) r.results["closed_form"] = analytics::brownian_pickands_inf(s.S);
  }
  stamp(r, sw);
  const auto store = append_record(s, r);
  std::cout << "pickands phi=" << phi.name() << " H=" << s.h << " S=" << s.S << ": grid=" << fmt(e.value) << " +- "
            << fmt(e.stderr) << " refined=" << fmt(e.refined_value) << " +- " << fmt(e.refined_stderr) << " -> "
            << store << '\n';
}

struct AsymptOpts {
  double pickands = 0.0;
};

void cmd_asympt(const Shared& s, const AsymptOpts& o) {
  const Hurst h = hurst_flag(s.h);
  positive("c", s.c);
  positive("u", s.u);
  double pickands = o.pickands;
  if (!(pickands > 0.0)) {
    if (!h.is_brownian()) throw ConfigError("pickands", "required (> 0) unless H = 1/2");
    pickands = 1.0;
  }
  const auto k = analytics::constants(h, s.c);
  const double eq1 = analytics::tail_asymptotic(s.u, {h, s.c, pickands});
  ExperimentRecord r;
  r.experiment = "asympt";
  r.params = {{"h", s.h}, {"c", s.c}, {"u", s.u}, {"S", s.S}, {"pickands", pickands}};
  r.results = {{"tau0", k.tau0}, {"A", k.A}, {"B", k.B}, {"a", k.a}, {"b", k.b}, {"tail_asymptotic", eq1}};
  std::ostringstream line;
  line << "asympt H=" << s.h << " c=" << s.c << " u=" << s.u << ": tail_asymptotic=" << std::setprecision(10) << eq1;
  if (h.is_brownian()) {
    const double exact = analytics::brownian_qzero_tail(s.u, s.c);
    r.results["exact_qzero_tail"] = exact;
    r.results["ratio_to_exact"] = eq1 / exact;
    r.results["inf_exact"] = analytics::brownian_inf_exact(s.u, s.S, s.c);
    r.results["sup_asymptotic"] = analytics::brownian_sup_asympt(s.u, s.S, s.c);
    line << " exp(-2cu)=" << exact << " ratio=" << eq1 / exact;
  }
  Stopwatch sw;
  stamp(r, sw);
  append_record(s, r);
  std::cout << line.str() << '\n';
}

struct PiterbargOpts {
  std::string rule = "power";
  double theta = 0.05;
  double exponent = 1.0 / 3.0;
  double pickands = 0.0;
  std::uint64_t pickands_reps = 100000;
};

void cmd_piterbarg(const Shared& s, const PiterbargOpts& o) {
  if (!(s.h > 0.5 && s.h < 1.0))
    throw ConfigError("h", "strong Piterbarg study requires the long-range hypothesis H > 1/2 (and H < 1)");
  positive("c", s.c);
  check_run(s);
  if (o.rule != "fixed" && o.rule != "power") throw ConfigError("rule", "expected fixed|power");
  PiterbargConfig pc;
  pc.h = s.h;
  pc.c = s.c;
  pc.u_list = s.u_list;
  pc.rule = ScalingRule{o.rule == "fixed" ? ScalingRule::Kind::FixedT : ScalingRule::Kind::PowerRule, o.theta,
                        o.exponent};
  try {
    pc.rule.check(Hurst(s.h));
  } catch (const HypothesisViolation& e) {
    throw ConfigError("exponent", e.what());
  }
  pc.kappa = s.kappa;
  pc.step = s.step;
  pc.n_reps = s.reps;
  pc.seed = s.seed;
  pc.workers = s.workers;
  pc.pickands = o.pickands;
  pc.pickands_reps = o.pickands_reps;
  std::vector<SummaryRow> rows;
  const auto rec = run_strong_piterbarg(pc, &rows);
  const auto store = append_record(s, rec);
  const auto table = write_rows(s, "piterbarg", rows);
  std::cout << "piterbarg H=" << s.h << ":";
  for (const auto& r : rows) std::cout << " u=" << r.u << " inf/zero=" << fmt(r.ratio_inf);
  std::cout << " -> " << store << ", " << table << '\n';
}

void cmd_brownian(const Shared& s) {
  positive("c", s.c);
  positive("u", s.u);
  check_run(s);
  for (double S : s.s_list) positive("S", S);
  BrownianConfig bc{s.c, s.u, s.s_list, s.step > 0 ? s.step : 0.005, s.kappa, s.reps, s.seed, s.workers};
  std::vector<SummaryRow> rows;
  const auto rec = run_brownian_counterexample(bc, &rows);
  const auto store = append_record(s, rec);
  const auto table = write_rows(s, "brownian", rows);
  std::cout << "brownian-check c=" << s.c << " u=" << s.u << ":";
  for (const auto& r : rows)
    std::cout << " S=" << r.T << " inf/zero=" << fmt(r.ratio_inf)
              << " (exact " << fmt(analytics::brownian_inf_ratio(s.c * s.c * r.T)) << ")";
  std::cout << " -> " << store << ", " << table << '\n';
}

void cmd_lemma(const Shared& s) {
  check_run(s);
  positive("S", s.S);
  LemmaCheckConfig lc;
  lc.u_list = s.u_list;
  lc.S = s.S;
  lc.n_reps = s.reps;
  lc.seed = s.seed;
  lc.workers = s.workers;
  const auto rec = run_pickands_lemma_check(lc);
  const auto store = append_record(s, rec);
  std::cout << "lemma-check S=" << s.S << ":";
  for (const auto& row : rec.results["rows"]) std::cout << " u=" << row["u"] << " ratio=" << fmt(row["ratio"]);
  std::cout << " -> " << store << '\n';
}

void cmd_sandwich(const Shared& s) {
  hurst_flag(s.h);
  positive("c", s.c);
  positive("u", s.u);
  positive("T", s.T);
  check_run(s);
  SandwichConfig sc{s.h, s.c, s.u, s.T, s.step, s.kappa, s.reps, s.seed, s.workers};
  const auto rec = run_integral_sandwich(sc);
  const auto store = append_record(s, rec);
  std::cout << "sandwich H=" << s.h << " u=" << s.u << " T=" << s.T
            << ": p_inf=" << fmt(rec.results["p_inf"]["p"]) << " p_integral=" << fmt(rec.results["p_integral"]["p"])
            << " p_sup=" << fmt(rec.results["p_sup"]["p"]) << " violations=" << rec.results["sandwich_violations"]
            << " -> " << store << '\n';
}

void cmd_report(const Shared& s) {
  const auto path = (fs::path(s.out) / "records.jsonl").string();
  if (!fs::exists(path)) throw ConfigError("out", "no records.jsonl in " + s.out);
  const auto records = ExperimentStore(path).read_all();
  std::vector<SummaryRow> rows;
  std::map<std::string, int> per_kind;
  for (const auto& r : records) {
    ++per_kind[r.experiment];
    if (r.results.contains("rows") && r.experiment != "pickands_lemma_check")
      for (const auto& j : r.results["rows"]) rows.push_back(SummaryRow::from_json(j));
  }
  const auto table = write_rows(s, "summary", rows);
  std::cout << "report " << records.size() << " records (";
  bool first = true;
  for (const auto& [k, n] : per_kind) {
    std::cout << (first ? "" : ", ") << k << ": " << n;
    first = false;
  }
  std::cout << "), " << rows.size() << " summary rows -> " << table << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fbmq: storage processes with fractional Brownian input, Pickands-type constants and tail studies"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every command");

  // One option set per command so per-command defaults do not collide.
  Shared sg, sq, sp, sa, spi, sb, sl, ss, sr;

  auto* gen = app.add_subcommand("gen", "sample one fBm path on [0,T] and dump it");
  GenOpts go;
  add_h(gen, sg);
  add_T(gen, sg, "path length T, time units, > 0");
  add_step(gen, sg, "grid step, time units; 0 gives T/1024");
  gen->add_option("--method", go.method, "sampler: circulant|cholesky")->capture_default_str();
  gen->add_option("--seed", sg.seed, "random seed, integer")->capture_default_str();
  add_output(gen, sg);

  auto* qtail = app.add_subcommand("qtail", "tail probabilities of inf, Q(0) and sup of Q over [0,T]");
  QtailOpts qo;
  add_h(qtail, sq);
  add_c(qtail, sq);
  add_u(qtail, sq);
  add_T(qtail, sq);
  add_step(qtail, sq);
  add_kappa(qtail, sq);
  add_run(qtail, sq, 10000);
  qtail->add_option("--dump", qo.dump, "optional JSON-lines file with one line per replicate");
  qtail->add_flag("--no-horizon-check", qo.no_horizon_check, "skip the rerun with twice the lag horizon");
  add_output(qtail, sq);

  auto* pick = app.add_subcommand("pickands", "estimate E exp(Phi(sqrt2 eta - sigma^2)) by Monte Carlo");
  PickandsOpts po;
  pick->add_option("--phi", po.phi, "functional: sup|inf|infsup|integral")->capture_default_str();
  add_h(pick, sp);
  add_S(pick, sp, "interval length S (first coordinate for infsup), time units, >= 0");
  pick->add_option("--S2", po.S2, "infsup only: second-coordinate length, time units; 0 uses S");
  pick->add_option("--a", po.a, "infsup only: field coefficient a, dimensionless, > 0")->capture_default_str();
  add_step(pick, sp, "grid step, time units; 0 gives S/256 (S/32 for infsup)");
  pick->add_flag("--no-refine", po.no_refine, "skip the coarse grid and the two-grid extrapolation");
  add_run(pick, sp, 100000);
  add_output(pick, sp);

  auto* asympt = app.add_subcommand("asympt", "closed-form asymptotic constants and tail approximation");
  AsymptOpts ao;
  add_h(asympt, sa);
  add_c(asympt, sa);
  add_u(asympt, sa);
  add_S(asympt, sa, "window length S for the Brownian formulas, time units");
  asympt->add_option("--pickands", ao.pickands, "Pickands constant, dimensionless; defaults to 1 at H = 1/2");
  add_output(asympt, sa);

  auto* pit = app.add_subcommand("piterbarg", "strong Piterbarg study: inf, Q(0), sup tails with shrinking windows");
  PiterbargOpts pio;
  add_h(pit, spi);
  add_c(pit, spi);
  add_u_list(pit, spi, {2.0, 3.0, 4.0});
  pit->add_option("--rule", pio.rule, "window rule: power (theta u^e / log(e+u)) | fixed (theta)")
      ->capture_default_str();
  pit->add_option("--theta", pio.theta, "window scale theta, time units")->capture_default_str();
  pit->add_option("--exponent", pio.exponent, "power-rule exponent e, must be < (2H-1)/H")->capture_default_str();
  add_step(pit, spi, "grid step, time units; 0 gives min(default, T(u)/8)");
  add_kappa(pit, spi);
  add_run(pit, spi, 100000);
  pit->add_option("--pickands", pio.pickands, "Pickands constant for the prediction; 0 estimates it");
  pit->add_option("--pickands-reps", pio.pickands_reps, "replicates for that estimate, count")->capture_default_str();
  add_output(pit, spi);

  auto* bro = app.add_subcommand("brownian-check", "H = 1/2: exact infimum ratio and sup asymptotics");
  add_c(bro, sb);
  add_u(bro, sb);
  add_s_list(bro, sb, {0.5, 1.0});
  add_step(bro, sb, "grid step, time units; 0 gives 0.005");
  add_kappa(bro, sb);
  add_run(bro, sb, 100000);
  add_output(bro, sb);

  auto* lem = app.add_subcommand("lemma-check", "local Pickands lemma for the stationary process r(t)=exp(-|t|)");
  add_u_list(lem, sl, {2.0, 2.5, 3.0});
  add_S(lem, sl, "interval length S on the local time scale, > 0");
  add_run(lem, sl, 1000000);
  add_output(lem, sl);

  auto* sand = app.add_subcommand("sandwich", "integral of Q over [0,T] between inf and sup");
  add_h(sand, ss);
  add_c(sand, ss);
  add_u(sand, ss);
  add_T(sand, ss);
  add_step(sand, ss);
  add_kappa(sand, ss);
  add_run(sand, ss, 100000);
  add_output(sand, ss);

  auto* rep = app.add_subcommand("report", "collect summary rows from the store into one table");
  add_output(rep, sr);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) cmd_gen(sg, go);
    else if (*qtail) cmd_qtail(sq, qo);
    else if (*pick) cmd_pickands(sp, po);
    else if (*asympt) cmd_asympt(sa, ao);
    else if (*pit) cmd_piterbarg(spi, pio);
    else if (*bro) cmd_brownian(sb);
    else if (*lem) cmd_lemma(sl);
    else if (*sand) cmd_sandwich(ss);
    else if (*rep) cmd_report(sr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const HypothesisViolation& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
