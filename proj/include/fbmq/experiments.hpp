#pragma once

// Monte Carlo studies confronting simulation with the limit theorems, and
// the append-only JSON-lines store that keeps their results.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbmq/analytics.hpp"
#include "fbmq/constants.hpp"
#include "fbmq/errors.hpp"
#include "fbmq/gaussgen.hpp"
#include "fbmq/parallel.hpp"
#include "fbmq/storage.hpp"

namespace fbmq {

using json = nlohmann::json;

inline constexpr int kRecordSchema = 1;

// ---------------------------------------------------------------------------
// Window scaling rules.

/// T(u) = theta (fixed_T) or theta u^exponent / log(e + u) (power_rule).
/// The power rule must grow strictly slower than u^{(2H-1)/H}.
struct ScalingRule {
  enum class Kind { FixedT, PowerRule };
  Kind kind = Kind::PowerRule;
  double theta = 0.05;
  double exponent = 1.0 / 3.0;

  double window(double u) const {
    if (kind == Kind::FixedT) return theta;
    return theta * std::pow(u, exponent) / std::log(std::numbers::e + u);
  }

  void check(Hurst h) const {
    if (!(theta > 0.0)) throw ConfigError("theta", "window scale must be positive");
    if (kind == Kind::PowerRule) {
      const double limit = (2.0 * h.value() - 1.0) / h.value();
      if (!(exponent < limit))
        throw HypothesisViolation("window exponent " + std::to_string(exponent) +
                                  " must be below (2H-1)/H = " + std::to_string(limit));
    }
  }

  json to_json() const {
    return {{"kind", kind == Kind::FixedT ? "fixed_T" : "power_rule"}, {"theta", theta}, {"exponent", exponent}};
  }
};

// ---------------------------------------------------------------------------
// Records and the store.

struct ExperimentRecord {
  std::string experiment;
  json params = json::object();
  std::uint64_t seed = 0;
  json results = json::object();
  json meta = json::object();  // wall time and timestamp; not deterministic

  json to_json() const {
    return {{"schema", kRecordSchema}, {"experiment", experiment}, {"params", params},
            {"seed", seed},           {"results", results},       {"meta", meta}};
  }

  static ExperimentRecord from_json(const json& j) {
    if (j.at("schema").get<int>() != kRecordSchema) throw Error("unsupported record schema");
    ExperimentRecord r;
    r.experiment = j.at("experiment").get<std::string>();
    r.params = j.at("params");
    r.seed = j.at("seed").get<std::uint64_t>();
    r.results = j.at("results");
    r.meta = j.value("meta", json::object());
    return r;
  }

  /// Serialisation without the metadata; identical for identical runs.
  std::string deterministic_dump() const {
    json j = to_json();
    j.erase("meta");
    return j.dump();
  }
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Append-only JSON-lines file, one record per line. Single writer.
class ExperimentStore {
 public:
  explicit ExperimentStore(std::string path) : path_(std::move(path)) {}

  void append(const ExperimentRecord& r) const {
    std::ofstream os(path_, std::ios::app);
    if (!os) throw Error("cannot open experiment store " + path_);
    os << r.to_json().dump() << '\n';
    if (!os) throw Error("write to experiment store failed");
  }

  std::vector<ExperimentRecord> read_all() const {
    std::ifstream is(path_);
    if (!is) throw Error("cannot open experiment store " + path_);
    std::vector<ExperimentRecord> out;
    std::string line;
    while (std::getline(is, line))
      if (!line.empty()) out.push_back(ExperimentRecord::from_json(json::parse(line)));
    return out;
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void stamp(ExperimentRecord& r, const Stopwatch& w) {
  r.meta = {{"wall_time_s", w.seconds()}, {"created_utc", utc_timestamp()}};
}

// ---------------------------------------------------------------------------
// Summary table: u, T, p_inf, se, p_zero, se, p_sup, se, ratio_inf,
// ratio_sup, eq1_prediction.

struct SummaryRow {
  double u = 0, T = 0;
  double p_inf = 0, se_inf = 0, p_zero = 0, se_zero = 0, p_sup = 0, se_sup = 0;
  double ratio_inf = 0, ratio_sup = 0;
  double eq1_prediction = NAN;

  json to_json() const {
    return {{"u", u},         {"T", T},           {"p_inf", p_inf},         {"se_inf", se_inf},
            {"p_zero", p_zero}, {"se_zero", se_zero}, {"p_sup", p_sup},       {"se_sup", se_sup},
            {"ratio_inf", ratio_inf}, {"ratio_sup", ratio_sup},
            {"eq1_prediction", std::isnan(eq1_prediction) ? json(nullptr) : json(eq1_prediction)}};
  }
  static SummaryRow from_json(const json& j) {
    SummaryRow r;
    r.u = j.at("u");
    r.T = j.at("T");
    r.p_inf = j.at("p_inf");
    r.se_inf = j.at("se_inf");
    r.p_zero = j.at("p_zero");
    r.se_zero = j.at("se_zero");
    r.p_sup = j.at("p_sup");
    r.se_sup = j.at("se_sup");
    r.ratio_inf = j.at("ratio_inf");
    r.ratio_sup = j.at("ratio_sup");
    r.eq1_prediction = j.at("eq1_prediction").is_null() ? NAN : j.at("eq1_prediction").get<double>();
    return r;
  }
};

inline constexpr const char* kSummaryHeader =
    "u,T,p_inf,se_inf,p_zero,se_zero,p_sup,se_sup,ratio_inf,ratio_sup,eq1_prediction";

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows, bool header = true) {
  if (header) os << kSummaryHeader << '\n';
  os << std::setprecision(17);
  for (const auto& r : rows) {
    os << r.u << ',' << r.T << ',' << r.p_inf << ',' << r.se_inf << ',' << r.p_zero << ',' << r.se_zero << ','
       << r.p_sup << ',' << r.se_sup << ',' << r.ratio_inf << ',' << r.ratio_sup << ',';
    if (!std::isnan(r.eq1_prediction)) os << r.eq1_prediction;
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Helpers shared by the storage studies.

inline json tail_json(const TailEstimate& t) {
  return {{"p", t.p_hat}, {"se", t.stderr}, {"hits", t.hits}, {"n", t.n_reps}, {"upper95", t.upper95}};
}
inline json ratio_json(const RatioEstimate& r) { return {{"value", r.value}, {"se", r.stderr}}; }

inline json grid_block(const EventCounts& c, GridLevel g) {
  return {{"p_inf", tail_json(c.tail(Event::Inf, g))},
          {"p_zero", tail_json(c.tail(Event::Zero, g))},
          {"p_sup", tail_json(c.tail(Event::Sup, g))},
          {"p_integral", tail_json(c.tail(Event::Integral, g))},
          {"ratio_inf", ratio_json(c.ratio(Event::Inf, Event::Zero, g))},
          {"ratio_sup", ratio_json(c.ratio(Event::Sup, Event::Zero, g))}};
}

inline SummaryRow summary_row(double u, double T, const EventCounts& c, GridLevel g, double eq1 = NAN) {
  SummaryRow r;
  r.u = u;
  r.T = T;
  const auto pi = c.tail(Event::Inf, g), pz = c.tail(Event::Zero, g), ps = c.tail(Event::Sup, g);
  r.p_inf = pi.p_hat;
  r.se_inf = pi.stderr;
  r.p_zero = pz.p_hat;
  r.se_zero = pz.stderr;
  r.p_sup = ps.p_hat;
  r.se_sup = ps.stderr;
  r.ratio_inf = c.ratio(Event::Inf, Event::Zero, g).value;
  r.ratio_sup = c.ratio(Event::Sup, Event::Zero, g).value;
  r.eq1_prediction = eq1;
  return r;
}

/// A level is statistically feasible when p_zero >= 1e-4 with at least 30
/// exceedances behind it.
inline bool level_feasible(const EventCounts& c) {
  const auto pz = c.tail(Event::Zero, GridLevel::Fine);
  return pz.p_hat >= 1e-4 && pz.hits >= 30;
}

// ---------------------------------------------------------------------------
// Tail triple at one level (CLI `qtail`).

struct QtailConfig {
  double h = 0.75, c = 1.0, u = 1.0, T = 0.5;
  double step = 0.0;  // 0: default_step
  double kappa = 5.0;
  std::uint64_t n_reps = 10000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool horizon_check = true;  // rerun with 2*kappa on the same seed
};

inline ExperimentRecord run_qtail(const QtailConfig& q, std::vector<SummaryRow>* rows = nullptr,
                                  const std::function<void(const ReplicateStat&)>& on_replicate = {}) {
  Stopwatch sw;
  const StorageParams p(Hurst(q.h), q.c);
  SimConfig cfg{q.step > 0 ? q.step : default_step(p, q.u), q.kappa, q.T, q.u};
  cfg.validate();
  TailStudyConfig sc{cfg.step, choose_horizon(p, q.u, q.kappa), q.n_reps, q.seed, q.workers, true};
  const TailQuery query{q.u, q.T};
  const auto res = run_tail_study(p, sc, std::span<const TailQuery>(&query, 1), on_replicate);
  const auto& c = res.counts.front();

  ExperimentRecord r;
  r.experiment = "qtail";
  r.seed = q.seed;
  r.params = {{"h", q.h}, {"c", q.c}, {"u", q.u}, {"T", q.T}, {"step", cfg.step}, {"kappa", q.kappa},
              {"reps", q.n_reps}, {"workers", q.workers}};
  r.results = {{"horizon", res.horizon},
               {"fine", grid_block(c, GridLevel::Fine)},
               {"coarse", grid_block(c, GridLevel::Coarse)},
               {"refined", grid_block(c, GridLevel::Refined)},
               {"ordering_violations", res.ordering_violations},
               {"sandwich_violations", res.sandwich_violations},
               {"feasible", level_feasible(c)}};
  if (q.horizon_check) {
    TailStudyConfig wide = sc;
    wide.horizon = choose_horizon(p, q.u, 2.0 * q.kappa);
    wide.refine = false;
    const auto res2 = run_tail_study(p, wide, std::span<const TailQuery>(&query, 1));
    json diag = {{"kappa", 2.0 * q.kappa}, {"horizon", res2.horizon}};
    bool agree = true;
    for (auto [name, e] : {std::pair{"p_zero", Event::Zero}, std::pair{"p_sup", Event::Sup}}) {
      const auto a = c.tail(e, GridLevel::Fine), b = res2.counts.front().tail(e, GridLevel::Fine);
      const double se = std::hypot(a.stderr, b.stderr);
      const double z = se > 0.0 ? (b.p_hat - a.p_hat) / se : 0.0;
      diag[name] = {{"p", b.p_hat}, {"se", b.stderr}, {"z", z}};
      agree = agree && std::fabs(z) <= 3.0;
    }
    diag["agree"] = agree;
    r.results["horizon_sensitivity"] = diag;
  }
  const SummaryRow row = summary_row(q.u, q.T, c, GridLevel::Fine);
  r.results["rows"] = json::array({row.to_json()});
  if (rows) rows->push_back(row);
  stamp(r, sw);
  return r;
}

// ---------------------------------------------------------------------------
// Pickands lemma for the stationary process with r(t) = exp(-|t|).

struct LemmaCheckConfig {
  std::vector<double> u_list{2.0, 2.5, 3.0};
  double S = 1.0;
  std::size_t points = 256;  // grid intervals on [0, S u^{-2}]
  std::uint64_t n_reps = 1000000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// For each u estimates P(max_{t in [0,S]} X(t u^{-2}) > u) on a uniform
/// grid (and its every-other-point subgrid) and compares with
/// H^sup_{B_1/2}([0,S]) Psi(u). Also checks P(X(0) > u) = Psi(u).
inline ExperimentRecord run_pickands_lemma_check(const LemmaCheckConfig& lc) {
  Stopwatch sw;
  if (lc.u_list.empty()) throw ConfigError("u", "need at least one level");
  for (std::size_t i = 0; i < lc.u_list.size(); ++i) {
    if (!(lc.u_list[i] >= 2.0)) throw ConfigError("u", "levels must be at least 2");
    if (i > 0 && !(lc.u_list[i] > lc.u_list[i - 1])) throw ConfigError("u", "levels must be increasing");
  }
  if (!(lc.S > 0.0)) throw ConfigError("S", "must be positive");
  if (lc.points < 2 || lc.points % 2) throw ConfigError("points", "must be an even number >= 2");

  const std::size_t nu = lc.u_list.size();
  struct Counts {
    std::vector<std::uint64_t> fine, coarse, origin;
  };
  auto make_worker = [&] {
    return [&, x = std::vector<double>(lc.points + 1)](std::uint64_t begin, std::uint64_t end) mutable {
      Counts c{std::vector<std::uint64_t>(nu), std::vector<std::uint64_t>(nu), std::vector<std::uint64_t>(nu)};
      for (std::uint64_t r = begin; r < end; ++r) {
        for (std::size_t k = 0; k < nu; ++k) {
          const double u = lc.u_list[k];
          NormalSource src(RngStream{lc.seed, r});
          sample_ou(lc.S / (u * u) / static_cast<double>(lc.points), src, x);
          double mf = x[0], mc = x[0];
          for (std::size_t i = 1; i < x.size(); ++i) {
            mf = std::max(mf, x[i]);
            if (i % 2 == 0) mc = std::max(mc, x[i]);
          }
          c.fine[k] += mf > u;
          c.coarse[k] += mc > u;
          c.origin[k] += x[0] > u;
        }
      }
      return c;
    };
  };
  const auto blocks = run_blocks(lc.n_reps, lc.workers, kDefaultBlock, make_worker);

  ExperimentRecord rec;
  rec.experiment = "pickands_lemma_check";
  rec.seed = lc.seed;
  rec.params = {{"u_list", lc.u_list}, {"S", lc.S}, {"points", lc.points}, {"reps", lc.n_reps},
                {"workers", lc.workers}, {"process", "stationary, r(t)=exp(-|t|)"}};
  const double hconst = analytics::brownian_pickands_sup(lc.S);
  json rows = json::array();
  for (std::size_t k = 0; k < nu; ++k) {
    std::uint64_t f = 0, co = 0, o = 0;
    for (const auto& b : blocks) {
      f += b.fine[k];
      co += b.coarse[k];
      o += b.origin[k];
    }
    const double u = lc.u_list[k];
    const double psi = analytics::mills_psi(u);
    const auto tf = TailEstimate::from_counts(f, lc.n_reps);
    const auto tc = TailEstimate::from_counts(co, lc.n_reps);
    const auto t0 = TailEstimate::from_counts(o, lc.n_reps);
    rows.push_back({{"u", u},
                    {"p_sup", tail_json(tf)},
                    {"p_sup_coarse", tail_json(tc)},
                    {"p_origin", tail_json(t0)},
                    {"psi", psi},
                    {"target", hconst * psi},
                    {"ratio", tf.p_hat / (hconst * psi)},
                    {"ratio_se", tf.stderr / (hconst * psi)},
                    {"target_one_plus_S", (1.0 + lc.S) * psi},
                    {"ratio_one_plus_S", tf.p_hat / ((1.0 + lc.S) * psi)},
                    {"ratio_one_plus_S_se", tf.stderr / ((1.0 + lc.S) * psi)},
                    {"origin_ratio", t0.p_hat / psi}});
  }
  rec.results = {{"pickands_constant", hconst}, {"rows", rows}};
  stamp(rec, sw);
  return rec;
}

// ---------------------------------------------------------------------------
// Strong Piterbarg study (H > 1/2).

struct PiterbargConfig {
  double h = 0.75, c = 1.0;
  std::vector<double> u_list{2.0, 3.0, 4.0};
  ScalingRule rule;
  double kappa = 5.0;
  double step = 0.0;               // 0: min over u of default_step and T(u)/points_per_window
  std::size_t points_per_window = 8;
  std::uint64_t n_reps = 100000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  double pickands = 0.0;           // 0: estimate it with the constants module
  std::vector<double> pickands_s_list{1.0, 2.0, 3.0, 4.0};
  double pickands_step = 1.0 / 32;
  std::uint64_t pickands_reps = 100000;
};

/// Tail triples of Q for each u with window T(u), all levels evaluated on
/// one set of paths whose horizon covers kappa * max(u) * tau0.
inline ExperimentRecord run_strong_piterbarg(const PiterbargConfig& pc, std::vector<SummaryRow>* rows_out = nullptr) {
  Stopwatch sw;
  if (!(pc.h > 0.5)) throw HypothesisViolation("the strong Piterbarg property needs H > 1/2");
  const Hurst h(pc.h);
  pc.rule.check(h);
  if (pc.u_list.empty()) throw ConfigError("u", "need at least one level");
  const StorageParams p(h, pc.c);

  std::vector<TailQuery> queries;
  double step = pc.step;
  double umax = 0.0;
  for (double u : pc.u_list) {
    if (!(u > 0.0)) throw ConfigError("u", "levels must be positive");
    const double T = pc.rule.window(u);
    queries.push_back({u, T});
    umax = std::max(umax, u);
    if (pc.step <= 0.0) {
      const double s = std::min(default_step(p, u), T / static_cast<double>(pc.points_per_window));
      step = step > 0.0 ? std::min(step, s) : s;
    }
  }
  TailStudyConfig sc{step, choose_horizon(p, umax, pc.kappa), pc.n_reps, pc.seed, pc.workers, true};
  const auto res = run_tail_study(p, sc, queries);

  double pickands = pc.pickands;
  json pickands_info;
  if (!(pickands > 0.0)) {
    ConstantConfig cc{pc.pickands_reps, pc.seed ^ 0x5eedULL, pc.workers, true};
    const auto lim = estimate_pickands_limit(h, pc.pickands_s_list, pc.pickands_step, cc);
    pickands = lim.slope;
    pickands_info = {{"source", "estimated"}, {"slope", lim.slope}, {"se", lim.stderr},
                     {"s_list", lim.s_list}, {"step", pc.pickands_step}, {"reps", pc.pickands_reps}};
  } else {
    pickands_info = {{"source", "given"}, {"value", pickands}};
  }
  const analytics::TailModel model{h, pc.c, pickands};

  ExperimentRecord rec;
  rec.experiment = "strong_piterbarg";
  rec.seed = pc.seed;
  rec.params = {{"h", pc.h},       {"c", pc.c},         {"u_list", pc.u_list}, {"rule", pc.rule.to_json()},
                {"kappa", pc.kappa}, {"step", step},     {"reps", pc.n_reps},   {"workers", pc.workers},
                {"points_per_window", pc.points_per_window}};
  json per_u = json::array();
  std::vector<SummaryRow> rows;
  for (std::size_t k = 0; k < queries.size(); ++k) {
    const auto& c = res.counts[k];
    const double eq1 = analytics::tail_asymptotic(queries[k].level, model);
    const auto pz = c.tail(Event::Zero, GridLevel::Fine);
    per_u.push_back({{"u", queries[k].level},
                     {"T", queries[k].window},
                     {"fine", grid_block(c, GridLevel::Fine)},
                     {"coarse", grid_block(c, GridLevel::Coarse)},
                     {"refined", grid_block(c, GridLevel::Refined)},
                     {"eq1_prediction", eq1},
                     {"prediction_within_ci", std::fabs(pz.p_hat - eq1) <= 1.959963984540054 * pz.stderr},
                     {"feasible", level_feasible(c)}});
    rows.push_back(summary_row(queries[k].level, queries[k].window, c, GridLevel::Fine, eq1));
  }
  json jrows = json::array();
  for (const auto& r : rows) jrows.push_back(r.to_json());
  rec.results = {{"horizon", res.horizon},
                 {"pickands", pickands_info},
                 {"per_u", per_u},
                 {"rows", jrows},
                 {"ordering_violations", res.ordering_violations}};
  if (rows_out) rows_out->insert(rows_out->end(), rows.begin(), rows.end());
  stamp(rec, sw);
  return rec;
}

// ---------------------------------------------------------------------------
// Brownian input: exact law of Q(0), exact infimum ratio, sup asymptotics.

struct BrownianConfig {
  double c = 1.0;
  double u = 1.0;
  std::vector<double> s_list{0.5, 1.0};
  double step = 0.005;
  double kappa = 5.0;
  std::uint64_t n_reps = 1000000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

inline ExperimentRecord run_brownian_counterexample(const BrownianConfig& bc,
                                                    std::vector<SummaryRow>* rows_out = nullptr) {
  Stopwatch sw;
  const StorageParams p(Hurst(0.5), bc.c);
  if (bc.s_list.empty()) throw ConfigError("S", "need at least one window");
  std::vector<TailQuery> queries;
  for (double S : bc.s_list) {
    if (!(S > 0.0)) throw ConfigError("S", "windows must be positive");
    queries.push_back({bc.u, S});
  }
  TailStudyConfig sc{bc.step, choose_horizon(p, bc.u, bc.kappa), bc.n_reps, bc.seed, bc.workers, true};
  const auto res = run_tail_study(p, sc, queries);

  ExperimentRecord rec;
  rec.experiment = "brownian_counterexample";
  rec.seed = bc.seed;
  rec.params = {{"c", bc.c}, {"u", bc.u}, {"s_list", bc.s_list}, {"step", bc.step},
                {"kappa", bc.kappa}, {"reps", bc.n_reps}, {"workers", bc.workers}};
  json per_s = json::array();
  std::vector<SummaryRow> rows;
  for (std::size_t k = 0; k < queries.size(); ++k) {
    const auto& c = res.counts[k];
    const double S = queries[k].window;
    per_s.push_back({{"S", S},
                     {"fine", grid_block(c, GridLevel::Fine)},
                     {"coarse", grid_block(c, GridLevel::Coarse)},
                     {"refined", grid_block(c, GridLevel::Refined)},
                     {"p_zero_exact", analytics::brownian_qzero_tail(bc.u, bc.c)},
                     {"ratio_inf_exact", analytics::brownian_inf_ratio(bc.c * bc.c * S)},
                     {"ratio_sup_limit", analytics::brownian_pickands_sup(2.0 * bc.c * bc.c * S)},
                     {"ratio_sup_displayed", 2.0 * std::sqrt(std::numbers::pi) *
                                                 analytics::brownian_pickands_sup(2.0 * bc.c * bc.c * S)}});
    rows.push_back(summary_row(bc.u, S, c, GridLevel::Fine));
  }
  json jrows = json::array();
  for (const auto& r : rows) jrows.push_back(r.to_json());
  rec.results = {{"horizon", res.horizon}, {"per_S", per_s}, {"rows", jrows},
                 {"ordering_violations", res.ordering_violations}};
  if (rows_out) rows_out->insert(rows_out->end(), rows.begin(), rows.end());
  stamp(rec, sw);
  return rec;
}

struct StationaryLawConfig {
  double c = 1.0;
  std::vector<double> u_list{0.5, 1.0, 2.0};
  double step = 0.005;
  double horizon = 20.0;
  std::uint64_t n_reps = 1000000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// P(Q(0) > u) for Brownian input on two nested grids against exp(-2cu).
inline ExperimentRecord run_brownian_stationary_law(const StationaryLawConfig& sc) {
  Stopwatch sw;
  const StorageParams p(Hurst(0.5), sc.c);
  std::vector<TailQuery> queries;
  for (double u : sc.u_list) queries.push_back({u, 0.0});
  const auto res = run_tail_study(p, {sc.step, sc.horizon, sc.n_reps, sc.seed, sc.workers, true}, queries);
  ExperimentRecord rec;
  rec.experiment = "brownian_stationary_law";
  rec.seed = sc.seed;
  rec.params = {{"c", sc.c}, {"u_list", sc.u_list}, {"step", sc.step}, {"horizon", sc.horizon},
                {"reps", sc.n_reps}, {"workers", sc.workers}};
  json rows = json::array();
  for (std::size_t k = 0; k < queries.size(); ++k) {
    const auto& c = res.counts[k];
    rows.push_back({{"u", sc.u_list[k]},
                    {"exact", analytics::brownian_qzero_tail(sc.u_list[k], sc.c)},
                    {"fine", tail_json(c.tail(Event::Zero, GridLevel::Fine))},
                    {"coarse", tail_json(c.tail(Event::Zero, GridLevel::Coarse))},
                    {"refined", tail_json(c.tail(Event::Zero, GridLevel::Refined))}});
  }
  rec.results = {{"horizon", res.horizon}, {"per_u", rows}};
  stamp(rec, sw);
  return rec;
}

// ---------------------------------------------------------------------------
// Integral functional sandwiched between the infimum and the supremum.

struct SandwichConfig {
  double h = 0.75, c = 1.0, u = 2.0, T = 0.5;
  double step = 0.0;
  double kappa = 5.0;
  std::uint64_t n_reps = 100000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

inline ExperimentRecord run_integral_sandwich(const SandwichConfig& s) {
  Stopwatch sw;
  if (!(s.T > 0.0)) throw ConfigError("T", "window must be positive");
  const StorageParams p(Hurst(s.h), s.c);
  const double step = s.step > 0.0 ? s.step : std::min(default_step(p, s.u), s.T / 8.0);
  const TailQuery q{s.u, s.T};
  const auto res = run_tail_study(p, {step, choose_horizon(p, s.u, s.kappa), s.n_reps, s.seed, s.workers, true},
                                  std::span<const TailQuery>(&q, 1));
  const auto& c = res.counts.front();
  const auto pi = c.tail(Event::Inf, GridLevel::Fine);
  const auto pint = c.tail(Event::Integral, GridLevel::Fine);
  const auto ps = c.tail(Event::Sup, GridLevel::Fine);
  ExperimentRecord rec;
  rec.experiment = "integral_sandwich";
  rec.seed = s.seed;
  rec.params = {{"h", s.h}, {"c", s.c}, {"u", s.u}, {"T", s.T}, {"step", step}, {"kappa", s.kappa},
                {"reps", s.n_reps}, {"workers", s.workers}};
  rec.results = {{"p_inf", tail_json(pi)},
                 {"p_integral", tail_json(pint)},
                 {"p_sup", tail_json(ps)},
                 {"sandwich_violations", res.sandwich_violations},
                 {"ordering_violations", res.ordering_violations},
                 {"p_integral_between", pi.p_hat <= pint.p_hat && pint.p_hat <= ps.p_hat}};
  stamp(rec, sw);
  return rec;
}

}  // namespace fbmq
