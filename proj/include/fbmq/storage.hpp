#pragma once

// The stationary storage process Q(t) = sup_{s>=t}(B(s) - B(t) - c(s - t))
// (time-reversed form of the Reich representation) simulated on a window
// [0,T], and Monte Carlo estimates of its window tail probabilities.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fbmq/errors.hpp"
#include "fbmq/gaussgen.hpp"
#include "fbmq/parallel.hpp"
#include "fbmq/rng.hpp"

namespace fbmq {

struct StorageParams {
  Hurst h;
  double c;

  StorageParams(Hurst hurst, double rate) : h(hurst), c(rate) {
    if (!(rate > 0.0)) throw DomainError("service rate c must be positive");
  }
  /// Maximiser of the scaled standard deviation; the dominant lag is u*tau0.
  double tau0() const { return h.value() / (c * (1.0 - h.value())); }
};

struct SimConfig {
  double step = 0.01;
  double horizon_kappa = 5.0;
  double window = 0.0;
  double level = 1.0;

  void validate() const {
    if (!(step > 0.0)) throw ConfigError("step", "must be positive");
    if (!(horizon_kappa >= 1.0)) throw ConfigError("kappa", "must be at least 1");
    if (!(window >= 0.0)) throw ConfigError("T", "must be non-negative");
    if (window > 0.0 && !(step < window)) throw ConfigError("step", "must be smaller than the window T");
    if (!(level > 0.0)) throw ConfigError("u", "must be positive");
  }
};

struct WindowStat {
  double q_zero = 0.0;
  double q_inf = 0.0;
  double q_sup = 0.0;
  double q_integral = 0.0;
};

/// Lag horizon L = kappa * u * tau0.
inline double choose_horizon(const StorageParams& p, double u, double kappa = 5.0) {
  if (!(u > 0.0)) throw DomainError("level u must be positive");
  return kappa * u * p.tau0();
}

/// min(0.01 tau0, 0.25 u^{-1/H} (u tau0)).
inline double default_step(const StorageParams& p, double u) {
  const double t0 = p.tau0();
  return std::min(0.01 * t0, 0.25 * std::pow(u, -1.0 / p.h.value()) * (u * t0));
}

/// Q at input-grid indices 0, stride, ..., window_pts*stride using lags up
/// to horizon_pts*stride: Q(t) = max_{t<=s<=t+L} (B(s) - c s) - (B(t) - c t).
/// `input` must hold at least (window_pts + horizon_pts)*stride + 1 values.
class QueueSweep {
 public:
  void compute(std::span<const double> input, double step, double c, std::size_t window_pts,
               std::size_t horizon_pts, std::size_t stride, std::span<double> q) {
    const std::size_t n = window_pts + horizon_pts + 1;
    if (input.size() < (n - 1) * stride + 1) throw GridMismatch("input path shorter than window plus horizon");
    if (q.size() != window_pts + 1) throw GridMismatch("output span must have window_pts+1 entries");
    net_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      net_[i] = input[i * stride] - c * step * static_cast<double>(i * stride);
    // Backward sliding-window maximum; dq_ holds indices with decreasing net_.
    dq_.resize(n);
    std::size_t head = 0, tail = 0;
    for (std::size_t k = n; k-- > 0;) {
      while (tail > head && net_[dq_[tail - 1]] <= net_[k]) --tail;
      dq_[tail++] = k;
      while (dq_[head] > k + horizon_pts) ++head;
      if (k <= window_pts) q[k] = net_[dq_[head]] - net_[k];
    }
  }

 private:
  std::vector<double> net_;
  std::vector<std::size_t> dq_;
};

/// Grid extrema, value at 0 and trapezoidal integral of Q over the window.
inline WindowStat window_stats(std::span<const double> q, double step) {
  if (q.empty()) throw GridMismatch("empty path");
  WindowStat w;
  w.q_zero = q.front();
  const auto [lo, hi] = std::minmax_element(q.begin(), q.end());
  w.q_inf = *lo;
  w.q_sup = *hi;
  const std::size_t nt = q.size() - 1;
  if (nt == 0) return w;
  CompensatedSum acc;
  for (std::size_t i = 0; i < nt; ++i) acc.add(0.5 * (q[i] + q[i + 1]));
  const double span = step * static_cast<double>(nt);
  // The trapezoid lies between the bounds; clamp away rounding.
  w.q_integral = std::clamp(step * acc.value(), span * w.q_inf, span * w.q_sup);
  return w;
}

/// Simulates Q on [0,T] with the input drawn by circulant embedding.
class QueueSimulator {
 public:
  /// `refine` makes both point counts even so the grid of step 2*step nests
  /// inside the simulated one.
  QueueSimulator(const StorageParams& params, double step, double horizon, double window, bool refine = false)
      : params_(params), step_(step) {
    if (!(step > 0.0)) throw DomainError("step must be positive");
    window_pts_ = static_cast<std::size_t>(std::llround(window / step));
    horizon_pts_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(horizon / step - 1e-9)));
    if (refine) {
      window_pts_ += window_pts_ % 2;
      horizon_pts_ += horizon_pts_ % 2;
    }
    spectrum_ = std::make_shared<const FgnSpectrum>(build_embedding(window_pts_ + horizon_pts_, params.h, step));
  }

  /// Independent simulator sharing this one's spectrum (one per worker).
  QueueSimulator clone() const { return QueueSimulator(*this, 0); }

  const FgnSpectrum& spectrum() const { return *spectrum_; }
  std::size_t window_points() const { return window_pts_; }
  std::size_t horizon_points() const { return horizon_pts_; }
  double step() const { return step_; }
  double window() const { return step_ * static_cast<double>(window_pts_); }
  double horizon() const { return step_ * static_cast<double>(horizon_pts_); }

  /// Draws the input path into the internal buffer and returns it.
  std::span<const double> draw_input(NormalSource& src) {
    ensure_sampler();
    input_.resize(spectrum_->count + 1);
    sampler_->sample(src, input_);
    return input_;
  }

  /// Q on [0,T] from an arbitrary input path on this simulator's grid.
  void q_from_input(std::span<const double> input, std::size_t stride, std::span<double> q) {
    sweep_.compute(input, step_, params_.c, window_pts_ / stride, horizon_pts_ / stride, stride, q);
  }

  std::vector<double> simulate(RngStream stream) {
    NormalSource src(stream);
    auto in = draw_input(src);
    std::vector<double> q(window_pts_ + 1);
    q_from_input(in, 1, q);
    return q;
  }

 private:
  QueueSimulator(const QueueSimulator& o, int)
      : params_(o.params_), step_(o.step_), window_pts_(o.window_pts_), horizon_pts_(o.horizon_pts_),
        spectrum_(o.spectrum_) {}

  void ensure_sampler() {
    if (!sampler_) sampler_ = std::make_unique<FbmSampler>(spectrum_);
  }

  StorageParams params_;
  double step_;
  std::size_t window_pts_ = 0;
  std::size_t horizon_pts_ = 0;
  std::shared_ptr<const FgnSpectrum> spectrum_;
  std::unique_ptr<FbmSampler> sampler_;
  std::vector<double> input_;
  QueueSweep sweep_;
};

/// Q on [0, cfg.window] for one replicate; horizon from cfg.level.
inline SamplePath simulate_q_window(const StorageParams& params, const SimConfig& cfg, RngStream stream) {
  cfg.validate();
  QueueSimulator sim(params, cfg.step, choose_horizon(params, cfg.level, cfg.horizon_kappa), cfg.window);
  return {Grid(cfg.step, std::max<std::size_t>(sim.window_points(), 1)), sim.simulate(stream)};
}

// ---------------------------------------------------------------------------
// Tail-probability estimation on common random numbers.

struct TailEstimate {
  double p_hat = 0.0;
  double stderr = 0.0;
  std::uint64_t n_reps = 0;
  std::uint64_t hits = 0;
  double upper95 = 0.0;  // rule of three when hits == 0

  static TailEstimate from_counts(std::uint64_t hits, std::uint64_t n) {
    TailEstimate t;
    t.n_reps = n;
    t.hits = hits;
    t.p_hat = n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
    t.stderr = n ? std::sqrt(t.p_hat * (1.0 - t.p_hat) / static_cast<double>(n)) : 0.0;
    t.upper95 = hits == 0 ? 3.0 / static_cast<double>(n) : t.p_hat + 1.959963984540054 * t.stderr;
    return t;
  }
};

/// Ratio of two proportions computed from the same replicates.
struct RatioEstimate {
  double value = 0.0;
  double stderr = 0.0;
};

enum class Event : unsigned { Inf = 0, Zero = 1, Sup = 2, Integral = 3 };
enum class GridLevel : unsigned { Fine = 0, Coarse = 1, Refined = 2 };

/// Joint counts of the eight indicators {inf, zero, sup, integral} x
/// {fine, coarse grid} over replicates. Every estimate below is an exact
/// function of these integers.
struct EventCounts {
  std::array<std::uint64_t, 256> patterns{};
  std::uint64_t n = 0;
  double refine_rate = std::sqrt(2.0);  // 2^H

  static unsigned bit(Event e, bool coarse) { return static_cast<unsigned>(e) + (coarse ? 4u : 0u); }

  EventCounts& operator+=(const EventCounts& o) {
    for (std::size_t i = 0; i < patterns.size(); ++i) patterns[i] += o.patterns[i];
    n += o.n;
    return *this;
  }

  /// Per-replicate score of `e` on a grid level.
  double score(unsigned pattern, Event e, GridLevel g) const {
    const double f = (pattern >> bit(e, false)) & 1u;
    const double c = (pattern >> bit(e, true)) & 1u;
    switch (g) {
      case GridLevel::Fine: return f;
      case GridLevel::Coarse: return c;
      case GridLevel::Refined: return (refine_rate * f - c) / (refine_rate - 1.0);
    }
    return f;
  }

  std::uint64_t hits(Event e, GridLevel g) const {
    std::uint64_t h = 0;
    for (unsigned p = 0; p < 256; ++p)
      if ((p >> bit(e, g == GridLevel::Coarse)) & 1u) h += patterns[p];
    return h;
  }

  TailEstimate tail(Event e, GridLevel g) const {
    if (g != GridLevel::Refined) return TailEstimate::from_counts(hits(e, g), n);
    double m = 0.0, m2 = 0.0;
    for (unsigned p = 0; p < 256; ++p) {
      if (!patterns[p]) continue;
      const double z = score(p, e, g), w = static_cast<double>(patterns[p]);
      m += w * z;
      m2 += w * z * z;
    }
    const double nd = static_cast<double>(n);
    TailEstimate t;
    t.n_reps = n;
    t.hits = hits(e, GridLevel::Fine);
    t.p_hat = m / nd;
    t.stderr = std::sqrt(std::max(0.0, m2 / nd - t.p_hat * t.p_hat) / nd);
    t.upper95 = t.p_hat + 1.959963984540054 * t.stderr;
    return t;
  }

  /// mean(num)/mean(den) with delta-method standard error.
  RatioEstimate ratio(Event num, Event den, GridLevel g) const {
    double sa = 0.0, sb = 0.0;
    for (unsigned p = 0; p < 256; ++p) {
      if (!patterns[p]) continue;
      const double w = static_cast<double>(patterns[p]);
      sa += w * score(p, num, g);
      sb += w * score(p, den, g);
    }
    RatioEstimate r;
    if (sb <= 0.0) return r;
    r.value = sa / sb;
    double v = 0.0;
    for (unsigned p = 0; p < 256; ++p) {
      if (!patterns[p]) continue;
      const double d = score(p, num, g) - r.value * score(p, den, g);
      v += static_cast<double>(patterns[p]) * d * d;
    }
    const double nd = static_cast<double>(n);
    const double mb = sb / nd;
    r.stderr = std::sqrt(v / nd / nd) / mb;
    return r;
  }
};

/// One (level, window) pair evaluated on every simulated path.
struct TailQuery {
  double level = 1.0;
  double window = 0.0;
};

struct TailStudyConfig {
  double step = 0.01;
  double horizon = 1.0;  // lag horizon L, time units
  std::uint64_t n_reps = 1000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool refine = true;  // also evaluate the nested grid of step 2*step
};

/// Replicate-level record (JSON-lines dump).
struct ReplicateStat {
  std::uint64_t stream_id = 0;
  WindowStat stat;  // fine grid, longest window
};

struct TailStudyResult {
  std::vector<EventCounts> counts;  // one per query
  double step = 0.0;
  double horizon = 0.0;
  std::uint64_t ordering_violations = 0;  // must be zero
  std::uint64_t sandwich_violations = 0;  // must be zero
};

/// Simulates n_reps storage paths once and evaluates every query on them
/// (common random numbers across queries, events and grids).
inline TailStudyResult run_tail_study(const StorageParams& params, const TailStudyConfig& cfg,
                                      std::span<const TailQuery> queries,
                                      const std::function<void(const ReplicateStat&)>& on_replicate = {}) {
  if (queries.empty()) throw DomainError("no tail queries");
  double max_window = 0.0;
  for (const auto& q : queries) {
    if (!(q.level > 0.0)) throw DomainError("level must be positive");
    if (!(q.window >= 0.0)) throw DomainError("window must be non-negative");
    max_window = std::max(max_window, q.window);
  }
  const QueueSimulator proto(params, cfg.step, cfg.horizon, max_window, cfg.refine);
  const double rate = std::pow(2.0, params.h.value());

  std::vector<std::size_t> qpts;
  for (const auto& q : queries) {
    auto k = static_cast<std::size_t>(std::llround(q.window / cfg.step));
    if (cfg.refine) k += k % 2;
    qpts.push_back(std::min(k, proto.window_points()));
  }

  struct Block {
    std::vector<EventCounts> counts;
    std::uint64_t ordering = 0, sandwich = 0;
    std::vector<ReplicateStat> dump;
  };

  auto make_worker = [&] {
    return [&, sim = proto.clone(), qf = std::vector<double>(proto.window_points() + 1),
            qc = std::vector<double>(proto.window_points() / 2 + 1)](std::uint64_t begin,
                                                                   std::uint64_t end) mutable {
      Block b;
      b.counts.resize(queries.size());
      for (auto& c : b.counts) c.refine_rate = rate;
      for (std::uint64_t r = begin; r < end; ++r) {
        NormalSource src(RngStream{cfg.seed, r});
        const auto in = sim.draw_input(src);
        sim.q_from_input(in, 1, qf);
        if (cfg.refine) sim.q_from_input(in, 2, qc);
        for (std::size_t qi = 0; qi < queries.size(); ++qi) {
          const double u = queries[qi].level;
          unsigned pattern = 0;
          auto mark = [&](std::span<const double> q, double step, bool coarse) {
            const WindowStat w = window_stats(q, step);
            const double span = step * static_cast<double>(q.size() - 1);
            const bool e_inf = w.q_inf > u, e_zero = w.q_zero > u, e_sup = w.q_sup > u;
            const bool e_int = span > 0.0 ? w.q_integral > u * span : e_zero;
            if (e_inf > e_zero || e_zero > e_sup) ++b.ordering;
            if (w.q_integral < span * w.q_inf || w.q_integral > span * w.q_sup) ++b.sandwich;
            pattern |= (unsigned{e_inf} << EventCounts::bit(Event::Inf, coarse)) |
                       (unsigned{e_zero} << EventCounts::bit(Event::Zero, coarse)) |
                       (unsigned{e_sup} << EventCounts::bit(Event::Sup, coarse)) |
                       (unsigned{e_int} << EventCounts::bit(Event::Integral, coarse));
            return w;
          };
          mark(std::span<const double>(qf).first(qpts[qi] + 1), cfg.step, false);
          if (cfg.refine) mark(std::span<const double>(qc).first(qpts[qi] / 2 + 1), 2.0 * cfg.step, true);
          ++b.counts[qi].patterns[pattern];
          ++b.counts[qi].n;
          if (on_replicate && qi == 0) b.dump.push_back({r, window_stats(qf, cfg.step)});
        }
      }
      return b;
    };
  };

  auto blocks = run_blocks(cfg.n_reps, cfg.workers, kDefaultBlock, make_worker);
  TailStudyResult res;
  res.step = cfg.step;
  res.horizon = proto.horizon();
  res.counts.resize(queries.size());
  for (auto& c : res.counts) c.refine_rate = rate;
  for (const auto& b : blocks) {
    for (std::size_t qi = 0; qi < queries.size(); ++qi) res.counts[qi] += b.counts[qi];
    res.ordering_violations += b.ordering;
    res.sandwich_violations += b.sandwich;
    if (on_replicate)
      for (const auto& d : b.dump) on_replicate(d);
  }
  return res;
}

struct TailTriple {
  TailEstimate p_inf, p_zero, p_sup;
};

/// Window tail probabilities of Q for cfg.level on [0, cfg.window], fine grid.
inline TailTriple estimate_tail_probs(const StorageParams& params, const SimConfig& cfg, std::uint64_t n_reps,
                                      std::uint64_t seed, unsigned workers = 1) {
  cfg.validate();
  if (n_reps < 1) throw ConfigError("reps", "must be at least 1");
  TailStudyConfig sc;
  sc.step = cfg.step;
  sc.horizon = choose_horizon(params, cfg.level, cfg.horizon_kappa);
  sc.n_reps = n_reps;
  sc.seed = seed;
  sc.workers = workers;
  sc.refine = false;
  const TailQuery q{cfg.level, cfg.window};
  const auto r = run_tail_study(params, sc, std::span<const TailQuery>(&q, 1));
  const auto& c = r.counts.front();
  return {c.tail(Event::Inf, GridLevel::Fine), c.tail(Event::Zero, GridLevel::Fine),
          c.tail(Event::Sup, GridLevel::Fine)};
}

}  // namespace fbmq
