#pragma once

// Monte Carlo estimation of Pickands-type constants
//   H^Phi_eta(T) = E exp(Phi(sqrt2 eta - sigma_eta^2))
// for fBm on [0,S] and for two-parameter sums of independent fBm.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "fbmq/errors.hpp"
#include "fbmq/functional.hpp"
#include "fbmq/gaussgen.hpp"
#include "fbmq/parallel.hpp"
#include "fbmq/rng.hpp"

namespace fbmq {

struct ConstantEstimate {
  double value = 0.0;         // grid estimate at grid_step
  double stderr = 0.0;
  double grid_step = 0.0;
  std::uint64_t n_reps = 0;
  double coarse_value = 0.0;  // same noise on the grid of step 2*grid_step
  double refined_value = 0.0; // two-grid extrapolation
  double refined_stderr = 0.0;
};

struct ConstantConfig {
  std::uint64_t n_reps = 100000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool refine = true;
};

/// fBm(H) on [0,S] sampled with spacing `step`.
struct FbmDomain {
  Hurst h;
  double S;
  double step;
};

/// eta(t1,t2) = B1(a^{1/2H} t1) + B2(a^{1/2H} t2) on [0,l1] x [0,l2].
struct FieldDomain {
  Hurst h;
  double a;
  double lambda1;
  double lambda2;
  double step;
};

namespace detail {

inline std::size_t grid_points_for(double span, double step, bool refine) {
  if (!(step > 0.0)) throw GridMismatch("grid step must be positive");
  const double ratio = span / step;
  const auto n = static_cast<std::size_t>(std::llround(ratio));
  if (std::fabs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio))
    throw GridMismatch("domain length is not a multiple of the grid step");
  if (refine && n % 2 != 0) throw GridMismatch("two-grid refinement needs an even number of steps");
  return n;
}

/// Accumulates the fine, coarse and extrapolated exponentials per block.
struct ExpTallies {
  TallyBuilder fine, coarse, refined;
};

struct ExpTotals {
  Tally fine, coarse, refined;
  friend ExpTotals operator+(const ExpTotals& a, const ExpTotals& b) {
    return {a.fine + b.fine, a.coarse + b.coarse, a.refined + b.refined};
  }
};

inline ConstantEstimate finish(const std::vector<ExpTotals>& blocks, double step, bool refine) {
  const ExpTotals t = tree_reduce(std::span<const ExpTotals>(blocks), std::plus<>{});
  ConstantEstimate e;
  e.value = t.fine.mean();
  e.stderr = t.fine.stderr_of_mean();
  e.grid_step = step;
  e.n_reps = t.fine.n;
  if (refine) {
    e.coarse_value = t.coarse.mean();
    e.refined_value = t.refined.mean();
    e.refined_stderr = t.refined.stderr_of_mean();
  } else {
    e.coarse_value = e.refined_value = e.value;
    e.refined_stderr = e.stderr;
  }
  return e;
}

// Every other point of a grid function.
inline void decimate(std::span<const double> in, std::vector<double>& out) {
  out.resize(in.size() / 2 + 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[2 * i];
}

}  // namespace detail

namespace detail {

struct NestedRun {
  std::vector<ConstantEstimate> per_s;
  Tally weighted;  // per-replicate sum_k weights[k] * exp-score_k
};

inline NestedRun run_nested(Hurst h, std::span<const double> s_list, double step, const Functional& phi,
                            const ConstantConfig& cfg, std::span<const double> weights) {
  if (phi.needs_field()) throw GridMismatch("inf-sup functional needs a two-parameter domain");
  if (cfg.n_reps < 100) throw DomainError("at least 100 replicates are required");
  if (s_list.empty()) throw InsufficientPoints("no interval lengths given");
  std::vector<std::size_t> pts;
  for (double S : s_list) pts.push_back(grid_points_for(S, step, cfg.refine));
  const std::size_t n_max = *std::max_element(pts.begin(), pts.end());
  const std::size_t ns = s_list.size();
  const double rate = std::pow(2.0, h.value());

  NestedRun out;
  out.per_s.resize(ns);
  if (n_max == 0) {
    // T = {0}: every replicate contributes exp(0) = 1.
    for (auto& e : out.per_s) e = {1.0, 0.0, step, cfg.n_reps, 1.0, 1.0, 0.0};
    return out;
  }

  auto spectrum = std::make_shared<const FgnSpectrum>(build_embedding(n_max, h, step));
  std::vector<double> drift(n_max + 1);
  for (std::size_t i = 0; i <= n_max; ++i) drift[i] = std::pow(step * static_cast<double>(i), 2.0 * h.value());

  struct Block {
    std::vector<ExpTotals> per_s;
    Tally weighted;
  };
  auto make_worker = [&] {
    return [&, sampler = FbmSampler(spectrum), path = std::vector<double>(n_max + 1),
            coarse = std::vector<double>()](std::uint64_t begin, std::uint64_t end) mutable {
      std::vector<ExpTallies> acc(ns);
      TallyBuilder wacc;
      for (std::uint64_t r = begin; r < end; ++r) {
        NormalSource src(RngStream{cfg.seed, r});
        sampler.sample(src, path);
        for (std::size_t i = 0; i <= n_max; ++i) path[i] = std::numbers::sqrt2 * path[i] - drift[i];
        double score = 0.0;
        for (std::size_t k = 0; k < ns; ++k) {
          const auto y = std::span<const double>(path).first(pts[k] + 1);
          const double ef = std::exp(phi(y, step));
          acc[k].fine.add(ef);
          double best = ef;
          if (cfg.refine) {
            decimate(y, coarse);
            const double ec = std::exp(phi(coarse, 2.0 * step));
            best = (rate * ef - ec) / (rate - 1.0);
            acc[k].coarse.add(ec);
            acc[k].refined.add(best);
          }
          if (!weights.empty()) score += weights[k] * best;
        }
        if (!weights.empty()) wacc.add(score);
      }
      Block b;
      for (std::size_t k = 0; k < ns; ++k)
        b.per_s.push_back({acc[k].fine.finish(), acc[k].coarse.finish(), acc[k].refined.finish()});
      b.weighted = wacc.finish();
      return b;
    };
  };
  const auto blocks = run_blocks(cfg.n_reps, cfg.workers, kDefaultBlock, make_worker);
  for (std::size_t k = 0; k < ns; ++k) {
    std::vector<ExpTotals> col;
    col.reserve(blocks.size());
    for (const auto& b : blocks) col.push_back(b.per_s[k]);
    out.per_s[k] = finish(col, step, cfg.refine);
  }
  std::vector<Tally> wcol;
  for (const auto& b : blocks) wcol.push_back(b.weighted);
  out.weighted = tree_reduce(std::span<const Tally>(wcol), std::plus<>{});
  return out;
}

}  // namespace detail

/// Pickands-type constants of fBm on nested intervals [0,S_k], all
/// evaluated on the same paths (entry k belongs to s_list[k]). Because the
/// grids nest, the estimates are pathwise monotone in S for Sup and Inf.
inline std::vector<ConstantEstimate> estimate_H_phi_nested(Hurst h, std::span<const double> s_list, double step,
                                                           const Functional& phi, const ConstantConfig& cfg) {
  return detail::run_nested(h, s_list, step, phi, cfg, {}).per_s;
}

/// H^Phi for fBm on [0, S].
inline ConstantEstimate estimate_H_phi(const FbmDomain& d, const Functional& phi, const ConstantConfig& cfg) {
  const double s[] = {d.S};
  return estimate_H_phi_nested(d.h, s, d.step, phi, cfg).front();
}

/// H^Phi for the sum field eta(t1,t2) = B1(a^{1/2H} t1) + B2(a^{1/2H} t2),
/// evaluated on the full product grid.
inline ConstantEstimate estimate_H_phi(const FieldDomain& d, const Functional& phi, const ConstantConfig& cfg) {
  if (cfg.n_reps < 100) throw DomainError("at least 100 replicates are required");
  if (!(d.a > 0.0)) throw DomainError("field coefficient a must be positive");
  const std::size_t n1 = detail::grid_points_for(d.lambda1, d.step, cfg.refine);
  const std::size_t n2 = detail::grid_points_for(d.lambda2, d.step, cfg.refine);
  if (n1 == 0 || n2 == 0) throw GridMismatch("field domain must have positive extent in both coordinates");
  const Grid g1(d.step, n1), g2(d.step, n2);
  const double two_h = 2.0 * d.h.value();
  const double rate = std::pow(2.0, d.h.value());
  std::vector<double> drift1(n1 + 1), drift2(n2 + 1);
  for (std::size_t i = 0; i <= n1; ++i) drift1[i] = d.a * std::pow(g1.time(i), two_h);
  for (std::size_t j = 0; j <= n2; ++j) drift2[j] = d.a * std::pow(g2.time(j), two_h);

  auto make_worker = [&] {
    return [&, sampler = FieldSumSampler(g1, g2, d.h, d.a), b1 = std::vector<double>(n1 + 1),
            b2 = std::vector<double>(n2 + 1), y = Field2D{g1, g2, std::vector<double>((n1 + 1) * (n2 + 1))},
            yc = Field2D{Grid(2 * d.step, std::max<std::size_t>(n1 / 2, 1)), Grid(2 * d.step, std::max<std::size_t>(n2 / 2, 1)),
                         std::vector<double>((n1 / 2 + 1) * (n2 / 2 + 1))}](std::uint64_t begin,
                                                                              std::uint64_t end) mutable {
      detail::ExpTallies acc;
      for (std::uint64_t r = begin; r < end; ++r) {
        NormalSource src(RngStream{cfg.seed, r});
        sampler.sample_coordinates(src, b1, b2);
        for (std::size_t i = 0; i <= n1; ++i)
          for (std::size_t j = 0; j <= n2; ++j) y(i, j) = std::numbers::sqrt2 * (b1[i] + b2[j]) - drift1[i] - drift2[j];
        const double ef = std::exp(phi(y));
        acc.fine.add(ef);
        if (cfg.refine) {
          for (std::size_t i = 0; i < yc.rows(); ++i)
            for (std::size_t j = 0; j < yc.cols(); ++j) yc(i, j) = y(2 * i, 2 * j);
          const double ec = std::exp(phi(yc));
          acc.coarse.add(ec);
          acc.refined.add((rate * ef - ec) / (rate - 1.0));
        }
      }
      return detail::ExpTotals{acc.fine.finish(), acc.coarse.finish(), acc.refined.finish()};
    };
  };
  const auto blocks = run_blocks(cfg.n_reps, cfg.workers, kDefaultBlock, make_worker);
  return detail::finish(blocks, d.step, cfg.refine);
}

struct PickandsLimit {
  double slope = 0.0;
  double stderr = 0.0;
  std::vector<double> s_list;
  std::vector<ConstantEstimate> per_s;
};

/// Least-squares slope (free intercept) of H^sup([0,S]) against S, as an
/// estimate of the classical constant lim H^sup([0,S]) / S. Uses the
/// refined values when refinement is on; the standard error accounts for
/// the common noise shared by all S.
inline PickandsLimit estimate_pickands_limit(Hurst h, std::span<const double> s_list, double step,
                                             const ConstantConfig& cfg) {
  if (s_list.size() < 3) throw InsufficientPoints("slope extrapolation needs at least 3 interval lengths");
  for (std::size_t k = 1; k < s_list.size(); ++k)
    if (!(s_list[k] > s_list[k - 1])) throw DomainError("interval lengths must be increasing");
  if (!(s_list.front() > 0.0)) throw DomainError("interval lengths must be positive");

  const std::size_t ns = s_list.size();
  double mean_s = 0.0;
  for (double s : s_list) mean_s += s;
  mean_s /= static_cast<double>(ns);
  double sxx = 0.0;
  for (double s : s_list) sxx += (s - mean_s) * (s - mean_s);
  std::vector<double> w(ns);
  for (std::size_t k = 0; k < ns; ++k) w[k] = (s_list[k] - mean_s) / sxx;

  PickandsLimit out;
  out.s_list.assign(s_list.begin(), s_list.end());
  // The slope is linear in the per-S means, so per-replicate slope scores
  // give its standard error with the cross-S correlation included.
  auto run = detail::run_nested(h, s_list, step, Functional{FunctionalKind::Sup}, cfg, w);
  out.per_s = std::move(run.per_s);
  out.slope = run.weighted.mean();
  out.stderr = run.weighted.stderr_of_mean();
  return out;
}

/// Sample mean and standard error of exp(sqrt2 B(t) - t^{2H}) at fixed
/// times, all on the same paths.
struct PointMoment {
  double t = 0.0;
  double mean = 0.0;
  double stderr = 0.0;
};

inline std::vector<PointMoment> per_point_moments(Hurst h, std::span<const double> times, double step,
                                                  const ConstantConfig& cfg) {
  if (times.empty()) throw InsufficientPoints("no evaluation times");
  std::vector<std::size_t> idx;
  for (double t : times) idx.push_back(detail::grid_points_for(t, step, false));
  const std::size_t n_max = std::max<std::size_t>(1, *std::max_element(idx.begin(), idx.end()));
  auto spectrum = std::make_shared<const FgnSpectrum>(build_embedding(n_max, h, step));
  auto make_worker = [&] {
    return [&, sampler = FbmSampler(spectrum), path = std::vector<double>(n_max + 1)](std::uint64_t begin,
                                                                                       std::uint64_t end) mutable {
      std::vector<TallyBuilder> acc(idx.size());
      for (std::uint64_t r = begin; r < end; ++r) {
        NormalSource src(RngStream{cfg.seed, r});
        sampler.sample(src, path);
        for (std::size_t k = 0; k < idx.size(); ++k) {
          const double t = step * static_cast<double>(idx[k]);
          acc[k].add(std::exp(std::numbers::sqrt2 * path[idx[k]] - std::pow(t, 2.0 * h.value())));
        }
      }
      std::vector<Tally> res;
      for (auto& a : acc) res.push_back(a.finish());
      return res;
    };
  };
  const auto blocks = run_blocks(cfg.n_reps, cfg.workers, kDefaultBlock, make_worker);
  std::vector<PointMoment> out;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    std::vector<Tally> col;
    for (const auto& b : blocks) col.push_back(b[k]);
    const Tally t = tree_reduce(std::span<const Tally>(col), std::plus<>{});
    out.push_back({times[k], t.mean(), t.stderr_of_mean()});
  }
  return out;
}

}  // namespace fbmq
