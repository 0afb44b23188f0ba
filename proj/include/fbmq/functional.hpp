#pragma once

// Path functionals Phi used in Pickands-type constants. Each one is
// positively affine-equivariant, Phi(a f + b) = a Phi(f) + b for a, b > 0,
// and bounded above by the supremum.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fbmq/errors.hpp"
#include "fbmq/gaussgen.hpp"
#include "fbmq/parallel.hpp"
#include "fbmq/rng.hpp"

namespace fbmq {

enum class FunctionalKind { Sup, Inf, InfSup, Integral };

struct Functional {
  FunctionalKind kind = FunctionalKind::Sup;

  static Functional parse(std::string_view s) {
    if (s == "sup") return {FunctionalKind::Sup};
    if (s == "inf") return {FunctionalKind::Inf};
    if (s == "infsup") return {FunctionalKind::InfSup};
    if (s == "integral") return {FunctionalKind::Integral};
    throw ConfigError("phi", "unknown functional '" + std::string(s) + "' (expected sup|inf|infsup|integral)");
  }

  std::string name() const {
    switch (kind) {
      case FunctionalKind::Sup: return "sup";
      case FunctionalKind::Inf: return "inf";
      case FunctionalKind::InfSup: return "infsup";
      case FunctionalKind::Integral: return "integral";
    }
    return "?";
  }

  bool needs_field() const { return kind == FunctionalKind::InfSup; }

  /// Phi on a one-parameter grid function with spacing `step`.
  double operator()(std::span<const double> f, double step) const {
    if (f.empty()) throw GridMismatch("empty grid function");
    switch (kind) {
      case FunctionalKind::Sup: return *std::max_element(f.begin(), f.end());
      case FunctionalKind::Inf: return *std::min_element(f.begin(), f.end());
      case FunctionalKind::Integral: return mean_value(f, step);
      case FunctionalKind::InfSup: break;
    }
    throw GridMismatch("inf-sup functional needs a two-parameter domain");
  }

  /// Phi on a product-grid function. InfSup takes the infimum over the
  /// first coordinate of the supremum over the second.
  double operator()(const Field2D& f) const {
    const std::size_t rows = f.rows(), cols = f.cols();
    switch (kind) {
      case FunctionalKind::Sup: return *std::max_element(f.values.begin(), f.values.end());
      case FunctionalKind::Inf: return *std::min_element(f.values.begin(), f.values.end());
      case FunctionalKind::InfSup: {
        double best = INFINITY;
        for (std::size_t i = 0; i < rows; ++i) {
          const auto row = std::span<const double>(f.values).subspan(i * cols, cols);
          best = std::min(best, *std::max_element(row.begin(), row.end()));
        }
        return best;
      }
      case FunctionalKind::Integral: {
        std::vector<double> row_means(rows);
        for (std::size_t i = 0; i < rows; ++i)
          row_means[i] = mean_value(std::span<const double>(f.values).subspan(i * cols, cols), f.cols_grid.step);
        return mean_value(row_means, f.rows_grid.step);
      }
    }
    return 0.0;
  }

 private:
  // Trapezoidal integral divided by the window length; a single point is
  // its own mean.
  static double mean_value(std::span<const double> f, double /*step*/) {
    if (f.size() == 1) return f.front();
    CompensatedSum acc;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) acc.add(0.5 * (f[i] + f[i + 1]));
    const double m = acc.value() / static_cast<double>(f.size() - 1);
    const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    return std::clamp(m, *lo, *hi);
  }
};

/// Outcome of checking the affine-equivariance and sup-bound conditions on
/// random grid functions.
struct FunctionalReport {
  std::string functional;
  std::size_t checked = 0;
  double f2_max_rel_error = 0.0;          // |Phi(af+b) - (a Phi(f) + b)| / max(1, |.|)
  std::size_t upper_bound_violations = 0;  // Phi(f) > sup f
  std::size_t literal_f1_violations = 0;   // |Phi(f)| > sup f
  bool f2_exact(double tol = 1e-12) const { return f2_max_rel_error <= tol; }
};

/// Checks Phi on `n` random grid functions, about a quarter of them
/// strictly negative, with random a, b in (0, 10].
inline FunctionalReport validate_functional(const Functional& phi, std::size_t n = 100, std::uint64_t seed = 1) {
  FunctionalReport rep;
  rep.functional = phi.name();
  NormalSource src(RngStream{seed, 0xF00D});
  const Grid g1(0.1, 12), g2(0.05, 20);
  for (std::size_t k = 0; k < n; ++k) {
    const bool negative = (k % 4 == 3);
    const double a = 10.0 * src.uniform();
    const double b = 10.0 * src.uniform();
    auto draw = [&] { return negative ? -std::fabs(src.normal()) - 0.5 : 3.0 * src.normal(); };
    double phi_f, phi_t, sup_f;
    if (phi.needs_field()) {
      Field2D f{g1, g2, std::vector<double>(g1.points() * g2.points())};
      for (double& v : f.values) v = draw();
      Field2D t = f;
      for (double& v : t.values) v = a * v + b;
      phi_f = phi(f);
      phi_t = phi(t);
      sup_f = *std::max_element(f.values.begin(), f.values.end());
    } else {
      std::vector<double> f(g2.points());
      for (double& v : f) v = draw();
      std::vector<double> t(f.size());
      std::transform(f.begin(), f.end(), t.begin(), [&](double v) { return a * v + b; });
      phi_f = phi(f, g2.step);
      phi_t = phi(t, g2.step);
      sup_f = *std::max_element(f.begin(), f.end());
    }
    const double expect = a * phi_f + b;
    rep.f2_max_rel_error = std::max(rep.f2_max_rel_error, std::fabs(phi_t - expect) / std::max(1.0, std::fabs(expect)));
    if (phi_f > sup_f) ++rep.upper_bound_violations;
    if (std::fabs(phi_f) > sup_f) ++rep.literal_f1_violations;
    ++rep.checked;
  }
  return rep;
}

}  // namespace fbmq
