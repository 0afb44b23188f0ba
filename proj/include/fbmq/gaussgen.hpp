#pragma once

// Exact Gaussian path generation: fractional Brownian motion by circulant
// embedding of fractional Gaussian noise, a Cholesky oracle, the
// Ornstein-Uhlenbeck sequence, and two-parameter sum fields.

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <iostream>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fbmq/errors.hpp"
#include "fbmq/rng.hpp"

namespace fbmq {

class Hurst {
 public:
  explicit Hurst(double v) : v_(v) {
    if (!(v > 0.0 && v < 1.0)) throw DomainError("Hurst parameter must lie in (0,1), got " + std::to_string(v));
  }
  double value() const { return v_; }
  bool is_brownian() const { return v_ == 0.5; }

 private:
  double v_;
};

/// Uniform grid {0, step, ..., count*step}.
struct Grid {
  double step = 1.0;
  std::size_t count = 1;

  Grid() = default;
  Grid(double s, std::size_t n) : step(s), count(n) {
    if (!(s > 0.0)) throw DomainError("grid step must be positive");
    if (n < 1) throw DomainError("grid count must be at least 1");
  }
  double span() const { return step * static_cast<double>(count); }
  double time(std::size_t i) const { return step * static_cast<double>(i); }
  std::size_t points() const { return count + 1; }
};

struct SamplePath {
  Grid grid;
  std::vector<double> values;  // grid.count + 1 entries
};

/// Lag-k autocovariance of unit-step fractional Gaussian noise.
inline double fgn_autocov(std::size_t k, Hurst h) {
  const double two_h = 2.0 * h.value();
  if (k == 0) return 1.0;
  const double kd = static_cast<double>(k);
  return 0.5 * (std::pow(kd + 1.0, two_h) - 2.0 * std::pow(kd, two_h) + std::pow(kd - 1.0, two_h));
}

namespace detail {

// FFTW planning is not thread-safe; execution with new arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

inline FftwBuffer<double> alloc_real(std::size_t n) {
  return FftwBuffer<double>(fftw_alloc_real(n));
}
inline FftwBuffer<fftw_complex> alloc_complex(std::size_t n) {
  return FftwBuffer<fftw_complex>(fftw_alloc_complex(n));
}

/// Half-complex to real transform of fixed size, shareable between threads.
class C2rPlan {
 public:
  explicit C2rPlan(std::size_t n) : n_(n) {
    auto in = alloc_complex(n / 2 + 1);
    auto out = alloc_real(n);
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
  }
  ~C2rPlan() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }
  C2rPlan(const C2rPlan&) = delete;
  C2rPlan& operator=(const C2rPlan&) = delete;

  // Overwrites `in`.
  void execute(fftw_complex* in, double* out) const { fftw_execute_dft_c2r(plan_, in, out); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  fftw_plan plan_;
};

inline std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

}  // namespace detail

/// Eigenvalues of the circulant embedding of the fGn covariance on a grid.
struct FgnSpectrum {
  std::size_t count = 0;   // increments per path
  std::size_t order = 0;   // circulant size, power of two >= 2*count
  double hurst = 0.5;
  double step = 1.0;
  std::vector<double> eigenvalues;  // scaled by step^{2H}, clipped at 0
  std::size_t clip_count = 0;
  double clip_magnitude = 0.0;      // largest |negative| eigenvalue removed
  std::shared_ptr<const detail::C2rPlan> plan;

  Grid grid() const { return {step, count}; }
  bool white() const { return hurst == 0.5; }
};

/// Circulant embedding of the increment covariance. Eigenvalues below
/// -1e-10 * max are an error; smaller negatives are clipped to zero.
inline FgnSpectrum build_embedding(std::size_t count, Hurst h, double step) {
  if (count < 1) throw DomainError("count must be at least 1");
  if (!(step > 0.0)) throw DomainError("step must be positive");
  FgnSpectrum s;
  s.count = count;
  s.order = detail::next_pow2(2 * count);
  s.hurst = h.value();
  s.step = step;
  const std::size_t m = s.order;

  auto row = detail::alloc_real(m);
  for (std::size_t k = 0; k < m; ++k) row[k] = fgn_autocov(k <= m / 2 ? k : m - k, h);
  auto spec = detail::alloc_complex(m / 2 + 1);
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(m), row.get(), spec.get(), FFTW_ESTIMATE);
    fftw_execute(p);
    fftw_destroy_plan(p);
  }
  const double scale = std::pow(step, 2.0 * h.value());
  s.eigenvalues.resize(m);
  for (std::size_t j = 0; j <= m / 2; ++j) s.eigenvalues[j] = spec[j][0];
  for (std::size_t j = m / 2 + 1; j < m; ++j) s.eigenvalues[j] = s.eigenvalues[m - j];

  const double lmax = *std::max_element(s.eigenvalues.begin(), s.eigenvalues.end());
  const double tol = 1e-10 * lmax;
  for (double& l : s.eigenvalues) {
    if (l < -tol) throw EmbeddingFailure("circulant embedding has eigenvalue " + std::to_string(l));
    if (l < 0.0) {
      ++s.clip_count;
      s.clip_magnitude = std::max(s.clip_magnitude, -l);
      l = 0.0;
    }
    l *= scale;
  }
  s.clip_magnitude *= scale;
  if (s.clip_count > 0)
    std::clog << "fbmq: clipped " << s.clip_count << " eigenvalues (max " << s.clip_magnitude << ")\n";
  s.plan = std::make_shared<const detail::C2rPlan>(m);
  return s;
}

/// Draws fBm paths from a shared spectrum. Holds per-thread scratch space,
/// so give each worker its own sampler.
class FbmSampler {
 public:
  explicit FbmSampler(std::shared_ptr<const FgnSpectrum> spec)
      : spec_(std::move(spec)),
        coef_(spec_->order / 2 + 1),
        normals_(spec_->order),
        freq_(detail::alloc_complex(spec_->order / 2 + 1)),
        out_(detail::alloc_real(spec_->order)) {
    const std::size_t m = spec_->order;
    const double md = static_cast<double>(m);
    for (std::size_t j = 0; j <= m / 2; ++j) {
      const bool edge = (j == 0 || j == m / 2);
      coef_[j] = std::sqrt(spec_->eigenvalues[j] / (edge ? md : 2.0 * md));
    }
  }

  const FgnSpectrum& spectrum() const { return *spec_; }

  /// Writes B(0..count) into `out`, consuming draws from `src`.
  void sample(NormalSource& src, std::span<double> out) {
    const std::size_t n = spec_->count;
    if (out.size() != n + 1) throw GridMismatch("output span must have count+1 entries");
    out[0] = 0.0;
    if (spec_->white()) {
      // Brownian increments are independent; skip the transform.
      const double sd = std::sqrt(spec_->step);
      src.fill_normal(normals_.begin(), n);
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        acc += sd * normals_[k];
        out[k + 1] = acc;
      }
      return;
    }
    const std::size_t m = spec_->order;
    src.fill_normal(normals_.begin(), m);
    freq_[0][0] = coef_[0] * normals_[0];
    freq_[0][1] = 0.0;
    freq_[m / 2][0] = coef_[m / 2] * normals_[1];
    freq_[m / 2][1] = 0.0;
    for (std::size_t j = 1; j < m / 2; ++j) {
      freq_[j][0] = coef_[j] * normals_[2 * j];
      freq_[j][1] = coef_[j] * normals_[2 * j + 1];
    }
    spec_->plan->execute(freq_.get(), out_.get());
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += out_[k];
      out[k + 1] = acc;
    }
  }

  SamplePath sample(RngStream stream) {
    NormalSource src(stream);
    SamplePath p{spec_->grid(), std::vector<double>(spec_->count + 1)};
    sample(src, p.values);
    return p;
  }

 private:
  std::shared_ptr<const FgnSpectrum> spec_;
  std::vector<double> coef_;
  std::vector<double> normals_;
  detail::FftwBuffer<fftw_complex> freq_;
  detail::FftwBuffer<double> out_;
};

inline SamplePath sample_fbm(const FgnSpectrum& spec, RngStream stream) {
  FbmSampler s(std::make_shared<const FgnSpectrum>(spec));
  return s.sample(stream);
}

inline constexpr std::size_t kCholeskyMaxCount = 4096;

/// Exact O(n^2)-memory sampler from the Cholesky factor of the increment
/// covariance. Used as an oracle for the circulant sampler.
class CholeskySampler {
 public:
  CholeskySampler(Grid grid, Hurst h) : grid_(grid) {
    const std::size_t n = grid.count;
    if (n > kCholeskyMaxCount) throw SizeExceeded("Cholesky sampler limited to 4096 increments");
    const double scale = std::pow(grid.step, 2.0 * h.value());
    Eigen::MatrixXd cov(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        cov(i, j) = scale * fgn_autocov(i > j ? i - j : j - i, h);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("increment covariance is not positive definite");
    factor_ = llt.matrixL();
  }

  SamplePath sample(RngStream stream) const {
    const std::size_t n = grid_.count;
    NormalSource src(stream);
    Eigen::VectorXd z(n);
    src.fill_normal(z.data(), n);
    const Eigen::VectorXd inc = factor_.triangularView<Eigen::Lower>() * z;
    SamplePath p{grid_, std::vector<double>(n + 1, 0.0)};
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += inc[static_cast<Eigen::Index>(k)];
      p.values[k + 1] = acc;
    }
    return p;
  }

 private:
  Grid grid_;
  Eigen::MatrixXd factor_;
};

inline SamplePath sample_fbm_cholesky(Grid grid, Hurst h, RngStream stream) {
  return CholeskySampler(grid, h).sample(stream);
}

/// Stationary unit-variance Gauss-Markov sequence with r(t) = exp(-|t|).
inline void sample_ou(double step, NormalSource& src, std::span<double> out) {
  const double rho = std::exp(-step);
  const double innov = std::sqrt(-std::expm1(-2.0 * step));
  double x = src.normal();
  out[0] = x;
  for (std::size_t k = 1; k < out.size(); ++k) {
    x = rho * x + innov * src.normal();
    out[k] = x;
  }
}

inline SamplePath sample_ou(Grid grid, RngStream stream) {
  NormalSource src(stream);
  SamplePath p{grid, std::vector<double>(grid.points())};
  sample_ou(grid.step, src, p.values);
  return p;
}

/// Values on a product grid, row-major: (i, j) -> values[i * cols + j].
struct Field2D {
  Grid rows_grid;
  Grid cols_grid;
  std::vector<double> values;

  std::size_t rows() const { return rows_grid.points(); }
  std::size_t cols() const { return cols_grid.points(); }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * cols() + j]; }
};

/// eta(t1,t2) = B1(a^{1/2H} t1) + B2(a^{1/2H} t2) with independent fBm
/// coordinates. Holds one sampler per coordinate.
class FieldSumSampler {
 public:
  FieldSumSampler(Grid g1, Grid g2, Hurst h, double a_coef)
      : g1_(g1), g2_(g2), h_(h), a_(a_coef),
        s1_(std::make_shared<const FgnSpectrum>(build_embedding(g1.count, h, std::pow(a_coef, 0.5 / h.value()) * g1.step))),
        s2_(std::make_shared<const FgnSpectrum>(build_embedding(g2.count, h, std::pow(a_coef, 0.5 / h.value()) * g2.step))),
        b1_(g1.points()),
        b2_(g2.points()) {
    if (!(a_coef > 0.0)) throw DomainError("field coefficient a must be positive");
  }

  /// Writes the two coordinate paths; the field is their outer sum.
  void sample_coordinates(NormalSource& src, std::span<double> b1, std::span<double> b2) {
    s1_.sample(src, b1);
    s2_.sample(src, b2);
  }

  Field2D sample(RngStream stream) {
    NormalSource src(stream);
    sample_coordinates(src, b1_, b2_);
    Field2D f{g1_, g2_, std::vector<double>(g1_.points() * g2_.points())};
    for (std::size_t i = 0; i < f.rows(); ++i)
      for (std::size_t j = 0; j < f.cols(); ++j) f(i, j) = b1_[i] + b2_[j];
    return f;
  }

  /// sigma^2(t1,t2) = a (t1^{2H} + t2^{2H}).
  double variance(double t1, double t2) const {
    const double two_h = 2.0 * h_.value();
    return a_ * (std::pow(t1, two_h) + std::pow(t2, two_h));
  }

  const Grid& grid1() const { return g1_; }
  const Grid& grid2() const { return g2_; }

 private:
  Grid g1_, g2_;
  Hurst h_;
  double a_;
  FbmSampler s1_, s2_;
  std::vector<double> b1_, b2_;
};

inline Field2D sample_field_sum(Grid g1, Grid g2, Hurst h, double a_coef, RngStream stream) {
  return FieldSumSampler(g1, g2, h, a_coef).sample(stream);
}

/// CSV dump with header `t,value`, 17 significant digits.
inline void write_path_csv(std::ostream& os, const SamplePath& p) {
  os << "t,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < p.values.size(); ++i) os << p.grid.time(i) << ',' << p.values[i] << '\n';
}

}  // namespace fbmq
