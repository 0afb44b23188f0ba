#pragma once

// Counter-based random numbers. Every variate is a pure function of
// (seed, stream_id, draw index), so results never depend on the order in
// which replicates are scheduled.

#include <array>
#include <cmath>
#include <cstdint>

namespace fbmq {

namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

constexpr void round(Counter& ctr, const Key& key) {
  const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
  const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
  ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
         static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
         static_cast<std::uint32_t>(p0)};
}

/// Philox4x32 with the standard 10 rounds.
constexpr Counter philox4x32_10(Counter ctr, Key key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    round(ctr, key);
  }
  return ctr;
}

}  // namespace philox

/// Maps 53 random bits onto the open interval (0,1).
constexpr double bits_to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal quantile, Wichura's AS241 (about 1e-16 relative).
inline double normal_quantile(double p) {
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
              67265.770927008700853) * r + 45921.953931549871457) * r +
            13731.693765509461125) * r + 1971.5909503065514427) * r +
          133.14166789178437745) * r + 3.387132872796366608);
    const double den =
        (((((((5226.495278852545925 * r + 28729.085735721942674) * r +
              39307.89580009271061) * r + 21213.794301586595867) * r +
            5394.1960214247511077) * r + 687.1870074920579083) * r +
          42.313330701600911252) * r + 1.0);
    return q * num / den;
  }
  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
              0.24178072517745061177) * r + 1.27045825245236838258) * r +
            3.64784832476320460504) * r + 5.7694972214606914055) * r +
          4.6303378461565452959) * r + 1.42343711074968357734);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
              0.0151986665636164571966) * r + 0.14810397642748007459) * r +
            0.68976733498510000455) * r + 1.6763848301838038494) * r +
          2.05319162663775882187) * r + 1.0);
    val = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              0.0012426609473880784386) * r + 0.026532189526576123093) * r +
            0.29656057182850489123) * r + 1.7848265399172913358) * r +
          5.4637849111641143699) * r + 6.6579046435011037772);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
              1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
            0.0148753612908506148525) * r + 0.13692988092273580531) * r +
          0.59983220655588793769) * r + 1.0);
    val = num / den;
  }
  return q < 0 ? -val : val;
}

/// Identifies an independent stream of variates: `stream_id` is the
/// replicate index.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

/// Sequential reader over one stream. Draw i of the stream is always the
/// same number no matter how the reader is used.
class NormalSource {
 public:
  explicit NormalSource(RngStream s, std::uint64_t first_draw = 0)
      : key_{static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32)},
        stream_(s.stream_id),
        index_(first_draw) {}

  /// 64 random bits for draw `index`.
  std::uint64_t bits(std::uint64_t index) const {
    const std::uint64_t block = index >> 1;
    const philox::Counter ctr{static_cast<std::uint32_t>(block),
                              static_cast<std::uint32_t>(block >> 32),
                              static_cast<std::uint32_t>(stream_),
                              static_cast<std::uint32_t>(stream_ >> 32)};
    const auto out = philox::philox4x32_10(ctr, key_);
    const std::size_t h = (index & 1u) * 2;
    return (std::uint64_t{out[h]} << 32) | out[h + 1];
  }

  double uniform() { return bits_to_open_unit(next_bits()); }
  double normal() { return normal_quantile(uniform()); }

  template <typename OutIt>
  void fill_normal(OutIt first, std::size_t n) {
    // Two draws share one Philox block; fetch both at once.
    std::size_t i = 0;
    if ((index_ & 1u) && n > 0) {
      *first++ = normal();
      ++i;
    }
    for (; i + 1 < n; i += 2) {
      const std::uint64_t block = index_ >> 1;
      const philox::Counter ctr{static_cast<std::uint32_t>(block),
                                static_cast<std::uint32_t>(block >> 32),
                                static_cast<std::uint32_t>(stream_),
                                static_cast<std::uint32_t>(stream_ >> 32)};
      const auto out = philox::philox4x32_10(ctr, key_);
      *first++ = normal_quantile(bits_to_open_unit((std::uint64_t{out[0]} << 32) | out[1]));
      *first++ = normal_quantile(bits_to_open_unit((std::uint64_t{out[2]} << 32) | out[3]));
      index_ += 2;
    }
    if (i < n) *first++ = normal();
  }

  std::uint64_t position() const { return index_; }

 private:
  std::uint64_t next_bits() { return bits(index_++); }

  philox::Key key_;
  std::uint64_t stream_;
  std::uint64_t index_;
};

}  // namespace fbmq
