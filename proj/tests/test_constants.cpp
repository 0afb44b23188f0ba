#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fbmq/analytics.hpp"
#include "fbmq/constants.hpp"

using namespace fbmq;
namespace an = fbmq::analytics;

namespace {

ConstantConfig config(std::uint64_t n, std::uint64_t seed) {
  ConstantConfig c;
  c.n_reps = n;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Constants, DegenerateDomainIsOne) {
  for (const char* s : {"sup", "inf", "integral"}) {
    const auto e = estimate_H_phi(FbmDomain{Hurst(0.7), 0.0, 0.1}, Functional::parse(s), config(1000, 1));
    EXPECT_EQ(e.value, 1.0);
    EXPECT_EQ(e.stderr, 0.0);
  }
}

TEST(Constants, InputValidation) {
  const auto sup = Functional::parse("sup");
  EXPECT_THROW(estimate_H_phi(FbmDomain{Hurst(0.7), 1.0, 0.1}, sup, config(50, 1)), DomainError);
  EXPECT_THROW(estimate_H_phi(FbmDomain{Hurst(0.7), 1.0, 0.3}, sup, config(1000, 1)), GridMismatch);
  EXPECT_THROW(estimate_H_phi(FbmDomain{Hurst(0.7), 0.5, 0.1}, sup, config(1000, 1)), GridMismatch);  // odd count
  EXPECT_THROW(estimate_H_phi(FbmDomain{Hurst(0.7), 1.0, 0.1}, Functional::parse("infsup"), config(1000, 1)),
               GridMismatch);
  const double two[] = {1.0, 2.0};
  EXPECT_THROW(estimate_pickands_limit(Hurst(0.7), two, 0.1, config(1000, 1)), InsufficientPoints);
  const double unordered[] = {1.0, 3.0, 2.0};
  EXPECT_THROW(estimate_pickands_limit(Hurst(0.7), unordered, 0.1, config(1000, 1)), DomainError);
}

TEST(Constants, BrownianSupMatchesClosedForm) {
  const auto e = estimate_H_phi(FbmDomain{Hurst(0.5), 1.0, 1.0 / 256}, Functional::parse("sup"), config(40000, 3));
  const double exact = an::brownian_pickands_sup(1.0);
  // The grid maximum undershoots; the two-grid value removes the leading bias.
  EXPECT_LT(e.value, exact);
  EXPECT_LT(e.coarse_value, e.value);
  EXPECT_NEAR(e.refined_value, exact, 4 * e.refined_stderr + 0.01 * exact);
}

TEST(Constants, BrownianInfMatchesClosedForm) {
  const auto e = estimate_H_phi(FbmDomain{Hurst(0.5), 2.0, 1.0 / 128}, Functional::parse("inf"), config(40000, 4));
  const double exact = an::brownian_pickands_inf(2.0);
  EXPECT_GT(e.value, exact);
  EXPECT_GT(e.coarse_value, e.value);
  EXPECT_NEAR(e.refined_value, exact, 4 * e.refined_stderr + 0.01 * exact);
}

TEST(Constants, NestedDomainsAreMonotone) {
  const double s_list[] = {0.5, 1.0, 2.0, 4.0};
  const auto sup = estimate_H_phi_nested(Hurst(0.7), s_list, 1.0 / 32, Functional::parse("sup"), config(3000, 5));
  const auto inf = estimate_H_phi_nested(Hurst(0.7), s_list, 1.0 / 32, Functional::parse("inf"), config(3000, 5));
  const auto mid = estimate_H_phi_nested(Hurst(0.7), s_list, 1.0 / 32, Functional::parse("integral"), config(3000, 5));
  for (std::size_t k = 0; k < 4; ++k) {
    if (k > 0) {
      EXPECT_GE(sup[k].value, sup[k - 1].value);
      EXPECT_LE(inf[k].value, inf[k - 1].value);
    }
    EXPECT_LE(inf[k].value, mid[k].value);
    EXPECT_LE(mid[k].value, sup[k].value);
    EXPECT_GE(sup[k].value, 1.0);
    EXPECT_LE(inf[k].value, 1.0);
  }
}

TEST(Constants, WorkerCountIsBitwiseIrrelevant) {
  auto c1 = config(2500, 9), c3 = config(2500, 9);
  c3.workers = 3;
  const FbmDomain d{Hurst(0.8), 2.0, 1.0 / 16};
  const auto a = estimate_H_phi(d, Functional::parse("sup"), c1);
  const auto b = estimate_H_phi(d, Functional::parse("sup"), c3);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.stderr, b.stderr);
  EXPECT_EQ(a.refined_value, b.refined_value);
}

TEST(Constants, PointMomentsAreOne) {
  const double times[] = {0.5, 1.0, 2.0};
  const auto m = per_point_moments(Hurst(0.75), times, 0.25, config(100000, 11));
  for (const auto& p : m) EXPECT_NEAR(p.mean, 1.0, 4 * p.stderr) << "t=" << p.t;
}

TEST(Constants, FieldInfSupFactorises) {
  // With a = 1 the drifted field splits into independent coordinates, so
  // E exp(inf_t1 sup_t2) = H^inf([0,l1]) H^sup([0,l2]) on the same grid.
  const double h = 0.6, step = 1.0 / 16;
  auto cfg = config(20000, 13);
  cfg.refine = false;
  const auto field = estimate_H_phi(FieldDomain{Hurst(h), 1.0, 1.0, 1.5, step}, Functional::parse("infsup"), cfg);
  auto c1 = config(20000, 14), c2 = config(20000, 15);
  c1.refine = c2.refine = false;
  const auto hi = estimate_H_phi(FbmDomain{Hurst(h), 1.0, step}, Functional::parse("inf"), c1);
  const auto hs = estimate_H_phi(FbmDomain{Hurst(h), 1.5, step}, Functional::parse("sup"), c2);
  const double prod = hi.value * hs.value;
  const double se = std::sqrt(std::pow(field.stderr, 2) + std::pow(hi.stderr * hs.value, 2) +
                              std::pow(hs.stderr * hi.value, 2));
  EXPECT_NEAR(field.value, prod, 4 * se);
}

TEST(Constants, FieldBrownianAgainstClosedForms) {
  // At H = 1/2 with a = 1 the factors are known exactly; allow for grid bias.
  auto cfg = config(20000, 16);
  const auto f = estimate_H_phi(FieldDomain{Hurst(0.5), 1.0, 1.0, 1.0, 1.0 / 64}, Functional::parse("infsup"), cfg);
  const double exact = an::brownian_pickands_inf(1.0) * an::brownian_pickands_sup(1.0);
  EXPECT_NEAR(f.refined_value, exact, 4 * f.refined_stderr + 0.02 * exact);
}

TEST(Constants, PickandsSlopeUsesSharedPaths) {
  const double s_list[] = {1.0, 2.0, 3.0};
  const auto lim = estimate_pickands_limit(Hurst(0.5), s_list, 1.0 / 64, config(5000, 17));
  ASSERT_EQ(lim.per_s.size(), 3u);
  // The slope of the per-S refined means equals the reported slope.
  const double mean_s = 2.0;
  double num = 0, den = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    num += (s_list[k] - mean_s) * lim.per_s[k].refined_value;
    den += (s_list[k] - mean_s) * (s_list[k] - mean_s);
  }
  EXPECT_NEAR(lim.slope, num / den, 1e-10 * std::fabs(lim.slope));
  EXPECT_GT(lim.stderr, 0.0);
}
