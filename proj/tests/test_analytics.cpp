#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fbmq/analytics.hpp"
#include "support/oracles.hpp"

using namespace fbmq;
namespace an = fbmq::analytics;

TEST(Constants, BrownianUnitRate) {
  const auto k = an::constants(Hurst(0.5), 1.0);
  EXPECT_NEAR(k.tau0, 1.0, 1e-15);
  EXPECT_NEAR(k.A, 2.0, 1e-15);
  EXPECT_NEAR(k.B, 0.5, 1e-15);
  EXPECT_NEAR(k.a, 0.5, 1e-15);
  EXPECT_NEAR(k.b, 0.125, 1e-15);
}

TEST(Constants, ThreeQuarters) {
  const auto k = an::constants(Hurst(0.75), 1.0);
  EXPECT_NEAR(k.tau0, 3.0, 1e-14);
  EXPECT_NEAR(k.A, 4.0 * std::pow(3.0, -0.75), 1e-14);
  EXPECT_NEAR(k.A, 1.7547, 1e-4);
  EXPECT_NEAR(k.B, 0.75 * std::pow(3.0, -2.75), 1e-14);
  EXPECT_NEAR(k.a, 0.5 / std::pow(3.0, 1.5), 1e-14);
}

TEST(Constants, ANuAtMinimumAndBSecondDerivative) {
  for (double h : {0.55, 0.7, 0.9}) {
    for (double c : {0.5, 1.0, 3.0}) {
      const Hurst hh(h);
      const auto k = an::constants(hh, c);
      EXPECT_NEAR(k.A, an::nu(k.tau0, hh, c), 1e-12 * k.A);
      const double e = 1e-4 * k.tau0;
      const double d1 = (an::nu(k.tau0 + e, hh, c) - an::nu(k.tau0 - e, hh, c)) / (2 * e);
      const double d2 = (an::nu(k.tau0 + e, hh, c) - 2 * an::nu(k.tau0, hh, c) + an::nu(k.tau0 - e, hh, c)) / (e * e);
      EXPECT_NEAR(d1, 0.0, 1e-7 * k.A / k.tau0);
      EXPECT_NEAR(d2 / k.B, 1.0, 1e-5);
      // tau0 minimises nu on a fine scan.
      for (int i = 1; i < 400; ++i) {
        const double t = k.tau0 * i / 100.0;
        EXPECT_GE(an::nu(t, hh, c), k.A * (1 - 1e-13));
      }
    }
  }
}

TEST(SigmaZ, PeaksAtTau0) {
  const Hurst h(0.7);
  const double c = 1.5;
  const auto k = an::constants(h, c);
  double best_t = 0, best = 0;
  for (int i = 1; i <= 100000; ++i) {
    const double t = 10.0 * k.tau0 * i / 100000.0;
    const double s = an::sigma_Z(t, h, c);
    if (s > best) best = s, best_t = t;
  }
  EXPECT_NEAR(best_t, k.tau0, 2e-4 * k.tau0);
  EXPECT_NEAR(best, 1.0 / k.A, 1e-12);
}

TEST(CorrelationZ, BasicProperties) {
  const Hurst h(0.75);
  EXPECT_NEAR(an::r_Z(0.3, 2.0, 0.3, 2.0, h), 1.0, 1e-14);
  EXPECT_NEAR(an::r_Z(0.0, 1.0, 5.0, 1.0, Hurst(0.5)), 0.0, 1e-14);
  EXPECT_NEAR(an::r_Z(0.1, 2.0, 0.7, 3.0, h), an::r_Z(0.7, 3.0, 0.1, 2.0, h), 1e-14);
  // Covariance of increments as a hand check: B(1)-B(0) vs B(3)-B(1) at H=1/2.
  EXPECT_NEAR(an::r_Z(0.0, 1.0, 1.0, 2.0, Hurst(0.5)), 0.0, 1e-14);
  // Nested intervals at H=1/2: corr(B(1), B(4)) = 1/2.
  EXPECT_NEAR(an::r_Z(0.0, 1.0, 0.0, 4.0, Hurst(0.5)), 0.5, 1e-14);
}

TEST(CorrelationZ, LocalStructureAtTau0) {
  const double hv = 0.7, c = 1.0;
  const Hurst h(hv);
  const auto k = an::constants(h, c);
  // 1 - r ~ a |ds|^{2H}: fit the exponent on shrinking shifts.
  std::vector<double> lx, ly;
  for (double e : {1e-3, 2e-3, 4e-3, 8e-3}) {
    lx.push_back(std::log(e));
    ly.push_back(std::log(1.0 - an::r_Z(e, k.tau0, 0.0, k.tau0, h)));
  }
  EXPECT_NEAR(oracle::ls_slope(lx, ly), 2 * hv, 0.01);
  // 1 - r ~ a (|ds + dtau|^{2H} + |ds|^{2H}): a pure shift counts twice, a pure lag change once.
  const double e = 1e-4;
  EXPECT_NEAR((1.0 - an::r_Z(e, k.tau0, 0.0, k.tau0, h)) / std::pow(e, 2 * hv), 2 * k.a, 0.01 * k.a);
  EXPECT_NEAR((1.0 - an::r_Z(0.0, k.tau0 + e, 0.0, k.tau0, h)) / std::pow(e, 2 * hv), k.a, 0.01 * k.a);
  // Taylor check in the lag direction: the residual shrinks at least cubically.
  std::vector<double> rx, ry;
  for (double d : {1e-2, 2e-2, 4e-2}) {
    const double exact = an::sigma_Z(k.tau0 + d, h, c);
    const double taylor = 1.0 / (k.A + 0.5 * k.B * d * d);
    rx.push_back(std::log(d));
    ry.push_back(std::log(std::fabs(exact - taylor)));
  }
  EXPECT_GE(oracle::ls_slope(rx, ry), 2.9);
}

TEST(NormalTail, Values) {
  EXPECT_EQ(an::mills_psi(0.0), 0.5);
  EXPECT_NEAR(an::mills_psi(1.0), 0.15865525393145707, 1e-16);
  EXPECT_NEAR(an::mills_psi(5.0), 2.866515718791939e-07, 1e-21);
  EXPECT_NEAR(an::mills_psi(10.0) / 7.619853024160527e-24, 1.0, 1e-12);
  EXPECT_NEAR(an::psi_asymptotic(10.0) / an::mills_psi(10.0), 1.0 / (1.0 - 1.0 / 100 + 3.0 / 1e4), 2e-5);
  EXPECT_THROW(an::psi_asymptotic(0.0), DomainError);
}

TEST(TailAsymptotic, BrownianReduction) {
  // At H = 1/2 with unit Pickands constant the expression equals x sqrt(2 pi) e^{x^2/2} Psi(x) times
  // e^{-2cu}, x = 2 sqrt(cu); this factor tends to one.
  for (double c : {0.5, 1.0, 2.0}) {
    for (double u : {1.0, 10.0, 100.0}) {
      const an::TailModel m{Hurst(0.5), c, 1.0};
      const double x = 2.0 * std::sqrt(c * u);
      const double factor = x * std::sqrt(2 * std::numbers::pi) * std::exp(0.5 * x * x) * an::mills_psi(x);
      EXPECT_NEAR(an::tail_asymptotic(u, m) / (factor * std::exp(-2 * c * u)), 1.0, 1e-10);
    }
  }
  const an::TailModel m{Hurst(0.5), 1.0, 1.0};
  EXPECT_NEAR(an::tail_asymptotic(10.0, m) / std::exp(-20.0), 1.0, 0.05);
  EXPECT_NEAR(an::tail_asymptotic(100.0, m) / std::exp(-200.0), 1.0, 3e-3);
}

TEST(TailAsymptotic, ScalesWithPickandsAndRejectsBadInput) {
  const an::TailModel m1{Hurst(0.8), 1.0, 1.0}, m2{Hurst(0.8), 1.0, 2.5};
  EXPECT_NEAR(an::tail_asymptotic(7.0, m2) / an::tail_asymptotic(7.0, m1), 2.5, 1e-13);
  EXPECT_THROW(an::tail_asymptotic(-1.0, m1), DomainError);
  EXPECT_THROW(an::tail_asymptotic(1.0, an::TailModel{Hurst(0.8), 1.0, 0.0}), DomainError);
}

TEST(Brownian, InfRatioAgainstQuadrature) {
  EXPECT_NEAR(an::brownian_inf_ratio(0.0), 1.0, 1e-15);
  for (double S : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    EXPECT_NEAR(an::brownian_inf_ratio(S), oracle::exp_moment_inf(S, 1.0, 2.0), 1e-9) << "S=" << S;
    EXPECT_LT(an::brownian_inf_ratio(S), 1.0);
  }
  // General service rate: the ratio depends on c^2 S only.
  for (double c : {0.5, 2.0}) {
    const double S = 0.7;
    EXPECT_NEAR(an::brownian_inf_exact(1.3, S, c) / std::exp(-2 * c * 1.3), oracle::exp_moment_inf(S, c, 2 * c),
                1e-9);
  }
}

TEST(Brownian, PickandsSupClosedForm) {
  EXPECT_NEAR(an::brownian_pickands_sup(0.0), 1.0, 1e-15);
  const double known[][2] = {{1.0, 2.72014}, {2.0, 3.84932}, {4.0, 5.94321}, {8.0, 9.98846}};
  for (const auto& [x, v] : known) {
    EXPECT_NEAR(an::brownian_pickands_sup(x), v, 1e-5);
    EXPECT_NEAR(an::brownian_pickands_sup(x), oracle::brownian_pickands_sup_quadrature(x), 1e-8);
    EXPECT_NEAR(an::brownian_pickands_inf(x), oracle::brownian_pickands_inf_quadrature(x), 1e-9);
  }
  // Large-x growth is x + 2 + o(1).
  EXPECT_NEAR(an::brownian_pickands_sup(400.0) - 400.0, 2.0, 1e-6);
}

TEST(Brownian, SupAsymptotics) {
  EXPECT_NEAR(an::brownian_qzero_tail(1.0, 1.0), std::exp(-2.0), 1e-16);
  EXPECT_NEAR(an::brownian_sup_asympt(1.0, 0.5, 1.0) / std::exp(-2.0), an::brownian_pickands_sup(1.0), 1e-14);
  EXPECT_NEAR(an::brownian_sup_asympt_displayed(1.0, 1.0, 1.0) / an::brownian_sup_asympt(1.0, 1.0, 1.0),
              2 * std::sqrt(std::numbers::pi), 1e-14);
}
