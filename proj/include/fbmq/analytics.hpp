#pragma once

// Closed-form quantities for the fBm storage process: the constants of the
// exact tail asymptotics, the variance and correlation of the scaled field
// Z(s,tau), the normal tail, and exact Brownian-input formulas.

#include <cmath>
#include <numbers>

#include "fbmq/errors.hpp"
#include "fbmq/gaussgen.hpp"

namespace fbmq::analytics {

struct AsymConstants {
  double tau0 = 0.0;
  double A = 0.0;  // nu(tau0)
  double B = 0.0;  // nu''(tau0)
  double a = 0.0;  // local correlation coefficient, tau0^{-2H}/2
  double b = 0.0;  // B / (2A)
};

inline AsymConstants constants(Hurst hurst, double c) {
  if (!(c > 0.0)) throw DomainError("service rate c must be positive");
  const double h = hurst.value();
  AsymConstants k;
  k.tau0 = h / (c * (1.0 - h));
  k.A = std::pow(k.tau0, -h) / (1.0 - h);
  k.B = h * std::pow(k.tau0, -h - 2.0);
  k.a = 0.5 * std::pow(k.tau0, -2.0 * h);
  k.b = k.B / (2.0 * k.A);
  return k;
}

/// nu(tau) = tau^{-H} + c tau^{1-H}.
inline double nu(double tau, Hurst h, double c) {
  if (!(tau > 0.0)) throw DomainError("tau must be positive");
  return std::pow(tau, -h.value()) + c * std::pow(tau, 1.0 - h.value());
}

/// Standard deviation of Z(s,tau), equal to 1/nu(tau).
inline double sigma_Z(double tau, Hurst h, double c) { return 1.0 / nu(tau, h, c); }

/// Correlation of Z(s1,tau1) and Z(s2,tau2).
inline double r_Z(double s1, double tau1, double s2, double tau2, Hurst hurst) {
  if (!(tau1 > 0.0) || !(tau2 > 0.0)) throw DomainError("tau must be positive");
  const double two_h = 2.0 * hurst.value();
  const double d = s1 - s2;
  auto p = [two_h](double x) { return std::pow(std::fabs(x), two_h); };
  const double num = p(d + tau1) + p(d - tau2) - p(d + tau1 - tau2) - p(d);
  return num / (2.0 * std::pow(tau1, hurst.value()) * std::pow(tau2, hurst.value()));
}

/// Standard normal upper tail via erfc.
inline double mills_psi(double u) { return 0.5 * std::erfc(u / std::numbers::sqrt2); }

/// Leading term of the normal tail expansion, exp(-u^2/2) / (u sqrt(2 pi)).
inline double psi_asymptotic(double u) {
  if (!(u > 0.0)) throw DomainError("asymptotic tail needs u > 0");
  return std::exp(-0.5 * u * u) / (u * std::sqrt(2.0 * std::numbers::pi));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct TailModel {
  Hurst h;
  double c;
  double pickands;  // classical constant H^sup_{B_H}

  AsymConstants consts() const { return constants(h, c); }
};

/// Exact-asymptotics approximation of P(Q(0) > u):
/// sqrt(pi) a^{1/2H} b^{-1/2} H (A u^{1-H})^{(1-H)/H} Psi(A u^{1-H}).
inline double tail_asymptotic(double u, const TailModel& m) {
  if (!(u > 0.0)) throw DomainError("level u must be positive");
  if (!(m.pickands > 0.0)) throw DomainError("Pickands constant must be positive");
  const double h = m.h.value();
  const AsymConstants k = m.consts();
  const double x = k.A * std::pow(u, 1.0 - h);
  return std::sqrt(std::numbers::pi) * std::pow(k.a, 0.5 / h) / std::sqrt(k.b) * m.pickands *
         std::pow(x, (1.0 - h) / h) * mills_psi(x);
}

// --- Brownian input (H = 1/2) ------------------------------------------------

/// P(Q(0) > u) = exp(-2cu): Q(0) is exponential with rate 2c.
inline double brownian_qzero_tail(double u, double c) {
  if (!(u >= 0.0) || !(c > 0.0)) throw DomainError("need u >= 0 and c > 0");
  return std::exp(-2.0 * c * u);
}

/// R(S) = 2(1+S) Psi(sqrt S) - sqrt(2S/pi) exp(-S/2), the ratio
/// P(inf_[0,S] Q > u) / P(Q(0) > u) for c = 1, any u >= 0.
inline double brownian_inf_ratio(double S) {
  if (!(S >= 0.0)) throw DomainError("window S must be non-negative");
  return 2.0 * (1.0 + S) * mills_psi(std::sqrt(S)) - std::sqrt(2.0 * S / std::numbers::pi) * std::exp(-0.5 * S);
}

/// P(inf_[0,S] Q > u) for service rate c, reduced to c = 1 by Brownian
/// scaling: the window becomes c^2 S and the level cu.
inline double brownian_inf_exact(double u, double S, double c) {
  return brownian_qzero_tail(u, c) * brownian_inf_ratio(c * c * S);
}

/// H^sup_{B_1/2}([0,x]) = E exp(sup_[0,x](sqrt2 W(t) - t))
///                     = (2 + x) Phi(sqrt(x/2)) + sqrt(x/pi) exp(-x/4).
inline double brownian_pickands_sup(double x) {
  if (!(x >= 0.0)) throw DomainError("interval length must be non-negative");
  return (2.0 + x) * normal_cdf(std::sqrt(0.5 * x)) + std::sqrt(x / std::numbers::pi) * std::exp(-0.25 * x);
}

/// H^inf_{B_1/2}([0,x]) = E exp(inf_[0,x](sqrt2 W(t) - t)) = R(x/2).
inline double brownian_pickands_inf(double x) { return brownian_inf_ratio(0.5 * x); }

/// Large-u behaviour of P(sup_[0,S] Q > u) for Brownian input:
/// exp(-2cu) H^sup_{B_1/2}([0, 2c^2 S]).
inline double brownian_sup_asympt(double u, double S, double c) {
  if (!(u > 0.0) || !(S > 0.0) || !(c > 0.0)) throw DomainError("need u, S, c > 0");
  return brownian_qzero_tail(u, c) * brownian_pickands_sup(2.0 * c * c * S);
}

/// Same asymptotics with an extra 2 sqrt(pi) factor. Kept for comparison in
/// reports; simulation agrees with the one above.
inline double brownian_sup_asympt_displayed(double u, double S, double c) {
  return 2.0 * std::sqrt(std::numbers::pi) * brownian_sup_asympt(u, S, c);
}

}  // namespace fbmq::analytics
