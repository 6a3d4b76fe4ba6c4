#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "resetfd/case_study.hpp"
#include "resetfd/cloop.hpp"
#include "resetfd/reset.hpp"

namespace oracle {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Clegg integrator under sin(w t): u = (1 - cos w t)/w on each half period,
// so H1 = 4/(pi w) - j/w and H3 = 4/(3 pi w).
constexpr double kCleggH1MagTimesW = 1.6189931866062328;  // sqrt(1 + 16/pi^2)
constexpr double kCleggH1PhaseDeg = -38.146025987222544;  // -atan(pi/4)
constexpr double kCleggH3TimesW = 0.4244131815783876;     // 4/(3 pi)

// notch depth Q2/Q1 with Q1 = 6.79, Q2 = 2.38
constexpr double kNotchDepth = 0.35051546391752575;

// CgLp with f_l = 80 Hz, f_f = 350 Hz, A_rho = 0
constexpr double kCgLpKc = 0.7714285714285715;         // 270/350
constexpr double kCgLpDr = 0.2962962962962963;         // 80/270
constexpr double kCgLpOmegaRHz = 49.41342598710848;    // 80/sqrt(1 + 16/pi^2)

// Psi for S1 = 1, S3 = 0.5, sigma_max = 0.15
constexpr double kPsiExample = 1.1357816691600546;     // sqrt(1.29)

inline double rel(std::complex<double> a, std::complex<double> b) { return std::abs(a - b) / std::abs(b); }
inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

inline resetfd::ResetElement clegg() {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(1, 1);
  Eigen::VectorXd b = Eigen::VectorXd::Ones(1);
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Ones(1);
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(1);
  return resetfd::ResetElement(a, b, c, 0.0, rho);
}

inline resetfd::ResetElement gfore(double omega_r, double gamma, double d = 0.0) {
  Eigen::MatrixXd a(1, 1);
  a << -omega_r;
  Eigen::VectorXd b = Eigen::VectorXd::Ones(1);
  Eigen::RowVectorXd c(1);
  c << omega_r;
  Eigen::VectorXd rho(1);
  rho << gamma;
  return resetfd::ResetElement(a, b, c, d, rho);
}

/// Random 1- or 2-state element with Hurwitz A, poles in 2 pi [1, 300] rad/s,
/// gamma in [-0.8, 0.8] and a convergence spectral radius of at most 0.9.
inline resetfd::ResetElement random_element(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lp(std::log(kTwoPi * 1.0), std::log(kTwoPi * 300.0));
  std::uniform_real_distribution<double> g(-0.8, 0.8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution two(0.5);
  for (;;) {
    const int n = two(rng) ? 2 : 1;
    Eigen::MatrixXd a(n, n);
    Eigen::VectorXd b(n), rho(n);
    Eigen::RowVectorXd c(n);
    if (n == 1) {
      a << -std::exp(lp(rng));
    } else if (two(rng)) {
      // complex pair
      const double wn = std::exp(lp(rng)), zeta = 0.2 + 0.7 * (0.5 + 0.5 * u(rng));
      a << 0.0, 1.0, -wn * wn, -2.0 * zeta * wn;
    } else {
      a << -std::exp(lp(rng)), 0.3 * u(rng) * kTwoPi * 10.0, 0.0, -std::exp(lp(rng));
    }
    for (int i = 0; i < n; ++i) {
      b[i] = u(rng);
      c[i] = u(rng) * std::abs(a(i, i) == 0.0 ? 1.0 : a(i, i));
      rho[i] = g(rng);
    }
    if (n == 2 && a(0, 0) == 0.0) {
      b << 0.0, 1.0;
      c << std::abs(a(1, 0)) * (0.5 + 0.5 * std::abs(u(rng))), 0.0;
    }
    const double d = 0.5 * u(rng);
    resetfd::ResetElement el(a, b, c, d, rho);
    if (b.norm() < 0.1 || c.norm() == 0.0) continue;
    const auto rep = resetfd::check_assumption1(el);
    if (rep.holds && rep.worst_radius <= 0.9) return el;
  }
}

/// Random biproper shaping filter of degree <= 4 built from notch, lag and
/// lead-lag sections, with magnitudes bounded away from 0 and infinity.
inline resetfd::RationalTF random_filter(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lw(std::log(kTwoPi * 2.0), std::log(kTwoPi * 500.0));
  std::uniform_real_distribution<double> lq(std::log(0.5), std::log(20.0));
  std::uniform_real_distribution<double> lr(std::log(1.2), std::log(10.0));
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_int_distribution<int> count(1, 2);
  resetfd::RationalTF f;
  int degree = 0;
  const int sections = count(rng);
  for (int s = 0; s < sections; ++s) {
    const int k = kind(rng);
    if (k == 0 && degree + 2 <= 4) {
      const double wn = std::exp(lw(rng));
      const double w2 = 1.0 / (wn * wn);
      f = resetfd::series(f, resetfd::RationalTF({w2, 1.0 / (std::exp(lq(rng)) * wn), 1.0},
                                                 {w2, 1.0 / (std::exp(lq(rng)) * wn), 1.0}));
      degree += 2;
    } else if (degree + 1 <= 4) {
      const double w1 = std::exp(lw(rng)), r = std::exp(lr(rng));
      // k == 1: lag (zero above the pole), otherwise lead (pole above the zero)
      const double wz = k == 1 ? w1 * r : w1, wp = k == 1 ? w1 : w1 * r;
      f = resetfd::series(f, resetfd::lead_lag(wz, wp));
      degree += 1;
    }
  }
  return f;
}

}  // namespace oracle
