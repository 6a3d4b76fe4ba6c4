#pragma once

#include <limits>
#include <span>
#include <vector>

#include "resetfd/cloop.hpp"

namespace resetfd {

/// Relative growth of the steady-state error 2-norm caused by harmonics above
/// the first: (sqrt(sum_n |S^n|^2) - |S^1|) / |S^1|.
double sigma2(const HarmonicSpectrum& spectrum);

/// sigma2 after wrapping the reset element in F / F^{-1}. Only |S^n|, n >= 3,
/// are rescaled by |F(jw)| |F^{-1}(jnw)|; the n = 1 term is kept as |S^1|.
double sigma2_filtered(const HarmonicSpectrum& spectrum, const RationalTF& f, double omega);

/// Upper bound on |F(jw)| |F^{-1}(j k_m w)| that guarantees sigma2 <= sigma2_max.
/// +infinity when the spectrum has no higher harmonics.
double psi(const HarmonicSpectrum& spectrum, double sigma2_max);

struct KmFactor {
  int k_m = 3;
  double value = 0.0;  // |F^{-1}(j k_m w)|; +inf at a pole of F^{-1}
};

/// argmax/max of |F^{-1}(j n w)| over odd n in [3, n_max]; ties go to the smaller n.
KmFactor km_factor(const RationalTF& f, double omega, int n_max);

struct Sigma2Curve {
  FrequencyGrid grid;
  std::vector<double> values;
  int n_max = 0;
};

struct PsiCurve {
  FrequencyGrid grid;
  std::vector<double> values;  // may hold +infinity
  double sigma2_max = 0.0;
  int n_max = 0;
};

Sigma2Curve sigma2_curve(const std::vector<HarmonicSpectrum>& spectra, const FrequencyGrid& grid);
Sigma2Curve sigma2_curve(const LoopConfig& cfg, const FrequencyGrid& grid, int n_max);
PsiCurve psi_curve(const std::vector<HarmonicSpectrum>& spectra, const FrequencyGrid& grid,
                   double sigma2_max);
PsiCurve psi_curve(const LoopConfig& cfg, const FrequencyGrid& grid, int n_max, double sigma2_max);

struct BoundReport {
  /// Sufficient condition |F||F^{-1}(k_m)| <= Psi at every grid point.
  bool feasible = false;
  /// Direct check sigma2_filtered <= sigma2_max at every grid point.
  bool direct_feasible = false;
  std::vector<double> margin;          // Psi - product (+inf where Psi is)
  std::vector<double> product;         // |F(jw)| |F^{-1}(j k_m w)|
  std::vector<int> k_m;
  std::vector<double> sigma2_after;    // sigma2_filtered at each grid point
  double min_margin = std::numeric_limits<double>::infinity();
};

BoundReport verify_bound(const std::vector<HarmonicSpectrum>& spectra, const PsiCurve& psi,
                         const RationalTF& f);
BoundReport verify_bound(const LoopConfig& cfg, const RationalTF& f, const FrequencyGrid& grid,
                         double sigma2_max, int n_max);

struct Waveform {
  std::vector<double> e;   // sum over odd n of |c_n| sin(n theta + arg c_n)
  std::vector<double> e1;  // first harmonic alone
};

/// One period of the steady-state signal described by a spectrum, sampled at
/// `samples` equally spaced phases theta = 2 pi k / samples.
Waveform reconstruct(const HarmonicSpectrum& spectrum, std::size_t samples);

/// (||e||_p - ||e1||_p)/||e1||_p with discrete p-norms (sum |x|^p dt)^(1/p).
/// p = +infinity selects the max norm.
double sigma_p_timedomain(std::span<const double> e, std::span<const double> e1, double p,
                          double dt = 1.0);

}  // namespace resetfd
