#include "resetfd/robustness.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "resetfd/error.hpp"

namespace resetfd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double first_magnitude(const HarmonicSpectrum& s) {
  const double m = std::abs(s[1]);
  if (!(m > 0.0)) {
    std::ostringstream os;
    os << "degenerate spectrum at omega = " << s.omega() << " rad/s: |S^1| = 0";
    throw NumericalError(os.str());
  }
  return m;
}

}  // namespace

double sigma2(const HarmonicSpectrum& spectrum) {
  const double s1 = first_magnitude(spectrum);
  const double total = std::sqrt(s1 * s1 + spectrum.higher_power());
  return (total - s1) / s1;
}

double sigma2_filtered(const HarmonicSpectrum& spectrum, const RationalTF& f, double omega) {
  const double s1 = first_magnitude(spectrum);
  const RationalTF f_inv = invert(f);
  const double f_mag = std::abs(eval_freq(f, omega));
  double higher = 0.0;
  for (int n = 3; n <= spectrum.n_max(); n += 2) {
    cplx finv;
    try {
      finv = eval_freq(f_inv, n * omega);
    } catch (const NumericalError&) {
      std::ostringstream os;
      os << "F^-1 has a pole at harmonic n = " << n << " of omega = " << omega << " rad/s";
      throw NumericalError(os.str());
    }
    higher += std::norm(finv) * std::norm(spectrum[n]);
  }
  const double total = std::sqrt(s1 * s1 + f_mag * f_mag * higher);
  return (total - s1) / s1;
}

double psi(const HarmonicSpectrum& spectrum, double sigma2_max) {
  if (!(sigma2_max >= 0.0)) throw PreconditionError("sigma2_max must be nonnegative");
  const double s1 = first_magnitude(spectrum);
  const double higher = spectrum.higher_power();
  if (higher == 0.0) return kInf;
  return s1 * std::sqrt((sigma2_max * sigma2_max + 2.0 * sigma2_max) / higher);
}

KmFactor km_factor(const RationalTF& f, double omega, int n_max) {
  if (n_max < 3) throw PreconditionError("k_m scan needs n_max >= 3");
  const RationalTF f_inv = invert(f);
  KmFactor best{3, -1.0};
  for (int n = 3; n <= n_max; n += 2) {
    double v;
    try {
      v = std::abs(eval_freq(f_inv, n * omega));
    } catch (const NumericalError&) {
      return KmFactor{n, kInf};
    }
    if (v > best.value) best = KmFactor{n, v};
  }
  return best;
}

Sigma2Curve sigma2_curve(const std::vector<HarmonicSpectrum>& spectra, const FrequencyGrid& grid) {
  if (spectra.size() != grid.size()) throw ValidationError("spectra and grid differ in length");
  Sigma2Curve out{grid, {}, spectra.empty() ? 0 : spectra.front().n_max()};
  out.values.reserve(spectra.size());
  for (const auto& s : spectra) out.values.push_back(sigma2(s));
  return out;
}

Sigma2Curve sigma2_curve(const LoopConfig& cfg, const FrequencyGrid& grid, int n_max) {
  return sigma2_curve(spectrum_sweep(cfg, grid, n_max), grid);
}

PsiCurve psi_curve(const std::vector<HarmonicSpectrum>& spectra, const FrequencyGrid& grid,
                   double sigma2_max) {
  if (spectra.size() != grid.size()) throw ValidationError("spectra and grid differ in length");
  PsiCurve out{grid, {}, sigma2_max, spectra.empty() ? 0 : spectra.front().n_max()};
  out.values.reserve(spectra.size());
  for (const auto& s : spectra) out.values.push_back(psi(s, sigma2_max));
  return out;
}

PsiCurve psi_curve(const LoopConfig& cfg, const FrequencyGrid& grid, int n_max, double sigma2_max) {
  return psi_curve(spectrum_sweep(cfg, grid, n_max), grid, sigma2_max);
}

BoundReport verify_bound(const std::vector<HarmonicSpectrum>& spectra, const PsiCurve& psi_c,
                         const RationalTF& f) {
  if (spectra.size() != psi_c.grid.size()) throw ValidationError("spectra and Psi grid differ in length");
  BoundReport rep;
  rep.feasible = true;
  rep.direct_feasible = true;
  const std::size_t n = spectra.size();
  rep.margin.resize(n);
  rep.product.resize(n);
  rep.k_m.resize(n);
  rep.sigma2_after.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = psi_c.grid[i];
    const KmFactor km = km_factor(f, w, spectra[i].n_max());
    const double prod = std::abs(eval_freq(f, w)) * km.value;
    rep.k_m[i] = km.k_m;
    rep.product[i] = prod;
    const double bound = psi_c.values[i];
    rep.margin[i] = std::isinf(bound) ? kInf : bound - prod;
    if (!(prod <= bound)) rep.feasible = false;
    rep.min_margin = std::min(rep.min_margin, rep.margin[i]);
    // the direct re-check closes the gap left by truncating the k_m scan at n_max
    rep.sigma2_after[i] = std::isinf(km.value) ? kInf : sigma2_filtered(spectra[i], f, w);
    if (!(rep.sigma2_after[i] <= psi_c.sigma2_max)) rep.direct_feasible = false;
  }
  return rep;
}

BoundReport verify_bound(const LoopConfig& cfg, const RationalTF& f, const FrequencyGrid& grid,
                         double sigma2_max, int n_max) {
  const auto spectra = spectrum_sweep(cfg, grid, n_max);
  return verify_bound(spectra, psi_curve(spectra, grid, sigma2_max), f);
}

Waveform reconstruct(const HarmonicSpectrum& spectrum, std::size_t samples) {
  if (samples <= static_cast<std::size_t>(2 * spectrum.n_max()))
    throw PreconditionError("reconstruction needs more than 2 n_max samples per period");
  Waveform w{std::vector<double>(samples, 0.0), std::vector<double>(samples, 0.0)};
  for (std::size_t k = 0; k < samples; ++k) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples);
    for (int n = 1; n <= spectrum.n_max(); n += 2) {
      const cplx c = spectrum[n];
      const double v = std::abs(c) * std::sin(n * theta + std::arg(c));
      w.e[k] += v;
      if (n == 1) w.e1[k] = v;
    }
  }
  return w;
}

namespace {

double pnorm(std::span<const double> x, double p, double dt) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
  }
  double acc = 0.0;
  for (double v : x) acc += std::pow(std::abs(v), p);
  return std::pow(acc * dt, 1.0 / p);
}

}  // namespace

double sigma_p_timedomain(std::span<const double> e, std::span<const double> e1, double p, double dt) {
  if (e.size() != e1.size()) throw PreconditionError("sigma_p needs signals of equal length");
  if (!(p >= 1.0)) throw PreconditionError("sigma_p needs p >= 1");
  if (!(dt > 0.0)) throw PreconditionError("sigma_p needs a positive sample period");
  const double n1 = pnorm(e1, p, dt);
  if (!(n1 > 0.0)) throw NumericalError("degenerate first-harmonic signal: ||e1||_p = 0");
  return (pnorm(e, p, dt) - n1) / n1;
}

}  // namespace resetfd
