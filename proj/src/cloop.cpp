#include "resetfd/cloop.hpp"

#include <cmath>
#include <sstream>

#include "resetfd/error.hpp"

namespace resetfd {

RationalTF LoopConfig::effective_pre() const {
  return shaping ? series(c_pre, shaping->f) : c_pre;
}

RationalTF LoopConfig::effective_pos() const {
  return shaping ? series(c_pos, shaping->f_inv) : c_pos;
}

LoopConfig LoopConfig::with_shaping(ShapingPair pair) const {
  LoopConfig out = *this;
  out.shaping = std::move(pair);
  return out;
}

double LoopConfig::shaping_mismatch(const FrequencyGrid& grid) const {
  if (!shaping) return 0.0;
  double worst = 0.0;
  for (double w : grid)
    worst = std::max(worst, std::abs(eval_freq(shaping->f, w) * eval_freq(shaping->f_inv, w) - 1.0));
  return worst;
}

HarmonicSpectrum::HarmonicSpectrum(double omega, int n_max)
    : omega_(omega), n_max_(n_max), odd_(static_cast<std::size_t>(n_max > 0 ? (n_max + 1) / 2 : 0)) {
  if (n_max < 1 || n_max % 2 == 0) throw ValidationError("harmonic truncation order must be odd and positive");
}

cplx HarmonicSpectrum::operator[](int n) const {
  if (n < 1 || n > n_max_ || n % 2 == 0) return {0.0, 0.0};
  return odd_[static_cast<std::size_t>((n - 1) / 2)];
}

void HarmonicSpectrum::set(int n, cplx value) {
  if (n % 2 == 0) throw ValidationError("harmonic spectra hold odd orders only");
  if (n < 1 || n > n_max_) throw ValidationError("harmonic order outside the spectrum's range");
  if (!std::isfinite(value.real()) || !std::isfinite(value.imag()))
    throw NumericalError("non-finite harmonic coefficient");
  odd_[static_cast<std::size_t>((n - 1) / 2)] = value;
}

double HarmonicSpectrum::higher_power() const {
  double acc = 0.0;
  for (std::size_t i = 1; i < odd_.size(); ++i) acc += std::norm(odd_[i]);
  return acc;
}

namespace {

RationalTF base_linear_open_loop(const LoopConfig& cfg, const RationalTF& pre, const RationalTF& pos) {
  const RationalTF inner = parallel(cfg.c_par, base_linear_tf(cfg.element));
  return series(series(series(cfg.plant, pos), inner), pre);
}

cplx inverse_return_difference(cplx loop_gain, double omega) {
  const cplx rd = 1.0 + loop_gain;
  if (rd == cplx{0.0, 0.0}) {
    std::ostringstream os;
    os << "singular sensitivity (1 + L = 0) at omega = " << omega << " rad/s";
    throw NumericalError(os.str());
  }
  return 1.0 / rd;
}

/// |s| exp(j n arg s)
cplx phase_power(cplx s, int n) { return std::polar(std::abs(s), n * std::arg(s)); }

}  // namespace

LoopAnalyzer::LoopAnalyzer(LoopConfig cfg)
    : cfg_(std::move(cfg)),
      pre_(cfg_.effective_pre()),
      pos_(cfg_.effective_pos()),
      l_bl_(base_linear_open_loop(cfg_, pre_, pos_)),
      hosidf_(cfg_.element) {}

LoopAnalyzer::Point LoopAnalyzer::point(double omega, int n_max) const {
  return Point{eval_freq(pre_, omega), hosidf_.all(omega, n_max)};
}

cplx LoopAnalyzer::open_loop_from(const Point& p, double omega, int n) const {
  if (n % 2 == 0) return {0.0, 0.0};
  const cplx h = p.h[static_cast<std::size_t>(n - 1)];
  if (n == 1)
    return eval_freq(cfg_.plant, omega) * eval_freq(pos_, omega) *
           (h + eval_freq(cfg_.c_par, omega)) * p.pre;
  const double wn = n * omega;
  return eval_freq(cfg_.plant, wn) * eval_freq(pos_, wn) * h * phase_power(p.pre, n);
}

cplx LoopAnalyzer::open_loop(double omega, int n) const {
  if (n < 1) throw PreconditionError("harmonic order must be positive");
  if (n % 2 == 0) return {0.0, 0.0};
  return open_loop_from(point(omega, n), omega, n);
}

cplx LoopAnalyzer::base_linear_sensitivity(double omega_h) const {
  return inverse_return_difference(eval_freq(l_bl_, omega_h), omega_h);
}

HarmonicSpectrum LoopAnalyzer::open_loop_spectrum(double omega, int n_max) const {
  HarmonicSpectrum out(omega, n_max);
  const Point p = point(omega, n_max);
  for (int n = 1; n <= n_max; n += 2) out.set(n, open_loop_from(p, omega, n));
  return out;
}

HarmonicSpectrum LoopAnalyzer::spectrum(double omega, int n_max, InputChannel channel) const {
  HarmonicSpectrum out(omega, n_max);
  const Point p = point(omega, n_max);
  cplx first = inverse_return_difference(open_loop_from(p, omega, 1), omega);
  if (channel == InputChannel::Disturbance) first *= eval_freq(cfg_.plant, omega);
  out.set(1, first);
  for (int n = 3; n <= n_max; n += 2) {
    const cplx ln = open_loop_from(p, omega, n);
    out.set(n, -ln * base_linear_sensitivity(n * omega) * phase_power(first, n));
  }
  return out;
}

cplx LoopAnalyzer::sensitivity(double omega, int n) const {
  if (n < 1) throw PreconditionError("harmonic order must be positive");
  if (n % 2 == 0) return {0.0, 0.0};
  return spectrum(omega, n)[n];
}

cplx LoopAnalyzer::disturbance_sensitivity(double omega, int n) const {
  if (n < 1) throw PreconditionError("harmonic order must be positive");
  if (n % 2 == 0) return {0.0, 0.0};
  return spectrum(omega, n, InputChannel::Disturbance)[n];
}

cplx open_loop_Ln(const LoopConfig& cfg, double omega, int n) { return LoopAnalyzer(cfg).open_loop(omega, n); }

cplx base_linear_sensitivity(const LoopConfig& cfg, double omega_h) {
  return LoopAnalyzer(cfg).base_linear_sensitivity(omega_h);
}

cplx sensitivity_n(const LoopConfig& cfg, double omega, int n) {
  return LoopAnalyzer(cfg).sensitivity(omega, n);
}

cplx disturbance_sensitivity_n(const LoopConfig& cfg, double omega, int n) {
  return LoopAnalyzer(cfg).disturbance_sensitivity(omega, n);
}

namespace {

template <typename Fn>
std::vector<HarmonicSpectrum> sweep(const FrequencyGrid& grid, int n_max, Fn&& fn) {
  if (n_max < 1 || n_max % 2 == 0) throw ValidationError("n_max must be odd and positive");
  std::vector<HarmonicSpectrum> out;
  out.reserve(grid.size());
  for (double w : grid) {
    try {
      out.push_back(fn(w));
    } catch (const Error& e) {
      std::ostringstream os;
      os << "at omega = " << w << " rad/s: " << e.what();
      throw_error(e.kind(), os.str());
    }
  }
  return out;
}

}  // namespace

std::vector<HarmonicSpectrum> spectrum_sweep(const LoopConfig& cfg, const FrequencyGrid& grid, int n_max,
                                             InputChannel channel) {
  const LoopAnalyzer an(cfg);
  return sweep(grid, n_max, [&](double w) { return an.spectrum(w, n_max, channel); });
}

std::vector<HarmonicSpectrum> open_loop_sweep(const LoopConfig& cfg, const FrequencyGrid& grid, int n_max) {
  const LoopAnalyzer an(cfg);
  return sweep(grid, n_max, [&](double w) { return an.open_loop_spectrum(w, n_max); });
}

}  // namespace resetfd
