#include "resetfd/sim.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include "resetfd/error.hpp"

namespace resetfd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Transposed direct form II realisation of a Tustin-discretised block.
class Df2t {
 public:
  explicit Df2t(const DiscreteTF& tf) {
    const auto& den = tf.den();
    const std::size_t order = den.size() - 1;
    a_.assign(den.begin() + 1, den.end());
    b_.assign(order + 1, 0.0);
    const auto& num = tf.num();
    std::copy(num.begin(), num.end(), b_.end() - static_cast<std::ptrdiff_t>(num.size()));
    s_.assign(order, 0.0);
  }

  double free() const noexcept { return s_.empty() ? 0.0 : s_[0]; }
  double feed() const noexcept { return b_[0]; }

  double step(double u) {
    const double y = b_[0] * u + free();
    const std::size_t n = s_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) s_[i] = s_[i + 1] + b_[i + 1] * u - a_[i] * y;
    if (n > 0) s_[n - 1] = b_[n] * u - a_[n - 1] * y;
    return y;
  }

 private:
  std::vector<double> a_;  // den[1..N]
  std::vector<double> b_;  // num padded to N+1
  std::vector<double> s_;
};

/// Series connection of blocks, first element applied first.
class Chain {
 public:
  void add(const RationalTF& tf, double ts) {
    if (tf.num().size() == 1 && tf.num()[0] == 1.0 && tf.den().size() == 1 && tf.den()[0] == 1.0) return;
    blocks_.emplace_back(tustin(tf, ts));
  }

  // output = free + feed * input
  void affine(double& free, double& feed) const {
    free = 0.0;
    feed = 1.0;
    for (const auto& b : blocks_) {
      free = b.free() + b.feed() * free;
      feed *= b.feed();
    }
  }

  double step(double u) {
    for (auto& b : blocks_) u = b.step(u);
    return u;
  }

 private:
  std::vector<Df2t> blocks_;
};

using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using SmallRow = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor, 1, 4>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

/// Trapezoidal flow of the reset element with sample-level jumps.
///   x_k = M (z_{k-1} + Ts/2 B e_k),  u_k = C x_k + D e_k,
///   x_k <- A_rho x_k on a crossing,   z_k = (I + A Ts/2) x_k + Ts/2 B e_k.
class ResetStepper {
 public:
  ResetStepper(const ResetElement& el, double ts) : n_(el.states()), d_(el.d()) {
    if (n_ == 0) return;
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n_, n_);
    const Eigen::MatrixXd m = (id - 0.5 * ts * el.a()).inverse();
    m_ = m;
    p_ = id + 0.5 * ts * el.a();
    bh_ = 0.5 * ts * el.b();
    mbh_ = m * bh_;
    c_ = el.c();
    cm_ = el.c() * m;
    rho_ = el.rho();
    z_ = SmallVec::Zero(n_);
    x_ = SmallVec::Zero(n_);
    feed_ = (c_ * mbh_)(0, 0) + d_;
  }

  double free() const { return n_ == 0 ? 0.0 : (cm_ * z_)(0, 0); }
  double feed() const noexcept { return n_ == 0 ? d_ : feed_; }
  const SmallVec& state() const noexcept { return x_; }

  /// Returns the output; `reset` is set when a jump was applied at this sample
  /// and `after` then holds the output recomputed from the post-jump state.
  double step(double e, bool crossing, bool& reset, double* after = nullptr) {
    reset = false;
    if (n_ == 0) return d_ * e;
    x_.noalias() = m_ * z_ + mbh_ * e;
    const double u = (c_ * x_)(0, 0) + d_ * e;
    if (crossing) {
      bool moves = false;
      for (int i = 0; i < n_; ++i) moves |= (rho_[i] - 1.0) * x_[i] != 0.0;
      if (moves) {
        x_ = rho_.cwiseProduct(x_);
        reset = true;
        if (after) *after = (c_ * x_)(0, 0) + d_ * e;
      }
    }
    z_.noalias() = p_ * x_ + bh_ * e;
    return u;
  }

 private:
  int n_;
  double d_;
  double feed_ = 0.0;
  SmallMat m_, p_;
  SmallVec bh_, mbh_, rho_, z_, x_;
  SmallRow c_, cm_;
};

bool is_crossing(double prev, double cur, bool has_prev) {
  if (cur == 0.0) return true;
  return has_prev && prev * cur < 0.0;
}

double max_root_magnitude(const std::vector<double>& c) {
  // strip leading zeros, drop trailing zeros (roots at the origin)
  std::size_t first = 0;
  while (first < c.size() && c[first] == 0.0) ++first;
  std::size_t last = c.size();
  while (last > first && c[last - 1] == 0.0) --last;
  const std::ptrdiff_t deg = static_cast<std::ptrdiff_t>(last - first) - 1;
  if (deg < 1) return 0.0;
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  for (std::ptrdiff_t j = 0; j < deg; ++j) comp(0, j) = -c[first + 1 + static_cast<std::size_t>(j)] / c[first];
  for (std::ptrdiff_t i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  return comp.eigenvalues().cwiseAbs().maxCoeff();
}

double fastest_dynamics(const LoopConfig& cfg) {
  double w = 0.0;
  auto visit = [&](const RationalTF& tf) {
    w = std::max({w, max_root_magnitude(tf.num()), max_root_magnitude(tf.den())});
  };
  visit(cfg.plant);
  visit(cfg.c_pre);
  visit(cfg.c_par);
  visit(cfg.c_pos);
  if (cfg.shaping) {
    visit(cfg.shaping->f);
    visit(cfg.shaping->f_inv);
  }
  if (cfg.element.states() > 0) w = std::max(w, cfg.element.a().eigenvalues().cwiseAbs().maxCoeff());
  return w;
}

class LoopSimulator {
 public:
  LoopSimulator(const LoopConfig& cfg, double ts, const SimOptions& opts)
      : reset_(cfg.element, ts), quant_(opts.quantization) {
    pre_.add(cfg.c_pre, ts);
    if (cfg.shaping) pre_.add(cfg.shaping->f, ts);
    if (!cfg.c_par.is_zero()) {
      par_.add(cfg.c_par, ts);
      has_par_ = true;
    }
    if (cfg.shaping) pos_.add(cfg.shaping->f_inv, ts);
    pos_.add(cfg.c_pos, ts);
    plant_.add(cfg.plant, ts);
  }

  void step(double r, double d, SimResult& out) {
    double fpre, dpre, fpos, dpos, fg, dg;
    pre_.affine(fpre, dpre);
    pos_.affine(fpos, dpos);
    plant_.affine(fg, dg);
    double fpar = 0.0, dpar = 0.0;
    if (has_par_) par_.affine(fpar, dpar);
    const double fr = reset_.free();
    const double dr = reset_.feed();

    // e = r - y with y affine in e through the whole loop
    const double loop_feed = dg * dpos * (dr + dpar) * dpre;
    const double offset = fg + dg * (d + fpos + dpos * (fr + fpar + (dr + dpar) * fpre));
    const double denom = 1.0 + loop_feed;
    if (denom == 0.0) throw NumericalError("algebraic loop is singular (1 + feedthrough = 0)");
    double e = (r - offset) / denom;
    if (quant_ > 0.0) {
      const double y_pred = offset + loop_feed * e;
      e = r - quant_ * std::round(y_pred / quant_);
    }

    const double er = pre_.step(e);
    const bool crossing = is_crossing(prev_er_, er, has_prev_);
    bool reset = false;
    const double ur = reset_.step(er, crossing, reset);
    const double par = has_par_ ? par_.step(er) : 0.0;
    const double u = pos_.step(ur + par);
    const double y = plant_.step(u + d);

    if (reset) out.reset_instants.push_back(out.e.size());
    out.e.push_back(e);
    out.e_r.push_back(er);
    out.u_r.push_back(ur);
    out.u.push_back(u);
    out.y.push_back(y);
    prev_er_ = er;
    has_prev_ = true;
  }

 private:
  Chain pre_, par_, pos_, plant_;
  ResetStepper reset_;
  bool has_par_ = false;
  double quant_;
  double prev_er_ = 0.0;
  bool has_prev_ = false;
};

void check_timing(const LoopConfig& cfg, double ts, SimResult& res) {
  if (!(ts > 0.0)) throw PreconditionError("sample period must be positive");
  const double w = fastest_dynamics(cfg);
  if (w * ts >= 1.0) {
    std::ostringstream os;
    os << "sample period " << ts << " s does not resolve dynamics at " << w << " rad/s (w Ts = " << w * ts
       << ")";
    throw PreconditionError(os.str());
  }
  if (w * ts >= 0.1) {
    std::ostringstream os;
    os << "fastest dynamics " << w << " rad/s give w Ts = " << w * ts << " >= 0.1; Tustin warping is noticeable";
    res.warnings.push_back(os.str());
  }
}

void check_input(const InputDescriptor& in) {
  if (!(in.frequency_hz > 0.0)) throw PreconditionError("input frequency must be positive");
  if (!(in.amplitude >= 0.0)) throw PreconditionError("input amplitude must be nonnegative");
}

double excitation(const InputDescriptor& in, double ts, std::size_t k) {
  return in.amplitude * std::sin(kTwoPi * in.frequency_hz * ts * static_cast<double>(k));
}

void run_samples(LoopSimulator& sim, const InputDescriptor& in, double ts, std::size_t from, std::size_t to,
                 SimResult& res) {
  for (std::size_t k = from; k < to; ++k) {
    const double w = excitation(in, ts, k);
    if (in.channel == InputChannel::Reference)
      sim.step(w, 0.0, res);
    else
      sim.step(0.0, w, res);
  }
}

double rms_diff(std::span<const double> a, std::span<const double> b, double& rms_b) {
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    ref += b[i] * b[i];
  }
  rms_b = std::sqrt(ref / static_cast<double>(b.size()));
  return std::sqrt(diff / static_cast<double>(a.size()));
}

double relative_period_change(std::span<const double> x, std::size_t period, std::size_t end, std::size_t lag) {
  const auto cur = x.subspan(end - period, period);
  const auto old = x.subspan(end - period - lag, period);
  double ref = 0.0;
  const double d = rms_diff(old, cur, ref);
  if (ref == 0.0) return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return d / ref;
}

}  // namespace

double snap_frequency(double frequency_hz, double ts) {
  if (!(frequency_hz > 0.0 && ts > 0.0)) throw PreconditionError("frequency and sample period must be positive");
  const double n = std::max(2.0, std::round(1.0 / (frequency_hz * ts)));
  return 1.0 / (n * ts);
}

std::size_t samples_per_period(double frequency_hz, double ts) {
  if (!(frequency_hz > 0.0 && ts > 0.0)) throw PreconditionError("frequency and sample period must be positive");
  const double n = 1.0 / (frequency_hz * ts);
  const double r = std::round(n);
  if (r < 2.0 || std::abs(n - r) > 1e-9 * r) {
    std::ostringstream os;
    os << "input period is " << n << " samples, not an integer; use snap_frequency";
    throw PreconditionError(os.str());
  }
  return static_cast<std::size_t>(r);
}

SimResult simulate(const LoopConfig& cfg, const InputDescriptor& input, double ts, double duration,
                   const SimOptions& opts) {
  check_input(input);
  SimResult res;
  res.sample_period = ts;
  res.input = input;
  check_timing(cfg, ts, res);
  if (duration * input.frequency_hz < 50.0 - 1e-9)
    throw PreconditionError("simulation must cover at least 50 input periods");
  const auto samples = static_cast<std::size_t>(std::llround(duration / ts));
  for (auto* v : {&res.e, &res.e_r, &res.u_r, &res.u, &res.y}) v->reserve(samples);
  LoopSimulator sim(cfg, ts, opts);
  run_samples(sim, input, ts, 0, samples, res);
  res.periods = static_cast<int>(std::floor(duration * input.frequency_hz + 1e-9));
  return res;
}

SimResult simulate_steady(const LoopConfig& cfg, const InputDescriptor& input, double ts,
                          const SteadyOptions& steady, const SimOptions& opts) {
  check_input(input);
  if (steady.block_periods < 1 || steady.max_periods < 2 * steady.block_periods)
    throw PreconditionError("settlement needs block_periods >= 1 and max_periods >= 2 blocks");
  SimResult res;
  res.sample_period = ts;
  res.input = input;
  check_timing(cfg, ts, res);
  const std::size_t period = samples_per_period(input.frequency_hz, ts);
  const std::size_t block = period * static_cast<std::size_t>(steady.block_periods);
  LoopSimulator sim(cfg, ts, opts);

  std::size_t done = 0;
  while (res.periods < steady.max_periods) {
    run_samples(sim, input, ts, done, done + block, res);
    done += block;
    res.periods += steady.block_periods;
    if (res.periods < 2 * steady.block_periods) continue;
    res.settle_residual = relative_period_change(res.e, block, done, block);
    if (res.settle_residual < steady.tolerance) {
      res.settled = true;
      res.steady_start = done - block;
      res.period_jitter = relative_period_change(res.e, period, done, period);
      if (res.period_jitter >= steady.tolerance) {
        std::ostringstream os;
        os << "steady response repeats per block but not per period (relative jitter " << res.period_jitter
           << "); reset instants alternate between neighbouring samples";
        res.warnings.push_back(os.str());
      }
      return res;
    }
  }
  res.steady_start = done - block;
  std::ostringstream os;
  os << "error did not settle within " << res.periods << " periods (residual " << res.settle_residual
     << "); the loop may lack a unique periodic response";
  res.warnings.push_back(os.str());
  return res;
}

std::vector<cplx> fourier_coefficients(std::span<const double> window, std::size_t period, std::size_t origin,
                                       int n_max) {
  if (period < 2 || window.size() % period != 0 || window.empty())
    throw PreconditionError("harmonic window must span a whole number of periods");
  std::vector<cplx> out(static_cast<std::size_t>(n_max) + 1);
  const double scale = 2.0 / static_cast<double>(window.size());
  for (int n = 0; n <= n_max; ++n) {
    cplx acc{0.0, 0.0};
    for (std::size_t k = 0; k < window.size(); ++k) {
      const std::size_t phase_idx = ((origin + k) % period) * static_cast<std::size_t>(n) % period;
      const double ang = -kTwoPi * static_cast<double>(phase_idx) / static_cast<double>(period);
      acc += window[k] * cplx{std::cos(ang), std::sin(ang)};
    }
    out[static_cast<std::size_t>(n)] = cplx{0.0, scale} * acc;
  }
  // DC: plain mean, keeping the sin-convention scale out of it
  out[0] *= cplx{0.0, -0.5};
  return out;
}

namespace {

struct SteadyWindow {
  std::span<const double> e;
  std::size_t period;
  std::size_t origin;
};

SteadyWindow steady_window(const SimResult& res, double f0) {
  if (!res.settled) throw ConvergenceError("simulation has not settled; steady-state harmonics are undefined");
  if (std::abs(f0 - res.input.frequency_hz) > 1e-9 * res.input.frequency_hz)
    throw PreconditionError("harmonic analysis frequency differs from the input frequency");
  const std::size_t period = samples_per_period(f0, res.sample_period);
  const std::size_t len = res.e.size() - res.steady_start;
  if (len == 0 || len % period != 0) throw PreconditionError("steady window is not a whole number of periods");
  return {std::span<const double>(res.e).subspan(res.steady_start), period, res.steady_start};
}

}  // namespace

std::vector<cplx> steady_coefficients(const SimResult& res, double f0, int n_max) {
  const auto w = steady_window(res, f0);
  if (!(res.input.amplitude > 0.0)) throw PreconditionError("harmonics need a nonzero input amplitude");
  auto c = fourier_coefficients(w.e, w.period, w.origin, n_max);
  for (auto& v : c) v /= res.input.amplitude;
  return c;
}

HarmonicSpectrum steady_harmonics(const SimResult& res, double f0, int n_max) {
  const auto c = steady_coefficients(res, f0, n_max);
  HarmonicSpectrum out(kTwoPi * f0, n_max);
  for (int n = 1; n <= n_max; n += 2) out.set(n, c[static_cast<std::size_t>(n)]);
  return out;
}

double sigma2_measured(const SimResult& res, double f0) {
  const auto w = steady_window(res, f0);
  const auto c = fourier_coefficients(w.e, w.period, w.origin, 1);
  std::vector<double> e1(w.e.size());
  for (std::size_t k = 0; k < e1.size(); ++k) {
    const double ph = kTwoPi * static_cast<double>((w.origin + k) % w.period) / static_cast<double>(w.period);
    e1[k] = std::abs(c[1]) * std::sin(ph + std::arg(c[1]));
  }
  double n_e = 0.0, n_1 = 0.0;
  for (std::size_t k = 0; k < e1.size(); ++k) {
    n_e += w.e[k] * w.e[k];
    n_1 += e1[k] * e1[k];
  }
  if (!(n_1 > 0.0)) throw NumericalError("degenerate first harmonic: ||e1||_2 = 0");
  return (std::sqrt(n_e) - std::sqrt(n_1)) / std::sqrt(n_1);
}

SpectrumResult cpsd(std::span<const double> signal, double ts, std::size_t window_len, std::size_t overlap) {
  if (window_len < 2) throw PreconditionError("CPSD window must hold at least 2 samples");
  if (overlap >= window_len) throw PreconditionError("CPSD overlap must be smaller than the window");
  if (signal.size() < 2 * window_len) throw PreconditionError("series too short for the CPSD window");
  if (!(ts > 0.0)) throw PreconditionError("sample period must be positive");

  const std::size_t bins = window_len / 2 + 1;
  std::vector<double> power(bins, 0.0);
  std::unique_ptr<double, decltype(&fftw_free)> in(fftw_alloc_real(window_len), &fftw_free);
  std::unique_ptr<fftw_complex, decltype(&fftw_free)> out(fftw_alloc_complex(bins), &fftw_free);
  const auto n = static_cast<int>(window_len);
  std::unique_ptr<fftw_plan_s, decltype(&fftw_destroy_plan)> plan(
      fftw_plan_dft_r2c_1d(n, in.get(), out.get(), FFTW_ESTIMATE), &fftw_destroy_plan);

  const std::size_t hop = window_len - overlap;
  std::size_t segments = 0;
  const double norm = 1.0 / (static_cast<double>(window_len) * static_cast<double>(window_len));
  for (std::size_t start = 0; start + window_len <= signal.size(); start += hop) {
    std::copy_n(signal.begin() + static_cast<std::ptrdiff_t>(start), window_len, in.get());
    fftw_execute(plan.get());
    for (std::size_t k = 0; k < bins; ++k) {
      const double mag2 = out.get()[k][0] * out.get()[k][0] + out.get()[k][1] * out.get()[k][1];
      const bool unpaired = k == 0 || (window_len % 2 == 0 && k == window_len / 2);
      power[k] += (unpaired ? 1.0 : 2.0) * mag2 * norm;
    }
    ++segments;
  }

  SpectrumResult res;
  const double df = 1.0 / (static_cast<double>(window_len) * ts);
  res.freqs.resize(bins);
  res.psd.resize(bins);
  res.cpsd.resize(bins);
  res.cpsd_normalized.resize(bins);
  double acc = 0.0;
  for (std::size_t k = 0; k < bins; ++k) {
    const double p = power[k] / static_cast<double>(segments);
    res.freqs[k] = static_cast<double>(k) * df;
    res.psd[k] = p / df;
    acc += p;
    res.cpsd[k] = acc;
  }
  res.total_power = acc;
  for (std::size_t k = 0; k < bins; ++k) res.cpsd_normalized[k] = acc > 0.0 ? res.cpsd[k] / acc : 0.0;
  return res;
}

SpectrumResult cpsd(const SimResult& res, std::size_t window_len, std::size_t overlap) {
  return cpsd(std::span<const double>(res.e).subspan(res.steady_start), res.sample_period, window_len, overlap);
}

double cpsd_step(const SpectrumResult& s, double f0, int h) {
  const double lo = (h - 0.5) * f0;
  const double hi = (h + 0.5) * f0;
  double acc = 0.0;
  for (std::size_t k = 0; k < s.freqs.size(); ++k)
    if (s.freqs[k] >= lo && s.freqs[k] < hi)
      acc += s.total_power > 0.0 ? s.psd[k] * (s.freqs.size() > 1 ? s.freqs[1] : 0.0) / s.total_power : 0.0;
  return acc;
}

ElementResponse simulate_element(const ResetElement& el, double amplitude, double omega,
                                 std::size_t samples_per_period, int min_periods, int max_periods,
                                 double tolerance) {
  if (!(omega > 0.0)) throw PreconditionError("element simulation needs omega > 0");
  if (samples_per_period < 4) throw PreconditionError("element simulation needs >= 4 samples per period");
  if (min_periods < 2 || max_periods < min_periods) throw PreconditionError("invalid element period bounds");
  const double ts = kTwoPi / (omega * static_cast<double>(samples_per_period));
  ResetStepper stepper(el, ts);
  ElementResponse out;
  out.samples_per_period = samples_per_period;
  const std::size_t p = samples_per_period;
  out.input.reserve(p * static_cast<std::size_t>(min_periods));
  out.output.reserve(p * static_cast<std::size_t>(min_periods));
  double prev = 0.0;
  bool has_prev = false;
  while (out.periods < max_periods) {
    for (std::size_t i = 0; i < p; ++i) {
      const std::size_t k = out.input.size();
      const std::size_t ph = k % p;
      // exact zeros at the half-period samples so resets land on the grid
      const double e = 2 * ph % p == 0
                           ? 0.0
                           : amplitude * std::sin(kTwoPi * static_cast<double>(ph) / static_cast<double>(p));
      bool reset = false;
      double after = 0.0;
      double u = stepper.step(e, is_crossing(prev, e, has_prev), reset, &after);
      if (reset) {
        out.reset_instants.push_back(k);
        u = 0.5 * (u + after);
      }
      out.input.push_back(e);
      out.output.push_back(u);
      prev = e;
      has_prev = true;
    }
    ++out.periods;
    if (out.periods >= min_periods &&
        relative_period_change(out.output, p, out.output.size(), p) < tolerance) {
      out.settled = true;
      break;
    }
  }
  return out;
}

HarmonicSpectrum element_harmonics(const ResetElement& el, double omega, int n_max,
                                   const ElementOracleOptions& opts) {
  std::size_t spp = opts.min_samples_per_period;
  if (el.states() > 0) {
    const double fastest = el.a().eigenvalues().cwiseAbs().maxCoeff();
    const double needed = std::ceil(fastest * kTwoPi / omega / opts.max_pole_step);
    spp = std::max(spp, static_cast<std::size_t>(needed));
  }
  if (spp % 2 == 1) ++spp;  // even count puts both zero crossings on samples
  const auto resp = simulate_element(el, opts.amplitude, omega, spp, opts.min_periods);
  if (!resp.settled) throw ConvergenceError("reset element response did not settle");
  const std::size_t p = resp.samples_per_period;
  const std::span<const double> last = std::span<const double>(resp.output).subspan(resp.output.size() - p, p);
  const auto c = fourier_coefficients(last, p, resp.output.size() - p, n_max);
  HarmonicSpectrum out(omega, n_max);
  for (int n = 1; n <= n_max; n += 2) out.set(n, c[static_cast<std::size_t>(n)] / opts.amplitude);
  return out;
}

}  // namespace resetfd
