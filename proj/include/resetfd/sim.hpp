#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "resetfd/cloop.hpp"

namespace resetfd {

struct InputDescriptor {
  InputChannel channel = InputChannel::Reference;
  double amplitude = 1.0;
  double frequency_hz = 1.0;
};

struct SimOptions {
  /// Uniform quantizer step applied to the measured output; 0 disables it.
  double quantization = 0.0;
};

struct SteadyOptions {
  int block_periods = 10;
  int max_periods = 500;
  double tolerance = 1e-6;
};

/// Sampled closed-loop run. All series have equal length; sample k is t = k Ts.
struct SimResult {
  double sample_period = 0.0;
  std::vector<double> e, e_r, u_r, u, y;
  std::vector<std::size_t> reset_instants;
  InputDescriptor input;

  /// Filled by simulate_steady: the trailing block of whole periods that
  /// passed the settlement test starts at steady_start.
  bool settled = false;
  std::size_t steady_start = 0;
  int periods = 0;
  double settle_residual = 0.0;
  /// RMS change between the last two single periods, relative.
  double period_jitter = 0.0;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return e.size(); }
};

/// Nearest frequency whose period is an integer number of samples.
double snap_frequency(double frequency_hz, double ts);
/// 1/(f Ts) when it is an integer (to 1e-9 relative); throws PreconditionError otherwise.
std::size_t samples_per_period(double frequency_hz, double ts);

/// Fixed-duration run from zero initial conditions. LTI blocks use their
/// Tustin images in transposed direct form II; the reset element is advanced
/// by the trapezoidal rule on its own state and jumps x <- A_rho x at every
/// sample where e_r changes sign (or is exactly zero), provided
/// (A_rho - I) x != 0. The jump acts on the propagated state; the output
/// sample at the reset instant carries the pre-jump value.
SimResult simulate(const LoopConfig& cfg, const InputDescriptor& input, double ts, double duration,
                   const SimOptions& opts = {});

/// Runs whole-period blocks until two consecutive blocks agree (sample-wise
/// RMS difference below tolerance, relative to the block RMS) or max_periods
/// is hit. A response that repeats per block but not per period (reset
/// instants hopping between neighbouring samples) is settled with a warning;
/// its integer harmonics over the block are still exact.
/// The input period must be an integer number of samples. Non-convergence is
/// reported through `settled == false` and a warning, not thrown.
SimResult simulate_steady(const LoopConfig& cfg, const InputDescriptor& input, double ts,
                          const SteadyOptions& steady = {}, const SimOptions& opts = {});

/// c_n = (2j/N) sum_k x_k exp(-j 2 pi n k0 / P) for n = 0..n_max over a window
/// that starts at absolute sample index `origin` and spans whole periods of
/// `period` samples. With x = sum a_n sin(n w t + phi_n), c_n = a_n exp(j phi_n).
std::vector<cplx> fourier_coefficients(std::span<const double> window, std::size_t period,
                                       std::size_t origin, int n_max);

/// Steady-state error harmonics normalised by the input amplitude, directly
/// comparable to S^n_{r,e} (or S^n_{d,e} for a disturbance input).
HarmonicSpectrum steady_harmonics(const SimResult& res, double f0, int n_max);

/// As steady_harmonics but returning every order 0..n_max, even ones included.
std::vector<cplx> steady_coefficients(const SimResult& res, double f0, int n_max);

/// sigma_2 measured on the steady window against its first-harmonic reconstruction.
double sigma2_measured(const SimResult& res, double f0);

struct SpectrumResult {
  std::vector<double> freqs;  // Hz
  std::vector<double> psd;    // one-sided, units^2/Hz
  std::vector<double> cpsd;   // running integral of psd
  std::vector<double> cpsd_normalized;
  double total_power = 0.0;
};

/// Averaged rectangular-window periodogram and its cumulative integral.
SpectrumResult cpsd(std::span<const double> signal, double ts, std::size_t window_len,
                    std::size_t overlap);
/// Uses the error series from `steady_start` on.
SpectrumResult cpsd(const SimResult& res, std::size_t window_len, std::size_t overlap);

/// Increment of the normalised CPSD across [(h - 1/2) f0, (h + 1/2) f0).
double cpsd_step(const SpectrumResult& s, double f0, int h);

struct ElementResponse {
  std::vector<double> input;
  std::vector<double> output;
  std::vector<std::size_t> reset_instants;
  std::size_t samples_per_period = 0;
  int periods = 0;
  bool settled = false;
};

/// Reset element alone driven by amplitude * sin(omega t), sampled with
/// `samples_per_period` samples per period, same discretisation as in the loop.
/// With an even sample count the input zeros fall exactly on samples; the
/// output recorded at a reset sample is the mean of the pre- and post-jump
/// values (the midpoint of the discontinuity), which keeps the Fourier sums
/// second-order accurate.
/// Runs at least `min_periods` and stops once consecutive periods of the
/// output agree to `tolerance` (relative) or `max_periods` is reached.
ElementResponse simulate_element(const ResetElement& el, double amplitude, double omega,
                                 std::size_t samples_per_period, int min_periods = 40,
                                 int max_periods = 2000, double tolerance = 1e-10);

struct ElementOracleOptions {
  double amplitude = 1.0;
  std::size_t min_samples_per_period = 8192;
  /// Upper bound on |lambda(A)| Ts, raising the sample count for fast elements.
  double max_pole_step = 0.05;
  int min_periods = 40;
};

/// H_n estimated from a simulated steady-state period (n = 1..n_max, odd only).
HarmonicSpectrum element_harmonics(const ResetElement& el, double omega, int n_max,
                                   const ElementOracleOptions& opts = {});

}  // namespace resetfd
