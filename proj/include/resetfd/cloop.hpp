#pragma once

#include <optional>
#include <vector>

#include "resetfd/lti.hpp"
#include "resetfd/reset.hpp"

namespace resetfd {

/// Pre-filter F in front of the reset element and F_inv behind it. Stored as
/// two explicit transfer functions so that mismatched pairs can be studied.
struct ShapingPair {
  RationalTF f;
  RationalTF f_inv;

  static ShapingPair from_filter(const RationalTF& f) { return {f, invert(f)}; }
};

/// Closed loop  e = r - y,  e_r = C_pre e,  u = C_pos (R e_r + C_par e_r),  y = G (u + d_i).
struct LoopConfig {
  RationalTF plant;
  RationalTF c_pre;
  RationalTF c_par = RationalTF::gain(0.0);
  RationalTF c_pos;
  ResetElement element = ResetElement::feedthrough(1.0);
  std::optional<ShapingPair> shaping;

  /// C_pre F when shaping is present, else C_pre.
  RationalTF effective_pre() const;
  /// C_pos F_inv when shaping is present, else C_pos.
  RationalTF effective_pos() const;
  /// Copy of this loop with the given shaping pair installed.
  LoopConfig with_shaping(ShapingPair pair) const;

  /// max |F(jw) F_inv(jw) - 1| over the grid; 0 without shaping.
  double shaping_mismatch(const FrequencyGrid& grid) const;
};

/// Odd-harmonic coefficients at one fundamental frequency. Index n = 1, 3, ..., n_max.
class HarmonicSpectrum {
 public:
  HarmonicSpectrum() = default;
  HarmonicSpectrum(double omega, int n_max);

  double omega() const noexcept { return omega_; }
  int n_max() const noexcept { return n_max_; }

  /// Zero for even or out-of-range n.
  cplx operator[](int n) const;
  void set(int n, cplx value);

  /// Sum over odd n >= 3 of |c_n|^2.
  double higher_power() const;

 private:
  double omega_ = 0.0;
  int n_max_ = 0;
  std::vector<cplx> odd_;  // odd_[(n-1)/2]
};

enum class InputChannel { Reference, Disturbance };

/// Frequency-domain evaluator for one loop; verifies the reset convergence condition once.
class LoopAnalyzer {
 public:
  explicit LoopAnalyzer(LoopConfig cfg);

  const LoopConfig& config() const noexcept { return cfg_; }

  cplx open_loop(double omega, int n) const;
  /// 1/(1 + L_bl(j omega_h)) at the given (harmonic) frequency.
  cplx base_linear_sensitivity(double omega_h) const;
  cplx sensitivity(double omega, int n) const;
  cplx disturbance_sensitivity(double omega, int n) const;

  /// S^n for all odd n up to n_max at one frequency.
  HarmonicSpectrum spectrum(double omega, int n_max,
                            InputChannel channel = InputChannel::Reference) const;
  /// L_n for all odd n up to n_max at one frequency.
  HarmonicSpectrum open_loop_spectrum(double omega, int n_max) const;

 private:
  struct Point {
    cplx pre;              // effective C_pre(j w)
    std::vector<cplx> h;   // H_n, index n-1
  };
  Point point(double omega, int n_max) const;
  cplx open_loop_from(const Point& p, double omega, int n) const;

  LoopConfig cfg_;
  RationalTF pre_;
  RationalTF pos_;
  RationalTF l_bl_;
  Hosidf hosidf_;
};

cplx open_loop_Ln(const LoopConfig& cfg, double omega, int n);
cplx base_linear_sensitivity(const LoopConfig& cfg, double omega_h);
cplx sensitivity_n(const LoopConfig& cfg, double omega, int n);
cplx disturbance_sensitivity_n(const LoopConfig& cfg, double omega, int n);

/// One spectrum per grid point, in grid order. Errors name the offending omega.
std::vector<HarmonicSpectrum> spectrum_sweep(const LoopConfig& cfg, const FrequencyGrid& grid,
                                             int n_max,
                                             InputChannel channel = InputChannel::Reference);
std::vector<HarmonicSpectrum> open_loop_sweep(const LoopConfig& cfg, const FrequencyGrid& grid,
                                              int n_max);

constexpr int kDefaultNMax = 61;

}  // namespace resetfd
