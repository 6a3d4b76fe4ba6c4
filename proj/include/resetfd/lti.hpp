#pragma once

#include <complex>
#include <span>
#include <vector>

namespace resetfd {

using cplx = std::complex<double>;

/// Real-coefficient rational transfer function in the Laplace variable.
/// Coefficients are stored in descending powers of s. No pole/zero
/// cancellation is ever performed.
class RationalTF {
 public:
  /// Unity gain.
  RationalTF();
  RationalTF(std::vector<double> num, std::vector<double> den);

  static RationalTF gain(double k);

  const std::vector<double>& num() const noexcept { return num_; }
  const std::vector<double>& den() const noexcept { return den_; }

  int num_degree() const noexcept { return static_cast<int>(num_.size()) - 1; }
  int den_degree() const noexcept { return static_cast<int>(den_.size()) - 1; }
  bool is_proper() const noexcept { return num_degree() <= den_degree(); }
  bool is_zero() const noexcept;

  /// num(s)/den(s) at an arbitrary complex point. Throws NumericalError when
  /// the denominator is exactly zero there.
  cplx at(cplx s) const;

 private:
  std::vector<double> num_;
  std::vector<double> den_;
};

/// Discrete-time rational transfer function in z (descending powers).
class DiscreteTF {
 public:
  DiscreteTF(std::vector<double> num, std::vector<double> den, double sample_period);

  const std::vector<double>& num() const noexcept { return num_; }
  const std::vector<double>& den() const noexcept { return den_; }
  double sample_period() const noexcept { return ts_; }

  cplx at(cplx z) const;
  /// Response on the unit circle, z = exp(j*omega*Ts).
  cplx eval_freq(double omega) const;

 private:
  std::vector<double> num_;
  std::vector<double> den_;
  double ts_;
};

/// Strictly increasing list of positive angular frequencies (rad/s).
class FrequencyGrid {
 public:
  explicit FrequencyGrid(std::vector<double> omegas);

  static FrequencyGrid log_spaced(double lo_rad_s, double hi_rad_s, std::size_t points);
  /// 300 log-spaced points over 2*pi*[1, 1000] rad/s.
  static FrequencyGrid default_grid();

  const std::vector<double>& omegas() const noexcept { return omegas_; }
  std::size_t size() const noexcept { return omegas_.size(); }
  double operator[](std::size_t i) const { return omegas_[i]; }
  auto begin() const noexcept { return omegas_.begin(); }
  auto end() const noexcept { return omegas_.end(); }

 private:
  std::vector<double> omegas_;
};

/// Polynomial helpers (descending powers).
namespace poly {
std::vector<double> multiply(std::span<const double> a, std::span<const double> b);
std::vector<double> add(std::span<const double> a, std::span<const double> b);
cplx horner(std::span<const double> c, cplx x);
}  // namespace poly

/// tf(j*omega). omega must be positive.
cplx eval_freq(const RationalTF& tf, double omega);

RationalTF series(const RationalTF& a, const RationalTF& b);
RationalTF parallel(const RationalTF& a, const RationalTF& b);
/// Swaps numerator and denominator. Throws ValidationError for a zero numerator.
RationalTF invert(const RationalTF& tf);
RationalTF scale(const RationalTF& tf, double k);

/// Bilinear map s <- (2/Ts)(z-1)/(z+1). The result is normalised to a monic
/// denominator. Improper transfer functions are rejected.
DiscreteTF tustin(const RationalTF& tf, double ts);

/// kp (1 + wi/s) ((1 + s/wd)/(1 + s/wt)) (1/(1 + s/wlf)), all corners in rad/s.
RationalTF pid(double kp, double omega_i, double omega_d, double omega_t, double omega_lf);

/// (1 + s/omega_l)/(1 + s/omega_f).
RationalTF lead_lag(double omega_l, double omega_f);

}  // namespace resetfd
