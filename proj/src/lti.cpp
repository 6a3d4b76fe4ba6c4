#include "resetfd/lti.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "resetfd/error.hpp"

namespace resetfd {

namespace poly {

std::vector<double> multiply(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

std::vector<double> add(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::max(a.size(), b.size());
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[n - a.size() + i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[n - b.size() + i] += b[i];
  return out;
}

cplx horner(std::span<const double> c, cplx x) {
  cplx acc{0.0, 0.0};
  for (double ci : c) acc = acc * x + ci;
  return acc;
}

}  // namespace poly

namespace {

std::vector<double> strip_leading_zeros(std::vector<double> c) {
  auto first = std::find_if(c.begin(), c.end(), [](double v) { return v != 0.0; });
  if (first == c.end()) return {0.0};
  c.erase(c.begin(), first);
  return c;
}

bool all_finite(const std::vector<double>& c) {
  return std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

RationalTF::RationalTF() : num_{1.0}, den_{1.0} {}

RationalTF::RationalTF(std::vector<double> num, std::vector<double> den)
    : num_(strip_leading_zeros(std::move(num))), den_(std::move(den)) {
  if (den_.empty()) throw ValidationError("transfer function denominator is empty");
  if (den_.front() == 0.0)
    throw ValidationError("transfer function denominator has a zero leading coefficient");
  if (!all_finite(num_) || !all_finite(den_))
    throw ValidationError("transfer function has non-finite coefficients");
  if (num_degree() > den_degree() + 2) {
    std::ostringstream os;
    os << "transfer function numerator degree " << num_degree() << " exceeds denominator degree "
       << den_degree() << " by more than 2";
    throw ValidationError(os.str());
  }
}

RationalTF RationalTF::gain(double k) { return RationalTF({k}, {1.0}); }

bool RationalTF::is_zero() const noexcept {
  return std::all_of(num_.begin(), num_.end(), [](double v) { return v == 0.0; });
}

cplx RationalTF::at(cplx s) const {
  const cplx d = poly::horner(den_, s);
  if (d == cplx{0.0, 0.0}) {
    std::ostringstream os;
    os << "denominator vanishes at s = " << s;
    throw NumericalError(os.str());
  }
  return poly::horner(num_, s) / d;
}

DiscreteTF::DiscreteTF(std::vector<double> num, std::vector<double> den, double sample_period)
    : num_(strip_leading_zeros(std::move(num))), den_(std::move(den)), ts_(sample_period) {
  if (den_.empty() || den_.front() == 0.0)
    throw ValidationError("discrete transfer function needs a nonzero leading denominator coefficient");
  if (!(ts_ > 0.0)) throw ValidationError("sample period must be positive");
}

cplx DiscreteTF::at(cplx z) const {
  const cplx d = poly::horner(den_, z);
  if (d == cplx{0.0, 0.0}) throw NumericalError("discrete denominator vanishes");
  return poly::horner(num_, z) / d;
}

cplx DiscreteTF::eval_freq(double omega) const { return at(std::polar(1.0, omega * ts_)); }

FrequencyGrid::FrequencyGrid(std::vector<double> omegas) : omegas_(std::move(omegas)) {
  if (omegas_.empty()) throw ValidationError("frequency grid is empty");
  for (std::size_t i = 0; i < omegas_.size(); ++i) {
    if (!(omegas_[i] > 0.0) || !std::isfinite(omegas_[i]))
      throw ValidationError("frequency grid entries must be positive and finite");
    if (i > 0 && !(omegas_[i] > omegas_[i - 1]))
      throw ValidationError("frequency grid must be strictly increasing");
  }
}

FrequencyGrid FrequencyGrid::log_spaced(double lo, double hi, std::size_t points) {
  if (points == 0) throw ValidationError("frequency grid needs at least one point");
  if (!(lo > 0.0) || !(hi >= lo)) throw ValidationError("frequency grid bounds must satisfy 0 < lo <= hi");
  if (points == 1) return FrequencyGrid({lo});
  std::vector<double> w(points);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < points; ++i)
    w[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  w.front() = lo;
  w.back() = hi;
  return FrequencyGrid(std::move(w));
}

FrequencyGrid FrequencyGrid::default_grid() {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return log_spaced(two_pi * 1.0, two_pi * 1000.0, 300);
}

cplx eval_freq(const RationalTF& tf, double omega) {
  if (!(omega > 0.0)) throw PreconditionError("eval_freq needs omega > 0");
  const cplx d = poly::horner(tf.den(), {0.0, omega});
  if (d == cplx{0.0, 0.0}) {
    std::ostringstream os;
    os << "pole on the imaginary axis at omega = " << omega << " rad/s";
    throw NumericalError(os.str());
  }
  return poly::horner(tf.num(), {0.0, omega}) / d;
}

RationalTF series(const RationalTF& a, const RationalTF& b) {
  return RationalTF(poly::multiply(a.num(), b.num()), poly::multiply(a.den(), b.den()));
}

RationalTF parallel(const RationalTF& a, const RationalTF& b) {
  auto n1 = poly::multiply(a.num(), b.den());
  auto n2 = poly::multiply(b.num(), a.den());
  return RationalTF(poly::add(n1, n2), poly::multiply(a.den(), b.den()));
}

RationalTF invert(const RationalTF& tf) {
  if (tf.is_zero()) throw ValidationError("cannot invert a transfer function with zero numerator");
  return RationalTF(tf.den(), tf.num());
}

RationalTF scale(const RationalTF& tf, double k) {
  std::vector<double> num = tf.num();
  for (double& c : num) c *= k;
  return RationalTF(std::move(num), tf.den());
}

DiscreteTF tustin(const RationalTF& tf, double ts) {
  if (!(ts > 0.0)) throw ValidationError("tustin needs a positive sample period");
  if (!tf.is_proper()) throw ValidationError("tustin cannot discretize an improper transfer function");

  // Multiply numerator and denominator by (z+1)^N with N the denominator degree;
  // s^i becomes (2/Ts)^i (z-1)^i (z+1)^(N-i).
  const int order = tf.den_degree();
  const double k = 2.0 / ts;
  std::vector<std::vector<double>> basis(static_cast<std::size_t>(order) + 1);
  for (int i = 0; i <= order; ++i) {
    std::vector<double> p{1.0};
    const std::vector<double> zm1{1.0, -1.0};
    const std::vector<double> zp1{1.0, 1.0};
    for (int a = 0; a < i; ++a) p = poly::multiply(p, zm1);
    for (int b = 0; b < order - i; ++b) p = poly::multiply(p, zp1);
    const double g = std::pow(k, i);
    for (double& c : p) c *= g;
    basis[static_cast<std::size_t>(i)] = std::move(p);
  }
  auto map = [&](const std::vector<double>& c) {
    std::vector<double> out(static_cast<std::size_t>(order) + 1, 0.0);
    const int deg = static_cast<int>(c.size()) - 1;
    for (int j = 0; j <= deg; ++j) {
      const double coef = c[static_cast<std::size_t>(j)];
      const auto& b = basis[static_cast<std::size_t>(deg - j)];
      for (std::size_t m = 0; m < out.size(); ++m) out[m] += coef * b[m];
    }
    return out;
  };
  std::vector<double> num = map(tf.num());
  std::vector<double> den = map(tf.den());
  const double lead = den.front();
  if (lead == 0.0) throw NumericalError("tustin image has a vanishing leading coefficient (pole at s = 2/Ts)");
  for (double& c : num) c /= lead;
  for (double& c : den) c /= lead;
  return DiscreteTF(std::move(num), std::move(den), ts);
}

RationalTF pid(double kp, double omega_i, double omega_d, double omega_t, double omega_lf) {
  if (!(omega_i > 0.0 && omega_d > 0.0 && omega_t > 0.0 && omega_lf > 0.0))
    throw ValidationError("PID corner frequencies must be positive");
  const RationalTF integral({1.0, omega_i}, {1.0, 0.0});
  const RationalTF derivative({1.0 / omega_d, 1.0}, {1.0 / omega_t, 1.0});
  const RationalTF low_pass({1.0}, {1.0 / omega_lf, 1.0});
  return scale(series(series(integral, derivative), low_pass), kp);
}

RationalTF lead_lag(double omega_l, double omega_f) {
  if (!(omega_l > 0.0 && omega_f > 0.0)) throw ValidationError("lead/lag corners must be positive");
  return RationalTF({1.0 / omega_l, 1.0}, {1.0 / omega_f, 1.0});
}

}  // namespace resetfd
