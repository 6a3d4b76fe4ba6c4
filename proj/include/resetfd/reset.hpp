#pragma once

#include <Eigen/Dense>
#include <vector>

#include "resetfd/lti.hpp"

namespace resetfd {

/// exp(A) by scaling and squaring with a degree-6 diagonal Pade approximant.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

/// State-space reset element
///
///   dx/dt = A x + B e      while no reset,
///   x+    = A_rho x        when e = 0 and (A_rho - I) x != 0,
///   u     = C x + D e.
///
/// A_rho is diagonal and stored as its diagonal. Every entry must lie in
/// (-1, 1]; gamma = 1 marks a state that never resets. A zero-state element
/// (pure gain D) is allowed.
class ResetElement {
 public:
  ResetElement(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::RowVectorXd c, double d,
               Eigen::VectorXd rho);

  /// Pure feedthrough element with no state.
  static ResetElement feedthrough(double d);

  const Eigen::MatrixXd& a() const noexcept { return a_; }
  const Eigen::VectorXd& b() const noexcept { return b_; }
  const Eigen::RowVectorXd& c() const noexcept { return c_; }
  double d() const noexcept { return d_; }
  const Eigen::VectorXd& rho() const noexcept { return rho_; }
  Eigen::MatrixXd reset_matrix() const { return rho_.asDiagonal(); }

  int states() const noexcept { return static_cast<int>(a_.rows()); }
  /// True when A_rho = I, i.e. the element behaves as its base linear system.
  bool is_linear() const noexcept;

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  Eigen::RowVectorXd c_;
  double d_;
  Eigen::VectorXd rho_;
};

/// C (sI - A)^{-1} B + D expanded with the Leverrier-Faddeev recursion.
RationalTF base_linear_tf(const ResetElement& el);

struct Assumption1Report {
  bool holds = false;
  double worst_delta = 0.0;
  double worst_radius = 0.0;
};

/// Default 400 log-spaced points over [1e-5, 1e2] s.
std::vector<double> default_delta_grid();

/// max over delta of the spectral radius of A_rho exp(A delta); holds iff < 1.
Assumption1Report check_assumption1(const ResetElement& el, const std::vector<double>& delta_grid);
Assumption1Report check_assumption1(const ResetElement& el);

/// Higher-order sinusoidal-input describing functions of a reset element.
///
/// Construction verifies the reset convergence condition once (skipped for a linear element,
/// which never resets) so that frequency sweeps do not pay for it per call.
class Hosidf {
 public:
  explicit Hosidf(ResetElement el);
  Hosidf(ResetElement el, const std::vector<double>& delta_grid);

  const ResetElement& element() const noexcept { return el_; }

  /// H_n(omega). Even n returns exactly 0.
  cplx operator()(double omega, int n) const;

  /// All H_n for n = 1..n_max (index n-1), sharing one jump-operator evaluation.
  std::vector<cplx> all(double omega, int n_max) const;

 private:
  Eigen::MatrixXcd theta(double omega) const;
  cplx harmonic(double omega, int n, const Eigen::MatrixXcd& jtheta) const;

  ResetElement el_;
};

/// Convenience wrapper; verifies the reset convergence condition on every call.
cplx hosidf(const ResetElement& el, double omega, int n);

struct CgLpDesign {
  double omega_l = 0.0;
  double omega_f = 0.0;
  double a_rho = 0.0;
  double k_c = 0.0;
  double omega_r = 0.0;
  RationalTF c_c;
  ResetElement element;
};

/// Proportional GFORE + gain k_c + lead-lag C_c with the corner frequency
/// omega_r chosen so the first-order describing function breaks at omega_l.
CgLpDesign build_cglp(double omega_l, double omega_f, double a_rho);

}  // namespace resetfd
