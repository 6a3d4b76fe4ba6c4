#include "resetfd/reset.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "resetfd/error.hpp"

namespace resetfd {

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  if (n != a.cols()) throw ValidationError("expm needs a square matrix");
  if (n == 0) return a;

  // [6/6] Pade coefficients c_k = (2m-k)! m! / ((2m)! k! (m-k)!), m = 6.
  static constexpr double c[] = {1.0,
                                 1.0 / 2.0,
                                 5.0 / 44.0,
                                 1.0 / 66.0,
                                 1.0 / 792.0,
                                 1.0 / 15840.0,
                                 1.0 / 665280.0};

  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / 0.5))));
  const Eigen::MatrixXd x = a / std::ldexp(1.0, squarings);

  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd power = id;
  Eigen::MatrixXd even = c[0] * id;
  Eigen::MatrixXd odd = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k <= 6; ++k) {
    power = power * x;
    if (k % 2 == 0)
      even += c[k] * power;
    else
      odd += c[k] * power;
  }
  Eigen::MatrixXd result = (even - odd).partialPivLu().solve(even + odd);
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

ResetElement::ResetElement(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::RowVectorXd c, double d,
                           Eigen::VectorXd rho)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(d), rho_(std::move(rho)) {
  const Eigen::Index n = a_.rows();
  if (a_.cols() != n || b_.size() != n || c_.size() != n || rho_.size() != n)
    throw ValidationError("reset element matrices have inconsistent dimensions");
  if (n > 4) throw ValidationError("reset elements with more than 4 states are not supported");
  if (!a_.allFinite() || !b_.allFinite() || !c_.allFinite() || !std::isfinite(d_))
    throw ValidationError("reset element has non-finite entries");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(rho_[i] > -1.0 && rho_[i] <= 1.0)) {
      std::ostringstream os;
      os << "reset matrix entry gamma_" << i + 1 << " = " << rho_[i] << " is outside (-1, 1]";
      throw ValidationError(os.str());
    }
  }
}

ResetElement ResetElement::feedthrough(double d) {
  return ResetElement(Eigen::MatrixXd(0, 0), Eigen::VectorXd(0), Eigen::RowVectorXd(0), d,
                      Eigen::VectorXd(0));
}

bool ResetElement::is_linear() const noexcept { return (rho_.array() == 1.0).all(); }

RationalTF base_linear_tf(const ResetElement& el) {
  const int n = el.states();
  if (n == 0) return RationalTF::gain(el.d());

  // Leverrier-Faddeev: det(sI - A) = sum coef[k] s^(n-k), adj(sI - A) = sum M_k s^(n-k).
  const Eigen::MatrixXd& a = el.a();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  std::vector<double> charpoly(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> adj_num(static_cast<std::size_t>(n), 0.0);  // C M_k B, k = 1..n
  charpoly[0] = 1.0;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k <= n; ++k) {
    m = a * m + charpoly[static_cast<std::size_t>(k - 1)] * id;
    adj_num[static_cast<std::size_t>(k - 1)] = (el.c() * m * el.b())(0, 0);
    charpoly[static_cast<std::size_t>(k)] = -(a * m).trace() / k;
  }
  // numerator = C adj B (degree n-1) + D * charpoly (degree n)
  std::vector<double> num(static_cast<std::size_t>(n) + 1, 0.0);
  for (int k = 0; k <= n; ++k) num[static_cast<std::size_t>(k)] = el.d() * charpoly[static_cast<std::size_t>(k)];
  for (int k = 1; k <= n; ++k) num[static_cast<std::size_t>(k)] += adj_num[static_cast<std::size_t>(k - 1)];
  return RationalTF(std::move(num), std::move(charpoly));
}

std::vector<double> default_delta_grid() {
  constexpr int points = 400;
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = std::pow(10.0, -5.0 + 7.0 * i / (points - 1));
  return g;
}

Assumption1Report check_assumption1(const ResetElement& el, const std::vector<double>& delta_grid) {
  if (delta_grid.empty()) throw PreconditionError("convergence check needs a nonempty delta grid");
  Assumption1Report rep;
  if (el.states() == 0) {
    rep.holds = true;
    rep.worst_delta = delta_grid.front();
    return rep;
  }
  const Eigen::MatrixXd rho = el.reset_matrix();
  for (double delta : delta_grid) {
    if (!(delta > 0.0)) throw PreconditionError("convergence delta grid entries must be positive");
    const Eigen::MatrixXd prod = rho * expm(el.a() * delta);
    const double radius = prod.eigenvalues().cwiseAbs().maxCoeff();
    if (radius >= rep.worst_radius) {
      rep.worst_radius = radius;
      rep.worst_delta = delta;
    }
  }
  rep.holds = rep.worst_radius < 1.0;
  return rep;
}

Assumption1Report check_assumption1(const ResetElement& el) {
  return check_assumption1(el, default_delta_grid());
}

Hosidf::Hosidf(ResetElement el) : Hosidf(std::move(el), default_delta_grid()) {}

Hosidf::Hosidf(ResetElement el, const std::vector<double>& delta_grid) : el_(std::move(el)) {
  if (el_.is_linear()) return;
  const auto rep = check_assumption1(el_, delta_grid);
  if (!rep.holds) {
    std::ostringstream os;
    os << "reset element violates the reset convergence condition: spectral radius " << rep.worst_radius
       << " at delta = " << rep.worst_delta << " s";
    throw PreconditionError(os.str());
  }
}

Eigen::MatrixXcd Hosidf::theta(double omega) const {
  const int n = el_.states();
  const Eigen::MatrixXd& a = el_.a();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd rho = el_.reset_matrix();

  const Eigen::MatrixXd lambda = omega * omega * id + a * a;
  Eigen::FullPivLU<Eigen::MatrixXd> lambda_lu(lambda);
  if (!lambda_lu.isInvertible()) {
    std::ostringstream os;
    os << "reset element has a pole at +-j" << omega << " rad/s";
    throw NumericalError(os.str());
  }
  const Eigen::MatrixXd lambda_inv = lambda_lu.inverse();
  const Eigen::MatrixXd half_period = expm(a * (std::numbers::pi / omega));
  const Eigen::MatrixXd delta = id + half_period;
  const Eigen::MatrixXd delta_r = id + rho * half_period;
  Eigen::FullPivLU<Eigen::MatrixXd> delta_r_lu(delta_r);
  if (!delta_r_lu.isInvertible()) throw NumericalError("I + A_rho exp(pi A / omega) is singular");
  const Eigen::MatrixXd gamma_r = delta_r_lu.solve(rho * delta * lambda_inv);
  const Eigen::MatrixXd th = (-2.0 * omega * omega / std::numbers::pi) * delta * (gamma_r - lambda_inv);
  return th.cast<cplx>() * cplx{0.0, 1.0};
}

cplx Hosidf::harmonic(double omega, int n, const Eigen::MatrixXcd& jtheta) const {
  const int ns = el_.states();
  const Eigen::MatrixXcd shifted =
      cplx{0.0, n * omega} * Eigen::MatrixXcd::Identity(ns, ns) - el_.a().cast<cplx>();
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(shifted);
  if (!lu.isInvertible()) {
    std::ostringstream os;
    os << "reset element has a pole at harmonic n = " << n << " of omega = " << omega << " rad/s";
    throw NumericalError(os.str());
  }
  const Eigen::VectorXcd bc = el_.b().cast<cplx>();
  Eigen::VectorXcd rhs = jtheta * bc;
  if (n == 1) rhs += bc;
  cplx h = (el_.c().cast<cplx>() * lu.solve(rhs))(0, 0);
  if (n == 1) h += el_.d();
  return h;
}

cplx Hosidf::operator()(double omega, int n) const {
  if (n < 1) throw PreconditionError("harmonic order must be a positive integer");
  if (!(omega > 0.0)) throw PreconditionError("HOSIDF needs omega > 0");
  if (n % 2 == 0) return {0.0, 0.0};
  if (el_.is_linear()) return n == 1 ? eval_freq(base_linear_tf(el_), omega) : cplx{0.0, 0.0};
  return harmonic(omega, n, theta(omega));
}

std::vector<cplx> Hosidf::all(double omega, int n_max) const {
  if (!(omega > 0.0)) throw PreconditionError("HOSIDF needs omega > 0");
  std::vector<cplx> out(static_cast<std::size_t>(std::max(n_max, 0)), cplx{0.0, 0.0});
  if (n_max < 1) return out;
  if (el_.is_linear()) {
    out[0] = eval_freq(base_linear_tf(el_), omega);
    return out;
  }
  const Eigen::MatrixXcd jtheta = theta(omega);
  for (int n = 1; n <= n_max; n += 2) out[static_cast<std::size_t>(n - 1)] = harmonic(omega, n, jtheta);
  return out;
}

cplx hosidf(const ResetElement& el, double omega, int n) { return Hosidf(el)(omega, n); }

CgLpDesign build_cglp(double omega_l, double omega_f, double a_rho) {
  if (!(omega_l > 0.0 && omega_l < omega_f))
    throw ValidationError("CgLp needs 0 < omega_l < omega_f");
  if (!(a_rho > -1.0 && a_rho < 1.0)) throw ValidationError("CgLp reset value must lie in (-1, 1)");
  const double ratio = 4.0 * (1.0 - a_rho) / (std::numbers::pi * (1.0 + a_rho));
  const double omega_r = omega_l / std::sqrt(1.0 + ratio * ratio);
  const double d_r = omega_l / (omega_f - omega_l);

  Eigen::MatrixXd a(1, 1);
  a << -omega_r;
  Eigen::VectorXd b(1);
  b << 1.0;
  Eigen::RowVectorXd c(1);
  c << omega_r;
  Eigen::VectorXd rho(1);
  rho << a_rho;

  return CgLpDesign{omega_l,
                    omega_f,
                    a_rho,
                    (omega_f - omega_l) / omega_f,
                    omega_r,
                    lead_lag(omega_l, omega_f),
                    ResetElement(std::move(a), std::move(b), std::move(c), d_r, std::move(rho))};
}

}  // namespace resetfd
