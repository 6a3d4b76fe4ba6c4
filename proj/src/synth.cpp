#include "resetfd/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "resetfd/error.hpp"

namespace resetfd {

RationalTF notch(const NotchParams& p) {
  if (!(p.omega_n > 0.0 && p.q1 > 0.0 && p.q2 > 0.0))
    throw ValidationError("notch parameters must all be positive");
  const double w2 = 1.0 / (p.omega_n * p.omega_n);
  return RationalTF({w2, 1.0 / (p.q1 * p.omega_n), 1.0}, {w2, 1.0 / (p.q2 * p.omega_n), 1.0});
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// |1 - x^2 + j x / q|
double biquad_mag(double x, double q) { return std::hypot(1.0 - x * x, x / q); }

}  // namespace

double notch_min_margin(const NotchParams& p, const PsiCurve& psi) {
  double worst = kInf;
  for (std::size_t i = 0; i < psi.grid.size(); ++i) {
    const double bound = psi.values[i];
    if (std::isinf(bound)) continue;
    const double x = psi.grid[i] / p.omega_n;
    const double f_mag = biquad_mag(x, p.q1) / biquad_mag(x, p.q2);
    double finv_max = 0.0;
    for (int n = 3; n <= psi.n_max; n += 2) {
      const double xn = n * x;
      const double den = biquad_mag(xn, p.q1);
      const double v = den == 0.0 ? kInf : biquad_mag(xn, p.q2) / den;
      finv_max = std::max(finv_max, v);
    }
    worst = std::min(worst, bound - f_mag * finv_max);
  }
  return worst;
}

namespace {

struct Evaluator {
  const PsiCurve& psi;
  const NotchSearchBox& box;
  int count = 0;

  // log-space coordinates, clamped to the box
  NotchParams params(const std::array<double, 3>& v) const {
    return NotchParams{std::exp(std::clamp(v[0], std::log(box.omega_lo), std::log(box.omega_hi))),
                       std::exp(std::clamp(v[1], std::log(box.q_lo), std::log(box.q_hi))),
                       std::exp(std::clamp(v[2], std::log(box.q_lo), std::log(box.q_hi)))};
  }
  // minimised
  double cost(const std::array<double, 3>& v) {
    ++count;
    return -notch_min_margin(params(v), psi);
  }
};

double lin(double lo, double hi, int i, int n) {
  return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

}  // namespace

NotchSearchResult search_notch(const PsiCurve& psi, const std::vector<HarmonicSpectrum>& spectra,
                               const NotchSearchBox& box, const NotchSearchOptions& opts) {
  if (!(box.omega_lo > 0.0 && box.omega_hi >= box.omega_lo && box.q_lo > 0.0 && box.q_hi >= box.q_lo))
    throw ValidationError("notch search box must have positive, ordered bounds");
  if (opts.coarse_points < 1) throw ValidationError("coarse grid needs at least one point per axis");
  if (psi.n_max < 3) throw PreconditionError("Psi curve must carry n_max >= 3");

  Evaluator ev{psi, box};
  const int m = opts.coarse_points;
  const double lw0 = std::log(box.omega_lo), lw1 = std::log(box.omega_hi);
  const double lq0 = std::log(box.q_lo), lq1 = std::log(box.q_hi);

  std::array<double, 3> best{lw0, lq0, lq0};
  double best_cost = kInf;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) {
        const std::array<double, 3> v{lin(lw0, lw1, i, m), lin(lq0, lq1, j, m), lin(lq0, lq1, k, m)};
        const double c = ev.cost(v);
        if (c < best_cost) {
          best_cost = c;
          best = v;
        }
      }

  // Nelder-Mead polish around the best coarse point
  if (opts.polish_iterations > 0 && std::isfinite(best_cost)) {
    const std::array<double, 3> step{m > 1 ? (lw1 - lw0) / (m - 1) : 0.1,
                                     m > 1 ? (lq1 - lq0) / (m - 1) : 0.1,
                                     m > 1 ? (lq1 - lq0) / (m - 1) : 0.1};
    std::array<std::array<double, 3>, 4> simplex{best, best, best, best};
    std::array<double, 4> f{};
    for (int d = 0; d < 3; ++d) simplex[static_cast<std::size_t>(d) + 1][static_cast<std::size_t>(d)] += 0.5 * step[static_cast<std::size_t>(d)];
    for (std::size_t i = 0; i < 4; ++i) f[i] = ev.cost(simplex[i]);

    auto clamp_point = [&](std::array<double, 3> v) {
      v[0] = std::clamp(v[0], lw0, lw1);
      v[1] = std::clamp(v[1], lq0, lq1);
      v[2] = std::clamp(v[2], lq0, lq1);
      return v;
    };

    for (int it = 0; it < opts.polish_iterations; ++it) {
      std::array<std::size_t, 4> idx{0, 1, 2, 3};
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
      const auto lo = idx[0], hi = idx[3], second = idx[2];
      const double spread = std::abs(f[hi] - f[lo]);
      if (spread <= opts.polish_tolerance * std::max(std::abs(f[lo]), 1e-300)) break;

      std::array<double, 3> centroid{0.0, 0.0, 0.0};
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t d = 0; d < 3; ++d) centroid[d] += simplex[idx[i]][d] / 3.0;
      auto along = [&](double t) {
        std::array<double, 3> v{};
        for (std::size_t d = 0; d < 3; ++d) v[d] = centroid[d] + t * (simplex[hi][d] - centroid[d]);
        return clamp_point(v);
      };

      const auto xr = along(-1.0);
      const double fr = ev.cost(xr);
      if (fr < f[lo]) {
        const auto xe = along(-2.0);
        const double fe = ev.cost(xe);
        if (fe < fr) {
          simplex[hi] = xe;
          f[hi] = fe;
        } else {
          simplex[hi] = xr;
          f[hi] = fr;
        }
      } else if (fr < f[second]) {
        simplex[hi] = xr;
        f[hi] = fr;
      } else {
        const auto xc = fr < f[hi] ? along(-0.5) : along(0.5);
        const double fc = ev.cost(xc);
        if (fc < std::min(fr, f[hi])) {
          simplex[hi] = xc;
          f[hi] = fc;
        } else {
          for (std::size_t i = 1; i < 4; ++i) {
            auto& v = simplex[idx[i]];
            for (std::size_t d = 0; d < 3; ++d) v[d] = simplex[lo][d] + 0.5 * (v[d] - simplex[lo][d]);
            f[idx[i]] = ev.cost(v);
          }
        }
      }
    }
    const auto it_best = std::min_element(f.begin(), f.end());
    if (*it_best < best_cost) {
      best_cost = *it_best;
      best = simplex[static_cast<std::size_t>(it_best - f.begin())];
    }
  }

  NotchSearchResult out;
  out.params = ev.params(best);
  out.evaluations = ev.count;
  out.report = verify_bound(spectra, psi, notch(out.params));
  out.min_margin = out.report.min_margin;
  out.feasible = out.report.feasible && out.report.direct_feasible;
  return out;
}

NotchSearchResult search_notch(const PsiCurve& psi, const LoopConfig& cfg, const NotchSearchBox& box,
                               const NotchSearchOptions& opts) {
  return search_notch(psi, spectrum_sweep(cfg, psi.grid, psi.n_max), box, opts);
}

}  // namespace resetfd
