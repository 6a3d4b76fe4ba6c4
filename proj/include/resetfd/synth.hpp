#pragma once

#include <vector>

#include "resetfd/robustness.hpp"

namespace resetfd {

struct NotchParams {
  double omega_n = 0.0;  // rad/s
  double q1 = 1.0;
  double q2 = 1.0;
};

/// (s^2/wn^2 + s/(Q1 wn) + 1) / (s^2/wn^2 + s/(Q2 wn) + 1); depth Q2/Q1 at wn.
RationalTF notch(const NotchParams& p);

/// Ranges searched by search_notch; omega in rad/s.
struct NotchSearchBox {
  double omega_lo = 0.0;
  double omega_hi = 0.0;
  double q_lo = 0.5;
  double q_hi = 20.0;
};

struct NotchSearchOptions {
  int coarse_points = 20;          // per axis
  int polish_iterations = 200;
  double polish_tolerance = 1e-4;  // relative spread of the simplex objective
};

struct NotchSearchResult {
  NotchParams params;
  bool feasible = false;  // bound satisfied AND direct post-filter check passed
  double min_margin = 0.0;
  BoundReport report;
  int evaluations = 0;
};

/// Minimum over the grid of Psi - |F(jw)| |F^{-1}(j k_m w)| for the notch p.
double notch_min_margin(const NotchParams& p, const PsiCurve& psi);

/// Coarse grid over (omega_n, Q1, Q2) followed by a Nelder-Mead polish of the
/// minimum margin. Deterministic. An empty feasible set is reported, not thrown.
NotchSearchResult search_notch(const PsiCurve& psi, const std::vector<HarmonicSpectrum>& spectra,
                               const NotchSearchBox& box, const NotchSearchOptions& opts = {});
NotchSearchResult search_notch(const PsiCurve& psi, const LoopConfig& cfg, const NotchSearchBox& box,
                               const NotchSearchOptions& opts = {});

}  // namespace resetfd
