#pragma once

#include "resetfd/cloop.hpp"
#include "resetfd/synth.hpp"

/// Positioning-stage case study: surrogate single-eigenmode plant with the
/// linear PID and the PID + CgLp reset controller. Frequencies in Hz here are
/// converted to rad/s by the builders.
namespace resetfd::case_study {

/// 7.916e3 / (s^2 + 3.34 s + 6.985e3)
RationalTF surrogate_plant();

struct PidHz {
  double kp, f_i, f_d, f_t, f_lf;
};
struct CgLpHz {
  double f_l, f_f, a_rho;
};

inline constexpr PidHz kLinearPid{14.79, 17.86, 33.33, 300.0, 423.0};
inline constexpr PidHz kResetPid{13.62, 46.51, 33.33, 300.0, 423.0};
inline constexpr CgLpHz kCgLp{80.0, 350.0, 0.0};
/// Hand-tuned notch: omega_n = 2 pi 27.5 rad/s, Q1 = 6.79, Q2 = 2.38.
NotchParams reference_notch();

RationalTF pid_from_hz(const PidHz& p);

/// C_pre = 1, C_par = 0, C_pos = C_PID, element = unit feedthrough.
LoopConfig linear_loop(const RationalTF& plant, const PidHz& p);
/// C_pre = 1, C_par = 0, C_pos = k_c C_PID C_c, element = GFORE of the CgLp.
LoopConfig reset_loop(const RationalTF& plant, const PidHz& p, const CgLpHz& c);

LoopConfig linear_loop();
LoopConfig reset_loop();

}  // namespace resetfd::case_study
