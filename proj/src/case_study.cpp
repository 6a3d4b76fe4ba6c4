#include "resetfd/case_study.hpp"

#include <numbers>

namespace resetfd::case_study {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

RationalTF surrogate_plant() { return RationalTF({7.916e3}, {1.0, 3.34, 6.985e3}); }

NotchParams reference_notch() { return NotchParams{kTwoPi * 27.5, 6.79, 2.38}; }

RationalTF pid_from_hz(const PidHz& p) {
  return pid(p.kp, kTwoPi * p.f_i, kTwoPi * p.f_d, kTwoPi * p.f_t, kTwoPi * p.f_lf);
}

LoopConfig linear_loop(const RationalTF& plant, const PidHz& p) {
  return LoopConfig{plant, RationalTF::gain(1.0), RationalTF::gain(0.0), pid_from_hz(p),
                    ResetElement::feedthrough(1.0), std::nullopt};
}

LoopConfig reset_loop(const RationalTF& plant, const PidHz& p, const CgLpHz& c) {
  const CgLpDesign cglp = build_cglp(kTwoPi * c.f_l, kTwoPi * c.f_f, c.a_rho);
  const RationalTF pos = scale(series(pid_from_hz(p), cglp.c_c), cglp.k_c);
  return LoopConfig{plant, RationalTF::gain(1.0), RationalTF::gain(0.0), pos, cglp.element, std::nullopt};
}

LoopConfig linear_loop() { return linear_loop(surrogate_plant(), kLinearPid); }
LoopConfig reset_loop() { return reset_loop(surrogate_plant(), kResetPid, kCgLp); }

}  // namespace resetfd::case_study
