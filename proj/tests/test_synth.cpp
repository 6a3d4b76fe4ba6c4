#include <doctest.h>

#include "resetfd/case_study.hpp"
#include "resetfd/error.hpp"
#include "resetfd/synth.hpp"
#include "support.hpp"

using namespace resetfd;
using oracle::kTwoPi;

namespace {

NotchSearchBox case_box() { return {kTwoPi * 10, kTwoPi * 100, 0.5, 20.0}; }

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("notch shape") {
    const NotchParams p{kTwoPi * 27.5, 6.79, 2.38};
    const auto f = notch(p);
    CHECK(std::abs(eval_freq(f, p.omega_n)) == doctest::Approx(p.q2 / p.q1).epsilon(1e-12));
    CHECK(std::abs(eval_freq(f, 1e-3)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(eval_freq(f, 1e8)) == doctest::Approx(1.0).epsilon(1e-9));
    // unity when the two quality factors agree
    const auto flat = notch(NotchParams{100.0, 2.0, 2.0});
    for (double w : {1.0, 100.0, 1e4}) CHECK(std::abs(eval_freq(flat, w) - 1.0) < 1e-14);
    CHECK_THROWS_AS(notch(NotchParams{-1.0, 1.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(notch(NotchParams{1.0, 0.0, 1.0}), ValidationError);
  }

  TEST_CASE("notch times its inverse is unity") {
    const auto f = notch(case_study::reference_notch());
    const auto fi = invert(f);
    for (double w : FrequencyGrid::default_grid()) CHECK(std::abs(eval_freq(f, w) * eval_freq(fi, w) - 1.0) < 1e-12);
  }

  TEST_CASE("min margin of the hand-tuned notch") {
    const auto cfg = case_study::reset_loop();
    const auto grid = FrequencyGrid::default_grid();
    const auto p = psi_curve(cfg, grid, 61, 0.15);
    const double m = notch_min_margin(case_study::reference_notch(), p);
    const auto rep = verify_bound(cfg, notch(case_study::reference_notch()), grid, 0.15, 61);
    CHECK(m == doctest::Approx(rep.min_margin).epsilon(1e-12));
    CHECK(m > 0.0);
  }

  TEST_CASE("search on the case study") {
    const auto cfg = case_study::reset_loop();
    const auto grid = FrequencyGrid::default_grid();
    const auto spectra = spectrum_sweep(cfg, grid, 61);
    const auto p = psi_curve(spectra, grid, 0.15);
    const auto r = search_notch(p, spectra, case_box());
    CHECK(r.feasible);
    CHECK(r.report.direct_feasible);
    CHECK(r.min_margin >= notch_min_margin(case_study::reference_notch(), p));
    CHECK(r.params.omega_n >= case_box().omega_lo);
    CHECK(r.params.omega_n <= case_box().omega_hi);
    CHECK(r.params.q1 >= 0.5);
    CHECK(r.params.q2 <= 20.0);
    const double after = *std::max_element(r.report.sigma2_after.begin(), r.report.sigma2_after.end());
    CHECK(after <= 0.15);

    // bitwise deterministic
    const auto again = search_notch(p, spectra, case_box());
    CHECK(again.params.omega_n == r.params.omega_n);
    CHECK(again.params.q1 == r.params.q1);
    CHECK(again.params.q2 == r.params.q2);
    CHECK(again.min_margin == r.min_margin);
  }

  TEST_CASE("sigma2_max = 0 is infeasible") {
    const auto cfg = case_study::reset_loop();
    const auto grid = FrequencyGrid::log_spaced(kTwoPi, kTwoPi * 1000, 60);
    const auto p = psi_curve(cfg, grid, 61, 0.0);
    NotchSearchOptions o;
    o.coarse_points = 6;
    const auto r = search_notch(p, cfg, case_box(), o);
    CHECK_FALSE(r.feasible);
    CHECK(r.min_margin < 0.0);
  }

  TEST_CASE("already robust loop is feasible") {
    const auto cfg = case_study::reset_loop();
    const auto grid = FrequencyGrid::log_spaced(kTwoPi, kTwoPi * 1000, 60);
    const auto p = psi_curve(cfg, grid, 61, 1.0);
    NotchSearchOptions o;
    o.coarse_points = 6;
    const auto r = search_notch(p, cfg, case_box(), o);
    CHECK(r.feasible);
  }

  TEST_CASE("linear loop: Psi is infinite and any notch is feasible") {
    const auto cfg = case_study::linear_loop();
    const auto grid = FrequencyGrid::log_spaced(kTwoPi, kTwoPi * 1000, 40);
    const auto p = psi_curve(cfg, grid, 61, 0.15);
    CHECK(std::isinf(notch_min_margin(case_study::reference_notch(), p)));
  }

  TEST_CASE("box validation") {
    const auto cfg = case_study::reset_loop();
    const auto grid = FrequencyGrid::log_spaced(kTwoPi, kTwoPi * 1000, 20);
    const auto p = psi_curve(cfg, grid, 61, 0.15);
    CHECK_THROWS_AS(search_notch(p, cfg, NotchSearchBox{100.0, 10.0, 0.5, 20.0}), ValidationError);
    CHECK_THROWS_AS(search_notch(p, cfg, NotchSearchBox{10.0, 100.0, 0.0, 20.0}), ValidationError);
  }
}
