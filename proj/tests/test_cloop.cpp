#include <doctest.h>

#include <random>

#include "resetfd/cloop.hpp"
#include "resetfd/error.hpp"
#include "resetfd/synth.hpp"
#include "support.hpp"

using namespace resetfd;
using oracle::kTwoPi;

namespace {

LoopConfig linearised_reset_loop() {
  auto cfg = case_study::reset_loop();
  const auto& el = cfg.element;
  cfg.element = ResetElement(el.a(), el.b(), el.c(), el.d(), Eigen::VectorXd::Ones(el.states()));
  return cfg;
}

}  // namespace

TEST_SUITE("cloop") {
  TEST_CASE("harmonic spectrum container") {
    HarmonicSpectrum s(1.0, 5);
    s.set(3, {1.0, 2.0});
    CHECK(s[3] == cplx(1.0, 2.0));
    CHECK(s[2] == cplx(0.0, 0.0));
    CHECK(s[7] == cplx(0.0, 0.0));
    CHECK_THROWS_AS(s.set(4, 1.0), ValidationError);
    CHECK_THROWS_AS(s.set(3, std::nan("")), NumericalError);
    CHECK_THROWS_AS(HarmonicSpectrum(1.0, 4), ValidationError);
    CHECK(s.higher_power() == doctest::Approx(5.0));
  }

  TEST_CASE("linear element: no higher harmonics, S1 equals S_bl") {
    const auto cfg = linearised_reset_loop();
    const LoopAnalyzer an(cfg);
    for (double f : {3.0, 28.0, 150.0}) {
      const double w = kTwoPi * f;
      CHECK(an.open_loop(w, 3) == cplx(0.0, 0.0));
      CHECK(an.sensitivity(w, 3) == cplx(0.0, 0.0));
      CHECK(oracle::rel(an.sensitivity(w, 1), an.base_linear_sensitivity(w)) < 1e-12);
    }
  }

  TEST_CASE("L1 with C_par = 0 is G C_pos H1 C_pre") {
    const auto cfg = case_study::reset_loop();
    const double w = kTwoPi * 40.0;
    const cplx expect = eval_freq(cfg.plant, w) * eval_freq(cfg.c_pos, w) * hosidf(cfg.element, w, 1);
    CHECK(oracle::rel(open_loop_Ln(cfg, w, 1), expect) < 1e-12);
  }

  TEST_CASE("L_n formula with a nontrivial pre-filter and parallel path") {
    auto cfg = case_study::reset_loop();
    cfg.c_pre = lead_lag(kTwoPi * 20, kTwoPi * 200);
    cfg.c_par = RationalTF::gain(0.4);
    const double w = kTwoPi * 30.0;
    const cplx pre = eval_freq(cfg.c_pre, w);
    for (int n : {3, 5}) {
      const cplx expect = eval_freq(cfg.plant, n * w) * eval_freq(cfg.c_pos, n * w) * hosidf(cfg.element, w, n) * pre *
                          std::polar(1.0, (n - 1) * std::arg(pre));
      CHECK(oracle::rel(open_loop_Ln(cfg, w, n), expect) < 1e-12);
    }
    const cplx l1 = eval_freq(cfg.plant, w) * eval_freq(cfg.c_pos, w) * (hosidf(cfg.element, w, 1) + 0.4) * pre;
    CHECK(oracle::rel(open_loop_Ln(cfg, w, 1), l1) < 1e-12);
  }

  TEST_CASE("even orders vanish") {
    const auto cfg = case_study::reset_loop();
    for (int n : {2, 4, 10}) {
      CHECK(open_loop_Ln(cfg, 100.0, n) == cplx(0.0, 0.0));
      CHECK(sensitivity_n(cfg, 100.0, n) == cplx(0.0, 0.0));
      CHECK(disturbance_sensitivity_n(cfg, 100.0, n) == cplx(0.0, 0.0));
    }
  }

  TEST_CASE("base linear sensitivity") {
    auto zero = case_study::reset_loop();
    zero.plant = RationalTF::gain(0.0);
    CHECK(base_linear_sensitivity(zero, 100.0) == cplx(1.0, 0.0));
    for (int n = 1; n <= 5; ++n) CHECK(disturbance_sensitivity_n(zero, 100.0, n) == cplx(0.0, 0.0));

    const auto cfg = case_study::reset_loop();
    CHECK(std::abs(base_linear_sensitivity(cfg, 1e-3)) < 1e-3);
    const double w = kTwoPi * 100;
    const cplx lbl = eval_freq(cfg.plant, w) * eval_freq(cfg.c_pos, w) *
                     (eval_freq(cfg.c_par, w) + eval_freq(base_linear_tf(cfg.element), w)) * eval_freq(cfg.c_pre, w);
    CHECK(oracle::rel(base_linear_sensitivity(cfg, w), 1.0 / (1.0 + lbl)) < 1e-12);
  }

  TEST_CASE("S^n formula") {
    const auto cfg = case_study::reset_loop();
    const double w = kTwoPi * 28.0;
    const cplx s1 = 1.0 / (1.0 + open_loop_Ln(cfg, w, 1));
    CHECK(oracle::rel(sensitivity_n(cfg, w, 1), s1) < 1e-13);
    for (int n : {3, 5, 7}) {
      const cplx expect = -open_loop_Ln(cfg, w, n) * base_linear_sensitivity(cfg, n * w) * std::polar(std::abs(s1), n * std::arg(s1));
      CHECK(oracle::rel(sensitivity_n(cfg, w, n), expect) < 1e-12);
    }
  }

  TEST_CASE("disturbance channel scales by |G|") {
    const auto cfg = case_study::reset_loop();
    for (double f : {2.0, 28.0, 300.0}) {
      const double w = kTwoPi * f;
      const double g = std::abs(eval_freq(cfg.plant, w));
      for (int n : {1, 3, 5})
        CHECK(std::abs(disturbance_sensitivity_n(cfg, w, n)) == doctest::Approx(g * std::abs(sensitivity_n(cfg, w, n))).epsilon(1e-12));
    }
  }

  TEST_CASE("shaping: L1 and S1 invariant, higher orders scale") {
    const auto cfg = case_study::reset_loop();
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) {
      const auto f = oracle::random_filter(rng);
      const auto shaped = cfg.with_shaping(ShapingPair::from_filter(f));
      for (double fr : {5.0, 27.0, 90.0}) {
        const double w = kTwoPi * fr;
        CHECK(oracle::rel(open_loop_Ln(shaped, w, 1), open_loop_Ln(cfg, w, 1)) < 1e-9);
        CHECK(oracle::rel(sensitivity_n(shaped, w, 1), sensitivity_n(cfg, w, 1)) < 1e-9);
        const double fm = std::abs(eval_freq(f, w));
        for (int n : {3, 5, 9}) {
          const double k = fm * std::abs(eval_freq(invert(f), n * w));
          CHECK(std::abs(open_loop_Ln(shaped, w, n)) == doctest::Approx(k * std::abs(open_loop_Ln(cfg, w, n))).epsilon(1e-9));
          CHECK(std::abs(sensitivity_n(shaped, w, n)) == doctest::Approx(k * std::abs(sensitivity_n(cfg, w, n))).epsilon(1e-9));
        }
      }
    }
  }

  TEST_CASE("shaping mismatch is measured") {
    const auto cfg = case_study::reset_loop();
    const auto f = notch(case_study::reference_notch());
    const auto grid = FrequencyGrid::default_grid();
    CHECK(cfg.with_shaping(ShapingPair::from_filter(f)).shaping_mismatch(grid) < 1e-12);
    CHECK(cfg.with_shaping(ShapingPair{f, RationalTF()}).shaping_mismatch(grid) > 0.5);
  }

  TEST_CASE("sweeps") {
    const auto cfg = case_study::reset_loop();
    const FrequencyGrid one({kTwoPi * 28.0});
    const auto s = spectrum_sweep(cfg, one, 1);
    REQUIRE(s.size() == 1);
    CHECK(s[0][1] == sensitivity_n(cfg, kTwoPi * 28.0, 1));

    const auto lin = spectrum_sweep(case_study::linear_loop(), FrequencyGrid::default_grid(), 61);
    for (const auto& sp : lin) CHECK(sp.higher_power() == 0.0);

    // |S^3| of the reset loop peaks in the decade below the 100 Hz bandwidth
    const auto grid = FrequencyGrid::default_grid();
    const auto sw = spectrum_sweep(cfg, grid, 3);
    std::size_t arg = 0;
    for (std::size_t i = 0; i < sw.size(); ++i)
      if (std::abs(sw[i][3]) > std::abs(sw[arg][3])) arg = i;
    CHECK(grid[arg] > kTwoPi * 10.0);
    CHECK(grid[arg] < kTwoPi * 100.0);
  }

  TEST_CASE("sweep errors carry the frequency") {
    auto cfg = case_study::linear_loop();
    cfg.plant = RationalTF({1.0}, {1.0, 0.0, 100.0});  // pole at 10 rad/s
    try {
      (void)spectrum_sweep(cfg, FrequencyGrid({5.0, 10.0}), 3);
      FAIL("expected an error");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("omega = 10") != std::string::npos);
    }
  }
}
