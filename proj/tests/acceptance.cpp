// Acceptance run: one PASS/FAIL line per criterion, followed by N_max sensitivity.
// Exit status is nonzero if any criterion fails, except the ones listed in
// kKnownRed, which still print FAIL. --strict counts those too.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <random>
#include <set>
#include <string>

#include "resetfd/case_study.hpp"
#include "resetfd/robustness.hpp"
#include "resetfd/sim.hpp"
#include "resetfd/synth.hpp"
#include "support.hpp"

using namespace resetfd;
using oracle::kTwoPi;

namespace {

const std::set<int> kKnownRed = {8};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

// 1: describing functions against simulation
Outcome hosidf_oracle() {
  std::mt19937_64 rng(101);
  std::vector<ResetElement> els{case_study::reset_loop().element};
  for (int i = 0; i < 25; ++i) els.push_back(oracle::random_element(rng));
  const auto freqs = FrequencyGrid::log_spaced(kTwoPi, kTwoPi * 500, 20);
  double worst = 0.0;
  int points = 0;
  for (const auto& el : els) {
    const Hosidf h(el);
    for (double w : freqs) {
      const auto sim = element_harmonics(el, w, 5);
      const double h1 = std::abs(h(w, 1));
      for (int n : {1, 3, 5}) {
        const cplx ref = h(w, n);
        // a vanishing H_n is compared against the first harmonic instead
        worst = std::max(worst, std::abs(sim[n] - ref) / std::max(std::abs(ref), 1e-9 * h1));
        ++points;
      }
    }
  }
  return {worst < 0.01, std::to_string(els.size()) + " elements, " + std::to_string(points) +
                            " comparisons, max rel err " + fmt("%.3g", worst)};
}

// 2: Clegg describing function
Outcome clegg() {
  const auto el = oracle::clegg();
  double worst_phase = 0.0, worst_mag = 0.0;
  for (double w : FrequencyGrid::log_spaced(0.1, 1e4, 25)) {
    const cplx h1 = hosidf(el, w, 1);
    worst_phase = std::max(worst_phase, std::abs(std::arg(h1) * 180.0 / oracle::kPi + 38.15));
    worst_mag = std::max(worst_mag, std::abs(std::abs(h1) * w / 1.6196 - 1.0));
  }
  return {worst_phase <= 0.1 && worst_mag <= 1e-3,
          "max |phase + 38.15| " + fmt("%.4f", worst_phase) + " deg, max |mag w / 1.6196 - 1| " + fmt("%.2e", worst_mag)};
}

HarmonicSpectrum random_spectrum(std::mt19937_64& rng, int n_max) {
  std::uniform_real_distribution<double> mag(0.0, 1.0), ph(-oracle::kPi, oracle::kPi);
  HarmonicSpectrum s(1.0, n_max);
  s.set(1, std::polar(0.05 + mag(rng), ph(rng)));
  for (int n = 3; n <= n_max; n += 2) s.set(n, std::polar(mag(rng) * std::pow(n, -1.0), ph(rng)));
  return s;
}

// 3: closed form against sampled reconstruction
Outcome parseval() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto s = random_spectrum(rng, 61);
    const auto wf = reconstruct(s, 16 * 61);
    worst = std::max(worst, oracle::rel(sigma_p_timedomain(wf.e, wf.e1, 2.0), sigma2(s)));
  }
  return {worst < 1e-6, "100 spectra, max rel diff " + fmt("%.3g", worst)};
}

// 4: disturbance and reference channels
Outcome channels(int n_max) {
  const auto cfg = case_study::reset_loop();
  const auto grid = FrequencyGrid::default_grid();
  const auto r = sigma2_curve(spectrum_sweep(cfg, grid, n_max, InputChannel::Reference), grid);
  const auto d = sigma2_curve(spectrum_sweep(cfg, grid, n_max, InputChannel::Disturbance), grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, std::abs(r.values[i] - d.values[i]));
  return {worst <= 1e-12, std::to_string(grid.size()) + " points, max |diff| " + fmt("%.3g", worst)};
}

// 5: first-order invariance and the harmonic scaling law under shaping
Outcome invariance() {
  const auto cfg = case_study::reset_loop();
  const auto grid = FrequencyGrid::default_grid();
  const auto base = spectrum_sweep(cfg, grid, 61);
  std::mt19937_64 rng(505);
  double worst1 = 0.0, worst_n = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto f = oracle::random_filter(rng);
    const auto fi = invert(f);
    const auto shaped = spectrum_sweep(cfg.with_shaping(ShapingPair{f, fi}), grid, 61);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double w = grid[k];
      worst1 = std::max(worst1, oracle::rel(shaped[k][1], base[k][1]));
      const double fm = std::abs(eval_freq(f, w));
      for (int n = 3; n <= 61; n += 2) {
        const double expect = fm * std::abs(eval_freq(fi, n * w)) * std::abs(base[k][n]);
        if (expect == 0.0) continue;
        worst_n = std::max(worst_n, std::abs(std::abs(shaped[k][n]) - expect) / expect);
      }
    }
  }
  return {worst1 < 1e-9 && worst_n < 1e-9,
          "50 pairs, max rel change S1 " + fmt("%.3g", worst1) + ", max rel dev |Sn'| " + fmt("%.3g", worst_n)};
}

// 6: the sufficient condition never accepts a filter that breaks the target
Outcome soundness(int n_max) {
  const auto cfg = case_study::reset_loop();
  const auto grid = FrequencyGrid::default_grid();
  const auto spectra = spectrum_sweep(cfg, grid, n_max);
  std::string detail;
  int violations = 0;
  for (double smax : {0.05, 0.15, 0.30}) {
    const auto p = psi_curve(spectra, grid, smax);
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> lw(std::log(kTwoPi * 5), std::log(kTwoPi * 200));
    std::uniform_real_distribution<double> lq(std::log(0.5), std::log(20.0));
    int feasible = 0;
    for (int i = 0; i < 200; ++i) {
      // half general sections, half notches near the peak so that some pass
      const RationalTF f = i % 2 ? oracle::random_filter(rng) : notch({std::exp(lw(rng)), std::exp(lq(rng)), std::exp(lq(rng))});
      const auto rep = verify_bound(spectra, p, f);
      if (!rep.feasible) continue;
      ++feasible;
      if (max_of(rep.sigma2_after) > smax) ++violations;
    }
    detail += (detail.empty() ? "" : ", ") + fmt("smax %.2f: ", smax) + std::to_string(feasible) + "/200 feasible";
  }
  return {violations == 0, detail + ", violations " + std::to_string(violations)};
}

// 7: unfiltered peak, designed notch, hand-tuned notch
struct Pipeline {
  double peak = 0, argmax_hz = 0, designed_after = 0, reference_margin = 0;
  NotchParams designed;
  bool designed_feasible = false, reference_feasible = false;
};

Pipeline pipeline(int n_max) {
  Pipeline r;
  const auto cfg = case_study::reset_loop();
  const auto grid = FrequencyGrid::default_grid();
  const auto spectra = spectrum_sweep(cfg, grid, n_max);
  const auto s2 = sigma2_curve(spectra, grid);
  const auto it = std::max_element(s2.values.begin(), s2.values.end());
  r.peak = *it;
  r.argmax_hz = grid[static_cast<std::size_t>(it - s2.values.begin())] / kTwoPi;
  const auto p = psi_curve(spectra, grid, 0.15);
  const auto found = search_notch(p, spectra, NotchSearchBox{kTwoPi * 10, kTwoPi * 100, 0.5, 20.0});
  r.designed = found.params;
  r.designed_feasible = found.feasible;
  // recompute from the filtered loop itself rather than from the scaling law
  const auto shaped = cfg.with_shaping(ShapingPair::from_filter(notch(found.params)));
  r.designed_after = max_of(sigma2_curve(shaped, grid, n_max).values);
  const auto ref = verify_bound(spectra, p, notch(case_study::reference_notch()));
  r.reference_feasible = ref.feasible;
  r.reference_margin = ref.min_margin;
  return r;
}

Outcome replication(const Pipeline& r) {
  const bool ok = r.peak > 0.40 && std::abs(r.argmax_hz - 28.0) <= 5.0 && r.designed_feasible &&
                  r.designed_after <= 0.15 && r.reference_feasible;
  return {ok, "peak " + fmt("%.4f", r.peak) + " at " + fmt("%.2f Hz", r.argmax_hz) + "; designed notch " +
                  fmt("%.2f Hz", r.designed.omega_n / kTwoPi) + fmt(" Q1 %.3f", r.designed.q1) +
                  fmt(" Q2 %.3f", r.designed.q2) + ", max sigma2 after " + fmt("%.4f", r.designed_after) +
                  "; reference notch " + (r.reference_feasible ? "feasible" : "infeasible") + fmt(" (margin %.4f)", r.reference_margin)};
}

// 8: closed-loop prediction against simulation
Outcome prediction(std::vector<std::string>& notes) {
  const auto cfg = case_study::reset_loop();
  const LoopAnalyzer an(cfg);
  const int periods[] = {667, 556, 476, 417, 385, 357, 333, 303, 270, 238};  // samples at Ts = 1e-4
  double worst = 0.0;
  int failed = 0, total = 0;
  for (double ts : {1e-4, 2.5e-5}) {
    for (int p : periods) {
      const double f = 1.0 / (p * 1e-4);
      const auto res = simulate_steady(cfg, InputDescriptor{InputChannel::Reference, 32e-6, f}, ts);
      std::string line = fmt("Ts %.1e", ts) + fmt(" f %6.2f Hz:", f);
      if (!res.settled) {
        line += " unsettled";
        ++failed;
        ++total;
        notes.push_back(line);
        continue;
      }
      const auto meas = steady_harmonics(res, f, 5);
      const auto pred = an.spectrum(kTwoPi * f, 61);
      for (int n : {1, 3, 5}) {
        // skip orders at the numerical noise floor
        if (std::abs(pred[n]) < 1e-6 * std::abs(pred[1])) continue;
        const double e = std::abs(std::abs(meas[n]) - std::abs(pred[n])) / std::abs(pred[n]);
        worst = std::max(worst, e);
        ++total;
        if (e > 0.20) ++failed;
        line += " n" + std::to_string(n) + " " + fmt("%.1f%%", 100 * e);
      }
      notes.push_back(line);
    }
  }
  return {failed == 0, std::to_string(total - failed) + "/" + std::to_string(total) +
                           " harmonic comparisons within 20%, worst " + fmt("%.1f%%", 100 * worst)};
}

// 9: no resets means the linear loop
Outcome degeneracy() {
  auto off = case_study::reset_loop();
  const auto& el = off.element;
  off.element = ResetElement(el.a(), el.b(), el.c(), el.d(), Eigen::VectorXd::Ones(el.states()));
  auto folded = case_study::reset_loop();
  folded.c_par = base_linear_tf(folded.element);
  folded.element = ResetElement::feedthrough(0.0);

  double worst = 0.0;
  for (double f : {10.0, 25.0, 40.0}) {
    const InputDescriptor in{InputChannel::Reference, 32e-6, f};
    const auto a = simulate(off, in, 5e-5, 60.0 / f);
    const auto b = simulate(folded, in, 5e-5, 60.0 / f);
    double peak = 0.0, diff = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      peak = std::max(peak, std::abs(b.e[k]));
      diff = std::max(diff, std::abs(a.e[k] - b.e[k]));
    }
    worst = std::max(worst, diff / peak);
  }
  const double fd = max_of(sigma2_curve(off, FrequencyGrid::default_grid(), 61).values);
  double td = 0.0;
  for (double f : {10.0, 25.0, 40.0}) {
    const auto r = simulate_steady(off, InputDescriptor{InputChannel::Reference, 32e-6, f}, 5e-5);
    td = std::max(td, r.settled ? sigma2_measured(r, f) : 1.0);
  }
  return {worst < 1e-9 && fd < 1e-8 && td < 1e-8, "max rel sample diff " + fmt("%.3g", worst) + ", sigma2 closed form " +
                                                      fmt("%.3g", fd) + ", simulated " + fmt("%.3g", td)};
}

// 10: third-harmonic CPSD step with and without the notch
Outcome cpsd_replication() {
  const double ts = 5e-5, f = snap_frequency(28.0, ts);
  const auto base = case_study::reset_loop();
  const auto filtered = base.with_shaping(ShapingPair::from_filter(notch(case_study::reference_notch())));
  double steps[2] = {0, 0};
  int i = 0;
  for (const auto* cfg : {&base, &filtered}) {
    const auto r = simulate_steady(*cfg, InputDescriptor{InputChannel::Reference, 32e-6, f}, ts);
    if (!r.settled) return {false, "run did not settle"};
    steps[i++] = cpsd_step(cpsd(r, 5 * samples_per_period(f, ts), 0), f, 3);
  }
  return {steps[1] < steps[0], fmt("f %.3f Hz, ", f) + "3rd-harmonic CPSD step unfiltered " + fmt("%.4f", steps[0]) +
                                   ", filtered " + fmt("%.4f", steps[1])};
}

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  int unexpected = 0, red = 0;

  auto report = [&](int id, const char* name, auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool known = kKnownRed.count(id) > 0;
    std::printf("%s criterion %d %s: %s [%.1fs]%s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs,
                !o.pass && known ? " (known red, see README)" : "");
    if (!o.pass) (known && !strict ? red : unexpected)++;
  };

  std::vector<std::string> notes;
  Pipeline p61;
  report(1, "hosidf-oracle", hosidf_oracle);
  report(2, "clegg", clegg);
  report(3, "parseval", parseval);
  report(4, "channel-equivalence", [] { return channels(61); });
  report(5, "first-order-invariance", invariance);
  report(6, "bound-soundness", [] { return soundness(61); });
  report(7, "pipeline-replication", [&] {
    p61 = pipeline(61);
    return replication(p61);
  });
  report(8, "closed-loop-prediction", [&] { return prediction(notes); });
  report(9, "linear-degeneracy", degeneracy);
  report(10, "cpsd-replication", cpsd_replication);

  std::printf("\ncriterion 8 detail (relative error of |S^n| r per harmonic):\n");
  for (const auto& n : notes) std::printf("  %s\n", n.c_str());

  std::printf("\nN_max sensitivity:\n");
  for (int n : {31, 61, 121}) {
    const auto p = n == 61 ? p61 : pipeline(n);
    const auto c4 = channels(n);
    const auto c6 = soundness(n);
    std::printf("  N_max %3d: sigma2 peak %.6f at %.2f Hz, designed notch after %.6f, reference margin %.6f, "
                "crit 4 %s, crit 6 %s\n",
                n, p.peak, p.argmax_hz, p.designed_after, p.reference_margin, c4.pass ? "pass" : "fail",
                c6.pass ? "pass" : "fail");
  }

  std::printf("\n%d unexpected failure(s), %d known red\n", unexpected, red);
  return unexpected == 0 ? 0 : 1;
}
