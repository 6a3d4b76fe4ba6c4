#include "app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "resetfd/error.hpp"
#include "resetfd/robustness.hpp"
#include "resetfd/scenario.hpp"
#include "resetfd/sim.hpp"
#include "resetfd/synth.hpp"

#ifndef RESETFD_VERSION
#define RESETFD_VERSION "0.0.0"
#endif

namespace resetfd::app {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Options {
  std::string scenario;
  std::string out;
  std::optional<int> n_max;
  std::optional<double> ts;
  std::optional<double> sigma2_max;
  std::string with_filter;
  std::string grid;
  std::uint64_t seed = 1;
};

// JSON numbers go through the same 12-digit rendering as the CSVs.
ordered_json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(fmt_num(v));
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ParseError("cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class Csv {
 public:
  Csv(const fs::path& path, std::initializer_list<const char*> header) : f_(path, std::ios::binary) {
    if (!f_) throw PreconditionError("cannot write " + path.string());
    bool first = true;
    for (const char* h : header) {
      f_ << (first ? "" : ",") << h;
      first = false;
    }
    f_ << '\n';
  }
  Csv& cell(double v) {
    sep();
    f_ << fmt_num(v);
    return *this;
  }
  // infinity rendered as an empty cell
  Csv& cell_or_empty(double v) {
    sep();
    if (std::isfinite(v)) f_ << fmt_num(v);
    return *this;
  }
  Csv& cell(long long v) {
    sep();
    f_ << v;
    return *this;
  }
  void end() {
    f_ << '\n';
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) f_ << ',';
    first_ = false;
  }
  std::ofstream f_;
  bool first_ = true;
};

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw PreconditionError("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

FrequencyGrid parse_grid_override(const std::string& text) {
  double lo = 0, hi = 0;
  long long pts = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lld%c", &lo, &hi, &pts, &tail) != 3)
    throw ParseError("--grid expects lo_hz,hi_hz,points, got \"" + text + "\"");
  if (!(lo > 0 && hi >= lo && pts >= 1)) throw ValidationError("--grid needs 0 < lo_hz <= hi_hz and points >= 1");
  return FrequencyGrid::log_spaced(kTwoPi * lo, kTwoPi * hi, static_cast<std::size_t>(pts));
}

// Everything a subcommand needs, resolved once.
struct Context {
  Options opt;
  std::string subcommand;
  Scenario sc;
  std::string input_bytes;
  fs::path out_dir;
  std::vector<std::string> files;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  fs::path file(const std::string& name) {
    files.push_back(name);
    return out_dir / name;
  }

  double sigma2_max() const {
    if (!sc.sigma2_max) throw ValidationError("sigma2_max is required: set it in the scenario or pass --sigma2-max");
    return *sc.sigma2_max;
  }

  void manifest() {
    ordered_json m;
    m["tool"] = "resetfd";
    m["version"] = RESETFD_VERSION;
    m["subcommand"] = subcommand;
    m["scenario"] = sc.name;
    m["input_hash"] = hex64(fnv1a(input_bytes));
    m["n_max"] = sc.n_max;
    m["ts"] = num(sc.simulation.ts);
    m["sigma2_max"] = sc.sigma2_max ? num(*sc.sigma2_max) : ordered_json(nullptr);
    m["grid_points"] = sc.grid.size();
    m["files"] = files;
    write_json(out_dir / (subcommand + ".manifest.json"), m);
  }
};

Context prepare(const Options& opt, const std::string& subcommand, std::ostream& out, std::ostream& err) {
  Context c;
  c.opt = opt;
  c.subcommand = subcommand;
  c.out = &out;
  c.err = &err;
  const std::string text = read_bytes(opt.scenario);
  c.sc = parse_scenario(text, opt.scenario);

  // the hash covers the scenario bytes and every override that changes results
  std::ostringstream ov;
  ov << "\nsubcommand=" << subcommand;
  if (opt.n_max) {
    if (*opt.n_max < 1 || *opt.n_max % 2 == 0) throw ValidationError("--n-max must be a positive odd integer");
    c.sc.n_max = *opt.n_max;
    ov << "\nn_max=" << *opt.n_max;
  }
  if (opt.ts) {
    if (!(*opt.ts > 0)) throw ValidationError("--ts must be positive");
    c.sc.simulation.ts = *opt.ts;
    ov << "\nts=" << fmt_num(*opt.ts);
  }
  if (opt.sigma2_max) {
    if (!(*opt.sigma2_max >= 0)) throw ValidationError("--sigma2-max must be nonnegative");
    c.sc.sigma2_max = *opt.sigma2_max;
    ov << "\nsigma2_max=" << fmt_num(*opt.sigma2_max);
  }
  if (!opt.grid.empty()) {
    c.sc.grid = parse_grid_override(opt.grid);
    ov << "\ngrid=" << opt.grid;
  }
  if (!opt.with_filter.empty()) {
    const std::string frag = read_bytes(opt.with_filter);
    c.sc.loop.shaping = parse_shaping(frag, opt.with_filter);
    ov << "\nfilter=" << frag;
  }
  if (subcommand == "validate") ov << "\nseed=" << opt.seed;
  c.input_bytes = text + ov.str();

  if (!opt.out.empty())
    c.out_dir = opt.out;
  else if (!c.sc.outputs.empty())
    c.out_dir = c.sc.outputs;
  else if (const char* env = std::getenv("RESETFD_OUT"); env && *env)
    c.out_dir = env;
  else
    c.out_dir = ".";
  fs::create_directories(c.out_dir);
  return c;
}

void write_harmonics(Context& c, const std::string& name, const std::vector<HarmonicSpectrum>& spectra) {
  Csv csv(c.file(name), {"omega_rad_s", "f_hz", "n", "re", "im", "abs", "arg_rad"});
  for (const auto& s : spectra)
    for (int n = 1; n <= s.n_max(); n += 2) {
      const cplx v = s[n];
      csv.cell(s.omega()).cell(s.omega() / kTwoPi).cell(static_cast<long long>(n));
      csv.cell(v.real()).cell(v.imag()).cell(std::abs(v)).cell(std::arg(v));
      csv.end();
    }
}

int cmd_bode(Context& c) {
  write_harmonics(c, "bode.csv", open_loop_sweep(c.sc.loop, c.sc.grid, c.sc.n_max));
  c.manifest();
  return kOk;
}

int cmd_sens(Context& c) {
  write_harmonics(c, "sens.csv", spectrum_sweep(c.sc.loop, c.sc.grid, c.sc.n_max, InputChannel::Reference));
  write_harmonics(c, "sens_d.csv", spectrum_sweep(c.sc.loop, c.sc.grid, c.sc.n_max, InputChannel::Disturbance));
  c.manifest();
  return kOk;
}

int cmd_sigma2(Context& c) {
  const auto curve = sigma2_curve(c.sc.loop, c.sc.grid, c.sc.n_max);
  Csv csv(c.file("sigma2.csv"), {"omega_rad_s", "f_hz", "sigma2", "sigma2_percent"});
  std::size_t arg = 0;
  for (std::size_t i = 0; i < curve.values.size(); ++i) {
    csv.cell(curve.grid[i]).cell(curve.grid[i] / kTwoPi).cell(curve.values[i]).cell(100.0 * curve.values[i]);
    csv.end();
    if (curve.values[i] > curve.values[arg]) arg = i;
  }
  ordered_json s;
  s["filtered"] = c.sc.loop.shaping.has_value();
  s["max"] = num(curve.values[arg]);
  s["argmax_rad_s"] = num(curve.grid[arg]);
  s["argmax_hz"] = num(curve.grid[arg] / kTwoPi);
  if (c.sc.sigma2_max) s["within_sigma2_max"] = curve.values[arg] <= *c.sc.sigma2_max;
  write_json(c.file("sigma2.json"), s);
  c.manifest();
  *c.out << "sigma2 max " << fmt_num(curve.values[arg]) << " at " << fmt_num(curve.grid[arg] / kTwoPi) << " Hz\n";
  return kOk;
}

int cmd_psi(Context& c) {
  const auto curve = psi_curve(c.sc.loop, c.sc.grid, c.sc.n_max, c.sigma2_max());
  Csv csv(c.file("psi.csv"), {"omega_rad_s", "f_hz", "psi"});
  double lo = std::numeric_limits<double>::infinity();
  std::size_t infinite = 0;
  for (std::size_t i = 0; i < curve.values.size(); ++i) {
    csv.cell(curve.grid[i]).cell(curve.grid[i] / kTwoPi).cell_or_empty(curve.values[i]);
    csv.end();
    lo = std::min(lo, curve.values[i]);
    if (std::isinf(curve.values[i])) ++infinite;
  }
  ordered_json s;
  s["sigma2_max"] = num(curve.sigma2_max);
  s["min"] = num(lo);
  s["infinite_points"] = infinite;
  write_json(c.file("psi.json"), s);
  c.manifest();
  return kOk;
}

int cmd_design_notch(Context& c) {
  if (c.sc.loop.shaping) throw ValidationError("design-notch works on the unfiltered loop; drop the shaping entry");
  const double smax = c.sigma2_max();
  NotchSearchBox box;
  if (c.sc.notch_box) {
    box = *c.sc.notch_box;
  } else {
    box.omega_lo = c.sc.grid[0];
    box.omega_hi = c.sc.grid[c.sc.grid.size() - 1];
  }
  const auto spectra = spectrum_sweep(c.sc.loop, c.sc.grid, c.sc.n_max);
  const auto psi = psi_curve(spectra, c.sc.grid, smax);
  const auto res = search_notch(psi, spectra, box);

  {
    std::ofstream f(c.file("notch.json"), std::ios::binary);
    f << shaping_fragment(res.params, res.feasible, res.min_margin);
  }
  Csv csv(c.file("design_notch.csv"),
          {"omega_rad_s", "f_hz", "psi", "product", "k_m", "margin", "sigma2_after"});
  for (std::size_t i = 0; i < psi.grid.size(); ++i) {
    csv.cell(psi.grid[i]).cell(psi.grid[i] / kTwoPi).cell_or_empty(psi.values[i]);
    csv.cell(res.report.product[i]).cell(static_cast<long long>(res.report.k_m[i]));
    csv.cell_or_empty(res.report.margin[i]).cell(res.report.sigma2_after[i]);
    csv.end();
  }
  c.manifest();
  *c.out << (res.feasible ? "feasible" : "infeasible") << " notch f_n " << fmt_num(res.params.omega_n / kTwoPi)
         << " Hz, Q1 " << fmt_num(res.params.q1) << ", Q2 " << fmt_num(res.params.q2) << ", min margin "
         << fmt_num(res.min_margin) << '\n';
  if (!res.feasible) {
    *c.err << "no feasible notch in the search box; best margin " << fmt_num(res.min_margin) << '\n';
    return kCheckFailed;
  }
  return kOk;
}

std::string freq_tag(double f) {
  std::string s = fmt_num(f);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s + "Hz";
}

int cmd_simulate(Context& c) {
  const auto& sim = c.sc.simulation;
  if (sim.frequencies_hz.empty()) throw ValidationError("simulation.frequencies_hz is empty");
  const LoopAnalyzer analyzer(c.sc.loop);
  const int n_report = std::min(c.sc.n_max, 9);
  ordered_json runs = ordered_json::array();
  bool all_settled = true;

  for (const double requested : sim.frequencies_hz) {
    const double f = snap_frequency(requested, sim.ts);
    const auto res = simulate_steady(c.sc.loop, InputDescriptor{sim.channel, sim.amplitude, f}, sim.ts);
    for (const auto& w : res.warnings) *c.err << "warning: " << fmt_num(f) << " Hz: " << w << '\n';
    const std::string tag = freq_tag(f);

    Csv ts_csv(c.file("sim_" + tag + ".csv"), {"t", "e", "e_r", "u_r", "u", "y"});
    for (std::size_t k = 0; k < res.size(); ++k) {
      ts_csv.cell(static_cast<double>(k) * sim.ts).cell(res.e[k]).cell(res.e_r[k]);
      ts_csv.cell(res.u_r[k]).cell(res.u[k]).cell(res.y[k]);
      ts_csv.end();
    }
    Csv rs_csv(c.file("sim_" + tag + "_resets.csv"), {"index", "t"});
    for (const auto k : res.reset_instants) {
      rs_csv.cell(static_cast<long long>(k)).cell(static_cast<double>(k) * sim.ts);
      rs_csv.end();
    }

    ordered_json run;
    run["requested_hz"] = num(requested);
    run["frequency_hz"] = num(f);
    run["settled"] = res.settled;
    run["periods"] = res.periods;
    run["settle_residual"] = num(res.settle_residual);
    run["resets"] = res.reset_instants.size();
    run["warnings"] = res.warnings;
    if (res.settled) {
      const std::size_t period = samples_per_period(f, sim.ts);
      const std::size_t win = period * static_cast<std::size_t>(sim.cpsd_periods);
      const auto spec = cpsd(res, win, 0);
      Csv sp_csv(c.file("cpsd_" + tag + ".csv"), {"f_hz", "psd", "cpsd", "cpsd_normalized"});
      for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
        sp_csv.cell(spec.freqs[k]).cell(spec.psd[k]).cell(spec.cpsd[k]).cell(spec.cpsd_normalized[k]);
        sp_csv.end();
      }
      const auto meas = steady_harmonics(res, f, n_report);
      const auto pred = analyzer.spectrum(kTwoPi * f, c.sc.n_max, sim.channel);
      run["sigma2_measured"] = num(sigma2_measured(res, f));
      run["sigma2_predicted"] = num(sigma2(pred));
      ordered_json h = ordered_json::array();
      for (int n = 1; n <= n_report; n += 2)
        h.push_back({{"n", n},
                     {"measured_abs", num(std::abs(meas[n]))},
                     {"predicted_abs", num(std::abs(pred[n]))},
                     {"cpsd_step", num(cpsd_step(spec, f, n))}});
      run["harmonics"] = h;
    } else {
      all_settled = false;
    }
    runs.push_back(run);
  }
  ordered_json s;
  s["ts"] = num(sim.ts);
  s["amplitude"] = num(sim.amplitude);
  s["channel"] = sim.channel == InputChannel::Reference ? "reference" : "disturbance";
  s["filtered"] = c.sc.loop.shaping.has_value();
  s["runs"] = runs;
  write_json(c.file("simulate.json"), s);
  c.manifest();
  if (!all_settled) {
    *c.err << "some runs did not settle; the loop may violate the closed-loop convergence assumption\n";
    return kConvergence;
  }
  return kOk;
}

ordered_json check(const std::string& name, bool passed, ordered_json detail) {
  return {{"name", name}, {"passed", passed}, {"detail", std::move(detail)}};
}

int cmd_validate(Context& c) {
  ordered_json checks = ordered_json::array();
  const auto& grid = c.sc.grid;
  const auto& el = c.sc.loop.element;

  // element describing functions against simulation
  if (el.states() > 0) {
    double worst = 0.0;
    const double lo = std::max(grid[0], kTwoPi * 1.0), hi = std::min(grid[grid.size() - 1], kTwoPi * 500.0);
    const auto probe = FrequencyGrid::log_spaced(lo, std::max(lo, hi), 5);
    for (const double w : probe) {
      const auto sim = element_harmonics(el, w, 5);
      const double h1 = std::abs(hosidf(el, w, 1));
      for (int n : {1, 3, 5}) {
        const cplx h = hosidf(el, w, n);
        const double floor = 1e-9 * h1;
        worst = std::max(worst, std::abs(sim[n] - h) / std::max(std::abs(h), floor));
      }
    }
    checks.push_back(check("hosidf_vs_simulation", worst < 0.01, {{"max_relative_error", num(worst)}}));
  } else {
    checks.push_back(check("hosidf_vs_simulation", true, {{"skipped", "element has no state"}}));
  }

  const auto spectra = spectrum_sweep(c.sc.loop, grid, c.sc.n_max);
  const auto spectra_d = spectrum_sweep(c.sc.loop, grid, c.sc.n_max, InputChannel::Disturbance);

  // Parseval: closed form against the sampled reconstruction
  {
    double worst = 0.0;
    const std::size_t samples = 8 * static_cast<std::size_t>(c.sc.n_max) + 8;
    for (const auto& s : spectra) {
      const auto wf = reconstruct(s, samples);
      const double td = sigma_p_timedomain(wf.e, wf.e1, 2.0);
      const double fd = sigma2(s);
      worst = std::max(worst, std::abs(td - fd) / std::max(std::abs(fd), 1e-12));
    }
    checks.push_back(check("parseval", worst < 1e-6, {{"max_relative_error", num(worst)}}));
  }

  // reference and disturbance channels share sigma2
  {
    double worst = 0.0;
    for (std::size_t i = 0; i < spectra.size(); ++i) worst = std::max(worst, std::abs(sigma2(spectra[i]) - sigma2(spectra_d[i])));
    checks.push_back(check("channel_equivalence", worst < 1e-12, {{"max_abs_difference", num(worst)}}));
  }

  // bound soundness over random notches
  {
    const double smax = c.sc.sigma2_max.value_or(0.15);
    const auto psi = psi_curve(spectra, grid, smax);
    std::mt19937_64 rng(c.opt.seed);
    std::uniform_real_distribution<double> lw(std::log(grid[0]), std::log(grid[grid.size() - 1]));
    std::uniform_real_distribution<double> lq(std::log(0.5), std::log(20.0));
    int feasible = 0, violations = 0;
    const int trials = 50;
    for (int t = 0; t < trials; ++t) {
      const NotchParams p{std::exp(lw(rng)), std::exp(lq(rng)), std::exp(lq(rng))};
      const auto rep = verify_bound(spectra, psi, notch(p));
      if (rep.feasible) {
        ++feasible;
        if (!rep.direct_feasible) ++violations;
      }
    }
    checks.push_back(check("bound_soundness", violations == 0,
                           {{"sigma2_max", num(smax)}, {"trials", trials}, {"feasible", feasible}, {"violations", violations}}));
  }

  bool ok = true;
  for (const auto& ch : checks) ok = ok && ch["passed"].get<bool>();
  ordered_json s;
  s["seed"] = c.opt.seed;
  s["passed"] = ok;
  s["checks"] = checks;
  write_json(c.file("validate.json"), s);
  c.manifest();
  for (const auto& ch : checks)
    *c.out << (ch["passed"].get<bool>() ? "PASS " : "FAIL ") << ch["name"].get<std::string>() << '\n';
  return ok ? kOk : kCheckFailed;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Parse: return kParse;
    case ErrorKind::Validation: return kValidation;
    case ErrorKind::Precondition: return kPrecondition;
    case ErrorKind::Numerical: return kNumerical;
    case ErrorKind::Convergence: return kConvergence;
  }
  return kNumerical;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frequency-domain analysis and notch shaping of reset control loops", "resetfd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(RESETFD_VERSION));
  Options opt;

  struct Cmd {
    const char* name;
    const char* help;
    int (*fn)(Context&);
  };
  const Cmd cmds[] = {
      {"bode", "open-loop harmonic responses L_n over the grid", cmd_bode},
      {"sens", "closed-loop harmonic sensitivities S^n (reference and disturbance)", cmd_sens},
      {"sigma2", "robustness factor sigma2 over the grid", cmd_sigma2},
      {"psi", "filter budget Psi for a given sigma2_max", cmd_psi},
      {"design-notch", "search notch parameters meeting the Psi bound", cmd_design_notch},
      {"simulate", "time-domain runs, harmonics and CPSD", cmd_simulate},
      {"validate", "oracle checks on the scenario", cmd_validate},
  };
  for (const auto& cmd : cmds) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--scenario", opt.scenario, "scenario file (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory (default: scenario 'outputs', $RESETFD_OUT, or .)");
    sub->add_option("--n-max", opt.n_max, "highest harmonic order (odd)");
    sub->add_option("--ts", opt.ts, "sample period in seconds");
    sub->add_option("--sigma2-max", opt.sigma2_max, "target bound on sigma2");
    sub->add_option("--with-filter", opt.with_filter, "shaping fragment written by design-notch")
        ->check(CLI::ExistingFile);
    sub->add_option("--grid", opt.grid, "frequency grid override lo_hz,hi_hz,points");
    sub->add_option("--seed", opt.seed, "seed of the randomized checks");
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << RESETFD_VERSION << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kParse;
  }

  for (const auto& cmd : cmds) {
    if (!app.got_subcommand(cmd.name)) continue;
    try {
      Context c = prepare(opt, cmd.name, out, err);
      return cmd.fn(c);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
      err << "error: " << e.what() << '\n';
      return kPrecondition;
    }
  }
  return kParse;
}

}  // namespace resetfd::app
