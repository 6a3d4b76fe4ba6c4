#include "resetfd/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <nlohmann/json.hpp>
#include <numbers>
#include <set>
#include <sstream>

#include "resetfd/case_study.hpp"
#include "resetfd/error.hpp"

namespace resetfd {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Cursor into the document that remembers where it is for diagnostics.
class Node {
 public:
  Node(const json& j, std::string path, const std::string& origin) : j_(j), path_(std::move(path)), origin_(origin) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError(origin_ + ": " + (path_.empty() ? "/" : path_) + ": " + what);
  }

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

  Node operator[](const char* key) const {
    if (!j_.is_object()) fail("expected an object");
    if (!j_.contains(key)) fail(std::string("missing key \"") + key + "\"");
    return Node(j_.at(key), path_ + "/" + key, origin_);
  }

  Node at(std::size_t i) const { return Node(j_.at(i), path_ + "/" + std::to_string(i), origin_); }
  std::size_t size() const { return j_.size(); }

  void object(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) fail("expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j_.items())
      if (!ok.count(k)) fail("unknown key \"" + k + "\"");
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }
  double positive() const {
    const double v = number();
    if (!(v > 0.0)) fail("must be positive");
    return v;
  }
  int integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<int>();
  }
  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }
  std::vector<double> numbers() const {
    if (!j_.is_array()) fail("expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
    return out;
  }

 private:
  const json& j_;
  std::string path_;
  const std::string& origin_;
};

// Re-raise library validation errors with the location attached.
template <class F>
auto located(const Node& n, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    n.fail(e.what());
  }
}

RationalTF parse_tf(const Node& n);

case_study::PidHz parse_pid_hz(const Node& n) {
  n.object({"kp", "f_i_hz", "f_d_hz", "f_t_hz", "f_lf_hz"});
  return {n["kp"].positive(), n["f_i_hz"].positive(), n["f_d_hz"].positive(), n["f_t_hz"].positive(),
          n["f_lf_hz"].positive()};
}

NotchParams parse_notch(const Node& n) {
  n.object({"f_n_hz", "q1", "q2"});
  return {kTwoPi * n["f_n_hz"].positive(), n["q1"].positive(), n["q2"].positive()};
}

RationalTF parse_tf(const Node& n) {
  if (!n.raw().is_object()) n.fail("expected a transfer function object");
  if (n.has("num") || n.has("den")) {
    n.object({"num", "den"});
    const auto num = n["num"].numbers();
    const auto den = n["den"].numbers();
    return located(n, [&] { return RationalTF(num, den); });
  }
  if (n.has("gain")) {
    n.object({"gain"});
    return RationalTF::gain(n["gain"].number());
  }
  if (n.has("pid")) {
    n.object({"pid"});
    const auto p = parse_pid_hz(n["pid"]);
    return located(n, [&] { return case_study::pid_from_hz(p); });
  }
  if (n.has("notch")) {
    n.object({"notch"});
    const auto p = parse_notch(n["notch"]);
    return notch(p);
  }
  if (n.has("lead_lag")) {
    n.object({"lead_lag"});
    const Node ll = n["lead_lag"];
    ll.object({"f_l_hz", "f_f_hz"});
    const double wl = kTwoPi * ll["f_l_hz"].positive(), wf = kTwoPi * ll["f_f_hz"].positive();
    return lead_lag(wl, wf);
  }
  if (n.has("series")) {
    n.object({"series"});
    const Node parts = n["series"];
    if (!parts.raw().is_array() || parts.size() == 0) parts.fail("expected a nonempty array");
    RationalTF out;
    for (std::size_t i = 0; i < parts.size(); ++i) out = series(out, parse_tf(parts.at(i)));
    return out;
  }
  n.fail("transfer function needs one of num/den, gain, pid, notch, lead_lag, series");
}

Eigen::MatrixXd parse_matrix(const Node& n) {
  if (!n.raw().is_array()) n.fail("expected an array of rows");
  const std::size_t rows = n.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row = n.at(i).numbers();
    if (row.size() != rows) n.at(i).fail("A must be square");
    for (std::size_t j = 0; j < rows; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  return m;
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ResetElement parse_element(const Node& n) {
  if (n.has("feedthrough")) {
    n.object({"feedthrough"});
    return ResetElement::feedthrough(n["feedthrough"].number());
  }
  n.object({"A", "B", "C", "D", "rho"});
  const Eigen::MatrixXd a = parse_matrix(n["A"]);
  const Eigen::VectorXd b = to_vec(n["B"].numbers());
  const Eigen::RowVectorXd c = to_vec(n["C"].numbers()).transpose();
  const double d = n["D"].number();
  const Eigen::VectorXd rho = to_vec(n["rho"].numbers());
  return located(n, [&] { return ResetElement(a, b, c, d, rho); });
}

LoopConfig parse_controller(const Node& n, const RationalTF& plant) {
  n.object({"pid", "cglp"});
  const auto p = parse_pid_hz(n["pid"]);
  if (!n.has("cglp")) return located(n, [&] { return case_study::linear_loop(plant, p); });
  const Node c = n["cglp"];
  c.object({"f_l_hz", "f_f_hz", "a_rho"});
  const case_study::CgLpHz cg{c["f_l_hz"].positive(), c["f_f_hz"].positive(), c["a_rho"].number()};
  return located(c, [&] { return case_study::reset_loop(plant, p, cg); });
}

LoopConfig parse_loop(const Node& n, const RationalTF& plant) {
  n.object({"c_pre", "c_par", "c_pos", "element"});
  LoopConfig cfg;
  cfg.plant = plant;
  if (n.has("c_pre")) cfg.c_pre = parse_tf(n["c_pre"]);
  if (n.has("c_par")) cfg.c_par = parse_tf(n["c_par"]);
  if (n.has("c_pos")) cfg.c_pos = parse_tf(n["c_pos"]);
  if (n.has("element")) cfg.element = parse_element(n["element"]);
  return cfg;
}

ShapingPair parse_shaping_node(const Node& n) {
  if (n.has("notch")) {
    n.object({"notch"});
    return ShapingPair::from_filter(notch(parse_notch(n["notch"])));
  }
  n.object({"f", "f_inv"});
  const RationalTF f = parse_tf(n["f"]);
  if (!n.has("f_inv")) return located(n, [&] { return ShapingPair::from_filter(f); });
  return ShapingPair{f, parse_tf(n["f_inv"])};
}

json parse_json(std::string_view text, const std::string& origin) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // byte offset -> line:column
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << origin << ":" << line << ":" << col << ": syntax error";
    const std::string msg = e.what();
    const auto cut = msg.find("; ");
    if (cut != std::string::npos) os << ": " << msg.substr(cut + 2);
    throw ParseError(os.str());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json tf_json(const RationalTF& tf) { return json{{"num", tf.num()}, {"den", tf.den()}}; }

}  // namespace

Scenario parse_scenario(std::string_view text, const std::string& origin) {
  const json doc = parse_json(text, origin);
  const Node root(doc, "", origin);
  root.object({"name", "description", "plant", "controller", "loop", "shaping", "grid", "n_max", "sigma2_max",
               "simulation", "notch_search", "outputs"});

  Scenario sc;
  if (root.has("name")) sc.name = root["name"].string();
  const RationalTF plant = root.has("plant") ? parse_tf(root["plant"]) : case_study::surrogate_plant();

  if (root.has("controller") == root.has("loop")) root.fail("exactly one of \"controller\" or \"loop\" is required");
  sc.loop = root.has("controller") ? parse_controller(root["controller"], plant) : parse_loop(root["loop"], plant);
  if (root.has("shaping")) sc.loop.shaping = parse_shaping_node(root["shaping"]);

  if (root.has("grid")) {
    const Node g = root["grid"];
    g.object({"lo_hz", "hi_hz", "points"});
    const double lo = g["lo_hz"].positive(), hi = g["hi_hz"].positive();
    const int pts = g["points"].integer();
    if (pts < 1) g["points"].fail("must be at least 1");
    sc.grid = located(g, [&] { return FrequencyGrid::log_spaced(kTwoPi * lo, kTwoPi * hi, static_cast<std::size_t>(pts)); });
  }
  if (root.has("n_max")) {
    sc.n_max = root["n_max"].integer();
    if (sc.n_max < 1 || sc.n_max % 2 == 0) root["n_max"].fail("must be a positive odd integer");
  }
  if (root.has("sigma2_max")) {
    sc.sigma2_max = root["sigma2_max"].number();
    if (*sc.sigma2_max < 0.0) root["sigma2_max"].fail("must be nonnegative");
  }
  if (root.has("simulation")) {
    const Node s = root["simulation"];
    s.object({"ts", "amplitude", "frequencies_hz", "channel", "cpsd_periods"});
    if (s.has("ts")) sc.simulation.ts = s["ts"].positive();
    if (s.has("amplitude")) sc.simulation.amplitude = s["amplitude"].positive();
    if (s.has("frequencies_hz")) {
      sc.simulation.frequencies_hz = s["frequencies_hz"].numbers();
      for (std::size_t i = 0; i < sc.simulation.frequencies_hz.size(); ++i)
        if (!(sc.simulation.frequencies_hz[i] > 0.0)) s["frequencies_hz"].at(i).fail("must be positive");
    }
    if (s.has("channel")) {
      const std::string ch = s["channel"].string();
      if (ch == "reference")
        sc.simulation.channel = InputChannel::Reference;
      else if (ch == "disturbance")
        sc.simulation.channel = InputChannel::Disturbance;
      else
        s["channel"].fail("must be \"reference\" or \"disturbance\"");
    }
    if (s.has("cpsd_periods")) {
      sc.simulation.cpsd_periods = s["cpsd_periods"].integer();
      if (sc.simulation.cpsd_periods < 1) s["cpsd_periods"].fail("must be at least 1");
    }
  }
  if (root.has("notch_search")) {
    const Node b = root["notch_search"];
    b.object({"f_lo_hz", "f_hi_hz", "q_lo", "q_hi"});
    NotchSearchBox box;
    box.omega_lo = kTwoPi * b["f_lo_hz"].positive();
    box.omega_hi = kTwoPi * b["f_hi_hz"].positive();
    if (b.has("q_lo")) box.q_lo = b["q_lo"].positive();
    if (b.has("q_hi")) box.q_hi = b["q_hi"].positive();
    if (box.omega_hi < box.omega_lo || box.q_hi < box.q_lo) b.fail("bounds must be ordered");
    sc.notch_box = box;
  }
  if (root.has("outputs")) sc.outputs = root["outputs"].string();

  // referential completeness: build the analyzer once so the reset convergence condition and
  // loop-level problems surface at load time
  try {
    LoopAnalyzer probe(sc.loop);
  } catch (const PreconditionError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) { return parse_scenario(read_file(path), path.string()); }

ShapingPair parse_shaping(std::string_view text, const std::string& origin) {
  const json doc = parse_json(text, origin);
  const Node root(doc, "", origin);
  return parse_shaping_node(root["shaping"]);
}

ShapingPair load_shaping(const std::filesystem::path& path) { return parse_shaping(read_file(path), path.string()); }

std::string shaping_fragment(const NotchParams& p, bool feasible, double min_margin) {
  const RationalTF f = notch(p);
  json doc;
  doc["notch"] = {{"f_n_hz", p.omega_n / kTwoPi}, {"omega_n_rad_s", p.omega_n}, {"q1", p.q1}, {"q2", p.q2}};
  doc["shaping"] = {{"f", tf_json(f)}, {"f_inv", tf_json(invert(f))}};
  doc["feasible"] = feasible;
  doc["min_margin"] = std::isfinite(min_margin) ? json(min_margin) : json(nullptr);
  return doc.dump(2) + "\n";
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
  return buf;
}

}  // namespace resetfd
