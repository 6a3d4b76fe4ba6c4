#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "resetfd/cloop.hpp"
#include "resetfd/synth.hpp"

namespace resetfd {

/// Time-domain settings of a scenario.
struct SimulationSpec {
  double ts = 5e-5;
  double amplitude = 32e-6;
  std::vector<double> frequencies_hz;
  InputChannel channel = InputChannel::Reference;
  /// CPSD segment length in input periods.
  int cpsd_periods = 5;
};

/// Parsed, validated scenario. All frequencies are in rad/s once loaded.
struct Scenario {
  std::string name;
  LoopConfig loop;
  FrequencyGrid grid = FrequencyGrid::default_grid();
  int n_max = kDefaultNMax;
  std::optional<double> sigma2_max;
  SimulationSpec simulation;
  std::optional<NotchSearchBox> notch_box;
  std::string outputs;
};

/// Parses a scenario document. Syntax errors carry line and column; schema
/// errors carry the JSON pointer of the offending value.
Scenario parse_scenario(std::string_view text, const std::string& origin = "<string>");
Scenario load_scenario(const std::filesystem::path& path);

/// Reads the `shaping` fragment written by design-notch (or any document
/// with a top-level "shaping" object).
ShapingPair load_shaping(const std::filesystem::path& path);
ShapingPair parse_shaping(std::string_view text, const std::string& origin = "<string>");

/// JSON text of a shaping fragment for the given notch.
std::string shaping_fragment(const NotchParams& p, bool feasible, double min_margin);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Rendering used for every exported number: 12 significant digits, "inf"/"nan" spelled out.
std::string fmt_num(double v);

}  // namespace resetfd
