#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "smarthand/eval.hpp"
#include "smarthand/power.hpp"
#include "smarthand/sensorsim.hpp"

namespace smarthand {

struct SlipRun {
  SlideProfile profile = SlideProfile::Point;
  double vx = 0.0;
  double vy = 2.0;
};

/// Slide recordings written next to the dataset by `simulate`. They use a
/// fully populated 32x32 grid rather than the hand outline.
struct SlipConfig {
  int frames = 40;
  std::vector<SlipRun> runs;  ///< empty = no slip data
};

struct PowerConfig {
  PowerProfile profile;
  double duty_cycle = 0.1;
  double hours_per_day = 20.0;
  double battery_wh = 1.0;
};

/// Default artifact locations, relative to the output directory.
struct PathConfig {
  std::string dataset = "dataset.stag";
  std::string calibration = "calibration.stag";
  std::string thresholds = "thresholds.stag";
  std::string model = "model.stag";
  std::string slip = "slip.stag";
};

struct RunConfig {
  std::uint64_t seed = 0;
  SimulationConfig simulation;
  SlipConfig slip;
  EvalConfig eval;
  PowerConfig power;
  PathConfig paths;

  void validate() const;
  /// Every field, defaults included, in a fixed key order.
  std::string to_json() const;
};

/// Unknown keys, wrong types and invalid values raise Error(Config) whose
/// message starts with "line N:".
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace smarthand
