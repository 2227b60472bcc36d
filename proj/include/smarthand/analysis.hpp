#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smarthand/calib.hpp"
#include "smarthand/frames.hpp"

namespace smarthand {

using AverageFrame = std::array<double, kTaxels>;

struct DegradationReport {
  /// session id -> mean contact-frame signal relative to the first session.
  std::map<int, double> relative_response;
  /// session id -> absolute mean signal above baseline (counts).
  std::map<int, double> mean_signal;

  std::string to_json() const;
};

/// For every session: mean of (count - baseline) over all taxels of all
/// contact frames, divided by the same quantity for the lowest session id.
/// Throws InvalidArgument when a session has no contact frames.
DegradationReport relative_mean_response(const Dataset& dataset, const ThresholdMap& thresholds,
                                         std::uint16_t baseline);

/// Elementwise mean of the class's contact frames in one session.
AverageFrame class_average_frame(const Dataset& dataset, const ThresholdMap& thresholds,
                                 int class_id, int session);

inline constexpr int kSlipWindow = 5;
inline constexpr double kSlipSpeedThreshold = 0.5;  ///< px/frame

struct SlipSample {
  int frame = 0;
  bool contact = false;
  double x = 0.0;  ///< column
  double y = 0.0;  ///< row, increasing downwards
  double mass = 0.0;
};

struct SlipReport {
  std::vector<SlipSample> track;
  bool defined = false;  ///< at least one full window of contact frames
  double vx = 0.0, vy = 0.0;  ///< px/frame, median over windows
  double speed = 0.0;
  double direction_deg = 0.0;  ///< atan2(vy, vx) in image coordinates
  bool slipping = false;

  std::string to_json() const;
  std::string track_csv() const;
};

/// Pressure-weighted centroid over signal above threshold per frame, then a
/// least-squares velocity over every window of consecutive contact frames.
/// The report is undefined (not an error) without a full contact window.
SlipReport detect_slip(std::span<const TactileFrame> frames, const ThresholdMap& thresholds,
                       int window = kSlipWindow);

/// Writes an average frame as CSV (32 rows) and a 16-bit PGM of the rounded
/// counts (maxval 4095).
void write_average_frame(const AverageFrame& frame, const std::filesystem::path& csv,
                         const std::filesystem::path& pgm);

}  // namespace smarthand
