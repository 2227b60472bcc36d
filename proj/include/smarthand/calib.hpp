#pragma once

#include <cstddef>
#include <filesystem>
#include <span>

#include "smarthand/frames.hpp"

namespace smarthand {

/// Number of empty-hand frames the original calibration used. Fewer frames
/// still calibrate, but callers should warn.
inline constexpr std::size_t kRecommendedCalibrationFrames = 20'000;

/// Per-taxel upper bound of the no-contact response.
struct ThresholdMap {
  FrameValues thresholds{};

  std::uint16_t at(int row, int col) const { return thresholds[row * kGridCols + col]; }
  bool operator==(const ThresholdMap&) const = default;
};

/// Elementwise maximum over the empty-hand frames.
ThresholdMap calibrate(std::span<const TactileFrame> empty_frames);

/// True iff some taxel strictly exceeds its threshold.
bool is_contact(const TactileFrame& frame, const ThresholdMap& t);

/// Keeps the contact frames in order. IMU samples survive when they share a
/// timestamp with a kept frame.
Recording filter_contact(const Recording& recording, const ThresholdMap& t);

std::vector<std::uint8_t> encode_thresholds(const ThresholdMap& t);
ThresholdMap decode_thresholds(std::span<const std::uint8_t> bytes);
void write_thresholds(const ThresholdMap& t, const std::filesystem::path& path);
ThresholdMap read_thresholds(const std::filesystem::path& path);

}  // namespace smarthand
