#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace smarthand {

inline constexpr int kGridRows = 32;
inline constexpr int kGridCols = 32;
inline constexpr int kTaxels = kGridRows * kGridCols;
inline constexpr int kAdcMax = 4095;
inline constexpr int kNumClasses = 17;
/// Class id reserved for frames recorded without object contact.
inline constexpr int kEmptyHandClass = 16;
/// Acquisition buffer capacity of the glove front-end.
inline constexpr std::size_t kMaxFramesPerRecording = 4096;
/// 100 Hz scan cadence.
inline constexpr std::uint64_t kFramePeriodUs = 10'000;

using FrameValues = std::array<std::uint16_t, kTaxels>;

/// One complete 32x32 scan. Row = driven electrode, column = sensed electrode.
struct TactileFrame {
  FrameValues values{};
  std::uint64_t timestamp_us = 0;

  std::uint16_t at(int row, int col) const { return values[row * kGridCols + col]; }
  std::uint16_t& at(int row, int col) { return values[row * kGridCols + col]; }

  bool operator==(const TactileFrame&) const = default;
};

struct ImuSample {
  std::array<std::int16_t, 3> accel{};
  std::array<std::int16_t, 3> gyro{};
  std::uint64_t timestamp_us = 0;

  bool operator==(const ImuSample&) const = default;
};

struct Recording {
  int label = 0;
  int session_id = 1;
  std::vector<TactileFrame> frames;
  std::vector<ImuSample> imu;

  bool operator==(const Recording&) const = default;
};

struct Dataset {
  std::map<int, std::vector<Recording>> sessions;
  std::vector<std::string> class_names;

  std::size_t recording_count() const;
  std::size_t frame_count() const;

  bool operator==(const Dataset&) const = default;
};

/// The 16 object labels followed by the empty hand.
std::vector<std::string> default_class_names();

/// Throws Error(Validation) describing the first violated invariant.
void validate(const Recording& recording, std::size_t class_count);
void validate(const Dataset& dataset);

std::vector<std::uint8_t> encode_dataset(const Dataset& dataset);
/// Parses and fully validates; never returns a partially read dataset.
Dataset decode_dataset(std::span<const std::uint8_t> bytes);

void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

struct FrameStats {
  double mean = 0.0;
  int max = 0;
  int active_taxel_count = 0;
};

/// Mean over all 1024*N values; a taxel is active if it is nonzero in any frame.
FrameStats frame_stats(std::span<const TactileFrame> frames);

namespace io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Binary PGM (P5). maxval above 255 stores big-endian 16-bit samples.
void write_pgm(const std::filesystem::path& path, int width, int height,
               std::span<const std::uint16_t> pixels, int maxval);

}  // namespace io

}  // namespace smarthand
