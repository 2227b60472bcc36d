#include "smarthand/calib.hpp"

#include <algorithm>
#include <unordered_set>

#include "byte_stream.hpp"
#include "smarthand/error.hpp"

namespace smarthand {

namespace {

constexpr std::string_view kThresholdMagic{"STAGTH1\0", 8};

}  // namespace

ThresholdMap calibrate(std::span<const TactileFrame> empty_frames) {
  require(!empty_frames.empty(), ErrorKind::InvalidArgument,
          "calibration needs at least one empty-hand frame");
  ThresholdMap t;
  for (const auto& f : empty_frames)
    for (int i = 0; i < kTaxels; ++i)
      t.thresholds[i] = std::max(t.thresholds[i], f.values[i]);
  return t;
}

bool is_contact(const TactileFrame& frame, const ThresholdMap& t) {
  for (int i = 0; i < kTaxels; ++i)
    if (frame.values[i] > t.thresholds[i]) return true;
  return false;
}

Recording filter_contact(const Recording& recording, const ThresholdMap& t) {
  Recording out;
  out.label = recording.label;
  out.session_id = recording.session_id;
  std::unordered_set<std::uint64_t> kept;
  for (const auto& f : recording.frames) {
    if (is_contact(f, t)) {
      out.frames.push_back(f);
      kept.insert(f.timestamp_us);
    }
  }
  for (const auto& s : recording.imu)
    if (kept.contains(s.timestamp_us)) out.imu.push_back(s);
  return out;
}

std::vector<std::uint8_t> encode_thresholds(const ThresholdMap& t) {
  detail::ByteWriter w;
  w.raw(kThresholdMagic);
  for (auto v : t.thresholds) {
    require(v <= kAdcMax, ErrorKind::Validation, "threshold above 4095");
    w.u16(v);
  }
  return w.take();
}

ThresholdMap decode_thresholds(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic(kThresholdMagic);
  ThresholdMap t;
  for (auto& v : t.thresholds) {
    v = r.u16();
    require(v <= kAdcMax, ErrorKind::Validation, "threshold above 4095");
  }
  require(r.remaining() == 0, ErrorKind::Validation, "trailing bytes after threshold map");
  return t;
}

void write_thresholds(const ThresholdMap& t, const std::filesystem::path& path) {
  io::write_file(path, encode_thresholds(t));
}

ThresholdMap read_thresholds(const std::filesystem::path& path) {
  return decode_thresholds(io::read_file(path));
}

}  // namespace smarthand
