#include "smarthand/frames.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>

#include "byte_stream.hpp"
#include "smarthand/error.hpp"

namespace smarthand {

namespace {

constexpr std::string_view kDatasetMagic{"STAGDS1\0", 8};

}  // namespace

std::size_t Dataset::recording_count() const {
  std::size_t n = 0;
  for (const auto& [id, recs] : sessions) n += recs.size();
  return n;
}

std::size_t Dataset::frame_count() const {
  std::size_t n = 0;
  for (const auto& [id, recs] : sessions)
    for (const auto& r : recs) n += r.frames.size();
  return n;
}

std::vector<std::string> default_class_names() {
  return {"ball",     "battery",      "bracelet", "coin",          "empty_can",    "full_can",
          "kiwano",   "lotion",       "mug",      "pen",           "safety_glasses", "scissors",
          "spray_can", "screw_driver", "stapler", "tape",          "empty_hand"};
}

void validate(const Recording& recording, std::size_t class_count) {
  require(recording.label >= 0 && static_cast<std::size_t>(recording.label) < class_count,
          ErrorKind::Validation, "recording label " + std::to_string(recording.label) +
                                     " outside [0, " + std::to_string(class_count) + ")");
  require(recording.session_id >= 1 && recording.session_id <= 255, ErrorKind::Validation,
          "session id " + std::to_string(recording.session_id) + " outside [1, 255]");
  for (std::size_t i = 0; i < recording.frames.size(); ++i) {
    const auto& f = recording.frames[i];
    for (auto v : f.values)
      require(v <= kAdcMax, ErrorKind::Validation,
              "frame " + std::to_string(i) + " holds ADC count " + std::to_string(v) + " > 4095");
    if (i > 0)
      require(f.timestamp_us > recording.frames[i - 1].timestamp_us, ErrorKind::Validation,
              "frame timestamps not strictly increasing at frame " + std::to_string(i));
  }
}

void validate(const Dataset& dataset) {
  require(dataset.class_names.size() == static_cast<std::size_t>(kNumClasses),
          ErrorKind::Validation,
          "dataset must name exactly 17 classes, found " +
              std::to_string(dataset.class_names.size()));
  std::set<std::string> distinct(dataset.class_names.begin(), dataset.class_names.end());
  require(distinct.size() == dataset.class_names.size(), ErrorKind::Validation,
          "class names are not distinct");
  for (const auto& name : dataset.class_names)
    require(name.size() <= 0xFFFF, ErrorKind::Validation, "class name too long");
  for (const auto& [id, recs] : dataset.sessions) {
    require(!recs.empty(), ErrorKind::Validation,
            "session " + std::to_string(id) + " has no recordings");
    for (const auto& r : recs) {
      require(r.session_id == id, ErrorKind::Validation,
              "recording session id " + std::to_string(r.session_id) +
                  " filed under session " + std::to_string(id));
      validate(r, dataset.class_names.size());
    }
  }
}

std::vector<std::uint8_t> encode_dataset(const Dataset& dataset) {
  validate(dataset);
  detail::ByteWriter w;
  w.raw(kDatasetMagic);
  w.u16(static_cast<std::uint16_t>(dataset.class_names.size()));
  for (const auto& name : dataset.class_names) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name);
  }
  w.u32(static_cast<std::uint32_t>(dataset.recording_count()));
  for (const auto& [id, recs] : dataset.sessions) {
    for (const auto& r : recs) {
      w.u8(static_cast<std::uint8_t>(r.session_id));
      w.u8(static_cast<std::uint8_t>(r.label));
      w.u32(static_cast<std::uint32_t>(r.frames.size()));
      w.u32(static_cast<std::uint32_t>(r.imu.size()));
      for (const auto& f : r.frames) {
        for (auto v : f.values) w.u16(v);
        w.u64(f.timestamp_us);
      }
      for (const auto& s : r.imu) {
        for (auto a : s.accel) w.i16(a);
        for (auto g : s.gyro) w.i16(g);
        w.u64(s.timestamp_us);
      }
    }
  }
  return w.take();
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic(kDatasetMagic);
  Dataset ds;
  const auto class_count = r.u16();
  ds.class_names.reserve(class_count);
  for (std::uint16_t i = 0; i < class_count; ++i) {
    const auto len = r.u16();
    ds.class_names.push_back(r.string(len));
  }
  const auto recording_count = r.u32();
  constexpr std::size_t kFrameBytes = kTaxels * 2 + 8;
  constexpr std::size_t kImuBytes = 6 * 2 + 8;
  for (std::uint32_t i = 0; i < recording_count; ++i) {
    Recording rec;
    rec.session_id = r.u8();
    rec.label = r.u8();
    const auto frame_count = r.u32();
    const auto imu_count = r.u32();
    // Check the whole payload up front so a short file fails before allocation.
    r.need(frame_count * kFrameBytes + imu_count * kImuBytes);
    rec.frames.resize(frame_count);
    for (auto& f : rec.frames) {
      for (auto& v : f.values) {
        v = r.u16();
        require(v <= kAdcMax, ErrorKind::Validation,
                "ADC count " + std::to_string(v) + " > 4095 at byte " +
                    std::to_string(r.position() - 2));
      }
      f.timestamp_us = r.u64();
    }
    rec.imu.resize(imu_count);
    for (auto& s : rec.imu) {
      for (auto& a : s.accel) a = r.i16();
      for (auto& g : s.gyro) g = r.i16();
      s.timestamp_us = r.u64();
    }
    ds.sessions[rec.session_id].push_back(std::move(rec));
  }
  require(r.remaining() == 0, ErrorKind::Validation,
          std::to_string(r.remaining()) + " trailing bytes after last recording");
  validate(ds);
  return ds;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  io::write_file(path, encode_dataset(dataset));
}

Dataset read_dataset(const std::filesystem::path& path) {
  return decode_dataset(io::read_file(path));
}

FrameStats frame_stats(std::span<const TactileFrame> frames) {
  require(!frames.empty(), ErrorKind::InvalidArgument, "frame_stats of an empty sequence");
  FrameValues peak{};
  std::uint64_t sum = 0;
  for (const auto& f : frames) {
    for (int i = 0; i < kTaxels; ++i) {
      sum += f.values[i];
      peak[i] = std::max(peak[i], f.values[i]);
    }
  }
  FrameStats s;
  s.mean = static_cast<double>(sum) / (static_cast<double>(kTaxels) * frames.size());
  s.max = *std::max_element(peak.begin(), peak.end());
  s.active_taxel_count =
      static_cast<int>(std::count_if(peak.begin(), peak.end(), [](auto v) { return v > 0; }));
  return s;
}

namespace io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string() + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorKind::Io, "read error on " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write error on " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_pgm(const std::filesystem::path& path, int width, int height,
               std::span<const std::uint16_t> pixels, int maxval) {
  require(width > 0 && height > 0 &&
              pixels.size() == static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
          ErrorKind::InvalidArgument, "pgm: pixel count does not match dimensions");
  require(maxval >= 1 && maxval <= 65535, ErrorKind::InvalidArgument, "pgm: maxval out of range");
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n" +
                             std::to_string(maxval) + "\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (std::uint16_t p : pixels) {
    const std::uint16_t v = std::min<std::uint16_t>(p, static_cast<std::uint16_t>(maxval));
    if (maxval > 255) bytes.push_back(static_cast<std::uint8_t>(v >> 8));
    bytes.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  write_file(path, bytes);
}

}  // namespace io

}  // namespace smarthand
