#pragma once

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "smarthand/error.hpp"
#include "smarthand/frames.hpp"

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("smarthand_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline smarthand::TactileFrame random_frame(std::mt19937_64& rng, std::uint64_t ts = 0) {
  std::uniform_int_distribution<int> v(0, smarthand::kAdcMax);
  smarthand::TactileFrame f;
  for (auto& x : f.values) x = static_cast<std::uint16_t>(v(rng));
  f.timestamp_us = ts;
  return f;
}

inline smarthand::Dataset random_dataset(std::uint64_t seed, int sessions, int classes,
                                         int frames, bool imu) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> i16(-32768, 32767);
  smarthand::Dataset ds;
  ds.class_names = smarthand::default_class_names();
  for (int s = 1; s <= sessions; ++s)
    for (int c = 0; c < classes; ++c) {
      smarthand::Recording r;
      r.label = c;
      r.session_id = s;
      for (int t = 0; t < frames; ++t) {
        r.frames.push_back(random_frame(rng, static_cast<std::uint64_t>(t) * 10'000));
        if (imu) {
          smarthand::ImuSample m;
          for (auto& a : m.accel) a = static_cast<std::int16_t>(i16(rng));
          for (auto& g : m.gyro) g = static_cast<std::int16_t>(i16(rng));
          m.timestamp_us = static_cast<std::uint64_t>(t) * 10'000;
          r.imu.push_back(m);
        }
      }
      ds.sessions[s].push_back(std::move(r));
    }
  return ds;
}

/// Runs f and returns the ErrorKind it threw; fails the test if nothing was thrown.
template <class F>
smarthand::ErrorKind error_kind(F&& f) {
  try {
    f();
  } catch (const smarthand::Error& e) {
    return e.kind();
  }
  FAIL("expected smarthand::Error");
  return smarthand::ErrorKind::Io;
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace testutil
