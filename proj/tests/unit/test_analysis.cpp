#include <nlohmann/json.hpp>

#include <fstream>
#include <numbers>
#include <sstream>

#include "helpers.hpp"
#include "smarthand/analysis.hpp"
#include "smarthand/sensorsim.hpp"

using namespace smarthand;
using testutil::error_kind;

namespace {

constexpr std::uint16_t kBase = 1489;

ThresholdMap flat_thresholds(std::uint16_t t) {
  ThresholdMap m;
  m.thresholds.fill(t);
  return m;
}

TactileFrame signal_frame(int amplitude, std::uint64_t ts = 0) {
  TactileFrame f;
  f.values.fill(kBase);
  for (int r = 8; r < 14; ++r)
    for (int c = 10; c < 20; ++c) f.values[r * 32 + c] = static_cast<std::uint16_t>(kBase + amplitude);
  f.timestamp_us = ts;
  return f;
}

Dataset sessions_with(std::vector<std::vector<TactileFrame>> per_session, int label = 3) {
  Dataset ds;
  ds.class_names = default_class_names();
  int s = 1;
  for (auto& frames : per_session) {
    Recording r;
    r.label = label;
    r.session_id = s;
    r.frames = std::move(frames);
    ds.sessions[s++].push_back(std::move(r));
  }
  return ds;
}

// Noise-free slide on a fully populated grid.
std::vector<TactileFrame> slide_frames(SlideScene scene, int frames, std::uint64_t seed = 1) {
  ReadoutConfig cfg;
  cfg.noise_sigma = 0;
  const auto rec = simulate_recording(generate_scene(scene, frames, seed), SensorGrid::square(), cfg,
                                      ForceLaw{}, {kEmptyHandClass, 1, 1.0, false, seed});
  return rec.frames;
}

ThresholdMap quiet_thresholds() {
  ReadoutConfig cfg;
  cfg.noise_sigma = 0;
  const auto f = scan_frame(SensorGrid::square(), cfg, 0);
  return calibrate(std::span(&f, 1));
}

TactileFrame rotate90(const TactileFrame& f) {
  TactileFrame out = f;
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) out.values[c * 32 + (31 - r)] = f.values[r * 32 + c];
  return out;
}

double angle_diff(double a, double b) {
  double d = std::fmod(a - b, 360.0);
  if (d > 180) d -= 360;
  if (d < -180) d += 360;
  return std::abs(d);
}

}  // namespace

TEST_CASE("relative mean response") {
  const auto t = flat_thresholds(1600);
  SUBCASE("identical sessions") {
    const auto ds = sessions_with({{signal_frame(400), signal_frame(600)},
                                   {signal_frame(400), signal_frame(600)}});
    const auto r = relative_mean_response(ds, t, kBase);
    CHECK(r.relative_response.at(1) == 1.0);
    CHECK(r.relative_response.at(2) == 1.0);
  }
  SUBCASE("halved signal") {
    const auto ds = sessions_with({{signal_frame(800), signal_frame(600)},
                                   {signal_frame(400), signal_frame(300)}});
    const auto r = relative_mean_response(ds, t, kBase);
    CHECK(std::abs(r.relative_response.at(2) - 0.5) < 1e-9);
    CHECK(r.mean_signal.at(1) == doctest::Approx(700.0 * 60 / 1024));
  }
  SUBCASE("frame order does not matter") {
    std::mt19937_64 rng(3);
    std::vector<TactileFrame> a;
    for (int i = 0; i < 20; ++i) a.push_back(signal_frame(200 + int(rng() % 900)));
    auto b = a;
    std::shuffle(b.begin(), b.end(), rng);
    const auto ra = relative_mean_response(sessions_with({a, a}), t, kBase);
    const auto rb = relative_mean_response(sessions_with({a, b}), t, kBase);
    CHECK(ra.relative_response.at(2) == rb.relative_response.at(2));
  }
  SUBCASE("non-contact frames are ignored") {
    const auto ds = sessions_with({{signal_frame(400), signal_frame(0)}, {signal_frame(400)}});
    CHECK(relative_mean_response(ds, t, kBase).relative_response.at(2) == 1.0);
  }
  SUBCASE("session without contact") {
    const auto ds = sessions_with({{signal_frame(400)}, {signal_frame(0)}});
    CHECK(error_kind([&] { relative_mean_response(ds, t, kBase); }) == ErrorKind::InvalidArgument);
  }
  SUBCASE("json") {
    const auto ds = sessions_with({{signal_frame(400)}, {signal_frame(200)}});
    const auto j = nlohmann::json::parse(relative_mean_response(ds, t, kBase).to_json());
    CHECK(j["sessions"].size() == 2);
    CHECK(j["sessions"][1]["relative_response"].get<double>() == doctest::Approx(0.5));
  }
}

TEST_CASE("simulated degradation is recovered") {
  SimulationConfig sim;
  sim.classes = {0, 7, 13};
  sim.seconds = 2.0;
  sim.calibration_frames = 2000;
  sim.with_imu = false;
  const auto ds = simulate_dataset(sim, 21);
  const auto cal = simulate_calibration_frames(sim, 21);
  std::vector<TactileFrame> empty;
  for (const auto& [s, recs] : cal.sessions)
    for (const auto& r : recs) empty.insert(empty.end(), r.frames.begin(), r.frames.end());
  const auto t = calibrate(empty);
  const auto r = relative_mean_response(ds, t, adc_baseline(sim.readout));
  CHECK(r.relative_response.at(1) == 1.0);
  for (int s = 2; s <= 5; ++s) {
    CAPTURE(s);
    CHECK(std::abs(r.relative_response.at(s) - sim.degradation[s - 1]) <=
          0.02 * sim.degradation[s - 1]);
  }
}

TEST_CASE("class average frames") {
  const auto t = flat_thresholds(1600);
  SUBCASE("single frame") {
    const auto f = signal_frame(321);
    const auto avg = class_average_frame(sessions_with({{f}}), t, 3, 1);
    for (int i = 0; i < kTaxels; ++i) CHECK(avg[i] == f.values[i]);
  }
  SUBCASE("midpoint of two frames") {
    const auto a = signal_frame(300), b = signal_frame(501);
    const auto avg = class_average_frame(sessions_with({{a, b}}), t, 3, 1);
    for (int i = 0; i < kTaxels; ++i) CHECK(avg[i] == (a.values[i] + b.values[i]) / 2.0);
  }
  SUBCASE("scaling the signal scales the average") {
    std::vector<TactileFrame> one, two;
    for (int k = 1; k <= 5; ++k) {
      one.push_back(signal_frame(100 * k));
      two.push_back(signal_frame(200 * k));
    }
    const auto low = flat_thresholds(1500);
    const auto a = class_average_frame(sessions_with({one}), low, 3, 1);
    const auto b = class_average_frame(sessions_with({two}), low, 3, 1);
    for (int i = 0; i < kTaxels; ++i) CHECK(b[i] - kBase == doctest::Approx(2 * (a[i] - kBase)));
  }
  SUBCASE("errors") {
    const auto ds = sessions_with({{signal_frame(300)}});
    CHECK(error_kind([&] { class_average_frame(ds, t, 4, 1); }) == ErrorKind::InvalidArgument);
    CHECK(error_kind([&] { class_average_frame(ds, t, 3, 2); }) == ErrorKind::InvalidArgument);
    CHECK(error_kind([&] { class_average_frame(ds, t, 17, 1); }) == ErrorKind::InvalidArgument);
    const auto flat = sessions_with({{signal_frame(0)}});
    CHECK(error_kind([&] { class_average_frame(flat, t, 3, 1); }) == ErrorKind::InvalidArgument);
  }
  SUBCASE("class 13 across degradation sessions") {
    SimulationConfig sim;
    sim.classes = {13};
    sim.seconds = 3.0;
    sim.with_imu = false;
    sim.degradation = {1.0, 0.74, 0.69, 0.58, 0.45};
    const auto ds = simulate_dataset(sim, 13);
    ReadoutConfig quiet = sim.readout;
    quiet.noise_sigma = 0;
    auto grid = SensorGrid::hand();
    ThresholdMap th;
    th.thresholds = scan_frame(grid, quiet, 0).values;
    for (auto& v : th.thresholds) v = static_cast<std::uint16_t>(v + 8);  // above 2 mV noise
    const double base = adc_baseline(sim.readout);
    auto mean_signal = [&](int s) {
      const auto avg = class_average_frame(ds, th, 13, s);
      double m = 0;
      for (double v : avg) m += v - base;
      return m / kTaxels;
    };
    const double ref = mean_signal(1);
    for (int s = 2; s <= 5; ++s) {
      CAPTURE(s);
      CHECK(std::abs(mean_signal(s) / ref - sim.degradation[s - 1]) <= 0.05 * sim.degradation[s - 1]);
    }
  }
  SUBCASE("csv and pgm output") {
    AverageFrame f{};
    for (int i = 0; i < kTaxels; ++i) f[i] = i * 0.5;
    testutil::TempDir dir("avg");
    write_average_frame(f, dir / "a.csv", dir / "a.pgm");
    std::ifstream csv(dir / "a.csv");
    int lines = 0;
    for (std::string l; std::getline(csv, l);) lines += !l.empty();
    CHECK(lines == 32);
    std::ifstream pgm(dir / "a.pgm", std::ios::binary);
    std::string magic;
    int w, h, maxv;
    pgm >> magic >> w >> h >> maxv;
    CHECK(magic == "P5");
    CHECK(w == 32);
    CHECK(h == 32);
    CHECK(maxv == 4095);
    pgm.get();
    std::vector<unsigned char> px(2 * kTaxels);
    pgm.read(reinterpret_cast<char*>(px.data()), px.size());
    CHECK(pgm.gcount() == 2 * kTaxels);
    CHECK(px[2 * 1023] * 256 + px[2 * 1023 + 1] == 512);  // 511.5 rounds up
  }
}

TEST_CASE("slip detection") {
  const auto t = quiet_thresholds();
  SUBCASE("static press") {
    ReadoutConfig cfg;
    cfg.noise_sigma = 0;
    const auto rec = simulate_recording(generate_scene(PressScene{5}, 40, 2), SensorGrid::square(),
                                        cfg, ForceLaw{}, {5, 1, 1.0, false, 2});
    const auto r = detect_slip(rec.frames, t);
    CHECK(r.defined);
    CHECK(r.speed < 0.05);
    CHECK_FALSE(r.slipping);
  }
  SUBCASE("point slide at 2 px/frame") {
    for (auto [vx, vy] : {std::pair{0.0, 2.0}, {2.0, 0.0}, {-1.2, 1.6}, {1.0, -1.0}}) {
      const auto frames = slide_frames(SlideScene{SlideProfile::Point, vx, vy, {}, {}}, 12);
      const auto r = detect_slip(frames, t);
      const double truth = std::hypot(vx, vy);
      CAPTURE(vx);
      CAPTURE(vy);
      CHECK(r.defined);
      CHECK(r.slipping);
      CHECK(std::abs(r.speed - truth) <= 0.1 * truth);
      CHECK(angle_diff(r.direction_deg, std::atan2(vy, vx) * 180 / std::numbers::pi) <= 15);
    }
  }
  SUBCASE("stripe sliding along its axis looks static") {
    const auto frames = slide_frames(SlideScene{SlideProfile::Stripe, 0.0, 2.0, {}, {}}, 12);
    const auto r = detect_slip(frames, t);
    CHECK(r.defined);
    CHECK_FALSE(r.slipping);
    CHECK(r.speed < 0.05);
  }
  SUBCASE("90 degree rotation rotates the direction") {
    const auto frames = slide_frames(SlideScene{SlideProfile::Point, 1.5, 0.8, {}, {}}, 12);
    std::vector<TactileFrame> turned;
    for (const auto& f : frames) turned.push_back(rotate90(f));
    ThresholdMap tt;
    TactileFrame tf;
    tf.values = t.thresholds;
    tt.thresholds = rotate90(tf).values;
    const auto a = detect_slip(frames, t), b = detect_slip(turned, tt);
    CHECK(angle_diff(b.direction_deg, a.direction_deg + 90) < 1e-6);
    CHECK(b.speed == doctest::Approx(a.speed).epsilon(1e-9));
  }
  SUBCASE("too few contact frames is undefined, not an error") {
    auto frames = slide_frames(SlideScene{SlideProfile::Point, 0.0, 2.0, {}, {}}, 12);
    const auto blank = scan_frame(SensorGrid::square(), ReadoutConfig{.noise_sigma = 0}, 0);
    for (std::size_t i = 0; i < frames.size(); i += 4) frames[i].values = blank.values;
    const auto r = detect_slip(frames, t);
    CHECK_FALSE(r.defined);
    CHECK_FALSE(r.slipping);
    CHECK(r.track.size() == 12);
    CHECK_FALSE(r.track[0].contact);
    CHECK(r.track[1].contact);
    const std::vector<TactileFrame> empty(10, blank);
    CHECK_FALSE(detect_slip(empty, t).defined);
    // A sequence shorter than the window violates the precondition.
    CHECK(error_kind([&] { detect_slip(std::span(frames).first(4), t); }) ==
          ErrorKind::InvalidArgument);
  }
  SUBCASE("window argument") {
    const auto frames = slide_frames(SlideScene{SlideProfile::Point, 0.0, 2.0, {}, {}}, 12);
    CHECK(detect_slip(frames, t, 3).slipping);
    CHECK(error_kind([&] { detect_slip(frames, t, 1); }) == ErrorKind::InvalidArgument);
  }
  SUBCASE("report formats") {
    const auto frames = slide_frames(SlideScene{SlideProfile::Point, 0.0, 2.0, {}, {}}, 8);
    const auto r = detect_slip(frames, t);
    const auto j = nlohmann::json::parse(r.to_json());
    CHECK(j["classification"] == "slipping");
    CHECK(j["frames"] == 8);
    std::istringstream csv(r.track_csv());
    int lines = 0;
    for (std::string l; std::getline(csv, l);) lines += !l.empty();
    CHECK(lines == 9);
  }
}
