#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "smarthand/error.hpp"
#include "smarthand/sensorsim.hpp"

namespace smarthand {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

namespace {

using Shape = FootprintPrimitive::Shape;

FootprintPrimitive disk(double cx, double cy, double r, double p) {
  return {Shape::Disk, cx, cy, r, r, 0, 1, p};
}
FootprintPrimitive ellipse(double cx, double cy, double a, double b, double ang, double p) {
  return {Shape::Ellipse, cx, cy, a, b, ang, 1, p};
}
FootprintPrimitive ring(double cx, double cy, double r, double t, double p) {
  return {Shape::Ring, cx, cy, r, r, 0, t, p};
}
FootprintPrimitive bar(double cx, double cy, double half_w, double half_l, double ang, double p) {
  return {Shape::Bar, cx, cy, half_w, half_l, ang, 1, p};
}

const std::vector<std::vector<FootprintPrimitive>>& templates() {
  static const std::vector<std::vector<FootprintPrimitive>> t = {
      /* 0 ball */ {disk(0, 0, 4.0, 2.5)},
      /* 1 battery */ {bar(0, 0, 1.2, 4.5, 0, 3.5)},
      /* 2 bracelet */ {ring(0, 0, 5.0, 1.3, 1.5)},
      /* 3 coin */ {disk(0, 0, 1.7, 4.0)},
      /* 4 empty_can */ {ring(0, 0, 3.5, 1.1, 1.2)},
      /* 5 full_can */ {ring(0, 0, 3.5, 1.5, 3.0), disk(0, 0, 2.0, 0.6)},
      /* 6 kiwano */
      {ellipse(0, 0, 4.0, 3.0, 0, 1.6), disk(4.5, 0, 0.9, 2.2), disk(-4.5, 0, 0.9, 2.2),
       disk(0, 3.6, 0.9, 2.2), disk(0, -3.6, 0.9, 2.2), disk(3.2, 2.6, 0.9, 2.2),
       disk(-3.2, -2.6, 0.9, 2.2)},
      /* 7 lotion */ {ellipse(0, 0, 3.0, 6.0, 0, 2.2)},
      /* 8 mug */ {ring(-1, 0, 4.0, 1.2, 2.0), bar(5.2, 0, 0.8, 1.8, 0, 1.5)},
      /* 9 pen */ {bar(0, 0, 0.7, 8.5, 45, 3.0)},
      /* 10 safety_glasses */
      {ellipse(-4.2, 0, 2.6, 2.0, 0, 1.5), ellipse(4.2, 0, 2.6, 2.0, 0, 1.5),
       bar(0, -0.8, 0.5, 1.2, 90, 1.0)},
      /* 11 scissors */
      {ring(-2.6, 4.0, 1.9, 0.9, 2.0), ring(2.6, 4.0, 1.9, 0.9, 2.0),
       bar(-1.0, -3.0, 0.6, 4.5, -10, 2.5), bar(1.0, -3.0, 0.6, 4.5, 10, 2.5)},
      /* 12 spray_can */ {disk(0, 1.0, 3.0, 1.5), disk(0, -5.0, 1.1, 3.0)},
      /* 13 screw_driver */ {bar(0, 3.0, 1.6, 4.0, 0, 2.5), bar(0, -6.0, 0.6, 5.0, 0, 3.0)},
      /* 14 stapler */ {bar(0, 0, 2.0, 8.0, 90, 1.8), disk(-7.0, 0, 1.5, 3.0)},
      /* 15 tape */ {ring(0, 0, 4.5, 2.0, 1.6)},
  };
  return t;
}

constexpr double kDegToRad = std::numbers::pi / 180.0;

/// Pressure of one primitive at a point in the object frame, or 0 outside.
/// Interior pressure tapers by up to 30 % towards the edge.
double primitive_pressure(const FootprintPrimitive& p, double x, double y) {
  const double dx = x - p.cx, dy = y - p.cy;
  const double ca = std::cos(-p.angle_deg * kDegToRad), sa = std::sin(-p.angle_deg * kDegToRad);
  const double u = ca * dx - sa * dy, v = sa * dx + ca * dy;
  double q = 2.0;  // normalised squared distance; inside when <= 1
  switch (p.shape) {
    case Shape::Disk:
    case Shape::Ellipse:
      q = (u / p.a) * (u / p.a) + (v / p.b) * (v / p.b);
      break;
    case Shape::Ring: {
      const double d = (std::hypot(u, v) - p.a) / (0.5 * p.thickness);
      q = d * d;
      break;
    }
    case Shape::Bar:
      q = std::max((u / p.a) * (u / p.a), (v / p.b) * (v / p.b));
      break;
  }
  return q <= 1.0 ? p.pressure_n * (1.0 - 0.3 * q) : 0.0;
}

}  // namespace

const std::vector<FootprintPrimitive>& footprint_template(int class_id) {
  require(class_id >= 0 && class_id < kEmptyHandClass, ErrorKind::InvalidArgument,
          "no footprint template for class " + std::to_string(class_id));
  return templates()[class_id];
}

bool ForceScene::in_contact() const {
  return !std::holds_alternative<EmptyHandScene>(request_);
}

PressureMap ForceScene::pressure(int frame) const {
  require(frame >= 0 && frame < frames_, ErrorKind::InvalidArgument,
          "frame index " + std::to_string(frame) + " outside scene");
  PressureMap out{};
  const double t = static_cast<double>(frame);
  const double two_pi = 2.0 * std::numbers::pi;

  if (const auto* press = std::get_if<PressScene>(&request_)) {
    const auto& prims = footprint_template(press->class_id);
    const double amp = 1.0 + 0.15 * std::sin(two_pi * t / amp_period_ + amp_phase_);
    const double wob = two_pi * t / wobble_period_ + wobble_phase_;
    const double cx = kPalmCenterX + dx_ + 0.3 * std::sin(wob);
    const double cy = kPalmCenterY + dy_ + 0.3 * std::cos(wob);
    const double ca = std::cos(-rot_deg_ * kDegToRad), sa = std::sin(-rot_deg_ * kDegToRad);
    for (int r = 0; r < kGridRows; ++r) {
      for (int c = 0; c < kGridCols; ++c) {
        const double px = c - cx, py = r - cy;
        const double x = ca * px - sa * py, y = sa * px + ca * py;
        double p = 0.0;
        bool inside = false;
        for (std::size_t i = 0; i < prims.size(); ++i) {
          const double v = primitive_pressure(prims[i], x, y);
          if (v > 0) {
            inside = true;
            p += v * primitive_gain_[i];
          }
        }
        if (inside) out[r * kGridCols + c] = std::max(kContactFloorN, amp * p);
      }
    }
  } else if (const auto* slide = std::get_if<SlideScene>(&request_)) {
    const double cx = start_x_ + slide->vx * t, cy = start_y_ + slide->vy * t;
    if (slide->profile == SlideProfile::Point) {
      constexpr double kSigma = 1.0, kPeak = 4.0;
      for (int r = 0; r < kGridRows; ++r)
        for (int c = 0; c < kGridCols; ++c) {
          const double d2 = (c - cx) * (c - cx) + (r - cy) * (r - cy);
          out[r * kGridCols + c] = kPeak * std::exp(-0.5 * d2 / (kSigma * kSigma));
        }
    } else {
      // A band of infinite extent along the direction of travel.
      constexpr double kHalfWidth = 1.5, kLevel = 2.0;
      const double speed = std::hypot(slide->vx, slide->vy);
      const double ux = speed > 0 ? slide->vx / speed : 1.0;
      const double uy = speed > 0 ? slide->vy / speed : 0.0;
      for (int r = 0; r < kGridRows; ++r)
        for (int c = 0; c < kGridCols; ++c) {
          const double d = std::abs((c - cx) * uy - (r - cy) * ux);
          out[r * kGridCols + c] = d <= kHalfWidth ? kLevel : 0.0;
        }
    }
  } else {
    // Pose stress: three broad, slowly breathing lobes whose sum never
    // exceeds kEmptyHandPeakN.
    constexpr double kSigma = 4.0;
    for (int k = 0; k < 3; ++k) {
      const double amp =
          kEmptyHandPeakN / 3.0 * (0.5 + 0.5 * std::sin(two_pi * t / (amp_period_ + 37.0 * k) +
                                                        stress_phase_[k]));
      for (int r = 0; r < kGridRows; ++r)
        for (int c = 0; c < kGridCols; ++c) {
          const double d2 = (c - stress_cx_[k]) * (c - stress_cx_[k]) +
                            (r - stress_cy_[k]) * (r - stress_cy_[k]);
          out[r * kGridCols + c] += amp * std::exp(-0.5 * d2 / (kSigma * kSigma));
        }
    }
  }
  return out;
}

ForceScene generate_scene(const SceneRequest& request, int frames, std::uint64_t seed) {
  require(frames >= 1, ErrorKind::InvalidArgument, "a scene needs at least one frame");
  ForceScene s;
  s.request_ = request;
  s.frames_ = frames;
  s.seed_ = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const double two_pi = 2.0 * std::numbers::pi;

  if (const auto* press = std::get_if<PressScene>(&request)) {
    require(press->class_id >= 0 && press->class_id < kNumClasses, ErrorKind::InvalidArgument,
            "unknown class id " + std::to_string(press->class_id));
    if (press->class_id == kEmptyHandClass) return generate_scene(EmptyHandScene{}, frames, seed);
    s.dx_ = uniform(-2.0, 2.0);
    s.dy_ = uniform(-2.0, 2.0);
    s.rot_deg_ = uniform(-10.0, 10.0);
    // Grip variation redistributes pressure between parts; mean gain stays 1.
    const auto n = footprint_template(press->class_id).size();
    s.primitive_gain_.resize(n);
    double sum = 0.0;
    for (auto& g : s.primitive_gain_) sum += (g = uniform(0.85, 1.15));
    for (auto& g : s.primitive_gain_) g *= static_cast<double>(n) / sum;
    s.amp_period_ = uniform(200.0, 500.0);
    s.amp_phase_ = uniform(0.0, two_pi);
    s.wobble_period_ = uniform(120.0, 260.0);
    s.wobble_phase_ = uniform(0.0, two_pi);
  } else if (const auto* slide = std::get_if<SlideScene>(&request)) {
    const double half = 0.5 * (frames - 1);
    s.start_x_ = slide->start_x.value_or(15.5 - slide->vx * half);
    s.start_y_ = slide->start_y.value_or(15.5 - slide->vy * half);
  } else {
    s.amp_period_ = uniform(150.0, 400.0);
    for (int k = 0; k < 3; ++k) {
      s.stress_cx_[k] = uniform(6.0, 25.0);
      s.stress_cy_[k] = uniform(8.0, 30.0);
      s.stress_phase_[k] = uniform(0.0, two_pi);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace {

std::int16_t to_i16(double v) {
  return static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L));
}

/// Accelerometer at +-2 g (16384 LSB/g), gyroscope at +-250 dps (131 LSB/dps).
std::vector<ImuSample> synthesize_imu(const ForceScene& scene, std::uint64_t period_us,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool handling = scene.in_contact();
  const double tilt_x = (unit(rng) - 0.5) * (handling ? 0.17 : 0.5);
  const double tilt_y = (unit(rng) - 0.5) * (handling ? 0.17 : 0.5);
  const double sway = handling ? 0.02 : 0.35;
  const double sway_period = 150.0 + 200.0 * unit(rng);
  const double accel_noise = 40.0, gyro_noise = handling ? 15.0 : 250.0;
  std::vector<ImuSample> out(scene.frames());
  for (int t = 0; t < scene.frames(); ++t) {
    const double phase = 2.0 * std::numbers::pi * t / sway_period;
    const double ax = tilt_x + sway * std::sin(phase);
    const double ay = tilt_y + sway * std::cos(phase);
    auto& s = out[t];
    s.accel = {to_i16(16384.0 * std::sin(ax) + accel_noise * n01(rng)),
               to_i16(16384.0 * std::sin(ay) + accel_noise * n01(rng)),
               to_i16(-16384.0 * std::cos(ax) * std::cos(ay) + accel_noise * n01(rng))};
    s.gyro = {to_i16(gyro_noise * n01(rng)), to_i16(gyro_noise * n01(rng)),
              to_i16(gyro_noise * n01(rng))};
    s.timestamp_us = static_cast<std::uint64_t>(t) * period_us;
  }
  return out;
}

}  // namespace

Recording simulate_recording(const ForceScene& scene, const SensorGrid& grid,
                             const ReadoutConfig& cfg, const ForceLaw& law,
                             const AcquisitionParams& params) {
  require(scene.frames() >= 1, ErrorKind::InvalidArgument, "scene has no frames");
  require(static_cast<std::size_t>(scene.frames()) <= kMaxFramesPerRecording,
          ErrorKind::BufferLimit,
          "requested " + std::to_string(scene.frames()) +
              " frames; the acquisition buffer holds at most 4096");
  require(grid.rows == kGridRows && grid.cols == kGridCols, ErrorKind::InvalidArgument,
          "recordings need a 32x32 grid");
  require(params.degradation > 0 && params.degradation <= 1, ErrorKind::InvalidArgument,
          "degradation must lie in (0, 1]");
  cfg.validate();
  law.validate();

  SensorGrid g = grid;
  g.degradation = params.degradation;
  g.r_pinned = law.r_max;
  const auto period = cfg.frame_period_us();

  Recording rec;
  rec.label = params.label;
  rec.session_id = params.session_id;
  rec.frames.resize(scene.frames());
  for (int t = 0; t < scene.frames(); ++t) {
    const auto p = scene.pressure(t);
    g.apply_pressure(p, law);
    rec.frames[t] = scan_frame(g, cfg, derive_seed(params.seed, 1, static_cast<std::uint64_t>(t)));
    rec.frames[t].timestamp_us = static_cast<std::uint64_t>(t) * period;
  }
  if (params.with_imu) rec.imu = synthesize_imu(scene, period, derive_seed(params.seed, 2));
  return rec;
}

// ---------------------------------------------------------------------------

std::vector<int> SimulationConfig::class_list() const {
  if (!classes.empty()) return classes;
  std::vector<int> all(kNumClasses);
  for (int i = 0; i < kNumClasses; ++i) all[i] = i;
  return all;
}

int SimulationConfig::frames_per_recording() const {
  return static_cast<int>(std::llround(seconds * readout.scan_rate));
}

void SimulationConfig::validate() const {
  readout.validate();
  law.validate();
  require(sessions >= 1 && sessions <= 255, ErrorKind::Validation,
          "sessions must be in [1, 255]");
  require(static_cast<int>(degradation.size()) >= sessions, ErrorKind::Validation,
          "need one degradation factor per session");
  for (double d : degradation)
    require(d > 0 && d <= 1, ErrorKind::Validation, "degradation factors must lie in (0, 1]");
  std::set<int> seen;
  for (int c : classes) {
    require(c >= 0 && c < kNumClasses, ErrorKind::Validation,
            "unknown class id " + std::to_string(c));
    require(seen.insert(c).second, ErrorKind::Validation, "duplicate class id");
  }
  const int frames = frames_per_recording();
  require(frames >= 1, ErrorKind::Validation, "recording length rounds to zero frames");
  require(static_cast<std::size_t>(frames) <= kMaxFramesPerRecording, ErrorKind::BufferLimit,
          std::to_string(frames) + " frames per recording exceed the 4096-frame buffer");
}

Dataset simulate_dataset(const SimulationConfig& config, std::uint64_t seed) {
  config.validate();
  Dataset ds;
  ds.class_names = default_class_names();
  const auto grid = SensorGrid::hand(config.law);
  const int frames = config.frames_per_recording();
  for (int s = 1; s <= config.sessions; ++s) {
    auto& recs = ds.sessions[s];
    for (int cls : config.class_list()) {
      const auto rec_seed = derive_seed(seed, 100 + s, cls);
      const SceneRequest req =
          cls == kEmptyHandClass ? SceneRequest{EmptyHandScene{}} : SceneRequest{PressScene{cls}};
      const auto scene = generate_scene(req, frames, derive_seed(rec_seed, 1));
      AcquisitionParams params;
      params.label = cls;
      params.session_id = s;
      params.degradation = config.degradation[s - 1];
      params.with_imu = config.with_imu;
      params.seed = derive_seed(rec_seed, 2);
      recs.push_back(simulate_recording(scene, grid, config.readout, config.law, params));
    }
  }
  return ds;
}

Dataset simulate_calibration_frames(const SimulationConfig& config, std::uint64_t seed) {
  config.readout.validate();
  config.law.validate();
  Dataset ds;
  ds.class_names = default_class_names();
  const auto grid = SensorGrid::hand(config.law);
  constexpr std::size_t kChunk = 4000;
  std::size_t remaining = config.calibration_frames;
  for (std::uint64_t i = 0; remaining > 0; ++i) {
    const auto n = std::min(remaining, kChunk);
    remaining -= n;
    const auto scene =
        generate_scene(EmptyHandScene{}, static_cast<int>(n), derive_seed(seed, 900, i, 1));
    AcquisitionParams params;
    params.label = kEmptyHandClass;
    params.session_id = 1;
    params.with_imu = config.with_imu;
    params.seed = derive_seed(seed, 900, i, 2);
    ds.sessions[1].push_back(simulate_recording(scene, grid, config.readout, config.law, params));
  }
  return ds;
}

}  // namespace smarthand
