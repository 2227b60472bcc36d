#include <algorithm>
#include <cmath>
#include <random>

#include "smarthand/error.hpp"
#include "smarthand/sensorsim.hpp"

namespace smarthand {

void ForceLaw::validate() const {
  require(r_min > 0 && std::isfinite(r_max) && r_min < r_max, ErrorKind::InvalidArgument,
          "force law needs 0 < R_min < R_max < inf");
  require(f_half > 0, ErrorKind::InvalidArgument, "force law needs F_half > 0");
}

double force_to_resistance(double force_n, const ForceLaw& law) {
  require(force_n >= 0.0, ErrorKind::InvalidArgument,
          "negative force " + std::to_string(force_n) + " N");
  return law.r_min + (law.r_max - law.r_min) / (1.0 + force_n / law.f_half);
}

void ReadoutConfig::validate() const {
  require(v_ref > 0 && v_ref < adc_ref, ErrorKind::InvalidArgument,
          "readout needs 0 < V_ref < adc_ref");
  require(r_fb > 0, ErrorKind::InvalidArgument, "readout needs R_FB > 0");
  require(adc_bits == 10 || adc_bits == 12, ErrorKind::InvalidArgument,
          "ADC resolution must be 10 or 12 bits");
  require(noise_sigma >= 0, ErrorKind::InvalidArgument, "noise sigma must be >= 0");
  require(scan_rate > 0 && scan_rate <= 1e6, ErrorKind::InvalidArgument,
          "scan rate must be in (0, 1e6] Hz");
}

std::uint64_t ReadoutConfig::frame_period_us() const {
  return static_cast<std::uint64_t>(std::llround(1e6 / scan_rate));
}

namespace {

double unclamped_output(double r_fsr, const ReadoutConfig& cfg) {
  return cfg.v_ref * (cfg.r_fb + r_fsr) / r_fsr;
}

}  // namespace

double isolation_readout_voltage(double r_fsr, const ReadoutConfig& cfg) {
  require(r_fsr > 0, ErrorKind::InvalidArgument, "R_FSR must be positive");
  return std::clamp(unclamped_output(r_fsr, cfg), 0.0, cfg.adc_ref);
}

std::uint16_t adc_quantize(double volts, const ReadoutConfig& cfg) {
  const double levels = static_cast<double>((1 << cfg.adc_bits) - 1);
  const double v = std::clamp(volts, 0.0, cfg.adc_ref);
  return static_cast<std::uint16_t>(std::floor(v / cfg.adc_ref * levels + 0.5));
}

std::uint16_t adc_baseline(const ReadoutConfig& cfg) { return adc_quantize(cfg.v_ref, cfg); }

// ---------------------------------------------------------------------------

const std::array<std::uint8_t, kTaxels>& hand_mask() {
  static const auto mask = [] {
    std::array<std::uint8_t, kTaxels> m{};
    auto fill = [&](int r0, int r1, int c0, int c1) {
      for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) m[r * kGridCols + c] = 1;
    };
    fill(15, 31, 7, 24);  // palm
    fill(4, 14, 7, 10);   // index
    fill(1, 14, 12, 15);  // middle
    fill(2, 14, 17, 20);  // ring
    fill(6, 14, 22, 24);  // little
    fill(19, 29, 1, 6);   // thumb
    for (auto [r, c] : {std::pair{19, 1}, {19, 2}, {20, 1}}) m[r * kGridCols + c] = 0;
    return m;
  }();
  return mask;
}

SensorGrid SensorGrid::hand(const ForceLaw& law) {
  SensorGrid g = square(kGridRows, kGridCols, law);
  const auto& m = hand_mask();
  g.active.assign(m.begin(), m.end());
  return g;
}

SensorGrid SensorGrid::square(int rows, int cols, const ForceLaw& law) {
  require(rows >= 1 && cols >= 1 && rows <= kGridRows && cols <= kGridCols,
          ErrorKind::InvalidArgument, "grid must be between 1x1 and 32x32");
  SensorGrid g;
  g.rows = rows;
  g.cols = cols;
  g.r_pinned = law.r_max;
  g.resistance.assign(static_cast<std::size_t>(rows) * cols, law.r_max);
  g.active.assign(static_cast<std::size_t>(rows) * cols, 1);
  return g;
}

int SensorGrid::active_count() const {
  return static_cast<int>(std::count(active.begin(), active.end(), std::uint8_t{1}));
}

void SensorGrid::apply_pressure(std::span<const double> pressure_n, const ForceLaw& law) {
  require(pressure_n.size() == resistance.size(), ErrorKind::InvalidArgument,
          "pressure map size does not match grid");
  for (std::size_t i = 0; i < resistance.size(); ++i)
    resistance[i] = active[i] ? force_to_resistance(pressure_n[i], law) : law.r_max;
}

void SensorGrid::validate() const {
  require(rows >= 1 && cols >= 1 && rows <= kGridRows && cols <= kGridCols,
          ErrorKind::Validation, "grid must be between 1x1 and 32x32");
  const auto n = static_cast<std::size_t>(rows) * cols;
  require(resistance.size() == n && active.size() == n, ErrorKind::Validation,
          "grid storage does not match its shape");
  for (double r : resistance)
    require(r > 0 && std::isfinite(r), ErrorKind::Validation,
            "crossing resistance must be positive and finite");
  require(degradation > 0 && degradation <= 1, ErrorKind::Validation,
          "degradation must lie in (0, 1]");
}

std::vector<std::uint16_t> scan_counts(const SensorGrid& grid, const ReadoutConfig& cfg,
                                       std::uint64_t seed) {
  grid.validate();
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::uint16_t> counts(grid.resistance.size());
  // Row r grounded, all other electrodes at V_ref: each column sees only
  // crossing (r, c) in its input path.
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const double r_fsr = grid.is_active(r, c) ? grid.r(r, c) : grid.r_pinned;
      const double signal = unclamped_output(r_fsr, cfg) - cfg.v_ref;
      double v = cfg.v_ref + grid.degradation * signal;
      if (cfg.noise_sigma > 0) v += cfg.noise_sigma * noise(rng);
      counts[static_cast<std::size_t>(r) * grid.cols + c] = adc_quantize(v, cfg);
    }
  }
  return counts;
}

TactileFrame scan_frame(const SensorGrid& grid, const ReadoutConfig& cfg, std::uint64_t seed) {
  require(grid.rows == kGridRows && grid.cols == kGridCols, ErrorKind::InvalidArgument,
          "scan_frame needs a 32x32 grid");
  const auto counts = scan_counts(grid, cfg, seed);
  TactileFrame f;
  std::copy(counts.begin(), counts.end(), f.values.begin());
  return f;
}

}  // namespace smarthand
