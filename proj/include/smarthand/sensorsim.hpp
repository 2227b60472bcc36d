#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "smarthand/calib.hpp"
#include "smarthand/frames.hpp"
#include "smarthand/linalg.hpp"

namespace smarthand {

// ---------------------------------------------------------------------------
// Force-sensitive film and readout electronics
// ---------------------------------------------------------------------------

/// R(F) = R_min + (R_max - R_min) / (1 + F / F_half): strictly decreasing in F.
struct ForceLaw {
  double r_min = 1e3;   ///< ohms, saturated-contact asymptote
  double r_max = 1e6;   ///< ohms, unloaded crossing
  double f_half = 1.0;  ///< newtons at the midpoint resistance

  void validate() const;
};

double force_to_resistance(double force_n, const ForceLaw& law);

struct ReadoutConfig {
  double v_ref = 1.2;        ///< volts on the non-inverting input and pulled-up electrodes
  double r_fb = 100e3;       ///< ohms, feedback resistor
  double adc_ref = 3.3;      ///< volts, ADC full scale
  int adc_bits = 12;
  double noise_sigma = 0.002;  ///< volts RMS added before quantization
  double scan_rate = 100.0;    ///< frames per second

  void validate() const;
  std::uint64_t frame_period_us() const;
};

/// V_out = V_ref * (R_FB + R_FSR) / R_FSR, clamped to [0, adc_ref].
double isolation_readout_voltage(double r_fsr, const ReadoutConfig& cfg);

/// round-half-up(clamp(v, 0, adc_ref) / adc_ref * (2^bits - 1)).
std::uint16_t adc_quantize(double volts, const ReadoutConfig& cfg);

/// Zero-signal ADC level, adc_quantize(V_ref). Signal is measured above it.
std::uint16_t adc_baseline(const ReadoutConfig& cfg);

// ---------------------------------------------------------------------------
// Sensor grid
// ---------------------------------------------------------------------------

/// 32x32 hand outline with exactly 548 active crossings, row-major.
const std::array<std::uint8_t, kTaxels>& hand_mask();
inline constexpr int kHandActiveCrossings = 548;

struct SensorGrid {
  int rows = kGridRows;
  int cols = kGridCols;
  std::vector<double> resistance;   ///< ohms, row-major
  std::vector<std::uint8_t> active;  ///< 1 where a physical crossing exists
  double degradation = 1.0;          ///< response scale in (0, 1]
  double r_pinned = 1e6;             ///< value held by inactive crossings

  static SensorGrid hand(const ForceLaw& law = {});
  static SensorGrid square(int rows = kGridRows, int cols = kGridCols, const ForceLaw& law = {});

  double& r(int row, int col) { return resistance[static_cast<std::size_t>(row) * cols + col]; }
  double r(int row, int col) const {
    return resistance[static_cast<std::size_t>(row) * cols + col];
  }
  bool is_active(int row, int col) const {
    return active[static_cast<std::size_t>(row) * cols + col] != 0;
  }
  int active_count() const;

  /// Applies a per-crossing force map through the force law; inactive
  /// crossings stay pinned at R_max.
  void apply_pressure(std::span<const double> pressure_n, const ForceLaw& law);

  void validate() const;
};

/// Isolation-scheme scan of an arbitrary grid: row-major ADC counts.
/// Each taxel reads V_ref + degradation * (V_out - V_ref) + noise.
std::vector<std::uint16_t> scan_counts(const SensorGrid& grid, const ReadoutConfig& cfg,
                                       std::uint64_t seed);

/// Scan of a full 32x32 grid into a frame (timestamp left at 0).
TactileFrame scan_frame(const SensorGrid& grid, const ReadoutConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Circuit ground truth
// ---------------------------------------------------------------------------

/// Electrode boundary conditions: a value pins the electrode at that
/// potential through an ideal source, nullopt leaves it floating.
struct ElectrodeDrive {
  std::vector<std::optional<double>> row_potential;
  std::vector<std::optional<double>> col_potential;

  /// One row grounded, every other row and every column held at v_ref.
  static ElectrodeDrive isolation(int rows, int cols, int grounded_row, double v_ref);
  /// Row `row` at v_drive, column `col` at 0 V, everything else floating.
  static ElectrodeDrive floating(int rows, int cols, int row, int col, double v_drive);
};

struct NodalSolution {
  std::vector<double> row_potential;
  std::vector<double> col_potential;
  /// Current each pinned electrode's source injects into the network (A).
  /// Zero for floating electrodes.
  std::vector<double> row_current;
  std::vector<double> col_current;
};

/// Kirchhoff solve of the full crossing network. Resistances may be +inf
/// (open crossing). Throws Error(Singular) when a floating electrode has no
/// conductive path.
NodalSolution nodal_oracle(const SensorGrid& grid, const ElectrodeDrive& drive);

/// Passive scan without isolation: for every (row, col) pair drive the row,
/// ground the column, float the rest, and record the port conductance I/V.
RealMatrix floating_scan(const SensorGrid& grid);

struct CrosstalkOptions {
  double tolerance = 1e-9;  ///< max relative update at convergence
  int max_iterations = 10'000;
};

struct CrosstalkResult {
  RealMatrix resistance;
  int iterations = 0;
  double residual = 0.0;  ///< max relative port-conductance mismatch
};

/// Recovers crossing resistances from port conductances measured by
/// floating_scan. Newton iterations on log-conductances; each step solves
/// the linearised port-conductance system. Throws NonConvergenceError.
CrosstalkResult crosstalk_solve(const RealMatrix& measured, const CrosstalkOptions& options = {});

// ---------------------------------------------------------------------------
// Stimuli and acquisition
// ---------------------------------------------------------------------------

using PressureMap = std::array<double, kTaxels>;

enum class SlideProfile { Point, Stripe };

struct PressScene {
  int class_id = 0;
};
struct SlideScene {
  SlideProfile profile = SlideProfile::Point;
  double vx = 0.0;  ///< columns per frame
  double vy = 0.0;  ///< rows per frame
  /// Position at frame 0; defaults centre the motion on the grid.
  std::optional<double> start_x;
  std::optional<double> start_y;
};
struct EmptyHandScene {};

using SceneRequest = std::variant<PressScene, SlideScene, EmptyHandScene>;

/// Pressure-weighted footprint primitives of one object class, in taxel
/// units relative to the object centre.
struct FootprintPrimitive {
  enum class Shape { Disk, Ellipse, Ring, Bar } shape = Shape::Disk;
  double cx = 0, cy = 0;  ///< centre offset (x = column, y = row)
  double a = 1, b = 1;    ///< semi-axes / half-lengths / ring radius
  double angle_deg = 0;
  double thickness = 1;  ///< ring only
  double pressure_n = 1;
};

const std::vector<FootprintPrimitive>& footprint_template(int class_id);

/// Minimum pressure on every taxel inside a press footprint.
inline constexpr double kContactFloorN = 0.2;
/// Peak pose-stress pressure of empty-hand scenes.
inline constexpr double kEmptyHandPeakN = 0.001;

/// Deterministic time-varying force field over the 32x32 grid.
class ForceScene {
 public:
  ForceScene() = default;

  int frames() const { return frames_; }
  const SceneRequest& request() const { return request_; }
  /// Generator ground truth: does the scene touch the sensor at all.
  bool in_contact() const;

  PressureMap pressure(int frame) const;

  /// Press scenes: pose jitter drawn for this recording.
  double jitter_dx() const { return dx_; }
  double jitter_dy() const { return dy_; }
  double jitter_rotation_deg() const { return rot_deg_; }

 private:
  friend ForceScene generate_scene(const SceneRequest&, int, std::uint64_t);

  SceneRequest request_ = EmptyHandScene{};
  int frames_ = 0;
  std::uint64_t seed_ = 0;
  double dx_ = 0, dy_ = 0, rot_deg_ = 0;
  std::vector<double> primitive_gain_;
  double amp_period_ = 300, amp_phase_ = 0;
  double wobble_period_ = 170, wobble_phase_ = 0;
  std::array<double, 3> stress_cx_{}, stress_cy_{}, stress_phase_{};
  double start_x_ = 0, start_y_ = 0;
};

/// Throws Error(InvalidArgument) for frames < 1 or an unknown class id.
ForceScene generate_scene(const SceneRequest& request, int frames, std::uint64_t seed);

/// Centre of the palm in taxel coordinates (x = column, y = row).
inline constexpr double kPalmCenterX = 15.5;
inline constexpr double kPalmCenterY = 22.0;

struct AcquisitionParams {
  int label = 0;
  int session_id = 1;
  double degradation = 1.0;
  bool with_imu = true;
  std::uint64_t seed = 0;
};

/// Scans every scene frame at the configured rate. Throws
/// Error(BufferLimit) beyond 4096 frames.
Recording simulate_recording(const ForceScene& scene, const SensorGrid& grid,
                             const ReadoutConfig& cfg, const ForceLaw& law,
                             const AcquisitionParams& params);

// ---------------------------------------------------------------------------
// Whole-dataset synthesis
// ---------------------------------------------------------------------------

struct SimulationConfig {
  int sessions = 5;
  std::vector<int> classes;  ///< empty = all 17
  double seconds = 40.0;
  std::vector<double> degradation{1.0, 0.778, 0.635, 0.543, 0.457};
  std::size_t calibration_frames = kRecommendedCalibrationFrames;
  bool with_imu = true;
  ReadoutConfig readout;
  ForceLaw law;


  std::vector<int> class_list() const;
  int frames_per_recording() const;
  void validate() const;
};

/// One press (or empty-hand) recording per class per session.
Dataset simulate_dataset(const SimulationConfig& config, std::uint64_t seed);

/// Additional empty-hand frames for threshold calibration, split into
/// recordings that respect the acquisition buffer.
Dataset simulate_calibration_frames(const SimulationConfig& config, std::uint64_t seed);

/// splitmix64-based stream derivation so every recording, frame and fold
/// gets an independent, reproducible seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

}  // namespace smarthand
