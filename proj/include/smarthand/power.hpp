#pragma once

#include <string>
#include <vector>

namespace smarthand {

struct Subsystem {
  std::string name;
  double supply_v = 0.0;
  double p_on_mw = 0.0;
  double p_off_mw = 0.0;
};

/// Per-subsystem run and standby power. Defaults are the measured board:
/// IMU 23 / 0.144 mW, MCU 430 / 0.040 mW, readout 52 / 0.001 mW.
struct PowerProfile {
  std::vector<Subsystem> subsystems = {
      {"imu", 3.3, 23.0, 0.144},
      {"mcu", 3.3, 430.0, 0.040},
      {"readout", 5.0, 52.0, 0.001},
  };

  double p_on() const;
  double p_off() const;
  void validate() const;
};

/// t_on / (t_on + t_off).
double duty_cycle(double t_on_s, double t_off_s);

/// (1 - dc) P_off + dc P_on, in mW.
double average_power(double dc, const PowerProfile& profile = {});

struct EnergyEstimate {
  double average_power_mw = 0.0;
  double energy_wh_per_day = 0.0;
  double days = 0.0;
  bool unbounded = false;  ///< zero average power: lifetime is infinite
};

EnergyEstimate energy_and_lifetime(double dc, double hours_per_day, double battery_wh,
                                   const PowerProfile& profile = {});

struct PowerReport {
  PowerProfile profile;
  double dc = 0.0;
  double hours_per_day = 0.0;
  double battery_wh = 0.0;
  EnergyEstimate estimate;

  std::string table() const;
  std::string to_json() const;
};

PowerReport power_report(const PowerProfile& profile, double dc, double hours_per_day,
                         double battery_wh);

}  // namespace smarthand
