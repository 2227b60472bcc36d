#include "smarthand/power.hpp"

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>

#include "smarthand/error.hpp"

namespace smarthand {

double PowerProfile::p_on() const {
  double s = 0.0;
  for (const auto& sub : subsystems) s += sub.p_on_mw;
  return s;
}

double PowerProfile::p_off() const {
  double s = 0.0;
  for (const auto& sub : subsystems) s += sub.p_off_mw;
  return s;
}

void PowerProfile::validate() const {
  require(!subsystems.empty(), ErrorKind::Validation, "power profile has no subsystems");
  for (const auto& s : subsystems) {
    require(!s.name.empty(), ErrorKind::Validation, "power subsystem without a name");
    require(std::isfinite(s.supply_v) && s.supply_v >= 0.0 && std::isfinite(s.p_on_mw) &&
                s.p_on_mw >= 0.0 && std::isfinite(s.p_off_mw) && s.p_off_mw >= 0.0,
            ErrorKind::Validation, "power subsystem '" + s.name + "' has a negative or non-finite value");
  }
}

double duty_cycle(double t_on_s, double t_off_s) {
  require(std::isfinite(t_on_s) && std::isfinite(t_off_s) && t_on_s >= 0.0 && t_off_s >= 0.0,
          ErrorKind::InvalidArgument, "duty cycle durations must be finite and >= 0");
  require(t_on_s + t_off_s > 0.0, ErrorKind::InvalidArgument, "duty cycle period is zero");
  return t_on_s / (t_on_s + t_off_s);
}

double average_power(double dc, const PowerProfile& profile) {
  require(dc >= 0.0 && dc <= 1.0, ErrorKind::InvalidArgument, "duty cycle outside [0, 1]");
  profile.validate();
  return (1.0 - dc) * profile.p_off() + dc * profile.p_on();
}

EnergyEstimate energy_and_lifetime(double dc, double hours_per_day, double battery_wh,
                                   const PowerProfile& profile) {
  require(std::isfinite(hours_per_day) && hours_per_day > 0.0 && hours_per_day <= 24.0,
          ErrorKind::InvalidArgument, "hours per day must lie in (0, 24]");
  require(std::isfinite(battery_wh) && battery_wh > 0.0, ErrorKind::InvalidArgument,
          "battery capacity must be positive");
  EnergyEstimate e;
  e.average_power_mw = average_power(dc, profile);
  e.energy_wh_per_day = e.average_power_mw * hours_per_day / 1000.0;
  if (e.energy_wh_per_day == 0.0)
    e.unbounded = true;
  else
    e.days = battery_wh / e.energy_wh_per_day;
  return e;
}

PowerReport power_report(const PowerProfile& profile, double dc, double hours_per_day,
                         double battery_wh) {
  PowerReport r;
  r.profile = profile;
  r.dc = dc;
  r.hours_per_day = hours_per_day;
  r.battery_wh = battery_wh;
  r.estimate = energy_and_lifetime(dc, hours_per_day, battery_wh, profile);
  return r;
}

std::string PowerReport::table() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %10s %12s %14s\n", "subsystem", "supply_V", "run_mW",
                "standby_uW");
  out += line;
  for (const auto& s : profile.subsystems) {
    std::snprintf(line, sizeof line, "%-16s %10.2f %12.3f %14.3f\n", s.name.c_str(), s.supply_v,
                  s.p_on_mw, s.p_off_mw * 1000.0);
    out += line;
  }
  std::snprintf(line, sizeof line, "%-16s %10s %12.3f %14.3f\n", "total", "--", profile.p_on(),
                profile.p_off() * 1000.0);
  out += line;
  out += "\n";
  std::snprintf(line, sizeof line, "duty cycle       %.6f\n", dc);
  out += line;
  std::snprintf(line, sizeof line, "P_avg            %.6f mW\n", estimate.average_power_mw);
  out += line;
  std::snprintf(line, sizeof line, "energy           %.6f Wh/day (%.2f h/day)\n",
                estimate.energy_wh_per_day, hours_per_day);
  out += line;
  if (estimate.unbounded)
    std::snprintf(line, sizeof line, "lifetime         unbounded (%.3f Wh battery)\n", battery_wh);
  else
    std::snprintf(line, sizeof line, "lifetime         %.6f days (%.3f h of use, %.3f Wh battery)\n",
                  estimate.days, estimate.days * hours_per_day, battery_wh);
  out += line;
  return out;
}

std::string PowerReport::to_json() const {
  nlohmann::ordered_json j;
  auto& subs = j["subsystems"] = nlohmann::ordered_json::array();
  for (const auto& s : profile.subsystems)
    subs.push_back({{"name", s.name}, {"supply_v", s.supply_v}, {"p_on_mw", s.p_on_mw},
                    {"p_off_mw", s.p_off_mw}});
  j["p_on_mw"] = profile.p_on();
  j["p_off_mw"] = profile.p_off();
  j["duty_cycle"] = dc;
  j["hours_per_day"] = hours_per_day;
  j["battery_wh"] = battery_wh;
  j["average_power_mw"] = estimate.average_power_mw;
  j["energy_wh_per_day"] = estimate.energy_wh_per_day;
  j["unbounded"] = estimate.unbounded;
  if (estimate.unbounded)
    j["days"] = nullptr;
  else
    j["days"] = estimate.days;
  return j.dump(2) + "\n";
}

}  // namespace smarthand
