#include "smarthand/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <numbers>

#include "smarthand/error.hpp"

namespace smarthand {

DegradationReport relative_mean_response(const Dataset& dataset, const ThresholdMap& thresholds,
                                         std::uint16_t baseline) {
  require(!dataset.sessions.empty(), ErrorKind::InvalidArgument, "dataset has no sessions");
  DegradationReport r;
  for (const auto& [session, recordings] : dataset.sessions) {
    double sum = 0.0;
    std::size_t frames = 0;
    for (const auto& rec : recordings)
      for (const auto& f : rec.frames) {
        if (!is_contact(f, thresholds)) continue;
        for (std::uint16_t v : f.values) sum += static_cast<double>(v) - baseline;
        ++frames;
      }
    require(frames > 0, ErrorKind::InvalidArgument,
            "session " + std::to_string(session) + " has no contact frames");
    r.mean_signal[session] = sum / (static_cast<double>(frames) * kTaxels);
  }
  const double reference = r.mean_signal.begin()->second;
  require(reference > 0.0, ErrorKind::InvalidArgument,
          "reference session has no signal above baseline");
  for (const auto& [session, mean] : r.mean_signal)
    r.relative_response[session] = session == r.mean_signal.begin()->first ? 1.0 : mean / reference;
  return r;
}

std::string DegradationReport::to_json() const {
  nlohmann::ordered_json j;
  auto& sessions = j["sessions"] = nlohmann::ordered_json::array();
  for (const auto& [s, rel] : relative_response)
    sessions.push_back({{"session", s}, {"relative_response", rel}, {"mean_signal", mean_signal.at(s)}});
  return j.dump(2) + "\n";
}

AverageFrame class_average_frame(const Dataset& dataset, const ThresholdMap& thresholds,
                                 int class_id, int session) {
  require(class_id >= 0 && class_id < kNumClasses, ErrorKind::InvalidArgument,
          "class id out of range");
  auto it = dataset.sessions.find(session);
  require(it != dataset.sessions.end(), ErrorKind::InvalidArgument,
          "session " + std::to_string(session) + " not in dataset");
  AverageFrame avg{};
  std::size_t frames = 0;
  bool present = false;
  for (const auto& rec : it->second) {
    if (rec.label != class_id) continue;
    present = true;
    for (const auto& f : rec.frames) {
      if (class_id != kEmptyHandClass && !is_contact(f, thresholds)) continue;
      for (int i = 0; i < kTaxels; ++i) avg[i] += f.values[i];
      ++frames;
    }
  }
  require(present, ErrorKind::InvalidArgument,
          "class " + std::to_string(class_id) + " not recorded in session " + std::to_string(session));
  require(frames > 0, ErrorKind::InvalidArgument,
          "class " + std::to_string(class_id) + " has no contact frames in session " +
              std::to_string(session));
  for (auto& v : avg) v /= static_cast<double>(frames);
  return avg;
}

SlipReport detect_slip(std::span<const TactileFrame> frames, const ThresholdMap& thresholds,
                       int window) {
  require(window >= 2, ErrorKind::InvalidArgument, "slip window must be >= 2");
  require(frames.size() >= static_cast<std::size_t>(window), ErrorKind::InvalidArgument,
          "sequence shorter than the slip window");
  SlipReport r;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    SlipSample s;
    s.frame = static_cast<int>(t);
    double sx = 0, sy = 0;
    for (int row = 0; row < kGridRows; ++row)
      for (int col = 0; col < kGridCols; ++col) {
        const int excess = static_cast<int>(frames[t].at(row, col)) - thresholds.at(row, col);
        if (excess <= 0) continue;
        s.mass += excess;
        sx += excess * static_cast<double>(col);
        sy += excess * static_cast<double>(row);
      }
    if (s.mass > 0) {
      s.contact = true;
      s.x = sx / s.mass;
      s.y = sy / s.mass;
    }
    r.track.push_back(s);
  }

  // Least-squares slope over every window of consecutive contact frames.
  std::vector<double> vxs, vys;
  const int w = window;
  const double t_mean = 0.5 * (w - 1);
  double t_var = 0;
  for (int k = 0; k < w; ++k) t_var += (k - t_mean) * (k - t_mean);
  for (std::size_t end = w - 1; end < r.track.size(); ++end) {
    bool full = true;
    for (int k = 0; k < w; ++k) full = full && r.track[end - k].contact;
    if (!full) continue;
    double x_mean = 0, y_mean = 0;
    for (int k = 0; k < w; ++k) {
      x_mean += r.track[end + 1 - w + k].x;
      y_mean += r.track[end + 1 - w + k].y;
    }
    x_mean /= w;
    y_mean /= w;
    double cx = 0, cy = 0;
    for (int k = 0; k < w; ++k) {
      cx += (k - t_mean) * (r.track[end + 1 - w + k].x - x_mean);
      cy += (k - t_mean) * (r.track[end + 1 - w + k].y - y_mean);
    }
    vxs.push_back(cx / t_var);
    vys.push_back(cy / t_var);
  }
  if (vxs.empty()) return r;

  auto median = [](std::vector<double> v) {
    const std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + m, v.end());
    if (v.size() % 2) return v[m];
    const double hi = v[m];
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + m));
  };
  r.defined = true;
  r.vx = median(vxs);
  r.vy = median(vys);
  r.speed = std::hypot(r.vx, r.vy);
  r.direction_deg = std::atan2(r.vy, r.vx) * 180.0 / std::numbers::pi;
  r.slipping = r.speed > kSlipSpeedThreshold;
  return r;
}

std::string SlipReport::to_json() const {
  nlohmann::ordered_json j;
  j["defined"] = defined;
  if (defined) {
    j["vx"] = vx;
    j["vy"] = vy;
    j["speed"] = speed;
    j["direction_deg"] = direction_deg;
    j["classification"] = slipping ? "slipping" : "static";
  } else {
    j["classification"] = "undefined";
  }
  std::size_t contact = 0;
  for (const auto& s : track) contact += s.contact;
  j["frames"] = track.size();
  j["contact_frames"] = contact;
  return j.dump(2) + "\n";
}

std::string SlipReport::track_csv() const {
  std::string out = "frame,contact,x,y,mass\n";
  char line[128];
  for (const auto& s : track) {
    std::snprintf(line, sizeof line, "%d,%d,%.6f,%.6f,%.1f\n", s.frame, s.contact ? 1 : 0, s.x,
                  s.y, s.mass);
    out += line;
  }
  return out;
}

void write_average_frame(const AverageFrame& frame, const std::filesystem::path& csv,
                         const std::filesystem::path& pgm) {
  std::string text;
  char cell[32];
  for (int r = 0; r < kGridRows; ++r) {
    for (int c = 0; c < kGridCols; ++c) {
      std::snprintf(cell, sizeof cell, c ? ",%.4f" : "%.4f", frame[r * kGridCols + c]);
      text += cell;
    }
    text += "\n";
  }
  io::write_text(csv, text);
  std::vector<std::uint16_t> px(kTaxels);
  for (int i = 0; i < kTaxels; ++i)
    px[i] = static_cast<std::uint16_t>(std::clamp(std::lround(frame[i]), 0L, static_cast<long>(kAdcMax)));
  io::write_pgm(pgm, kGridCols, kGridRows, px, kAdcMax);
}

}  // namespace smarthand
