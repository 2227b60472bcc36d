#include "smarthand/config.hpp"

#include <nlohmann/json.hpp>
#include <map>
#include <set>

#include "smarthand/analysis.hpp"
#include "smarthand/error.hpp"

namespace smarthand {

namespace {

using nlohmann::json;

/// JSON pointer of every object key -> 1-based line of its first character.
/// Runs only on text nlohmann has already accepted.
std::map<std::string, int> key_lines(const std::string& text) {
  struct Scope {
    bool object;
    std::string path;
    std::string key;
    int index = 0;
    bool expect_key = true;
  };
  std::map<std::string, int> lines;
  std::vector<Scope> stack;
  int line = 1;
  auto child_path = [&]() -> std::string {
    if (stack.empty()) return "";
    const auto& top = stack.back();
    return top.path + "/" + (top.object ? top.key : std::to_string(top.index));
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    switch (ch) {
      case '\n':
        ++line;
        break;
      case '{':
      case '[': {
        const auto path = child_path();
        stack.push_back({ch == '{', path, {}, 0, true});
        break;
      }
      case '}':
      case ']':
        if (!stack.empty()) stack.pop_back();
        break;
      case ',':
        if (!stack.empty()) {
          if (stack.back().object)
            stack.back().expect_key = true;
          else
            ++stack.back().index;
        }
        break;
      case ':':
        if (!stack.empty()) stack.back().expect_key = false;
        break;
      case '"': {
        const int start_line = line;
        std::string s;
        for (++i; i < text.size() && text[i] != '"'; ++i) {
          if (text[i] == '\\' && i + 1 < text.size()) s += text[i++];
          s += text[i];
        }
        if (!stack.empty() && stack.back().object && stack.back().expect_key) {
          stack.back().key = s;
          lines.emplace(stack.back().path + "/" + s, start_line);
        }
        break;
      }
      default:
        break;
    }
  }
  return lines;
}

std::string dotted(const std::string& pointer) {
  std::string out;
  for (char c : pointer.substr(pointer.empty() ? 0 : 1)) out += c == '/' ? '.' : c;
  return out.empty() ? "<root>" : out;
}

class Reader {
 public:
  Reader(const json& node, std::string path, const std::map<std::string, int>& lines)
      : node_(node), path_(std::move(path)), lines_(lines) {}

  int line_of(const std::string& pointer) const {
    for (std::string p = pointer;; p = p.substr(0, p.rfind('/'))) {
      if (auto it = lines_.find(p); it != lines_.end()) return it->second;
      if (p.empty()) return 1;
    }
  }

  [[noreturn]] void fail_at(const std::string& pointer, const std::string& what) const {
    throw Error(ErrorKind::Config, "line " + std::to_string(line_of(pointer)) + ": " + what);
  }

  void expect_object() const {
    if (!node_.is_object()) fail_at(path_, "'" + dotted(path_) + "' must be an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    expect_object();
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : node_.items())
      if (!ok.count(k)) fail_at(path_ + "/" + k, "unknown key '" + dotted(path_ + "/" + k) + "'");
  }

  bool has(const char* key) const { return node_.contains(key); }
  std::string pointer(const char* key) const { return path_ + "/" + key; }

  Reader child(const char* key) const { return Reader(node_.at(key), pointer(key), lines_); }

  void get(const char* key, double& dst) const {
    if (!has(key)) return;
    const auto& v = node_.at(key);
    if (!v.is_number()) type_error(key, "a number");
    dst = v.get<double>();
  }
  void get(const char* key, int& dst) const {
    if (!has(key)) return;
    const auto& v = node_.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < INT32_MIN ||
        v.get<std::int64_t>() > INT32_MAX)
      type_error(key, "an integer");
    dst = v.get<int>();
  }
  void get(const char* key, std::uint64_t& dst) const {
    if (!has(key)) return;
    const auto& v = node_.at(key);
    if (!v.is_number_unsigned()) type_error(key, "a non-negative integer");
    dst = v.get<std::uint64_t>();
  }
  void get(const char* key, bool& dst) const {
    if (!has(key)) return;
    const auto& v = node_.at(key);
    if (!v.is_boolean()) type_error(key, "true or false");
    dst = v.get<bool>();
  }
  void get(const char* key, std::string& dst) const {
    if (!has(key)) return;
    const auto& v = node_.at(key);
    if (!v.is_string()) type_error(key, "a string");
    dst = v.get<std::string>();
  }
  template <class T>
  void get(const char* key, std::vector<T>& dst) const {
    if (!has(key)) return;
    const auto& v = node_.at(key);
    if (!v.is_array()) type_error(key, "an array");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const bool ok = std::is_integral_v<T> ? v[i].is_number_integer() : v[i].is_number();
      if (!ok)
        fail_at(pointer(key) + "/" + std::to_string(i),
                "'" + dotted(pointer(key)) + "' elements must be " +
                    (std::is_integral_v<T> ? "integers" : "numbers"));
      out.push_back(v[i].get<T>());
    }
    dst = std::move(out);
  }

  /// Runs a validator and reports its failure at this object's line.
  template <class F>
  void check(F&& validate) const {
    try {
      validate();
    } catch (const Error& e) {
      fail_at(path_, "invalid '" + dotted(path_) + "': " + e.what());
    }
  }

  const json& node() const { return node_; }
  const std::map<std::string, int>& lines() const { return lines_; }
  const std::string& path() const { return path_; }

 private:
  [[noreturn]] void type_error(const char* key, const char* what) const {
    fail_at(pointer(key), "'" + dotted(pointer(key)) + "' must be " + what);
  }

  const json& node_;
  std::string path_;
  const std::map<std::string, int>& lines_;
};

SlideProfile parse_profile(const Reader& r, const std::string& s, const char* key) {
  if (s == "point") return SlideProfile::Point;
  if (s == "stripe") return SlideProfile::Stripe;
  r.fail_at(r.pointer(key), "'" + dotted(r.pointer(key)) + "' must be \"point\" or \"stripe\"");
}

void read_simulation(const Reader& r, SimulationConfig& c) {
  r.allow({"sessions", "classes", "seconds", "degradation", "calibration_frames", "with_imu",
           "readout", "law"});
  r.get("sessions", c.sessions);
  r.get("classes", c.classes);
  r.get("seconds", c.seconds);
  r.get("degradation", c.degradation);
  r.get("calibration_frames", c.calibration_frames);
  r.get("with_imu", c.with_imu);
  if (r.has("readout")) {
    const auto rr = r.child("readout");
    rr.allow({"v_ref", "r_fb", "adc_ref", "adc_bits", "noise_sigma", "scan_rate"});
    rr.get("v_ref", c.readout.v_ref);
    rr.get("r_fb", c.readout.r_fb);
    rr.get("adc_ref", c.readout.adc_ref);
    rr.get("adc_bits", c.readout.adc_bits);
    rr.get("noise_sigma", c.readout.noise_sigma);
    rr.get("scan_rate", c.readout.scan_rate);
    rr.check([&] { c.readout.validate(); });
  }
  if (r.has("law")) {
    const auto lr = r.child("law");
    lr.allow({"r_min", "r_max", "f_half"});
    lr.get("r_min", c.law.r_min);
    lr.get("r_max", c.law.r_max);
    lr.get("f_half", c.law.f_half);
    lr.check([&] { c.law.validate(); });
  }
  r.check([&] {
    c.validate();
    require(c.calibration_frames >= 1, ErrorKind::Validation, "calibration_frames must be >= 1");
  });
}

void read_slip(const Reader& r, SlipConfig& c) {
  r.allow({"frames", "runs"});
  r.get("frames", c.frames);
  if (r.has("runs")) {
    const auto& arr = r.node().at("runs");
    if (!arr.is_array()) r.fail_at(r.pointer("runs"), "'" + dotted(r.pointer("runs")) + "' must be an array");
    c.runs.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Reader run(arr[i], r.pointer("runs") + "/" + std::to_string(i), r.lines());
      run.allow({"profile", "vx", "vy"});
      SlipRun s;
      std::string profile = "point";
      run.get("profile", profile);
      s.profile = parse_profile(run, profile, "profile");
      run.get("vx", s.vx);
      run.get("vy", s.vy);
      c.runs.push_back(s);
    }
  }
  r.check([&] {
    require(c.frames >= kSlipWindow && static_cast<std::size_t>(c.frames) <= kMaxFramesPerRecording,
            ErrorKind::Validation, "frames must lie in [5, 4096]");
    require(c.runs.size() <= 255, ErrorKind::Validation, "at most 255 slip runs");
  });
}

void read_eval(const Reader& r, EvalConfig& c) {
  r.allow({"epochs", "batch_size", "lr0", "lr_milestones", "lr_gamma", "n_folds", "with_imu",
           "workers"});
  r.get("epochs", c.epochs);
  r.get("batch_size", c.batch_size);
  r.get("lr0", c.lr0);
  r.get("lr_milestones", c.lr_milestones);
  r.get("lr_gamma", c.lr_gamma);
  r.get("n_folds", c.n_folds);
  r.get("with_imu", c.with_imu);
  r.get("workers", c.workers);
  r.check([&] { c.validate(); });
}

void read_power(const Reader& r, PowerConfig& c) {
  r.allow({"duty_cycle", "t_on_s", "t_off_s", "hours_per_day", "battery_wh", "subsystems"});
  if (r.has("duty_cycle") && (r.has("t_on_s") || r.has("t_off_s")))
    r.fail_at(r.pointer("duty_cycle"), "give either duty_cycle or t_on_s/t_off_s, not both");
  r.get("duty_cycle", c.duty_cycle);
  if (r.has("t_on_s") || r.has("t_off_s")) {
    double t_on = 0.0, t_off = 0.0;
    r.get("t_on_s", t_on);
    r.get("t_off_s", t_off);
    r.check([&] { c.duty_cycle = duty_cycle(t_on, t_off); });
  }
  r.get("hours_per_day", c.hours_per_day);
  r.get("battery_wh", c.battery_wh);
  if (r.has("subsystems")) {
    const auto& arr = r.node().at("subsystems");
    if (!arr.is_array())
      r.fail_at(r.pointer("subsystems"), "'" + dotted(r.pointer("subsystems")) + "' must be an array");
    c.profile.subsystems.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Reader sub(arr[i], r.pointer("subsystems") + "/" + std::to_string(i), r.lines());
      sub.allow({"name", "supply_v", "p_on_mw", "p_off_mw"});
      for (const char* k : {"name", "p_on_mw", "p_off_mw"})
        if (!sub.has(k)) sub.fail_at(sub.path(), "subsystem is missing '" + std::string(k) + "'");
      Subsystem s;
      sub.get("name", s.name);
      sub.get("supply_v", s.supply_v);
      sub.get("p_on_mw", s.p_on_mw);
      sub.get("p_off_mw", s.p_off_mw);
      c.profile.subsystems.push_back(s);
    }
  }
  r.check([&] {
    c.profile.validate();
    (void)energy_and_lifetime(c.duty_cycle, c.hours_per_day, c.battery_wh, c.profile);
  });
}

void read_paths(const Reader& r, PathConfig& c) {
  r.allow({"dataset", "calibration", "thresholds", "model", "slip"});
  r.get("dataset", c.dataset);
  r.get("calibration", c.calibration);
  r.get("thresholds", c.thresholds);
  r.get("model", c.model);
  r.get("slip", c.slip);
}

}  // namespace

void RunConfig::validate() const {
  simulation.validate();
  eval.validate();
  power.profile.validate();
  (void)energy_and_lifetime(power.duty_cycle, power.hours_per_day, power.battery_wh, power.profile);
  require(slip.frames >= kSlipWindow &&
              static_cast<std::size_t>(slip.frames) <= kMaxFramesPerRecording,
          ErrorKind::Validation, "slip frames must lie in [5, 4096]");
}

RunConfig parse_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) line += text[i] == '\n';
    throw Error(ErrorKind::Config, "line " + std::to_string(line) + ": malformed JSON");
  }
  const auto lines = key_lines(text);
  Reader root(doc, "", lines);
  root.allow({"seed", "simulation", "slip", "eval", "power", "paths"});

  RunConfig cfg;
  root.get("seed", cfg.seed);
  if (root.has("simulation")) read_simulation(root.child("simulation"), cfg.simulation);
  if (root.has("slip")) read_slip(root.child("slip"), cfg.slip);
  if (root.has("eval")) read_eval(root.child("eval"), cfg.eval);
  if (root.has("power")) read_power(root.child("power"), cfg.power);
  if (root.has("paths")) read_paths(root.child("paths"), cfg.paths);
  cfg.eval.seed = cfg.seed;
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  try {
    return parse_run_config(std::string(bytes.begin(), bytes.end()));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Config) throw;
    throw Error(ErrorKind::Config, path.string() + ":" + e.what());
  }
}

std::string RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  auto& s = j["simulation"];
  s["sessions"] = simulation.sessions;
  s["classes"] = simulation.class_list();
  s["seconds"] = simulation.seconds;
  s["degradation"] = simulation.degradation;
  s["calibration_frames"] = simulation.calibration_frames;
  s["with_imu"] = simulation.with_imu;
  s["readout"] = {{"v_ref", simulation.readout.v_ref},
                  {"r_fb", simulation.readout.r_fb},
                  {"adc_ref", simulation.readout.adc_ref},
                  {"adc_bits", simulation.readout.adc_bits},
                  {"noise_sigma", simulation.readout.noise_sigma},
                  {"scan_rate", simulation.readout.scan_rate}};
  s["law"] = {{"r_min", simulation.law.r_min},
              {"r_max", simulation.law.r_max},
              {"f_half", simulation.law.f_half}};
  auto& sl = j["slip"];
  sl["frames"] = slip.frames;
  sl["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : slip.runs)
    sl["runs"].push_back({{"profile", r.profile == SlideProfile::Point ? "point" : "stripe"},
                          {"vx", r.vx},
                          {"vy", r.vy}});
  auto& e = j["eval"];
  e["epochs"] = eval.epochs;
  e["batch_size"] = eval.batch_size;
  e["lr0"] = eval.lr0;
  e["lr_milestones"] = eval.lr_milestones;
  e["lr_gamma"] = eval.lr_gamma;
  e["n_folds"] = eval.n_folds;
  e["with_imu"] = eval.with_imu;
  e["workers"] = eval.workers;
  auto& p = j["power"];
  p["duty_cycle"] = power.duty_cycle;
  p["hours_per_day"] = power.hours_per_day;
  p["battery_wh"] = power.battery_wh;
  p["subsystems"] = nlohmann::ordered_json::array();
  for (const auto& sub : power.profile.subsystems)
    p["subsystems"].push_back({{"name", sub.name},
                               {"supply_v", sub.supply_v},
                               {"p_on_mw", sub.p_on_mw},
                               {"p_off_mw", sub.p_off_mw}});
  j["paths"] = {{"dataset", paths.dataset},
                {"calibration", paths.calibration},
                {"thresholds", paths.thresholds},
                {"model", paths.model},
                {"slip", paths.slip}};
  return j.dump(2) + "\n";
}

}  // namespace smarthand
