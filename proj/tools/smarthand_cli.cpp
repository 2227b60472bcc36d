// smarthand: batch front end over libsmarthand.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include "smarthand/smarthand.h"

namespace fs = std::filesystem;

namespace {

struct Failure {
  sh_status status;
  std::string message;
};

void check(sh_status s) {
  if (s != SH_OK) throw Failure{s, sh_last_error()};
}

int exit_code(sh_status s) {
  switch (s) {
    case SH_ERR_IO:
      return 2;
    case SH_ERR_VALIDATION:
    case SH_ERR_CONFIG:
    case SH_ERR_BAD_MAGIC:
    case SH_ERR_TRUNCATED:
    case SH_ERR_INVALID_ARGUMENT:
    case SH_ERR_BUFFER_LIMIT:
      return 3;
    case SH_ERR_NON_CONVERGENCE:
      return 4;
    default:
      return 1;
  }
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Config = std::unique_ptr<sh_config, Deleter<sh_config, sh_config_free>>;
using DatasetPtr = std::unique_ptr<sh_dataset, Deleter<sh_dataset, sh_dataset_free>>;
using Thresholds = std::unique_ptr<sh_thresholds, Deleter<sh_thresholds, sh_thresholds_free>>;
using Model = std::unique_ptr<sh_model, Deleter<sh_model, sh_model_free>>;

/// Owns a library-allocated string.
class Text {
 public:
  ~Text() { sh_string_free(p_); }
  char** out() { return &p_; }
  std::string str() const { return p_ ? p_ : ""; }

 private:
  char* p_ = nullptr;
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  bool json = false;
  std::optional<double> rate;
};

Config load_config(const Options& o) {
  sh_config* raw = nullptr;
  check(o.config.empty() ? sh_config_default(&raw) : sh_config_load(o.config.c_str(), &raw));
  Config cfg(raw);
  if (o.seed) check(sh_config_set_seed(cfg.get(), *o.seed));
  return cfg;
}

fs::path out_dir(const Options& o) {
  fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{SH_ERR_IO, "cannot create " + dir.string() + ": " + ec.message()};
  return dir;
}

/// Explicit path if given, else the configured name inside the output dir.
std::string resolve(const std::string& given, const sh_config* cfg, const char* which,
                    const Options& o) {
  if (!given.empty()) return given;
  Text name;
  check(sh_config_path(cfg, which, name.out()));
  return (fs::path(o.out) / name.str()).string();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw Failure{SH_ERR_IO, "cannot write " + path.string()};
}

DatasetPtr read_dataset(const std::string& path) {
  sh_dataset* raw = nullptr;
  check(sh_dataset_read(path.c_str(), &raw));
  return DatasetPtr(raw);
}

Thresholds read_thresholds(const std::string& path) {
  sh_thresholds* raw = nullptr;
  check(sh_thresholds_read(path.c_str(), &raw));
  return Thresholds(raw);
}

void progress(const char* line, void*) {
  std::fprintf(stderr, "%s\n", line);
  std::fflush(stderr);
}

std::size_t frame_count(const sh_dataset* ds) {
  std::size_t n = 0;
  check(sh_dataset_frame_count(ds, &n));
  return n;
}

// ---------------------------------------------------------------------------

void cmd_simulate(const Options& o, const std::string& pgm_dir) {
  auto cfg = load_config(o);
  if (o.rate) check(sh_config_set_scan_rate(cfg.get(), *o.rate));
  out_dir(o);

  sh_dataset* raw = nullptr;
  check(sh_simulate_dataset(cfg.get(), &raw));
  DatasetPtr ds(raw);
  const auto ds_path = resolve("", cfg.get(), "dataset", o);
  check(sh_dataset_write(ds.get(), ds_path.c_str()));

  check(sh_simulate_calibration(cfg.get(), &raw));
  DatasetPtr cal(raw);
  const auto cal_path = resolve("", cfg.get(), "calibration", o);
  check(sh_dataset_write(cal.get(), cal_path.c_str()));

  check(sh_simulate_slip(cfg.get(), &raw));
  DatasetPtr slip(raw);
  std::string slip_path;
  if (slip) {
    slip_path = resolve("", cfg.get(), "slip", o);
    check(sh_dataset_write(slip.get(), slip_path.c_str()));
  }
  if (!pgm_dir.empty()) check(sh_dataset_dump_pgm(ds.get(), pgm_dir.c_str()));

  if (o.json) {
    Text summary;
    check(sh_dataset_summary_json(ds.get(), summary.out()));
    std::fputs(summary.str().c_str(), stdout);
    return;
  }
  std::size_t recs = 0;
  check(sh_dataset_recording_count(ds.get(), &recs));
  std::printf("%s: %zu frames in %zu recordings\n", ds_path.c_str(), frame_count(ds.get()), recs);
  std::printf("%s: %zu empty-hand frames\n", cal_path.c_str(), frame_count(cal.get()));
  if (slip) std::printf("%s: %zu slide frames\n", slip_path.c_str(), frame_count(slip.get()));
}

void cmd_calibrate(const Options& o, const std::string& frames_path) {
  auto cfg = load_config(o);
  out_dir(o);
  auto frames = read_dataset(resolve(frames_path, cfg.get(), "calibration", o));
  const auto n = frame_count(frames.get());
  if (n < 20000)
    std::fprintf(stderr, "warning: calibrating from %zu frames (20000 recommended)\n", n);
  sh_thresholds* raw = nullptr;
  check(sh_calibrate(frames.get(), &raw));
  Thresholds t(raw);
  const auto path = resolve("", cfg.get(), "thresholds", o);
  check(sh_thresholds_write(t.get(), path.c_str()));
  if (o.json)
    std::printf("{\n  \"frames\": %zu,\n  \"thresholds\": \"%s\"\n}\n", n, path.c_str());
  else
    std::printf("%s: thresholds from %zu empty-hand frames\n", path.c_str(), n);
}

void cmd_train(const Options& o, const std::string& dataset, const std::string& thresholds) {
  auto cfg = load_config(o);
  const auto dir = out_dir(o);
  auto ds = read_dataset(resolve(dataset, cfg.get(), "dataset", o));
  auto t = read_thresholds(resolve(thresholds, cfg.get(), "thresholds", o));
  sh_model* raw = nullptr;
  Text report, curves;
  check(sh_train(cfg.get(), ds.get(), t.get(), progress, nullptr, &raw, report.out(),
                 curves.out()));
  Model model(raw);
  const auto model_path = resolve("", cfg.get(), "model", o);
  check(sh_model_write(model.get(), model_path.c_str()));
  write_text(dir / "train_report.json", report.str());
  write_text(dir / "learning_curves.csv", curves.str());
  if (o.json)
    std::fputs(report.str().c_str(), stdout);
  else
    std::printf("%s written; report in %s\n", model_path.c_str(),
                (dir / "train_report.json").string().c_str());
}

void cmd_eval(const Options& o, const std::string& method, const std::string& dataset,
              const std::string& thresholds) {
  auto cfg = load_config(o);
  const auto dir = out_dir(o) / method;
  auto ds = read_dataset(resolve(dataset, cfg.get(), "dataset", o));
  auto t = read_thresholds(resolve(thresholds, cfg.get(), "thresholds", o));
  Text report;
  check(sh_eval(cfg.get(), ds.get(), t.get(), method.c_str(), dir.string().c_str(), progress,
                nullptr, report.out()));
  if (o.json)
    std::fputs(report.str().c_str(), stdout);
  else
    std::printf("%s report written to %s\n", method.c_str(), dir.string().c_str());
}

void cmd_infer(const Options& o, const std::string& model_path, const std::string& dataset,
               const std::string& thresholds) {
  auto cfg = load_config(o);
  const auto dir = out_dir(o);
  sh_model* raw = nullptr;
  check(sh_model_read(resolve(model_path, cfg.get(), "model", o).c_str(), &raw));
  Model model(raw);
  auto ds = read_dataset(resolve(dataset, cfg.get(), "dataset", o));
  Thresholds t;
  if (!thresholds.empty()) t = read_thresholds(thresholds);
  std::uint16_t baseline = 0;
  check(sh_config_baseline(cfg.get(), &baseline));
  Text summary;
  check(sh_infer_dataset(model.get(), ds.get(), t.get(), baseline, o.rate.value_or(8.0),
                         dir.string().c_str(), summary.out()));
  std::fputs(summary.str().c_str(), stdout);
}

void cmd_profile(const Options& o, const std::string& model_path, bool with_imu) {
  auto cfg = load_config(o);
  const auto dir = out_dir(o);
  sh_model* raw = nullptr;
  if (model_path.empty()) {
    std::uint64_t seed = 0;
    check(sh_config_seed(cfg.get(), &seed));
    check(sh_model_build(with_imu ? 1 : 0, seed, &raw));
  } else {
    check(sh_model_read(model_path.c_str(), &raw));
  }
  Model model(raw);
  Text report;
  check(sh_model_profile_json(model.get(), report.out()));
  write_text(dir / "profile.json", report.str());
  std::fputs(report.str().c_str(), stdout);
}

void cmd_analyze_degradation(const Options& o, const std::string& dataset,
                             const std::string& thresholds) {
  auto cfg = load_config(o);
  const auto dir = out_dir(o);
  auto ds = read_dataset(resolve(dataset, cfg.get(), "dataset", o));
  auto t = read_thresholds(resolve(thresholds, cfg.get(), "thresholds", o));
  std::uint16_t baseline = 0;
  check(sh_config_baseline(cfg.get(), &baseline));
  Text report;
  check(sh_analyze_degradation(ds.get(), t.get(), baseline, report.out()));
  write_text(dir / "degradation.json", report.str());
  std::fputs(report.str().c_str(), stdout);
}

void cmd_analyze_average(const Options& o, const std::string& dataset,
                         const std::string& thresholds, int class_id, int session) {
  auto cfg = load_config(o);
  const auto dir = out_dir(o);
  auto ds = read_dataset(resolve(dataset, cfg.get(), "dataset", o));
  auto t = read_thresholds(resolve(thresholds, cfg.get(), "thresholds", o));
  double frame[SH_TAXELS];
  check(sh_class_average_frame(ds.get(), t.get(), class_id, session, frame));
  const auto stem = "average_c" + std::to_string(class_id) + "_s" + std::to_string(session);
  const auto csv = dir / (stem + ".csv");
  const auto pgm = dir / (stem + ".pgm");
  check(sh_write_average_frame(frame, csv.string().c_str(), pgm.string().c_str()));
  std::printf("%s\n%s\n", csv.string().c_str(), pgm.string().c_str());
}

void cmd_analyze_slip(const Options& o, const std::string& dataset, const std::string& thresholds,
                      int window) {
  auto cfg = load_config(o);
  const auto dir = out_dir(o);
  auto ds = read_dataset(resolve(dataset, cfg.get(), "slip", o));
  auto t = read_thresholds(resolve(thresholds, cfg.get(), "thresholds", o));
  Text report;
  check(sh_analyze_slip(ds.get(), t.get(), window, dir.string().c_str(), report.out()));
  write_text(dir / "slip_report.json", report.str());
  std::fputs(report.str().c_str(), stdout);
}

void cmd_power(const Options& o) {
  auto cfg = load_config(o);
  Text table, report;
  check(sh_power_report(cfg.get(), table.out(), report.out()));
  std::fputs(o.json ? report.str().c_str() : table.str().c_str(), stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SmartHand tactile pipeline: simulate, calibrate, train, evaluate, profile"};
  app.set_version_flag("--version", std::string(sh_version()));
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  std::uint64_t seed = 0;
  double rate = 0.0;
  app.add_option("--config", o.config, "JSON run configuration");
  auto* seed_opt = app.add_option("--seed", seed, "seed for every random stream (default 0)");
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  app.add_flag("--json", o.json, "print JSON instead of text");
  auto* rate_opt = app.add_option("--rate", rate,
                                  "cadence in Hz: scan rate for simulate (100), "
                                  "latency budget for infer (8)")
                       ->check(CLI::PositiveNumber);

  std::string dataset, thresholds, model, frames, pgm_dir, method;
  bool with_imu = false;
  int window = 5, class_id = 13, session = 1;

  auto* simulate = app.add_subcommand("simulate", "generate dataset, calibration and slip files");
  simulate->add_option("--pgm-dir", pgm_dir, "also dump every dataset frame as 16-bit PGM");

  auto* calibrate = app.add_subcommand("calibrate", "per-taxel thresholds from empty-hand frames");
  calibrate->add_option("--frames", frames, "empty-hand dataset (default <out>/calibration.stag)");

  auto* train = app.add_subcommand("train", "train the network on one random split");
  auto* eval = app.add_subcommand("eval", "cross-validation report");
  eval->add_option("method", method, "cv or loso")->required()->check(CLI::IsMember({"cv", "loso"}));
  auto* infer = app.add_subcommand("infer", "classify every frame of a dataset");
  infer->add_option("--model", model, "model file (default <out>/model.stag)");
  auto* profile = app.add_subcommand("profile", "MACC, parameter and memory report");
  profile->add_option("--model", model, "model file (default: freshly built network)");
  profile->add_flag("--imu", with_imu, "include the IMU branch");
  for (auto* sub : {train, eval, infer})
    sub->add_option("--dataset", dataset, "dataset file (default <out>/dataset.stag)");
  for (auto* sub : {train, eval})
    sub->add_option("--thresholds", thresholds, "threshold file (default <out>/thresholds.stag)");
  infer->add_option("--thresholds", thresholds, "threshold file; adds a contact column");

  auto* analyze = app.add_subcommand("analyze", "degradation, average-frame and slip analyses");
  analyze->require_subcommand(1);
  auto* degradation = analyze->add_subcommand("degradation", "relative mean response per session");
  auto* average = analyze->add_subcommand("average", "class average frame for one session");
  average->add_option("--class", class_id, "class id")->capture_default_str();
  average->add_option("--session", session, "session id")->capture_default_str();
  auto* slip = analyze->add_subcommand("slip", "centroid tracking and slip classification");
  slip->add_option("--window", window, "frames per velocity fit")->capture_default_str();
  for (auto* sub : {degradation, average, slip}) {
    sub->add_option("--dataset", dataset, "dataset file");
    sub->add_option("--thresholds", thresholds, "threshold file");
  }

  auto* power = app.add_subcommand("power", "duty-cycle power, energy and battery life");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }
  if (*seed_opt) o.seed = seed;
  if (*rate_opt) o.rate = rate;

  try {
    if (*simulate) cmd_simulate(o, pgm_dir);
    else if (*calibrate) cmd_calibrate(o, frames);
    else if (*train) cmd_train(o, dataset, thresholds);
    else if (*eval) cmd_eval(o, method, dataset, thresholds);
    else if (*infer) cmd_infer(o, model, dataset, thresholds);
    else if (*profile) cmd_profile(o, model, with_imu);
    else if (*degradation) cmd_analyze_degradation(o, dataset, thresholds);
    else if (*average) cmd_analyze_average(o, dataset, thresholds, class_id, session);
    else if (*slip) cmd_analyze_slip(o, dataset, thresholds, window);
    else if (*power) cmd_power(o);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error (%s): %s\n", sh_status_name(f.status), f.message.c_str());
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
