#include "smarthand/smarthand.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <nlohmann/json.hpp>
#include <memory>
#include <new>
#include <string>

#include "smarthand/analysis.hpp"
#include "smarthand/config.hpp"
#include "smarthand/error.hpp"
#include "smarthand/eval.hpp"
#include "smarthand/model.hpp"

using namespace smarthand;
using ojson = nlohmann::ordered_json;

struct sh_config {
  RunConfig cfg;
};
struct sh_dataset {
  Dataset ds;
};
struct sh_thresholds {
  ThresholdMap t;
};
struct sh_model {
  nn::ModelGraph graph;
  std::unique_ptr<InferenceEngine> engine;
  std::uint16_t engine_baseline = 0;

  const InferenceEngine& engine_for(std::uint16_t baseline) {
    if (!engine || engine_baseline != baseline) {
      engine = std::make_unique<InferenceEngine>(graph, baseline);
      engine_baseline = baseline;
    }
    return *engine;
  }
};

namespace {

thread_local std::string g_last_error;

sh_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::Io: return SH_ERR_IO;
    case ErrorKind::BadMagic: return SH_ERR_BAD_MAGIC;
    case ErrorKind::Truncated: return SH_ERR_TRUNCATED;
    case ErrorKind::Validation: return SH_ERR_VALIDATION;
    case ErrorKind::InvalidArgument: return SH_ERR_INVALID_ARGUMENT;
    case ErrorKind::BufferLimit: return SH_ERR_BUFFER_LIMIT;
    case ErrorKind::Singular: return SH_ERR_SINGULAR;
    case ErrorKind::NonConvergence: return SH_ERR_NON_CONVERGENCE;
    case ErrorKind::MissingCache: return SH_ERR_MISSING_CACHE;
    case ErrorKind::Config: return SH_ERR_CONFIG;
  }
  return SH_ERR_INTERNAL;
}

template <class F>
sh_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return SH_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SH_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SH_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return SH_ERR_INTERNAL;
  }
}

template <class T>
void need(const T* p, const char* what) {
  require(p != nullptr, ErrorKind::InvalidArgument, std::string(what) + " is NULL");
}

char* dup(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

EpochCallback progress_callback(sh_progress_fn fn, void* user, std::string prefix) {
  if (!fn) return {};
  return [=](const EpochStats& e) {
    char line[256];
    std::snprintf(line, sizeof line,
                  "%sepoch %d lr %.3g train_loss %.4f train_acc %.4f val_loss %.4f val_acc %.4f",
                  prefix.c_str(), e.epoch, e.lr, e.train_loss, e.train_accuracy, e.val_loss,
                  e.val_accuracy);
    fn(line, user);
  };
}

const Recording& recording_at(const Dataset& ds, std::size_t index) {
  for (const auto& [s, recs] : ds.sessions) {
    if (index < recs.size()) return recs[index];
    index -= recs.size();
  }
  fail(ErrorKind::InvalidArgument, "recording index out of range");
}

TactileFrame frame_from(const std::uint16_t* values) {
  TactileFrame f;
  std::copy(values, values + kTaxels, f.values.begin());
  return f;
}

}  // namespace

extern "C" {

const char* sh_last_error(void) { return g_last_error.c_str(); }

const char* sh_status_name(sh_status status) {
  switch (status) {
    case SH_OK: return "ok";
    case SH_ERR_IO: return "io";
    case SH_ERR_BAD_MAGIC: return "bad_magic";
    case SH_ERR_TRUNCATED: return "truncated";
    case SH_ERR_VALIDATION: return "validation";
    case SH_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case SH_ERR_BUFFER_LIMIT: return "buffer_limit";
    case SH_ERR_SINGULAR: return "singular";
    case SH_ERR_NON_CONVERGENCE: return "non_convergence";
    case SH_ERR_MISSING_CACHE: return "missing_cache";
    case SH_ERR_CONFIG: return "config";
    case SH_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void sh_string_free(char* s) { std::free(s); }

const char* sh_version(void) { return "1.0.0"; }

// ---- configuration ---------------------------------------------------------

sh_status sh_config_default(sh_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new sh_config{};
  });
}

sh_status sh_config_parse(const char* json_text, sh_config** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    *out = new sh_config{parse_run_config(json_text)};
  });
}

sh_status sh_config_load(const char* path, sh_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new sh_config{load_run_config(path)};
  });
}

void sh_config_free(sh_config* cfg) { delete cfg; }

sh_status sh_config_set_seed(sh_config* cfg, uint64_t seed) {
  return guarded([&] {
    need(cfg, "cfg");
    cfg->cfg.seed = seed;
    cfg->cfg.eval.seed = seed;
  });
}

sh_status sh_config_seed(const sh_config* cfg, uint64_t* out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = cfg->cfg.seed;
  });
}

sh_status sh_config_set_scan_rate(sh_config* cfg, double hz) {
  return guarded([&] {
    need(cfg, "cfg");
    auto readout = cfg->cfg.simulation.readout;
    readout.scan_rate = hz;
    readout.validate();
    cfg->cfg.simulation.readout = readout;
  });
}

sh_status sh_config_baseline(const sh_config* cfg, uint16_t* out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = adc_baseline(cfg->cfg.simulation.readout);
  });
}

sh_status sh_config_to_json(const sh_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup(cfg->cfg.to_json());
  });
}

sh_status sh_config_path(const sh_config* cfg, const char* which, char** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(which, "which");
    need(out, "out");
    const auto& p = cfg->cfg.paths;
    const std::string w = which;
    const std::string* v = w == "dataset"       ? &p.dataset
                           : w == "calibration" ? &p.calibration
                           : w == "thresholds"  ? &p.thresholds
                           : w == "model"       ? &p.model
                           : w == "slip"        ? &p.slip
                                                : nullptr;
    require(v != nullptr, ErrorKind::InvalidArgument, "unknown path name '" + w + "'");
    *out = dup(*v);
  });
}

// ---- datasets --------------------------------------------------------------

sh_status sh_simulate_dataset(const sh_config* cfg, sh_dataset** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = new sh_dataset{simulate_dataset(cfg->cfg.simulation, cfg->cfg.seed)};
  });
}

sh_status sh_simulate_calibration(const sh_config* cfg, sh_dataset** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = new sh_dataset{simulate_calibration_frames(cfg->cfg.simulation, cfg->cfg.seed)};
  });
}

sh_status sh_simulate_slip(const sh_config* cfg, sh_dataset** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = nullptr;
    const auto& c = cfg->cfg;
    if (c.slip.runs.empty()) return;
    Dataset ds;
    ds.class_names = default_class_names();
    const auto grid = SensorGrid::square(kGridRows, kGridCols, c.simulation.law);
    for (std::size_t i = 0; i < c.slip.runs.size(); ++i) {
      const auto& run = c.slip.runs[i];
      SlideScene req;
      req.profile = run.profile;
      req.vx = run.vx;
      req.vy = run.vy;
      const auto scene = generate_scene(req, c.slip.frames, derive_seed(c.seed, 700, i, 1));
      AcquisitionParams params;
      // Slides carry no object class; the session id numbers the run.
      params.label = kEmptyHandClass;
      params.session_id = static_cast<int>(i) + 1;
      params.with_imu = false;
      params.seed = derive_seed(c.seed, 700, i, 2);
      ds.sessions[params.session_id].push_back(
          simulate_recording(scene, grid, c.simulation.readout, c.simulation.law, params));
    }
    *out = new sh_dataset{std::move(ds)};
  });
}

sh_status sh_dataset_read(const char* path, sh_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new sh_dataset{read_dataset(path)};
  });
}

sh_status sh_dataset_write(const sh_dataset* ds, const char* path) {
  return guarded([&] {
    need(ds, "ds");
    need(path, "path");
    write_dataset(ds->ds, path);
  });
}

void sh_dataset_free(sh_dataset* ds) { delete ds; }

sh_status sh_dataset_frame_count(const sh_dataset* ds, size_t* out) {
  return guarded([&] {
    need(ds, "ds");
    need(out, "out");
    *out = ds->ds.frame_count();
  });
}

sh_status sh_dataset_recording_count(const sh_dataset* ds, size_t* out) {
  return guarded([&] {
    need(ds, "ds");
    need(out, "out");
    *out = ds->ds.recording_count();
  });
}

sh_status sh_dataset_summary_json(const sh_dataset* ds, char** out) {
  return guarded([&] {
    need(ds, "ds");
    need(out, "out");
    ojson j;
    j["recordings"] = ds->ds.recording_count();
    j["frames"] = ds->ds.frame_count();
    auto& sessions = j["sessions"] = ojson::array();
    for (const auto& [s, recs] : ds->ds.sessions) {
      ojson sj;
      sj["session"] = s;
      std::size_t frames = 0;
      auto& rj = sj["recordings"] = ojson::array();
      for (const auto& r : recs) {
        frames += r.frames.size();
        const auto stats = frame_stats(r.frames);
        rj.push_back({{"label", r.label},
                      {"class", ds->ds.class_names.at(r.label)},
                      {"frames", r.frames.size()},
                      {"imu_samples", r.imu.size()},
                      {"mean", stats.mean},
                      {"max", stats.max},
                      {"active_taxels", stats.active_taxel_count}});
      }
      sj["frames"] = frames;
      sessions.push_back(std::move(sj));
    }
    *out = dup(j.dump(2) + "\n");
  });
}

sh_status sh_dataset_frame(const sh_dataset* ds, size_t recording, size_t frame,
                           uint16_t* values, uint64_t* timestamp_us) {
  return guarded([&] {
    need(ds, "ds");
    need(values, "values");
    const auto& rec = recording_at(ds->ds, recording);
    require(frame < rec.frames.size(), ErrorKind::InvalidArgument, "frame index out of range");
    std::copy(rec.frames[frame].values.begin(), rec.frames[frame].values.end(), values);
    if (timestamp_us) *timestamp_us = rec.frames[frame].timestamp_us;
  });
}

sh_status sh_dataset_dump_pgm(const sh_dataset* ds, const char* dir) {
  return guarded([&] {
    need(ds, "ds");
    need(dir, "dir");
    const std::filesystem::path root(dir);
    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    require(!ec, ErrorKind::Io, "cannot create " + root.string() + ": " + ec.message());
    std::size_t index = 0;
    for (const auto& [s, recs] : ds->ds.sessions)
      for (const auto& r : recs) {
        for (std::size_t f = 0; f < r.frames.size(); ++f) {
          char name[96];
          std::snprintf(name, sizeof name, "s%d_c%02d_r%zu_f%05zu.pgm", s, r.label, index, f);
          io::write_pgm(root / name, kGridCols, kGridRows, r.frames[f].values, kAdcMax);
        }
        ++index;
      }
  });
}

// ---- calibration -------------------------------------------------------------

sh_status sh_calibrate(const sh_dataset* empty_frames, sh_thresholds** out) {
  return guarded([&] {
    need(empty_frames, "empty_frames");
    need(out, "out");
    std::vector<TactileFrame> frames;
    frames.reserve(empty_frames->ds.frame_count());
    for (const auto& [s, recs] : empty_frames->ds.sessions)
      for (const auto& r : recs) frames.insert(frames.end(), r.frames.begin(), r.frames.end());
    *out = new sh_thresholds{calibrate(frames)};
  });
}

sh_status sh_thresholds_read(const char* path, sh_thresholds** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new sh_thresholds{read_thresholds(path)};
  });
}

sh_status sh_thresholds_write(const sh_thresholds* t, const char* path) {
  return guarded([&] {
    need(t, "t");
    need(path, "path");
    write_thresholds(t->t, path);
  });
}

void sh_thresholds_free(sh_thresholds* t) { delete t; }

sh_status sh_is_contact(const sh_thresholds* t, const uint16_t* values, int* out) {
  return guarded([&] {
    need(t, "t");
    need(values, "values");
    need(out, "out");
    *out = is_contact(frame_from(values), t->t) ? 1 : 0;
  });
}

// ---- model -------------------------------------------------------------------

sh_status sh_model_build(int with_imu, uint64_t seed, sh_model** out) {
  return guarded([&] {
    need(out, "out");
    *out = new sh_model{build_smarthand_net(with_imu != 0, seed), nullptr, 0};
  });
}

sh_status sh_model_read(const char* path, sh_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new sh_model{nn::read_graph(path), nullptr, 0};
  });
}

sh_status sh_model_write(const sh_model* m, const char* path) {
  return guarded([&] {
    need(m, "m");
    need(path, "path");
    nn::write_graph(m->graph, path);
  });
}

void sh_model_free(sh_model* m) { delete m; }

sh_status sh_model_has_imu(const sh_model* m, int* out) {
  return guarded([&] {
    need(m, "m");
    need(out, "out");
    *out = m->graph.has_imu_input() ? 1 : 0;
  });
}

sh_status sh_model_profile_json(const sh_model* m, char** out) {
  return guarded([&] {
    need(m, "m");
    need(out, "out");
    *out = dup(profile(m->graph).to_json());
  });
}

sh_status sh_model_infer(sh_model* m, const uint16_t* values, const double* imu,
                         uint16_t baseline, float* probs) {
  return guarded([&] {
    need(m, "m");
    need(values, "values");
    need(probs, "probs");
    std::optional<ImuFeatures> features;
    if (imu) {
      features.emplace();
      std::copy(imu, imu + kImuFeatures, features->begin());
    }
    const auto p = m->engine_for(baseline).infer(frame_from(values), features);
    std::copy(p.begin(), p.end(), probs);
  });
}

sh_status sh_train(const sh_config* cfg, const sh_dataset* ds, const sh_thresholds* t,
                   sh_progress_fn progress, void* user, sh_model** model, char** report_json,
                   char** curves_csv) {
  return guarded([&] {
    need(cfg, "cfg");
    need(ds, "ds");
    need(t, "t");
    need(model, "model");
    const auto& c = cfg->cfg;
    c.eval.validate();
    const auto data = prepare_samples(ds->ds, t->t, adc_baseline(c.simulation.readout),
                                      c.eval.with_imu);
    require(data.size() >= static_cast<std::size_t>(c.eval.n_folds), ErrorKind::Validation,
            "fewer samples than folds");
    // Same split and streams as fold 0 of random cross-validation.
    const auto folds = random_folds(data.size(), c.eval.n_folds, derive_seed(c.eval.seed, 11));
    std::vector<std::size_t> train_idx;
    for (std::size_t f = 1; f < folds.size(); ++f)
      train_idx.insert(train_idx.end(), folds[f].begin(), folds[f].end());
    std::sort(train_idx.begin(), train_idx.end());
    auto net = build_smarthand_net(c.eval.with_imu, derive_seed(c.eval.seed, 21, 0));
    auto result = train(std::move(net), data, train_idx, folds[0], c.eval,
                        derive_seed(c.eval.seed, 31, 0), progress_callback(progress, user, ""));
    const auto pred = predict(result.model, data, folds[0]);

    ojson j;
    j["train_frames"] = train_idx.size();
    j["val_frames"] = folds[0].size();
    j["epochs"] = c.eval.epochs;
    j["with_imu"] = c.eval.with_imu;
    j["seed"] = c.eval.seed;
    j["val_top1"] = topk_accuracy(pred.probs, pred.labels, 1);
    j["val_top3"] = topk_accuracy(pred.probs, pred.labels, 3);
    j["val_loss"] = pred.loss;
    auto& curves = j["curves"] = ojson::array();
    std::string csv = "epoch,lr,train_loss,train_accuracy,val_loss,val_accuracy\n";
    char line[256];
    for (const auto& e : result.curves) {
      curves.push_back({{"epoch", e.epoch},
                        {"lr", e.lr},
                        {"train_loss", e.train_loss},
                        {"train_accuracy", e.train_accuracy},
                        {"val_loss", e.val_loss},
                        {"val_accuracy", e.val_accuracy}});
      std::snprintf(line, sizeof line, "%d,%.9g,%.9f,%.9f,%.9f,%.9f\n", e.epoch, e.lr,
                    e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy);
      csv += line;
    }
    auto handle = std::make_unique<sh_model>(sh_model{std::move(result.model), nullptr, 0});
    char* rj = report_json ? dup(j.dump(2) + "\n") : nullptr;
    char* cj = nullptr;
    try {
      cj = curves_csv ? dup(csv) : nullptr;
    } catch (...) {
      std::free(rj);
      throw;
    }
    if (report_json) *report_json = rj;
    if (curves_csv) *curves_csv = cj;
    *model = handle.release();
  });
}

sh_status sh_eval(const sh_config* cfg, const sh_dataset* ds, const sh_thresholds* t,
                  const char* method, const char* out_dir, sh_progress_fn progress, void* user,
                  char** report_json) {
  return guarded([&] {
    need(cfg, "cfg");
    need(ds, "ds");
    need(t, "t");
    need(method, "method");
    const std::string m = method;
    require(m == "cv" || m == "loso", ErrorKind::InvalidArgument,
            "method must be \"cv\" or \"loso\"");
    const auto& c = cfg->cfg;
    const auto data = prepare_samples(ds->ds, t->t, adc_baseline(c.simulation.readout),
                                      c.eval.with_imu);
    FoldCallback on_fold;
    if (progress)
      on_fold = [&](const FoldResult& f) {
        char line[160];
        std::snprintf(line, sizeof line, "%s %d: top1 %.4f top3 %.4f (%zu train, %zu val)",
                      m == "loso" ? "session" : "fold", f.fold, f.top1, f.top3, f.train_frames,
                      f.val_frames);
        progress(line, user);
      };
    const auto report = m == "cv" ? cv_random(data, c.eval, on_fold) : cv_loso(data, c.eval, on_fold);
    if (out_dir) report.write(out_dir);
    if (report_json) *report_json = dup(report.to_json());
  });
}

sh_status sh_infer_dataset(sh_model* m, const sh_dataset* ds, const sh_thresholds* t,
                           uint16_t baseline, double rate_hz, const char* out_dir,
                           char** summary_json) {
  return guarded([&] {
    need(m, "m");
    need(ds, "ds");
    require(rate_hz > 0 && std::isfinite(rate_hz), ErrorKind::InvalidArgument,
            "rate must be positive");
    const auto& engine = m->engine_for(baseline);
    const bool use_imu = engine.has_imu_input();

    std::string csv = "recording,session,label,frame,timestamp_us";
    if (t) csv += ",contact";
    csv += ",predicted,probability\n";
    std::size_t frames = 0, correct = 0, contact_frames = 0, contact_correct = 0;
    std::vector<double> latency_ms;
    std::size_t index = 0;
    char line[160];
    for (const auto& [s, recs] : ds->ds.sessions)
      for (const auto& rec : recs) {
        for (std::size_t f = 0; f < rec.frames.size(); ++f) {
          const auto& frame = rec.frames[f];
          std::optional<ImuFeatures> imu;
          if (use_imu) {
            auto it = std::find_if(rec.imu.begin(), rec.imu.end(), [&](const ImuSample& x) {
              return x.timestamp_us == frame.timestamp_us;
            });
            require(it != rec.imu.end(), ErrorKind::Validation,
                    "no IMU sample at timestamp " + std::to_string(frame.timestamp_us));
            imu = imu_features(*it);
          }
          const auto t0 = std::chrono::steady_clock::now();
          const bool contact = t ? is_contact(frame, t->t) : true;
          const auto p = engine.infer(frame, imu);
          const auto t1 = std::chrono::steady_clock::now();
          latency_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
          const auto best = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
          ++frames;
          correct += best == rec.label;
          if (t && contact) {
            ++contact_frames;
            contact_correct += best == rec.label;
          }
          std::snprintf(line, sizeof line, "%zu,%d,%d,%zu,%llu", index, s, rec.label, f,
                        static_cast<unsigned long long>(frame.timestamp_us));
          csv += line;
          if (t) csv += contact ? ",1" : ",0";
          std::snprintf(line, sizeof line, ",%d,%.6f\n", best, static_cast<double>(p[best]));
          csv += line;
        }
        ++index;
      }

    ojson report;
    report["frames"] = frames;
    report["accuracy"] = frames ? static_cast<double>(correct) / frames : 0.0;
    if (t) {
      report["contact_frames"] = contact_frames;
      report["contact_accuracy"] =
          contact_frames ? static_cast<double>(contact_correct) / contact_frames : 0.0;
    }
    report["with_imu"] = use_imu;
    if (out_dir) {
      const std::filesystem::path dir(out_dir);
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      require(!ec, ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
      io::write_text(dir / "predictions.csv", csv);
      io::write_text(dir / "infer_report.json", report.dump(2) + "\n");
    }
    if (summary_json) {
      ojson timing;
      double mean = 0.0, worst = 0.0;
      for (double v : latency_ms) {
        mean += v;
        worst = std::max(worst, v);
      }
      if (!latency_ms.empty()) mean /= static_cast<double>(latency_ms.size());
      timing["mean_latency_ms"] = mean;
      timing["max_latency_ms"] = worst;
      timing["frames_per_second"] = mean > 0 ? 1000.0 / mean : 0.0;
      timing["rate_hz"] = rate_hz;
      timing["budget_ms"] = 1000.0 / rate_hz;
      timing["within_budget"] = worst <= 1000.0 / rate_hz;
      report["timing"] = timing;
      *summary_json = dup(report.dump(2) + "\n");
    }
  });
}

// ---- analyses ------------------------------------------------------------------

sh_status sh_analyze_degradation(const sh_dataset* ds, const sh_thresholds* t, uint16_t baseline,
                                 char** report_json) {
  return guarded([&] {
    need(ds, "ds");
    need(t, "t");
    need(report_json, "report_json");
    *report_json = dup(relative_mean_response(ds->ds, t->t, baseline).to_json());
  });
}

sh_status sh_class_average_frame(const sh_dataset* ds, const sh_thresholds* t, int class_id,
                                 int session, double* out) {
  return guarded([&] {
    need(ds, "ds");
    need(t, "t");
    need(out, "out");
    const auto avg = class_average_frame(ds->ds, t->t, class_id, session);
    std::copy(avg.begin(), avg.end(), out);
  });
}

sh_status sh_write_average_frame(const double* frame, const char* csv_path, const char* pgm_path) {
  return guarded([&] {
    need(frame, "frame");
    need(csv_path, "csv_path");
    need(pgm_path, "pgm_path");
    AverageFrame avg;
    std::copy(frame, frame + kTaxels, avg.begin());
    write_average_frame(avg, csv_path, pgm_path);
  });
}

sh_status sh_analyze_slip(const sh_dataset* ds, const sh_thresholds* t, int window,
                          const char* out_dir, char** report_json) {
  return guarded([&] {
    need(ds, "ds");
    need(t, "t");
    std::filesystem::path dir;
    if (out_dir) {
      dir = out_dir;
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      require(!ec, ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
    }
    ojson all = ojson::array();
    std::size_t index = 0;
    for (const auto& [s, recs] : ds->ds.sessions)
      for (const auto& rec : recs) {
        const auto report = detect_slip(rec.frames, t->t, window);
        ojson j;
        j["recording"] = index;
        j["session"] = s;
        j["label"] = rec.label;
        j["class"] = ds->ds.class_names.at(rec.label);
        const auto parsed = ojson::parse(report.to_json());
        for (const auto& [k, v] : parsed.items()) j[k] = v;
        all.push_back(std::move(j));
        if (out_dir)
          io::write_text(dir / ("slip_track_" + std::to_string(index) + ".csv"),
                         report.track_csv());
        ++index;
      }
    if (report_json) *report_json = dup(all.dump(2) + "\n");
  });
}

// ---- power -----------------------------------------------------------------------

sh_status sh_duty_cycle(double t_on_s, double t_off_s, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = duty_cycle(t_on_s, t_off_s);
  });
}

sh_status sh_average_power(const sh_config* cfg, double dc, double* out_mw) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out_mw, "out_mw");
    *out_mw = average_power(dc, cfg->cfg.power.profile);
  });
}

sh_status sh_power_report(const sh_config* cfg, char** table, char** report_json) {
  return guarded([&] {
    need(cfg, "cfg");
    const auto& p = cfg->cfg.power;
    const auto r = power_report(p.profile, p.duty_cycle, p.hours_per_day, p.battery_wh);
    char* tt = table ? dup(r.table()) : nullptr;
    try {
      if (report_json) *report_json = dup(r.to_json());
    } catch (...) {
      std::free(tt);
      throw;
    }
    if (table) *table = tt;
  });
}

}  // extern "C"
