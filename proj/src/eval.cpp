#include "smarthand/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "smarthand/error.hpp"
#include "smarthand/sensorsim.hpp"

namespace smarthand {

double EvalConfig::learning_rate(int epoch) const {
  double lr = lr0;
  for (int m : lr_milestones)
    if (epoch >= m) lr *= lr_gamma;
  return lr;
}

void EvalConfig::validate() const {
  require(epochs >= 1, ErrorKind::Config, "epochs must be >= 1");
  require(batch_size >= 2, ErrorKind::Config, "batch_size must be >= 2");
  require(lr0 >= 0.0 && std::isfinite(lr0), ErrorKind::Config, "lr0 must be non-negative");
  require(lr_gamma > 0.0 && lr_gamma <= 1.0, ErrorKind::Config, "lr_gamma must lie in (0, 1]");
  for (int m : lr_milestones) require(m >= 1, ErrorKind::Config, "lr milestones must be >= 1");
  require(n_folds >= 2, ErrorKind::Config, "n_folds must be >= 2");
  require(workers >= 0, ErrorKind::Config, "workers must be >= 0");
}

SampleSet prepare_samples(const Dataset& dataset, const ThresholdMap& thresholds,
                          std::uint16_t baseline, bool with_imu) {
  SampleSet s;
  s.baseline = baseline;
  for (const auto& [session, recordings] : dataset.sessions) {
    for (const auto& rec : recordings) {
      const Recording kept = rec.label == kEmptyHandClass ? rec : filter_contact(rec, thresholds);
      std::map<std::uint64_t, const ImuSample*> by_time;
      if (with_imu)
        for (const auto& m : kept.imu) by_time[m.timestamp_us] = &m;
      for (const auto& f : kept.frames) {
        if (with_imu) {
          auto it = by_time.find(f.timestamp_us);
          require(it != by_time.end(), ErrorKind::Validation,
                  "frame at " + std::to_string(f.timestamp_us) + " us in session " +
                      std::to_string(session) + " has no IMU sample");
          s.imu.push_back(imu_features(*it->second));
        }
        s.frames.push_back(f);
        s.labels.push_back(rec.label);
        s.sessions.push_back(session);
      }
    }
  }
  return s;
}

namespace {

struct Batch {
  nn::Tensor64 frames;
  nn::Tensor64 imu;
  std::vector<int> labels;
};

Batch make_batch(const SampleSet& data, std::span<const std::size_t> idx) {
  Batch b;
  std::vector<const TactileFrame*> ptrs;
  ptrs.reserve(idx.size());
  std::vector<ImuFeatures> imu;
  for (std::size_t i : idx) {
    ptrs.push_back(&data.frames[i]);
    b.labels.push_back(data.labels[i]);
    if (data.has_imu()) imu.push_back(data.imu[i]);
  }
  b.frames = frames_to_tensor<double>(ptrs, data.baseline);
  if (data.has_imu()) b.imu = imu_to_tensor<double>(imu);
  return b;
}

/// Batch boundaries over n samples; a trailing singleton merges backwards.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, int batch_size) {
  std::vector<std::pair<std::size_t, std::size_t>> r;
  for (std::size_t s = 0; s < n; s += batch_size) r.emplace_back(s, std::min(n, s + batch_size));
  if (r.size() >= 2 && r.back().second - r.back().first == 1) {
    r[r.size() - 2].second = r.back().second;
    r.pop_back();
  }
  return r;
}

int row_argmax(const double* p, int n) { return static_cast<int>(std::max_element(p, p + n) - p); }

void check_model_matches(const nn::ModelGraph& model, const SampleSet& data) {
  require(model.has_imu_input() == data.has_imu(), ErrorKind::InvalidArgument,
          model.has_imu_input() ? "model expects IMU features but the samples carry none"
                                : "samples carry IMU features but the model has no IMU branch");
}

}  // namespace

TrainResult train(nn::ModelGraph model, const SampleSet& data,
                  std::span<const std::size_t> train_idx, std::span<const std::size_t> val_idx,
                  const EvalConfig& cfg, std::uint64_t seed, const EpochCallback& on_epoch) {
  cfg.validate();
  require(train_idx.size() >= 2, ErrorKind::InvalidArgument,
          "training split needs at least two samples");
  require(!val_idx.empty(), ErrorKind::InvalidArgument, "validation split is empty");
  {
    std::set<std::size_t> train_set(train_idx.begin(), train_idx.end());
    for (std::size_t i : val_idx)
      require(!train_set.count(i), ErrorKind::InvalidArgument,
              "training and validation splits overlap");
    for (std::size_t i : train_idx)
      require(i < data.size(), ErrorKind::InvalidArgument, "sample index out of range");
  }
  check_model_matches(model, data);

  std::vector<std::span<double>> params;
  for (auto& n : model.nodes)
    for (auto& p : n.params) params.emplace_back(p.data);
  nn::AdamState adam;
  nn::AdamConfig adam_cfg;

  TrainResult result;
  std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
  std::uint64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    adam_cfg.lr = cfg.learning_rate(epoch);
    std::mt19937_64 rng(derive_seed(seed, 1, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (auto [lo, hi] : batch_ranges(order.size(), cfg.batch_size)) {
      const Batch b = make_batch(data, std::span(order).subspan(lo, hi - lo));
      nn::ForwardCache<double> cache;
      const auto logits = nn::forward(model, b.frames, data.has_imu() ? &b.imu : nullptr,
                                      nn::Mode::Train, derive_seed(seed, 2, step++), &cache);
      const auto ce = nn::cross_entropy(logits, b.labels);
      const auto grads = nn::backward(model, cache, ce.grad);
      std::vector<std::span<const double>> gspans;
      for (const auto& node_grads : grads)
        for (const auto& g : node_grads) gspans.emplace_back(g.data);
      nn::adam_step(params, gspans, adam, adam_cfg);

      const std::size_t n = hi - lo;
      loss_sum += ce.loss * static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i)
        if (row_argmax(logits.data.data() + i * kNumClasses, kNumClasses) == b.labels[i]) ++correct;
    }

    const Predictions val = predict(model, data, val_idx);
    EpochStats e;
    e.epoch = epoch + 1;
    e.lr = adam_cfg.lr;
    e.train_loss = loss_sum / static_cast<double>(order.size());
    e.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    e.val_loss = val.loss;
    e.val_accuracy = topk_accuracy(val.probs, val.labels, 1);
    result.curves.push_back(e);
    if (on_epoch) on_epoch(e);
  }
  result.model = std::move(model);
  return result;
}

Predictions predict(const nn::ModelGraph& model, const SampleSet& data,
                    std::span<const std::size_t> idx, int batch_size) {
  check_model_matches(model, data);
  require(batch_size >= 1, ErrorKind::InvalidArgument, "batch size must be positive");
  Predictions out;
  out.probs.reserve(idx.size());
  double loss_sum = 0.0;
  for (std::size_t lo = 0; lo < idx.size(); lo += batch_size) {
    const std::size_t hi = std::min(idx.size(), lo + batch_size);
    const Batch b = make_batch(data, idx.subspan(lo, hi - lo));
    const auto logits = nn::forward(model, b.frames, data.has_imu() ? &b.imu : nullptr);
    loss_sum += nn::cross_entropy(logits, b.labels).loss * static_cast<double>(hi - lo);
    const auto p = nn::softmax(logits);
    for (std::size_t i = 0; i < hi - lo; ++i) {
      std::array<double, kNumClasses> row{};
      std::copy_n(p.data.data() + i * kNumClasses, kNumClasses, row.begin());
      out.probs.push_back(row);
      out.labels.push_back(b.labels[i]);
    }
  }
  out.loss = idx.empty() ? 0.0 : loss_sum / static_cast<double>(idx.size());
  return out;
}

double topk_accuracy(const Probabilities& probs, std::span<const int> labels, int k) {
  require(k >= 1 && k <= kNumClasses, ErrorKind::InvalidArgument, "k must lie in [1, 17]");
  require(probs.size() == labels.size(), ErrorKind::InvalidArgument,
          "prediction and label counts differ");
  if (probs.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const int y = labels[i];
    require(y >= 0 && y < kNumClasses, ErrorKind::InvalidArgument, "label out of range");
    int rank = 0;
    for (int j = 0; j < kNumClasses; ++j)
      if (probs[i][j] > probs[i][y] || (probs[i][j] == probs[i][y] && j < y)) ++rank;
    if (rank < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probs.size());
}

ConfusionMatrix confusion(const Probabilities& probs, std::span<const int> labels) {
  require(probs.size() == labels.size(), ErrorKind::InvalidArgument,
          "prediction and label counts differ");
  ConfusionMatrix m{};
  for (std::size_t i = 0; i < probs.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < kNumClasses, ErrorKind::InvalidArgument,
            "label out of range");
    ++m[labels[i]][row_argmax(probs[i].data(), kNumClasses)];
  }
  return m;
}

std::vector<std::vector<std::size_t>> random_folds(std::size_t n, int k, std::uint64_t seed) {
  require(k >= 2, ErrorKind::InvalidArgument, "need at least two folds");
  require(n >= static_cast<std::size_t>(k), ErrorKind::InvalidArgument,
          "fewer samples than folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> folds(k);
  const std::size_t base = n / k, extra = n % k;
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const std::size_t len = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    folds[f].assign(order.begin() + pos, order.begin() + pos + len);
    std::sort(folds[f].begin(), folds[f].end());
    pos += len;
  }
  return folds;
}

std::pair<double, double> mean_std(std::span<const double> v) {
  if (v.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

namespace {

struct FoldPlan {
  int id;
  std::vector<std::size_t> train, val;
};

EvalReport run_folds(const std::string& method, const SampleSet& data, const EvalConfig& cfg,
                     std::vector<FoldPlan> plans, const FoldCallback& on_fold) {
  std::vector<FoldResult> results(plans.size());
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  std::exception_ptr failure;
  auto worker = [&]() {
    for (;;) {
      const std::size_t f = next.fetch_add(1);
      if (f >= plans.size()) return;
      try {
        const auto& plan = plans[f];
        auto model = build_smarthand_net(cfg.with_imu, derive_seed(cfg.seed, 21, f));
        auto trained = train(std::move(model), data, plan.train, plan.val, cfg,
                             derive_seed(cfg.seed, 31, f));
        const Predictions p = predict(trained.model, data, plan.val);
        FoldResult r;
        r.fold = plan.id;
        r.train_frames = plan.train.size();
        r.val_frames = plan.val.size();
        r.top1 = topk_accuracy(p.probs, p.labels, 1);
        r.top3 = topk_accuracy(p.probs, p.labels, 3);
        r.curves = std::move(trained.curves);
        r.confusion = confusion(p.probs, p.labels);
        std::lock_guard lock(callback_mutex);
        if (on_fold) on_fold(r);
        results[f] = std::move(r);
      } catch (...) {
        std::lock_guard lock(callback_mutex);
        if (!failure) failure = std::current_exception();
        next = plans.size();
        return;
      }
    }
  };
  int workers = cfg.workers == 0 ? static_cast<int>(std::thread::hardware_concurrency()) : cfg.workers;
  workers = std::clamp(workers, 1, static_cast<int>(plans.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  EvalReport report;
  report.method = method;
  report.folds = std::move(results);
  std::vector<double> top1, top3;
  for (const auto& f : report.folds) {
    top1.push_back(f.top1);
    top3.push_back(f.top3);
    for (int i = 0; i < kNumClasses; ++i)
      for (int j = 0; j < kNumClasses; ++j) report.confusion[i][j] += f.confusion[i][j];
  }
  std::tie(report.top1_mean, report.top1_std) = mean_std(top1);
  std::tie(report.top3_mean, report.top3_std) = mean_std(top3);
  return report;
}

}  // namespace

EvalReport cv_random(const SampleSet& data, const EvalConfig& cfg, const FoldCallback& on_fold) {
  cfg.validate();
  std::map<int, std::size_t> per_class;
  for (int y : data.labels) ++per_class[y];
  require(!per_class.empty(), ErrorKind::InvalidArgument, "no samples to evaluate");
  for (auto [cls, count] : per_class)
    require(count >= static_cast<std::size_t>(cfg.n_folds), ErrorKind::InvalidArgument,
            "class " + std::to_string(cls) + " has " + std::to_string(count) +
                " samples, fewer than the " + std::to_string(cfg.n_folds) + " folds");
  const auto folds = random_folds(data.size(), cfg.n_folds, derive_seed(cfg.seed, 11));
  std::vector<FoldPlan> plans;
  for (int f = 0; f < cfg.n_folds; ++f) {
    FoldPlan p{f, {}, folds[f]};
    for (int g = 0; g < cfg.n_folds; ++g)
      if (g != f) p.train.insert(p.train.end(), folds[g].begin(), folds[g].end());
    std::sort(p.train.begin(), p.train.end());
    plans.push_back(std::move(p));
  }
  return run_folds("cv", data, cfg, std::move(plans), on_fold);
}

EvalReport cv_loso(const SampleSet& data, const EvalConfig& cfg, const FoldCallback& on_fold) {
  cfg.validate();
  const std::set<int> sessions(data.sessions.begin(), data.sessions.end());
  require(sessions.size() >= 2, ErrorKind::InvalidArgument,
          "leave-one-session-out needs at least two sessions");
  std::vector<FoldPlan> plans;
  for (int s : sessions) {
    FoldPlan p{s, {}, {}};
    for (std::size_t i = 0; i < data.size(); ++i) (data.sessions[i] == s ? p.val : p.train).push_back(i);
    plans.push_back(std::move(p));
  }
  return run_folds("loso", data, cfg, std::move(plans), on_fold);
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["method"] = method;
  auto& folds_json = j["folds"] = nlohmann::ordered_json::array();
  for (const auto& f : folds) {
    nlohmann::ordered_json e;
    e[method == "loso" ? "session" : "fold"] = f.fold;
    e["train_frames"] = f.train_frames;
    e["val_frames"] = f.val_frames;
    e["top1"] = f.top1;
    e["top3"] = f.top3;
    folds_json.push_back(std::move(e));
  }
  j["top1"] = {{"mean", top1_mean}, {"std", top1_std}};
  j["top3"] = {{"mean", top3_mean}, {"std", top3_std}};
  auto& cm = j["confusion"] = nlohmann::ordered_json::array();
  for (const auto& row : confusion) cm.push_back(row);
  return j.dump(2) + "\n";
}

std::string EvalReport::curves_csv() const {
  std::string out = (method == "loso" ? "session" : "fold");
  out += ",epoch,lr,train_loss,train_accuracy,val_loss,val_accuracy\n";
  char line[256];
  for (const auto& f : folds)
    for (const auto& e : f.curves) {
      std::snprintf(line, sizeof line, "%d,%d,%.9g,%.9f,%.9f,%.9f,%.9f\n", f.fold, e.epoch, e.lr,
                    e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy);
      out += line;
    }
  return out;
}

std::string EvalReport::confusion_csv() const {
  std::string out = "true\\pred";
  for (int j = 0; j < kNumClasses; ++j) out += "," + std::to_string(j);
  out += "\n";
  for (int i = 0; i < kNumClasses; ++i) {
    out += std::to_string(i);
    for (int j = 0; j < kNumClasses; ++j) out += "," + std::to_string(confusion[i][j]);
    out += "\n";
  }
  return out;
}

void EvalReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  io::write_text(dir / "report.json", to_json());
  io::write_text(dir / "learning_curves.csv", curves_csv());
  io::write_text(dir / "confusion.csv", confusion_csv());
  // Row-normalised heatmap, 16x16 pixels per cell.
  constexpr int kCell = 16, kSide = kNumClasses * kCell;
  std::vector<std::uint16_t> px(kSide * kSide);
  for (int i = 0; i < kNumClasses; ++i) {
    std::uint64_t row_sum = 0;
    for (auto v : confusion[i]) row_sum += v;
    for (int j = 0; j < kNumClasses; ++j) {
      const auto level = static_cast<std::uint16_t>(
          row_sum ? std::lround(255.0 * static_cast<double>(confusion[i][j]) / row_sum) : 0);
      for (int y = 0; y < kCell; ++y)
        for (int x = 0; x < kCell; ++x) px[(i * kCell + y) * kSide + j * kCell + x] = level;
    }
  }
  io::write_pgm(dir / "confusion.pgm", kSide, kSide, px, 255);
}

}  // namespace smarthand
