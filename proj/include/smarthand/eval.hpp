#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "smarthand/calib.hpp"
#include "smarthand/frames.hpp"
#include "smarthand/model.hpp"

namespace smarthand {

struct EvalConfig {
  int epochs = 60;
  int batch_size = 32;
  double lr0 = 1e-3;
  /// Learning rate is multiplied by lr_gamma at the start of each listed epoch.
  std::vector<int> lr_milestones{20, 40};
  double lr_gamma = 0.1;
  int n_folds = 7;
  std::uint64_t seed = 0;
  bool with_imu = false;
  /// Folds trained concurrently; 0 picks the hardware concurrency.
  int workers = 1;

  double learning_rate(int epoch) const;
  void validate() const;
};

/// Frames that enter training and evaluation, flattened across sessions.
struct SampleSet {
  std::vector<TactileFrame> frames;
  std::vector<ImuFeatures> imu;  ///< parallel to frames when IMU features are used
  std::vector<int> labels;
  std::vector<int> sessions;
  std::uint16_t baseline = 0;

  std::size_t size() const { return frames.size(); }
  bool has_imu() const { return !imu.empty(); }
};

/// Object recordings keep their contact frames only; empty-hand recordings
/// keep every frame. With `with_imu`, every kept frame needs an IMU sample
/// with the same timestamp.
SampleSet prepare_samples(const Dataset& dataset, const ThresholdMap& thresholds,
                          std::uint16_t baseline, bool with_imu);

struct EpochStats {
  int epoch = 0;  ///< 1-based
  double lr = 0.0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  nn::ModelGraph model;
  std::vector<EpochStats> curves;
};

/// Optional per-epoch observer (progress logging).
using EpochCallback = std::function<void(const EpochStats&)>;

/// Shuffled mini-batch Adam on `train_idx`, validated on `val_idx` after
/// every epoch. A trailing batch of one sample joins the previous batch.
TrainResult train(nn::ModelGraph model, const SampleSet& data,
                  std::span<const std::size_t> train_idx, std::span<const std::size_t> val_idx,
                  const EvalConfig& cfg, std::uint64_t seed, const EpochCallback& on_epoch = {});

using Probabilities = std::vector<std::array<double, kNumClasses>>;

struct Predictions {
  Probabilities probs;
  std::vector<int> labels;
  double loss = 0.0;  ///< mean cross-entropy
};

/// Eval-mode forward over the selected samples.
Predictions predict(const nn::ModelGraph& model, const SampleSet& data,
                    std::span<const std::size_t> idx, int batch_size = 256);

/// Fraction of samples whose label ranks within the top k. Ties rank the
/// lower class index first.
double topk_accuracy(const Probabilities& probs, std::span<const int> labels, int k);

using ConfusionMatrix = std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses>;

/// Rows are true classes, columns argmax predictions.
ConfusionMatrix confusion(const Probabilities& probs, std::span<const int> labels);

/// Shuffled frame-level partition into k folds whose sizes differ by at most one.
std::vector<std::vector<std::size_t>> random_folds(std::size_t n, int k, std::uint64_t seed);

struct FoldResult {
  int fold = 0;  ///< fold index (random CV) or held-out session id (LOSO)
  std::size_t train_frames = 0;
  std::size_t val_frames = 0;
  double top1 = 0.0;
  double top3 = 0.0;
  std::vector<EpochStats> curves;
  ConfusionMatrix confusion{};
};

struct EvalReport {
  std::string method;  ///< "cv" or "loso"
  std::vector<FoldResult> folds;
  double top1_mean = 0.0, top1_std = 0.0;
  double top3_mean = 0.0, top3_std = 0.0;
  ConfusionMatrix confusion{};  ///< summed over folds

  std::string to_json() const;
  std::string curves_csv() const;
  std::string confusion_csv() const;
  /// Writes report.json, learning_curves.csv, confusion.csv, confusion.pgm.
  void write(const std::filesystem::path& dir) const;
};

using FoldCallback = std::function<void(const FoldResult&)>;

/// Random-split cross-validation; every sample is validated exactly once.
EvalReport cv_random(const SampleSet& data, const EvalConfig& cfg, const FoldCallback& on_fold = {});

/// Leave-one-session-out cross-validation, one fold per session.
EvalReport cv_loso(const SampleSet& data, const EvalConfig& cfg, const FoldCallback& on_fold = {});

/// Population mean and standard deviation.
std::pair<double, double> mean_std(std::span<const double> v);

}  // namespace smarthand
