#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smarthand/frames.hpp"
#include "smarthand/nn.hpp"

namespace smarthand {

/// Raw accel + gyro counts of one IMU sample.
inline constexpr int kImuFeatures = 6;
inline constexpr int kImuHidden = 30;
inline constexpr int kImuEmbedding = 3;
inline constexpr double kImuScale = 32768.0;

using ImuFeatures = std::array<double, kImuFeatures>;

/// Tactile network: 1x32x32 input, 16-filter stem, two residual blocks
/// (16 and 32 filters), 17 logits. With `with_imu` a 6-30-3 MLP branch is
/// concatenated to the flattened features ahead of the classifier.
nn::ModelGraph build_smarthand_net(bool with_imu, std::uint64_t seed);

/// Input width of the final dense layer.
std::size_t classifier_input_width(const nn::ModelGraph& g);

ImuFeatures imu_features(const ImuSample& s);

/// (count - baseline) / 4095 for every taxel, packed as an (N, 1, 32, 32)
/// tensor.
template <typename T>
nn::Tensor<T> frames_to_tensor(std::span<const TactileFrame* const> frames, std::uint16_t baseline);

template <typename T>
nn::Tensor<T> imu_to_tensor(std::span<const ImuFeatures> imu);

struct LayerProfile {
  int index = 0;
  std::string kind;
  std::array<int, 3> output_shape{};  ///< C, H, W
  std::uint64_t macc = 0;
  std::size_t params = 0;
  std::size_t activation_bytes = 0;  ///< 32-bit output tensor at batch 1
};

struct ProfileReport {
  std::uint64_t macc_total = 0;
  std::size_t param_count = 0;
  std::size_t param_bytes_32bit = 0;
  std::size_t peak_activation_bytes = 0;  ///< live 32-bit tensors at batch 1
  std::vector<LayerProfile> layers;

  std::string to_json() const;
};

/// Static cost model. Conv: k*k*C_in*C_out*H_out*W_out; dense: in*out;
/// every other layer 0 MACC.
ProfileReport profile(const nn::ModelGraph& g);

/// Eval-mode class probabilities in 64-bit. Throws InvalidArgument when IMU
/// features are supplied to a net without the branch (or vice versa).
std::array<double, kNumClasses> infer(const nn::ModelGraph& g, const TactileFrame& frame,
                                      const std::optional<ImuFeatures>& imu,
                                      std::uint16_t baseline);

/// 32-bit inference path used for deployment-style throughput.
class InferenceEngine {
 public:
  InferenceEngine(const nn::ModelGraph& g, std::uint16_t baseline);

  std::array<float, kNumClasses> infer(const TactileFrame& frame,
                                       const std::optional<ImuFeatures>& imu = std::nullopt) const;
  bool has_imu_input() const { return graph_.has_imu_input(); }

 private:
  nn::InferenceGraph graph_;
  std::uint16_t baseline_;
};

int argmax(std::span<const double> v);

}  // namespace smarthand
