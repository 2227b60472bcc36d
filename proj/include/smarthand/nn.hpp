#pragma once

// Minimal tensor kernels with hand-written backward passes for exactly the
// layer set of the tactile classifier. Training runs in double precision,
// inference in single precision; both share the same templated kernels.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <type_traits>
#include <vector>

namespace smarthand::nn {

/// NCHW tensor. Vectors are stored as (N, C, 1, 1).
template <typename T>
struct Tensor {
  std::array<int, 4> shape{0, 0, 0, 0};
  std::vector<T> data;

  Tensor() = default;
  Tensor(int n, int c, int h, int w, T fill = T(0))
      : shape{n, c, h, w}, data(static_cast<std::size_t>(n) * c * h * w, fill) {}

  int n() const { return shape[0]; }
  int c() const { return shape[1]; }
  int h() const { return shape[2]; }
  int w() const { return shape[3]; }
  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  /// Elements per sample.
  std::size_t stride0() const { return static_cast<std::size_t>(c()) * h() * w(); }

  T& at(int in, int ic, int ih, int iw) {
    return data[((static_cast<std::size_t>(in) * c() + ic) * h() + ih) * w() + iw];
  }
  T at(int in, int ic, int ih, int iw) const {
    return data[((static_cast<std::size_t>(in) * c() + ic) * h() + ih) * w() + iw];
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    return out;
  }

  bool operator==(const Tensor&) const = default;
};

using Tensor64 = Tensor<double>;
using Tensor32 = Tensor<float>;

enum class Mode { Train, Eval };

enum class LayerKind : std::uint8_t {
  Input = 0,
  ImuInput = 1,
  Conv2d = 2,
  BatchNorm = 3,
  Relu = 4,
  MaxPool = 5,
  AvgPool = 6,
  Dropout = 7,
  Flatten = 8,
  Dense = 9,
  ResidualAdd = 10,
  Concat = 11,
  Softmax = 12,
};

const char* to_string(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::Input;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  int in_channels = 0;
  int out_channels = 0;
  int height = 0;  ///< input nodes only
  int width = 0;   ///< input nodes only
  double dropout = 0.0;
  std::vector<int> inputs;  ///< producer node indices

  void validate() const;
  bool operator==(const LayerSpec&) const = default;
};

/// Per-sample output shape (C, H, W) of every node; vectors are (width, 1, 1).
/// Throws Error(Validation) on any inconsistent wiring or shape.
std::vector<std::array<int, 3>> infer_shapes(std::span<const LayerSpec> specs);

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

struct ConvGeometry {
  int kernel = 3;
  int stride = 1;
  int padding = 0;
};

/// Cross-correlation. w is (C_out, C_in, k, k); output spatial size is
/// floor((H + 2 pad - k) / s) + 1.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, std::span<const T> bias,
                         ConvGeometry geom);

template <typename T>
struct ConvGrads {
  Tensor<T> x;
  Tensor<T> w;
  std::vector<T> bias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, ConvGeometry geom,
                             const Tensor<T>& grad_out);

/// x is (N, in) flattened; w is (out, in, 1, 1).
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, std::span<const T> bias);

template <typename T>
ConvGrads<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out);

/// No padding; ties resolve to the first maximum in scan order.
template <typename T>
Tensor<T> maxpool_forward(const Tensor<T>& x, int kernel, int stride,
                          std::vector<std::uint32_t>* argmax);
template <typename T>
Tensor<T> maxpool_backward(const std::array<int, 4>& x_shape,
                           const std::vector<std::uint32_t>& argmax, const Tensor<T>& grad_out);

template <typename T>
Tensor<T> avgpool_forward(const Tensor<T>& x, int kernel, int stride);
template <typename T>
Tensor<T> avgpool_backward(const std::array<int, 4>& x_shape, int kernel, int stride,
                           const Tensor<T>& grad_out);

inline constexpr double kBatchNormMomentum = 0.1;
inline constexpr double kBatchNormEps = 1e-5;

template <typename T>
struct BatchNormCache {
  Tensor<T> x_hat;
  std::vector<T> inv_std;
  Mode mode = Mode::Eval;
};

/// Train mode normalises with batch statistics (biased variance) and
/// updates the running estimates (unbiased variance); eval mode uses the
/// running estimates. Train mode rejects a batch of one.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, std::span<const T> gamma, std::span<const T> beta,
                            std::span<T> running_mean, std::span<T> running_var, Mode mode,
                            BatchNormCache<T>* cache);

template <typename T>
ConvGrads<T> batchnorm_backward(const BatchNormCache<T>& cache, std::span<const T> gamma,
                                const Tensor<T>& grad_out);

/// Inverted dropout: kept elements scale by 1 / (1 - p). Identity in eval mode.
template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& x, double p, Mode mode, std::uint64_t seed,
                          std::vector<T>* mask);
template <typename T>
Tensor<T> dropout_backward(const std::vector<T>& mask, const Tensor<T>& grad_out);

/// Row-wise softmax over the flattened per-sample features.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);
template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& probs, const Tensor<T>& grad_out);

struct LossResult {
  double loss = 0.0;
  Tensor64 grad;  ///< d loss / d logits
};

/// Mean negative log-likelihood of `labels` under softmax(logits).
LossResult cross_entropy(const Tensor64& logits, std::span<const int> labels);

// ---------------------------------------------------------------------------
// Optimiser
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long step = 0;
};

/// One bias-corrected Adam update over a list of parameter buffers.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const AdamConfig& cfg);

// ---------------------------------------------------------------------------
// Static layer graph
// ---------------------------------------------------------------------------

template <typename T>
struct Node {
  LayerSpec spec;
  std::vector<Tensor<T>> params;   ///< conv/dense: weight, bias; batchnorm: gamma, beta
  std::vector<Tensor<T>> buffers;  ///< batchnorm: running mean, running variance

  bool operator==(const Node&) const = default;
};

/// Layers in topological order; the last node produces the logits.
template <typename T>
struct Graph {
  std::vector<Node<T>> nodes;

  std::size_t param_count() const;
  bool has_imu_input() const;
  void validate() const;

  template <typename U>
  Graph<U> cast() const {
    Graph<U> g;
    g.nodes.reserve(nodes.size());
    for (const auto& n : nodes) {
      Node<U> m;
      m.spec = n.spec;
      for (const auto& p : n.params) m.params.push_back(p.template cast<U>());
      for (const auto& b : n.buffers) m.buffers.push_back(b.template cast<U>());
      g.nodes.push_back(std::move(m));
    }
    return g;
  }

  bool operator==(const Graph&) const = default;
};

using ModelGraph = Graph<double>;
using InferenceGraph = Graph<float>;

/// Per-node activations and auxiliary state kept for the backward pass.
template <typename T>
struct ForwardCache {
  std::vector<Tensor<T>> outputs;
  std::vector<std::vector<std::uint32_t>> argmax;
  std::vector<BatchNormCache<T>> batchnorm;
  std::vector<std::vector<T>> dropout_mask;
  Mode mode = Mode::Eval;
  bool valid = false;
};

/// Eval-mode forward; `imu` may be null when the graph has no IMU input.
template <typename T>
Tensor<T> forward(const Graph<T>& g, const Tensor<T>& frames,
                  std::type_identity_t<const Tensor<T>*> imu);

/// Forward in either mode. Train mode updates batch-norm running statistics
/// in `g`. When `cache` is non-null it is filled for backward().
template <typename T>
Tensor<T> forward(Graph<T>& g, const Tensor<T>& frames, std::type_identity_t<const Tensor<T>*> imu,
                  Mode mode, std::uint64_t seed, std::type_identity_t<ForwardCache<T>*> cache);

/// Parameter gradients, shaped like Graph::nodes[i].params.
using Gradients = std::vector<std::vector<Tensor64>>;

/// Backpropagates d loss / d logits. Throws Error(MissingCache) unless the
/// cache came from a forward pass over the same graph.
Gradients backward(const ModelGraph& g, const ForwardCache<double>& cache,
                   const Tensor64& grad_logits, Tensor64* grad_frames = nullptr);

/// Kaiming-uniform (fan-in) weights, zero biases, unit gamma, zero beta.
void initialize(ModelGraph& g, std::uint64_t seed);

std::vector<std::uint8_t> encode_graph(const ModelGraph& g);
ModelGraph decode_graph(std::span<const std::uint8_t> bytes);
void write_graph(const ModelGraph& g, const std::filesystem::path& path);
ModelGraph read_graph(const std::filesystem::path& path);

}  // namespace smarthand::nn
