#include "smarthand/model.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "smarthand/error.hpp"

namespace smarthand {

using nn::LayerKind;
using nn::LayerSpec;

namespace {

class NetBuilder {
 public:
  int add(LayerSpec spec) {
    nn::Node<double> n;
    n.spec = std::move(spec);
    g_.nodes.push_back(std::move(n));
    return static_cast<int>(g_.nodes.size()) - 1;
  }
  int input(LayerKind kind, int c, int h, int w) {
    LayerSpec s;
    s.kind = kind;
    s.in_channels = c;
    s.height = h;
    s.width = w;
    return add(s);
  }
  int conv(int from, int c_in, int c_out, int k, int stride, int pad) {
    LayerSpec s;
    s.kind = LayerKind::Conv2d;
    s.kernel = k;
    s.stride = stride;
    s.padding = pad;
    s.in_channels = c_in;
    s.out_channels = c_out;
    s.inputs = {from};
    return add(s);
  }
  int bn(int from, int c) {
    LayerSpec s;
    s.kind = LayerKind::BatchNorm;
    s.in_channels = c;
    s.out_channels = c;
    s.inputs = {from};
    return add(s);
  }
  int unary(int from, LayerKind kind, int k = 1, int stride = 1, double p = 0.0) {
    LayerSpec s;
    s.kind = kind;
    s.kernel = k;
    s.stride = stride;
    s.dropout = p;
    s.inputs = {from};
    return add(s);
  }
  int binary(int a, int b, LayerKind kind) {
    LayerSpec s;
    s.kind = kind;
    s.inputs = {a, b};
    return add(s);
  }
  int dense(int from, int in, int out) {
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.in_channels = in;
    s.out_channels = out;
    s.inputs = {from};
    return add(s);
  }
  int conv_bn_relu(int from, int c_in, int c_out, int stride) {
    return unary(bn(conv(from, c_in, c_out, 3, stride, 1), c_out), LayerKind::Relu);
  }

  nn::ModelGraph take() { return std::move(g_); }

 private:
  nn::ModelGraph g_;
};

}  // namespace

nn::ModelGraph build_smarthand_net(bool with_imu, std::uint64_t seed) {
  NetBuilder b;
  int x = b.input(LayerKind::Input, 1, kGridRows, kGridCols);
  x = b.conv_bn_relu(x, 1, 16, 1);
  x = b.conv_bn_relu(x, 16, 16, 1);
  x = b.unary(x, LayerKind::MaxPool, 2, 2);  // 16x16x16

  // Residual block 1: identity shortcut.
  {
    const int skip = x;
    int y = b.conv_bn_relu(x, 16, 16, 1);
    y = b.bn(b.conv(y, 16, 16, 3, 1, 1), 16);
    x = b.unary(b.binary(y, skip, LayerKind::ResidualAdd), LayerKind::Relu);
  }
  // Residual block 2: stride-2 main path, 1x1 projection shortcut.
  {
    const int skip = x;
    int y = b.conv_bn_relu(x, 16, 32, 2);
    y = b.bn(b.conv(y, 32, 32, 3, 1, 1), 32);
    const int proj = b.bn(b.conv(skip, 16, 32, 1, 2, 0), 32);
    x = b.unary(b.binary(y, proj, LayerKind::ResidualAdd), LayerKind::Relu);  // 8x8x32
  }
  x = b.unary(x, LayerKind::MaxPool, 2, 1);  // 7x7x32
  x = b.unary(x, LayerKind::Dropout, 1, 1, 0.2);
  x = b.unary(x, LayerKind::Flatten);
  int width = 32 * 7 * 7;

  if (with_imu) {
    int m = b.input(LayerKind::ImuInput, kImuFeatures, 1, 1);
    m = b.unary(b.dense(m, kImuFeatures, kImuHidden), LayerKind::Relu);
    m = b.dense(m, kImuHidden, kImuEmbedding);
    x = b.binary(x, m, LayerKind::Concat);
    width += kImuEmbedding;
  }
  b.dense(x, width, kNumClasses);

  nn::ModelGraph g = b.take();
  nn::initialize(g, seed);
  g.validate();
  return g;
}

std::size_t classifier_input_width(const nn::ModelGraph& g) {
  require(!g.nodes.empty() && g.nodes.back().spec.kind == LayerKind::Dense,
          ErrorKind::InvalidArgument, "model does not end in a dense classifier");
  return static_cast<std::size_t>(g.nodes.back().spec.in_channels);
}

ImuFeatures imu_features(const ImuSample& s) {
  ImuFeatures f{};
  for (int i = 0; i < 3; ++i) {
    f[i] = s.accel[i] / kImuScale;
    f[3 + i] = s.gyro[i] / kImuScale;
  }
  return f;
}

template <typename T>
nn::Tensor<T> frames_to_tensor(std::span<const TactileFrame* const> frames, std::uint16_t baseline) {
  nn::Tensor<T> t(static_cast<int>(frames.size()), 1, kGridRows, kGridCols);
  T* out = t.data.data();
  for (const TactileFrame* f : frames)
    for (std::uint16_t v : f->values)
      *out++ = static_cast<T>((static_cast<double>(v) - baseline) / kAdcMax);
  return t;
}

template <typename T>
nn::Tensor<T> imu_to_tensor(std::span<const ImuFeatures> imu) {
  nn::Tensor<T> t(static_cast<int>(imu.size()), kImuFeatures, 1, 1);
  for (std::size_t i = 0; i < imu.size(); ++i)
    for (int k = 0; k < kImuFeatures; ++k) t.data[i * kImuFeatures + k] = static_cast<T>(imu[i][k]);
  return t;
}

template nn::Tensor<double> frames_to_tensor(std::span<const TactileFrame* const>, std::uint16_t);
template nn::Tensor<float> frames_to_tensor(std::span<const TactileFrame* const>, std::uint16_t);
template nn::Tensor<double> imu_to_tensor(std::span<const ImuFeatures>);
template nn::Tensor<float> imu_to_tensor(std::span<const ImuFeatures>);

ProfileReport profile(const nn::ModelGraph& g) {
  g.validate();
  std::vector<LayerSpec> specs;
  for (const auto& n : g.nodes) specs.push_back(n.spec);
  const auto shapes = nn::infer_shapes(specs);

  ProfileReport r;
  const std::size_t count = g.nodes.size();
  std::vector<std::size_t> last_use(count, 0);
  for (std::size_t i = 0; i < count; ++i) {
    last_use[i] = i;
    for (int in : specs[i].inputs) last_use[in] = i;
  }
  std::vector<std::size_t> bytes(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& s = specs[i];
    const auto& out = shapes[i];
    LayerProfile lp;
    lp.index = static_cast<int>(i);
    lp.kind = nn::to_string(s.kind);
    lp.output_shape = out;
    if (s.kind == LayerKind::Conv2d)
      lp.macc = static_cast<std::uint64_t>(s.kernel) * s.kernel * s.in_channels * s.out_channels *
                out[1] * out[2];
    else if (s.kind == LayerKind::Dense)
      lp.macc = static_cast<std::uint64_t>(s.in_channels) * s.out_channels;
    for (const auto& p : g.nodes[i].params) lp.params += p.size();
    lp.activation_bytes = static_cast<std::size_t>(out[0]) * out[1] * out[2] * sizeof(float);
    bytes[i] = lp.activation_bytes;
    r.macc_total += lp.macc;
    r.param_count += lp.params;
    r.layers.push_back(std::move(lp));
  }
  r.param_bytes_32bit = r.param_count * sizeof(float);

  // Peak of simultaneously live tensors while executing node i: its output
  // plus every earlier output still needed by node i or later.
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t live = 0;
    for (std::size_t j = 0; j <= i; ++j)
      if (last_use[j] >= i) live += bytes[j];
    r.peak_activation_bytes = std::max(r.peak_activation_bytes, live);
  }
  return r;
}

std::string ProfileReport::to_json() const {
  nlohmann::ordered_json j;
  j["macc_total"] = macc_total;
  j["param_count"] = param_count;
  j["param_bytes"] = param_bytes_32bit;
  j["peak_activation_bytes"] = peak_activation_bytes;
  auto& arr = j["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : layers) {
    nlohmann::ordered_json e;
    e["index"] = l.index;
    e["kind"] = l.kind;
    e["output_shape"] = l.output_shape;
    e["macc"] = l.macc;
    e["params"] = l.params;
    e["activation_bytes"] = l.activation_bytes;
    arr.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::array<double, kNumClasses> infer(const nn::ModelGraph& g, const TactileFrame& frame,
                                      const std::optional<ImuFeatures>& imu,
                                      std::uint16_t baseline) {
  const TactileFrame* ptr = &frame;
  const auto x = frames_to_tensor<double>(std::span(&ptr, 1), baseline);
  std::optional<nn::Tensor64> m;
  if (imu) m = imu_to_tensor<double>(std::span(&*imu, 1));
  const auto logits = nn::forward(g, x, m ? &*m : nullptr);
  require(logits.stride0() == kNumClasses, ErrorKind::InvalidArgument,
          "model does not produce 17 logits");
  const auto p = nn::softmax(logits);
  std::array<double, kNumClasses> out{};
  std::copy(p.data.begin(), p.data.end(), out.begin());
  return out;
}

InferenceEngine::InferenceEngine(const nn::ModelGraph& g, std::uint16_t baseline)
    : graph_(g.cast<float>()), baseline_(baseline) {
  require(!g.nodes.empty() && g.nodes.back().spec.out_channels == kNumClasses,
          ErrorKind::InvalidArgument, "model does not produce 17 logits");
}

std::array<float, kNumClasses> InferenceEngine::infer(const TactileFrame& frame,
                                                      const std::optional<ImuFeatures>& imu) const {
  const TactileFrame* ptr = &frame;
  const auto x = frames_to_tensor<float>(std::span(&ptr, 1), baseline_);
  std::optional<nn::Tensor32> m;
  if (imu) m = imu_to_tensor<float>(std::span(&*imu, 1));
  const auto p = nn::softmax(nn::forward(graph_, x, m ? &*m : nullptr));
  std::array<float, kNumClasses> out{};
  std::copy(p.data.begin(), p.data.end(), out.begin());
  return out;
}

int argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace smarthand
