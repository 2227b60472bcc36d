#include <cmath>
#include <random>

#include "byte_stream.hpp"
#include "smarthand/error.hpp"
#include "smarthand/frames.hpp"
#include "smarthand/nn.hpp"
#include "smarthand/sensorsim.hpp"

namespace smarthand::nn {

namespace {

constexpr char kModelMagic[] = "STAGNN1\0";
constexpr std::string_view kModelMagicView(kModelMagic, 8);

bool has_weights(LayerKind k) { return k == LayerKind::Conv2d || k == LayerKind::Dense; }

int expected_inputs(LayerKind k) {
  switch (k) {
    case LayerKind::Input:
    case LayerKind::ImuInput:
      return 0;
    case LayerKind::ResidualAdd:
    case LayerKind::Concat:
      return 2;
    default:
      return 1;
  }
}

template <typename T>
Tensor<T> flatten(const Tensor<T>& x) {
  Tensor<T> y = x;
  y.shape = {x.n(), static_cast<int>(x.stride0()), 1, 1};
  return y;
}

template <typename T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.n() == b.n(), ErrorKind::InvalidArgument, "concat: batch sizes differ");
  const std::size_t wa = a.stride0(), wb = b.stride0();
  Tensor<T> y(a.n(), static_cast<int>(wa + wb), 1, 1);
  for (int n = 0; n < a.n(); ++n) {
    std::copy_n(a.data.data() + n * wa, wa, y.data.data() + n * (wa + wb));
    std::copy_n(b.data.data() + n * wb, wb, y.data.data() + n * (wa + wb) + wa);
  }
  return y;
}

template <typename T>
std::span<const T> span_of(const Tensor<T>& t) {
  return {t.data.data(), t.data.size()};
}
template <typename T>
std::span<T> span_of(Tensor<T>& t) {
  return {t.data.data(), t.data.size()};
}

void add_into(Tensor64& dst, const Tensor64& src) {
  if (dst.empty()) {
    dst = src;
    return;
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Input: return "input";
    case LayerKind::ImuInput: return "imu_input";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::AvgPool: return "avgpool";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::ResidualAdd: return "residual_add";
    case LayerKind::Concat: return "concat";
    case LayerKind::Softmax: return "softmax";
  }
  return "unknown";
}

void LayerSpec::validate() const {
  const std::string name = to_string(kind);
  require(static_cast<std::uint8_t>(kind) <= static_cast<std::uint8_t>(LayerKind::Softmax),
          ErrorKind::Validation, "unknown layer kind");
  require(kernel >= 1 && stride >= 1, ErrorKind::Validation, name + ": kernel and stride must be >= 1");
  require(padding >= 0, ErrorKind::Validation, name + ": negative padding");
  require(dropout >= 0.0 && dropout < 1.0, ErrorKind::Validation,
          name + ": dropout rate must lie in [0, 1)");
  require(static_cast<int>(inputs.size()) == expected_inputs(kind), ErrorKind::Validation,
          name + ": expected " + std::to_string(expected_inputs(kind)) + " inputs");
  if (kind == LayerKind::Input || kind == LayerKind::ImuInput)
    require(in_channels >= 1 && height >= 1 && width >= 1, ErrorKind::Validation,
            name + ": input shape must be positive");
  if (has_weights(kind))
    require(in_channels >= 1 && out_channels >= 1, ErrorKind::Validation,
            name + ": channel counts must be positive");
}

std::vector<std::array<int, 3>> infer_shapes(std::span<const LayerSpec> specs) {
  std::vector<std::array<int, 3>> shapes;
  shapes.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    s.validate();
    const std::string where = "layer " + std::to_string(i) + " (" + to_string(s.kind) + ")";
    for (int in : s.inputs)
      require(in >= 0 && static_cast<std::size_t>(in) < i, ErrorKind::Validation,
              where + ": input must refer to an earlier layer");
    std::array<int, 3> x{};
    if (!s.inputs.empty()) x = shapes[s.inputs[0]];
    std::array<int, 3> y = x;
    switch (s.kind) {
      case LayerKind::Input:
      case LayerKind::ImuInput:
        y = {s.in_channels, s.height, s.width};
        break;
      case LayerKind::Conv2d: {
        require(x[0] == s.in_channels, ErrorKind::Validation, where + ": input channel mismatch");
        const int h = (x[1] + 2 * s.padding - s.kernel) / s.stride + 1;
        const int w = (x[2] + 2 * s.padding - s.kernel) / s.stride + 1;
        require(x[1] + 2 * s.padding >= s.kernel && x[2] + 2 * s.padding >= s.kernel,
                ErrorKind::Validation, where + ": kernel larger than input");
        y = {s.out_channels, h, w};
        break;
      }
      case LayerKind::BatchNorm:
        require(x[0] == s.in_channels, ErrorKind::Validation, where + ": channel mismatch");
        break;
      case LayerKind::MaxPool:
      case LayerKind::AvgPool:
        require(x[1] >= s.kernel && x[2] >= s.kernel, ErrorKind::Validation,
                where + ": pool window larger than input");
        y = {x[0], (x[1] - s.kernel) / s.stride + 1, (x[2] - s.kernel) / s.stride + 1};
        break;
      case LayerKind::Flatten:
        y = {x[0] * x[1] * x[2], 1, 1};
        break;
      case LayerKind::Dense:
        require(x[0] * x[1] * x[2] == s.in_channels, ErrorKind::Validation,
                where + ": input width " + std::to_string(x[0] * x[1] * x[2]) +
                    " does not match in_channels " + std::to_string(s.in_channels));
        y = {s.out_channels, 1, 1};
        break;
      case LayerKind::ResidualAdd:
        require(shapes[s.inputs[1]] == x, ErrorKind::Validation, where + ": operand shapes differ");
        break;
      case LayerKind::Concat: {
        const auto& b = shapes[s.inputs[1]];
        y = {x[0] * x[1] * x[2] + b[0] * b[1] * b[2], 1, 1};
        break;
      }
      default:
        break;
    }
    shapes.push_back(y);
  }
  return shapes;
}

template <typename T>
std::size_t Graph<T>::param_count() const {
  std::size_t total = 0;
  for (const auto& n : nodes)
    for (const auto& p : n.params) total += p.size();
  return total;
}

template <typename T>
bool Graph<T>::has_imu_input() const {
  for (const auto& n : nodes)
    if (n.spec.kind == LayerKind::ImuInput) return true;
  return false;
}

template <typename T>
void Graph<T>::validate() const {
  require(!nodes.empty(), ErrorKind::Validation, "model has no layers");
  require(nodes[0].spec.kind == LayerKind::Input, ErrorKind::Validation,
          "first layer must be the frame input");
  std::vector<LayerSpec> specs;
  for (const auto& n : nodes) specs.push_back(n.spec);
  const auto shapes = infer_shapes(specs);
  int imu_inputs = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    const auto& s = n.spec;
    const std::string where = "layer " + std::to_string(i) + " (" + to_string(s.kind) + ")";
    require(s.kind != LayerKind::Input || i == 0, ErrorKind::Validation,
            where + ": only one frame input is allowed");
    if (s.kind == LayerKind::ImuInput) ++imu_inputs;
    std::vector<std::array<int, 4>> want_params, want_buffers;
    if (s.kind == LayerKind::Conv2d) {
      want_params = {{s.out_channels, s.in_channels, s.kernel, s.kernel}, {s.out_channels, 1, 1, 1}};
    } else if (s.kind == LayerKind::Dense) {
      want_params = {{s.out_channels, s.in_channels, 1, 1}, {s.out_channels, 1, 1, 1}};
    } else if (s.kind == LayerKind::BatchNorm) {
      want_params = {{s.in_channels, 1, 1, 1}, {s.in_channels, 1, 1, 1}};
      want_buffers = want_params;
    }
    require(n.params.size() == want_params.size() && n.buffers.size() == want_buffers.size(),
            ErrorKind::Validation, where + ": wrong number of parameter tensors");
    for (std::size_t k = 0; k < want_params.size(); ++k)
      require(n.params[k].shape == want_params[k] && n.params[k].size() ==
                  static_cast<std::size_t>(want_params[k][0]) * want_params[k][1] *
                      want_params[k][2] * want_params[k][3],
              ErrorKind::Validation, where + ": parameter tensor shape mismatch");
    for (std::size_t k = 0; k < want_buffers.size(); ++k)
      require(n.buffers[k].shape == want_buffers[k] &&
                  n.buffers[k].size() == static_cast<std::size_t>(want_buffers[k][0]),
              ErrorKind::Validation, where + ": buffer shape mismatch");
  }
  require(imu_inputs <= 1, ErrorKind::Validation, "at most one IMU input is allowed");
  (void)shapes;
}

template <typename T>
Tensor<T> forward(Graph<T>& g, const Tensor<T>& frames, std::type_identity_t<const Tensor<T>*> imu,
                  Mode mode, std::uint64_t seed, std::type_identity_t<ForwardCache<T>*> cache) {
  const std::size_t count = g.nodes.size();
  require(count > 0, ErrorKind::InvalidArgument, "forward: empty graph");
  require(imu == nullptr || g.has_imu_input(), ErrorKind::InvalidArgument,
          "IMU features supplied to a model without an IMU branch");
  require(imu != nullptr || !g.has_imu_input(), ErrorKind::InvalidArgument,
          "model expects IMU features");
  std::vector<Tensor<T>> out(count);
  if (cache) {
    cache->argmax.assign(count, {});
    cache->batchnorm.assign(count, {});
    cache->dropout_mask.assign(count, {});
    cache->mode = mode;
    cache->valid = false;
  }
  // Activations are dropped once their last consumer has run, unless cached.
  std::vector<std::size_t> last_use(count, 0);
  for (std::size_t i = 0; i < count; ++i)
    for (int in : g.nodes[i].spec.inputs) last_use[in] = i;

  for (std::size_t i = 0; i < count; ++i) {
    auto& node = g.nodes[i];
    const auto& s = node.spec;
    auto in = [&](int k) -> const Tensor<T>& { return out[s.inputs[k]]; };
    switch (s.kind) {
      case LayerKind::Input:
        require(frames.c() == s.in_channels && frames.h() == s.height && frames.w() == s.width,
                ErrorKind::InvalidArgument, "frame tensor shape does not match model input");
        out[i] = frames;
        break;
      case LayerKind::ImuInput:
        require(imu->n() == frames.n() && static_cast<int>(imu->stride0()) ==
                                              s.in_channels * s.height * s.width,
                ErrorKind::InvalidArgument, "IMU tensor shape does not match model input");
        out[i] = *imu;
        out[i].shape = {imu->n(), s.in_channels, s.height, s.width};
        break;
      case LayerKind::Conv2d:
        out[i] = conv2d_forward(in(0), node.params[0], span_of(std::as_const(node.params[1])),
                                ConvGeometry{s.kernel, s.stride, s.padding});
        break;
      case LayerKind::BatchNorm:
        out[i] = batchnorm_forward(in(0), span_of(std::as_const(node.params[0])),
                                   span_of(std::as_const(node.params[1])),
                                   span_of(node.buffers[0]), span_of(node.buffers[1]), mode,
                                   cache ? &cache->batchnorm[i] : nullptr);
        break;
      case LayerKind::Relu:
        out[i] = relu_forward(in(0));
        break;
      case LayerKind::MaxPool:
        out[i] = maxpool_forward(in(0), s.kernel, s.stride, cache ? &cache->argmax[i] : nullptr);
        break;
      case LayerKind::AvgPool:
        out[i] = avgpool_forward(in(0), s.kernel, s.stride);
        break;
      case LayerKind::Dropout:
        out[i] = dropout_forward(in(0), s.dropout, mode, derive_seed(seed, i),
                                 cache ? &cache->dropout_mask[i] : nullptr);
        break;
      case LayerKind::Flatten:
        out[i] = flatten(in(0));
        break;
      case LayerKind::Dense:
        out[i] = dense_forward(in(0), node.params[0], span_of(std::as_const(node.params[1])));
        break;
      case LayerKind::ResidualAdd: {
        require(in(0).shape == in(1).shape, ErrorKind::InvalidArgument,
                "residual_add: operand shapes differ");
        out[i] = in(0);
        const auto& b = in(1);
        for (std::size_t k = 0; k < b.size(); ++k) out[i].data[k] += b.data[k];
        break;
      }
      case LayerKind::Concat:
        out[i] = concat(in(0), in(1));
        break;
      case LayerKind::Softmax:
        out[i] = softmax(in(0));
        break;
    }
    if (!cache)
      for (int k : s.inputs)
        if (last_use[k] == i) out[k] = Tensor<T>();
  }
  Tensor<T> result = out.back();
  if (cache) {
    cache->outputs = std::move(out);
    cache->valid = true;
  }
  return result;
}

template <typename T>
Tensor<T> forward(const Graph<T>& g, const Tensor<T>& frames,
                  std::type_identity_t<const Tensor<T>*> imu) {
  // Eval mode never writes to the graph; the const_cast only satisfies the
  // shared signature.
  return forward(const_cast<Graph<T>&>(g), frames, imu, Mode::Eval, 0, nullptr);
}

Gradients backward(const ModelGraph& g, const ForwardCache<double>& cache,
                   const Tensor64& grad_logits, Tensor64* grad_frames) {
  const std::size_t count = g.nodes.size();
  require(cache.valid && cache.outputs.size() == count && cache.batchnorm.size() == count,
          ErrorKind::MissingCache, "backward requires a cached forward pass over this graph");
  require(grad_logits.shape == cache.outputs.back().shape, ErrorKind::InvalidArgument,
          "backward: gradient shape does not match the logits");

  Gradients grads(count);
  std::vector<Tensor64> grad(count);
  grad.back() = grad_logits;
  for (std::size_t idx = count; idx-- > 0;) {
    const auto& node = g.nodes[idx];
    const auto& s = node.spec;
    if (has_weights(s.kind) || s.kind == LayerKind::BatchNorm) {
      grads[idx].reserve(node.params.size());
      for (const auto& p : node.params) grads[idx].emplace_back(p.n(), p.c(), p.h(), p.w());
    }
    if (grad[idx].empty()) continue;
    const Tensor64& dy = grad[idx];
    auto x = [&](int k) -> const Tensor64& { return cache.outputs[s.inputs[k]]; };
    auto push = [&](int k, const Tensor64& d) { add_into(grad[s.inputs[k]], d); };
    switch (s.kind) {
      case LayerKind::Input:
        if (grad_frames) *grad_frames = dy;
        break;
      case LayerKind::ImuInput:
        break;
      case LayerKind::Conv2d: {
        auto r = conv2d_backward(x(0), node.params[0], ConvGeometry{s.kernel, s.stride, s.padding}, dy);
        grads[idx][0] = std::move(r.w);
        std::copy(r.bias.begin(), r.bias.end(), grads[idx][1].data.begin());
        push(0, r.x);
        break;
      }
      case LayerKind::BatchNorm: {
        require(!cache.batchnorm[idx].x_hat.empty(), ErrorKind::MissingCache,
                "batchnorm backward: missing forward cache");
        auto r = batchnorm_backward(cache.batchnorm[idx], span_of(node.params[0]), dy);
        grads[idx][0].data = std::move(r.w.data);
        std::copy(r.bias.begin(), r.bias.end(), grads[idx][1].data.begin());
        push(0, r.x);
        break;
      }
      case LayerKind::Relu:
        push(0, relu_backward(x(0), dy));
        break;
      case LayerKind::MaxPool:
        push(0, maxpool_backward(x(0).shape, cache.argmax[idx], dy));
        break;
      case LayerKind::AvgPool:
        push(0, avgpool_backward(x(0).shape, s.kernel, s.stride, dy));
        break;
      case LayerKind::Dropout:
        push(0, dropout_backward(cache.dropout_mask[idx], dy));
        break;
      case LayerKind::Flatten: {
        Tensor64 d = dy;
        d.shape = x(0).shape;
        push(0, d);
        break;
      }
      case LayerKind::Dense: {
        auto r = dense_backward(x(0), node.params[0], dy);
        grads[idx][0] = std::move(r.w);
        std::copy(r.bias.begin(), r.bias.end(), grads[idx][1].data.begin());
        push(0, r.x);
        break;
      }
      case LayerKind::ResidualAdd:
        push(0, dy);
        push(1, dy);
        break;
      case LayerKind::Concat: {
        const Tensor64& a = x(0);
        const Tensor64& b = x(1);
        const std::size_t wa = a.stride0(), wb = b.stride0();
        Tensor64 da(a.n(), a.c(), a.h(), a.w()), db(b.n(), b.c(), b.h(), b.w());
        for (int n = 0; n < a.n(); ++n) {
          std::copy_n(dy.data.data() + n * (wa + wb), wa, da.data.data() + n * wa);
          std::copy_n(dy.data.data() + n * (wa + wb) + wa, wb, db.data.data() + n * wb);
        }
        push(0, da);
        push(1, db);
        break;
      }
      case LayerKind::Softmax:
        push(0, softmax_backward(cache.outputs[idx], dy));
        break;
    }
    grad[idx] = Tensor64();
  }
  return grads;
}

void initialize(ModelGraph& g, std::uint64_t seed) {
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    auto& node = g.nodes[i];
    const auto& s = node.spec;
    if (has_weights(s.kind)) {
      const int fan_in = s.kind == LayerKind::Conv2d ? s.in_channels * s.kernel * s.kernel
                                                     : s.in_channels;
      const double bound = std::sqrt(6.0 / fan_in);
      std::mt19937_64 rng(derive_seed(seed, i));
      std::uniform_real_distribution<double> u(-bound, bound);
      node.params.clear();
      Tensor64 w = s.kind == LayerKind::Conv2d
                       ? Tensor64(s.out_channels, s.in_channels, s.kernel, s.kernel)
                       : Tensor64(s.out_channels, s.in_channels, 1, 1);
      for (auto& v : w.data) v = u(rng);
      node.params.push_back(std::move(w));
      node.params.emplace_back(s.out_channels, 1, 1, 1);
    } else if (s.kind == LayerKind::BatchNorm) {
      node.params = {Tensor64(s.in_channels, 1, 1, 1, 1.0), Tensor64(s.in_channels, 1, 1, 1)};
      node.buffers = {Tensor64(s.in_channels, 1, 1, 1), Tensor64(s.in_channels, 1, 1, 1, 1.0)};
    }
  }
}

std::vector<std::uint8_t> encode_graph(const ModelGraph& g) {
  g.validate();
  detail::ByteWriter w;
  w.raw(kModelMagicView);
  w.u32(static_cast<std::uint32_t>(g.nodes.size()));
  auto tensor = [&](const Tensor64& t) {
    w.u8(4);
    for (int d : t.shape) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.data) w.f32(static_cast<float>(v));
  };
  for (const auto& n : g.nodes) {
    const auto& s = n.spec;
    w.u8(static_cast<std::uint8_t>(s.kind));
    w.u8(static_cast<std::uint8_t>(s.kernel));
    w.u8(static_cast<std::uint8_t>(s.stride));
    w.u8(static_cast<std::uint8_t>(s.padding));
    w.u16(static_cast<std::uint16_t>(s.in_channels));
    w.u16(static_cast<std::uint16_t>(s.out_channels));
    w.u16(static_cast<std::uint16_t>(s.height));
    w.u16(static_cast<std::uint16_t>(s.width));
    w.f32(static_cast<float>(s.dropout));
    w.u8(static_cast<std::uint8_t>(s.inputs.size()));
    for (int in : s.inputs) w.u16(static_cast<std::uint16_t>(in));
    w.u8(static_cast<std::uint8_t>(n.params.size()));
    w.u8(static_cast<std::uint8_t>(n.buffers.size()));
    for (const auto& p : n.params) tensor(p);
    for (const auto& b : n.buffers) tensor(b);
  }
  return w.take();
}

ModelGraph decode_graph(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic(kModelMagicView);
  const std::uint32_t layers = r.u32();
  require(layers >= 1 && layers <= 4096, ErrorKind::Validation,
          "implausible layer count " + std::to_string(layers));
  auto tensor = [&]() {
    const int ndims = r.u8();
    require(ndims == 4, ErrorKind::Validation, "tensors must have 4 dimensions");
    std::array<int, 4> shape{};
    std::size_t total = 1;
    for (auto& d : shape) {
      const std::uint32_t v = r.u32();
      require(v <= 65536, ErrorKind::Validation, "implausible tensor dimension");
      d = static_cast<int>(v);
      total *= v;
    }
    r.need(total * 4);
    Tensor64 t(shape[0], shape[1], shape[2], shape[3]);
    for (auto& v : t.data) v = r.f32();
    return t;
  };
  ModelGraph g;
  g.nodes.reserve(layers);
  for (std::uint32_t i = 0; i < layers; ++i) {
    Node<double> n;
    auto& s = n.spec;
    const std::uint8_t kind = r.u8();
    require(kind <= static_cast<std::uint8_t>(LayerKind::Softmax), ErrorKind::Validation,
            "unknown layer kind tag " + std::to_string(kind));
    s.kind = static_cast<LayerKind>(kind);
    s.kernel = r.u8();
    s.stride = r.u8();
    s.padding = r.u8();
    s.in_channels = r.u16();
    s.out_channels = r.u16();
    s.height = r.u16();
    s.width = r.u16();
    s.dropout = r.f32();
    const int n_inputs = r.u8();
    for (int k = 0; k < n_inputs; ++k) s.inputs.push_back(r.u16());
    const int n_params = r.u8(), n_buffers = r.u8();
    for (int k = 0; k < n_params; ++k) n.params.push_back(tensor());
    for (int k = 0; k < n_buffers; ++k) n.buffers.push_back(tensor());
    g.nodes.push_back(std::move(n));
  }
  require(r.remaining() == 0, ErrorKind::Validation, "trailing bytes after model");
  g.validate();
  return g;
}

void write_graph(const ModelGraph& g, const std::filesystem::path& path) {
  io::write_file(path, encode_graph(g));
}

ModelGraph read_graph(const std::filesystem::path& path) { return decode_graph(io::read_file(path)); }

template struct Graph<double>;
template struct Graph<float>;
template Tensor<double> forward(Graph<double>&, const Tensor<double>&, const Tensor<double>*, Mode,
                                std::uint64_t, ForwardCache<double>*);
template Tensor<float> forward(Graph<float>&, const Tensor<float>&, const Tensor<float>*, Mode,
                               std::uint64_t, ForwardCache<float>*);
template Tensor<double> forward(const Graph<double>&, const Tensor<double>&, const Tensor<double>*);
template Tensor<float> forward(const Graph<float>&, const Tensor<float>&, const Tensor<float>*);

}  // namespace smarthand::nn
