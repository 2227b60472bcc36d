#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "smarthand/error.hpp"
#include "smarthand/nn.hpp"

namespace smarthand::nn {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

int conv_out_size(int in, int k, int s, int pad) { return (in + 2 * pad - k) / s + 1; }

template <typename T>
void im2col(const T* x, int c_in, int h, int w, ConvGeometry g, int h_out, int w_out, T* col) {
  const int k = g.kernel;
  const int p = h_out * w_out;
  for (int ci = 0; ci < c_in; ++ci)
    for (int ki = 0; ki < k; ++ki)
      for (int kj = 0; kj < k; ++kj) {
        T* dst = col + static_cast<std::size_t>((ci * k + ki) * k + kj) * p;
        const T* src = x + static_cast<std::size_t>(ci) * h * w;
        for (int oh = 0; oh < h_out; ++oh) {
          const int ih = oh * g.stride - g.padding + ki;
          T* row = dst + oh * w_out;
          if (ih < 0 || ih >= h) {
            std::fill(row, row + w_out, T(0));
            continue;
          }
          for (int ow = 0; ow < w_out; ++ow) {
            const int iw = ow * g.stride - g.padding + kj;
            row[ow] = (iw >= 0 && iw < w) ? src[ih * w + iw] : T(0);
          }
        }
      }
}

template <typename T>
void col2im_add(const T* col, int c_in, int h, int w, ConvGeometry g, int h_out, int w_out,
                T* x) {
  const int k = g.kernel;
  const int p = h_out * w_out;
  for (int ci = 0; ci < c_in; ++ci)
    for (int ki = 0; ki < k; ++ki)
      for (int kj = 0; kj < k; ++kj) {
        const T* src = col + static_cast<std::size_t>((ci * k + ki) * k + kj) * p;
        T* dst = x + static_cast<std::size_t>(ci) * h * w;
        for (int oh = 0; oh < h_out; ++oh) {
          const int ih = oh * g.stride - g.padding + ki;
          if (ih < 0 || ih >= h) continue;
          for (int ow = 0; ow < w_out; ++ow) {
            const int iw = ow * g.stride - g.padding + kj;
            if (iw >= 0 && iw < w) dst[ih * w + iw] += src[oh * w_out + ow];
          }
        }
      }
}

void check_same_shape(const std::array<int, 4>& a, const std::array<int, 4>& b, const char* what) {
  require(a == b, ErrorKind::InvalidArgument, std::string(what) + ": shape mismatch");
}

}  // namespace

// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, std::span<const T> bias,
                         ConvGeometry g) {
  require(g.kernel >= 1 && g.stride >= 1 && g.padding >= 0, ErrorKind::InvalidArgument,
          "conv2d: invalid geometry");
  require(w.h() == g.kernel && w.w() == g.kernel && w.c() == x.c(), ErrorKind::InvalidArgument,
          "conv2d: weight shape does not match input channels or kernel");
  require(bias.empty() || static_cast<int>(bias.size()) == w.n(), ErrorKind::InvalidArgument,
          "conv2d: bias length mismatch");
  const int h_out = conv_out_size(x.h(), g.kernel, g.stride, g.padding);
  const int w_out = conv_out_size(x.w(), g.kernel, g.stride, g.padding);
  require(h_out >= 1 && w_out >= 1, ErrorKind::InvalidArgument, "conv2d: kernel larger than input");
  const int c_out = w.n(), k = x.c() * g.kernel * g.kernel, p = h_out * w_out;

  Tensor<T> y(x.n(), c_out, h_out, w_out);
  std::vector<T> col(static_cast<std::size_t>(k) * p);
  CMapR<T> wm(w.data.data(), c_out, k);
  for (int n = 0; n < x.n(); ++n) {
    im2col(x.data.data() + n * x.stride0(), x.c(), x.h(), x.w(), g, h_out, w_out, col.data());
    MapR<T> ym(y.data.data() + n * y.stride0(), c_out, p);
    ym.noalias() = wm * CMapR<T>(col.data(), k, p);
    if (!bias.empty())
      for (int co = 0; co < c_out; ++co) ym.row(co).array() += bias[co];
  }
  return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, ConvGeometry g,
                             const Tensor<T>& grad_out) {
  const int h_out = conv_out_size(x.h(), g.kernel, g.stride, g.padding);
  const int w_out = conv_out_size(x.w(), g.kernel, g.stride, g.padding);
  const int c_out = w.n(), k = x.c() * g.kernel * g.kernel, p = h_out * w_out;
  require(grad_out.n() == x.n() && grad_out.c() == c_out && grad_out.h() == h_out &&
              grad_out.w() == w_out,
          ErrorKind::InvalidArgument, "conv2d backward: gradient shape mismatch");

  ConvGrads<T> out;
  out.x = Tensor<T>(x.n(), x.c(), x.h(), x.w());
  out.w = Tensor<T>(w.n(), w.c(), w.h(), w.w());
  out.bias.assign(c_out, T(0));
  std::vector<T> col(static_cast<std::size_t>(k) * p), dcol(col.size());
  CMapR<T> wm(w.data.data(), c_out, k);
  MapR<T> gw(out.w.data.data(), c_out, k);
  for (int n = 0; n < x.n(); ++n) {
    im2col(x.data.data() + n * x.stride0(), x.c(), x.h(), x.w(), g, h_out, w_out, col.data());
    CMapR<T> dy(grad_out.data.data() + n * grad_out.stride0(), c_out, p);
    gw.noalias() += dy * CMapR<T>(col.data(), k, p).transpose();
    for (int co = 0; co < c_out; ++co) out.bias[co] += dy.row(co).sum();
    MapR<T>(dcol.data(), k, p).noalias() = wm.transpose() * dy;
    col2im_add(dcol.data(), x.c(), x.h(), x.w(), g, h_out, w_out,
               out.x.data.data() + n * x.stride0());
  }
  return out;
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, std::span<const T> bias) {
  const int in = static_cast<int>(x.stride0());
  require(w.c() * w.h() * w.w() == in, ErrorKind::InvalidArgument,
          "dense: weight input width " + std::to_string(w.c()) + " != feature width " +
              std::to_string(in));
  require(bias.empty() || static_cast<int>(bias.size()) == w.n(), ErrorKind::InvalidArgument,
          "dense: bias length mismatch");
  Tensor<T> y(x.n(), w.n(), 1, 1);
  MapR<T> ym(y.data.data(), x.n(), w.n());
  ym.noalias() = CMapR<T>(x.data.data(), x.n(), in) * CMapR<T>(w.data.data(), w.n(), in).transpose();
  if (!bias.empty())
    for (int n = 0; n < x.n(); ++n)
      for (int o = 0; o < w.n(); ++o) ym(n, o) += bias[o];
  return y;
}

template <typename T>
ConvGrads<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out) {
  const int in = static_cast<int>(x.stride0());
  require(grad_out.n() == x.n() && static_cast<int>(grad_out.stride0()) == w.n(),
          ErrorKind::InvalidArgument, "dense backward: gradient shape mismatch");
  ConvGrads<T> out;
  out.x = Tensor<T>(x.n(), x.c(), x.h(), x.w());
  out.w = Tensor<T>(w.n(), w.c(), w.h(), w.w());
  out.bias.assign(w.n(), T(0));
  CMapR<T> dy(grad_out.data.data(), x.n(), w.n());
  MapR<T>(out.w.data.data(), w.n(), in).noalias() = dy.transpose() * CMapR<T>(x.data.data(), x.n(), in);
  MapR<T>(out.x.data.data(), x.n(), in).noalias() = dy * CMapR<T>(w.data.data(), w.n(), in);
  for (int o = 0; o < w.n(); ++o) out.bias[o] = dy.col(o).sum();
  return out;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.data) v = v > T(0) ? v : T(0);
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  check_same_shape(x.shape, grad_out.shape, "relu backward");
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(x.data[i] > T(0))) g.data[i] = T(0);
  return g;
}

template <typename T>
Tensor<T> maxpool_forward(const Tensor<T>& x, int kernel, int stride,
                          std::vector<std::uint32_t>* argmax) {
  require(kernel >= 1 && stride >= 1 && kernel <= x.h() && kernel <= x.w(),
          ErrorKind::InvalidArgument, "maxpool: invalid geometry");
  const int h_out = conv_out_size(x.h(), kernel, stride, 0);
  const int w_out = conv_out_size(x.w(), kernel, stride, 0);
  Tensor<T> y(x.n(), x.c(), h_out, w_out);
  if (argmax) argmax->assign(y.size(), 0);
  std::size_t o = 0;
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * x.c() + c) * x.h() * x.w();
      for (int oh = 0; oh < h_out; ++oh)
        for (int ow = 0; ow < w_out; ++ow, ++o) {
          std::size_t best = base + static_cast<std::size_t>(oh * stride) * x.w() + ow * stride;
          for (int ki = 0; ki < kernel; ++ki)
            for (int kj = 0; kj < kernel; ++kj) {
              const std::size_t idx =
                  base + static_cast<std::size_t>(oh * stride + ki) * x.w() + ow * stride + kj;
              if (x.data[idx] > x.data[best]) best = idx;
            }
          y.data[o] = x.data[best];
          if (argmax) (*argmax)[o] = static_cast<std::uint32_t>(best);
        }
    }
  return y;
}

template <typename T>
Tensor<T> maxpool_backward(const std::array<int, 4>& x_shape,
                           const std::vector<std::uint32_t>& argmax, const Tensor<T>& grad_out) {
  require(argmax.size() == grad_out.size(), ErrorKind::MissingCache,
          "maxpool backward: argmax cache does not match gradient");
  Tensor<T> g(x_shape[0], x_shape[1], x_shape[2], x_shape[3]);
  for (std::size_t i = 0; i < argmax.size(); ++i) g.data[argmax[i]] += grad_out.data[i];
  return g;
}

template <typename T>
Tensor<T> avgpool_forward(const Tensor<T>& x, int kernel, int stride) {
  require(kernel >= 1 && stride >= 1 && kernel <= x.h() && kernel <= x.w(),
          ErrorKind::InvalidArgument, "avgpool: invalid geometry");
  const int h_out = conv_out_size(x.h(), kernel, stride, 0);
  const int w_out = conv_out_size(x.w(), kernel, stride, 0);
  Tensor<T> y(x.n(), x.c(), h_out, w_out);
  const T scale = T(1) / T(kernel * kernel);
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int oh = 0; oh < h_out; ++oh)
        for (int ow = 0; ow < w_out; ++ow) {
          T s = 0;
          for (int ki = 0; ki < kernel; ++ki)
            for (int kj = 0; kj < kernel; ++kj) s += x.at(n, c, oh * stride + ki, ow * stride + kj);
          y.at(n, c, oh, ow) = s * scale;
        }
  return y;
}

template <typename T>
Tensor<T> avgpool_backward(const std::array<int, 4>& x_shape, int kernel, int stride,
                           const Tensor<T>& grad_out) {
  Tensor<T> g(x_shape[0], x_shape[1], x_shape[2], x_shape[3]);
  const T scale = T(1) / T(kernel * kernel);
  for (int n = 0; n < grad_out.n(); ++n)
    for (int c = 0; c < grad_out.c(); ++c)
      for (int oh = 0; oh < grad_out.h(); ++oh)
        for (int ow = 0; ow < grad_out.w(); ++ow) {
          const T v = grad_out.at(n, c, oh, ow) * scale;
          for (int ki = 0; ki < kernel; ++ki)
            for (int kj = 0; kj < kernel; ++kj) g.at(n, c, oh * stride + ki, ow * stride + kj) += v;
        }
  return g;
}

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, std::span<const T> gamma, std::span<const T> beta,
                            std::span<T> running_mean, std::span<T> running_var, Mode mode,
                            BatchNormCache<T>* cache) {
  const int n = x.n(), ch = x.c(), hw = x.h() * x.w();
  require(static_cast<int>(gamma.size()) == ch && static_cast<int>(beta.size()) == ch &&
              static_cast<int>(running_mean.size()) == ch &&
              static_cast<int>(running_var.size()) == ch,
          ErrorKind::InvalidArgument, "batchnorm: channel count mismatch");
  require(mode == Mode::Eval || n > 1, ErrorKind::InvalidArgument,
          "batchnorm: train mode needs a batch of at least two samples");
  const double count = static_cast<double>(n) * hw;
  Tensor<T> y(x.n(), x.c(), x.h(), x.w());
  std::vector<T> inv_std(ch);
  Tensor<T> x_hat;
  if (cache) x_hat = Tensor<T>(x.n(), x.c(), x.h(), x.w());

  for (int c = 0; c < ch; ++c) {
    double mean, var;
    if (mode == Mode::Train) {
      double s = 0;
      for (int i = 0; i < n; ++i) {
        const T* p = x.data.data() + (static_cast<std::size_t>(i) * ch + c) * hw;
        for (int j = 0; j < hw; ++j) s += p[j];
      }
      mean = s / count;
      double ss = 0;
      for (int i = 0; i < n; ++i) {
        const T* p = x.data.data() + (static_cast<std::size_t>(i) * ch + c) * hw;
        for (int j = 0; j < hw; ++j) ss += (p[j] - mean) * (p[j] - mean);
      }
      var = ss / count;
      running_mean[c] = static_cast<T>((1 - kBatchNormMomentum) * running_mean[c] +
                                       kBatchNormMomentum * mean);
      running_var[c] = static_cast<T>((1 - kBatchNormMomentum) * running_var[c] +
                                      kBatchNormMomentum * var * count / (count - 1));
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    const T istd = static_cast<T>(1.0 / std::sqrt(var + kBatchNormEps));
    inv_std[c] = istd;
    const T m = static_cast<T>(mean);
    for (int i = 0; i < n; ++i) {
      const std::size_t off = (static_cast<std::size_t>(i) * ch + c) * hw;
      for (int j = 0; j < hw; ++j) {
        const T xh = (x.data[off + j] - m) * istd;
        if (cache) x_hat.data[off + j] = xh;
        y.data[off + j] = gamma[c] * xh + beta[c];
      }
    }
  }
  if (cache) {
    cache->x_hat = std::move(x_hat);
    cache->inv_std = std::move(inv_std);
    cache->mode = mode;
  }
  return y;
}

template <typename T>
ConvGrads<T> batchnorm_backward(const BatchNormCache<T>& cache, std::span<const T> gamma,
                                const Tensor<T>& grad_out) {
  const auto& xh = cache.x_hat;
  require(!xh.empty() && xh.shape == grad_out.shape, ErrorKind::MissingCache,
          "batchnorm backward: missing forward cache");
  const int n = xh.n(), ch = xh.c(), hw = xh.h() * xh.w();
  const double count = static_cast<double>(n) * hw;
  ConvGrads<T> out;
  out.x = Tensor<T>(xh.n(), xh.c(), xh.h(), xh.w());
  out.w = Tensor<T>(ch, 1, 1, 1);
  out.bias.assign(ch, T(0));
  for (int c = 0; c < ch; ++c) {
    double sum_dy = 0, sum_dy_xh = 0;
    for (int i = 0; i < n; ++i) {
      const std::size_t off = (static_cast<std::size_t>(i) * ch + c) * hw;
      for (int j = 0; j < hw; ++j) {
        sum_dy += grad_out.data[off + j];
        sum_dy_xh += grad_out.data[off + j] * xh.data[off + j];
      }
    }
    out.w.data[c] = static_cast<T>(sum_dy_xh);
    out.bias[c] = static_cast<T>(sum_dy);
    const double scale = gamma[c] * cache.inv_std[c];
    for (int i = 0; i < n; ++i) {
      const std::size_t off = (static_cast<std::size_t>(i) * ch + c) * hw;
      for (int j = 0; j < hw; ++j) {
        const double dy = grad_out.data[off + j];
        out.x.data[off + j] =
            cache.mode == Mode::Train
                ? static_cast<T>(scale * (dy - sum_dy / count - xh.data[off + j] * sum_dy_xh / count))
                : static_cast<T>(scale * dy);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& x, double p, Mode mode, std::uint64_t seed,
                          std::vector<T>* mask) {
  require(p >= 0.0 && p < 1.0, ErrorKind::InvalidArgument, "dropout rate must lie in [0, 1)");
  if (mode == Mode::Eval || p == 0.0) {
    if (mask) mask->assign(x.size(), T(1));
    return x;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  Tensor<T> y = x;
  std::vector<T> m(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    m[i] = unit(rng) >= p ? keep_scale : T(0);
    y.data[i] *= m[i];
  }
  if (mask) *mask = std::move(m);
  return y;
}

template <typename T>
Tensor<T> dropout_backward(const std::vector<T>& mask, const Tensor<T>& grad_out) {
  require(mask.size() == grad_out.size(), ErrorKind::MissingCache,
          "dropout backward: mask does not match gradient");
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g.data[i] *= mask[i];
  return g;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  Tensor<T> p = logits;
  const std::size_t width = logits.stride0();
  for (int n = 0; n < logits.n(); ++n) {
    T* row = p.data.data() + n * width;
    const T mx = *std::max_element(row, row + width);
    double sum = 0;
    for (std::size_t j = 0; j < width; ++j) sum += (row[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < width; ++j) row[j] = static_cast<T>(row[j] / sum);
  }
  return p;
}

template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& probs, const Tensor<T>& grad_out) {
  check_same_shape(probs.shape, grad_out.shape, "softmax backward");
  Tensor<T> g = grad_out;
  const std::size_t width = probs.stride0();
  for (int n = 0; n < probs.n(); ++n) {
    const T* y = probs.data.data() + n * width;
    const T* dy = grad_out.data.data() + n * width;
    double dot = 0;
    for (std::size_t j = 0; j < width; ++j) dot += y[j] * dy[j];
    for (std::size_t j = 0; j < width; ++j)
      g.data[n * width + j] = static_cast<T>(y[j] * (dy[j] - dot));
  }
  return g;
}

LossResult cross_entropy(const Tensor64& logits, std::span<const int> labels) {
  const int n = logits.n();
  const int classes = static_cast<int>(logits.stride0());
  require(static_cast<int>(labels.size()) == n && n > 0, ErrorKind::InvalidArgument,
          "cross_entropy: label count does not match batch");
  LossResult r;
  r.grad = Tensor64(logits.n(), logits.c(), logits.h(), logits.w());
  double total = 0;
  for (int i = 0; i < n; ++i) {
    require(labels[i] >= 0 && labels[i] < classes, ErrorKind::InvalidArgument,
            "cross_entropy: label " + std::to_string(labels[i]) + " out of range");
    const double* z = logits.data.data() + static_cast<std::size_t>(i) * classes;
    double* g = r.grad.data.data() + static_cast<std::size_t>(i) * classes;
    const double mx = *std::max_element(z, z + classes);
    double sum = 0;
    for (int j = 0; j < classes; ++j) sum += std::exp(z[j] - mx);
    const double log_sum = mx + std::log(sum);
    total += log_sum - z[labels[i]];
    for (int j = 0; j < classes; ++j) g[j] = std::exp(z[j] - log_sum) / n;
    g[labels[i]] -= 1.0 / n;
  }
  r.loss = total / n;
  return r;
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const AdamConfig& cfg) {
  require(params.size() == grads.size(), ErrorKind::InvalidArgument,
          "adam: parameter and gradient lists differ in length");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  require(state.m.size() == params.size(), ErrorKind::InvalidArgument,
          "adam: optimiser state does not match parameters");
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    auto g = grads[i];
    require(p.size() == g.size() && p.size() == state.m[i].size(), ErrorKind::InvalidArgument,
            "adam: shape mismatch in parameter " + std::to_string(i));
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1 - cfg.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1, v_hat = v[j] / bc2;
      p[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

#define SMARTHAND_NN_INSTANTIATE(T)                                                              \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, std::span<const T>,      \
                                    ConvGeometry);                                               \
  template ConvGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, ConvGeometry,        \
                                        const Tensor<T>&);                                       \
  template Tensor<T> dense_forward(const Tensor<T>&, const Tensor<T>&, std::span<const T>);      \
  template ConvGrads<T> dense_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> relu_forward(const Tensor<T>&);                                             \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> maxpool_forward(const Tensor<T>&, int, int, std::vector<std::uint32_t>*);   \
  template Tensor<T> maxpool_backward(const std::array<int, 4>&,                                 \
                                      const std::vector<std::uint32_t>&, const Tensor<T>&);      \
  template Tensor<T> avgpool_forward(const Tensor<T>&, int, int);                                \
  template Tensor<T> avgpool_backward(const std::array<int, 4>&, int, int, const Tensor<T>&);    \
  template Tensor<T> batchnorm_forward(const Tensor<T>&, std::span<const T>, std::span<const T>, \
                                       std::span<T>, std::span<T>, Mode, BatchNormCache<T>*);    \
  template ConvGrads<T> batchnorm_backward(const BatchNormCache<T>&, std::span<const T>,         \
                                           const Tensor<T>&);                                    \
  template Tensor<T> dropout_forward(const Tensor<T>&, double, Mode, std::uint64_t,              \
                                     std::vector<T>*);                                           \
  template Tensor<T> dropout_backward(const std::vector<T>&, const Tensor<T>&);                  \
  template Tensor<T> softmax(const Tensor<T>&);                                                  \
  template Tensor<T> softmax_backward(const Tensor<T>&, const Tensor<T>&);

SMARTHAND_NN_INSTANTIATE(double)
SMARTHAND_NN_INSTANTIATE(float)

#undef SMARTHAND_NN_INSTANTIATE

}  // namespace smarthand::nn
