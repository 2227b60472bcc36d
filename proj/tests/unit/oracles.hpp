#pragma once

// Straightforward reference implementations used to check the kernels.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "smarthand/nn.hpp"

namespace oracle {

using smarthand::nn::Tensor64;

inline Tensor64 random_tensor(std::mt19937_64& rng, int n, int c, int h, int w,
                              double lo = -1.0, double hi = 1.0) {
  Tensor64 t(n, c, h, w);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.data) v = u(rng);
  return t;
}

inline Tensor64 conv2d(const Tensor64& x, const Tensor64& w, const std::vector<double>& bias,
                       int stride, int pad) {
  const int k = w.h();
  const int ho = (x.h() + 2 * pad - k) / stride + 1;
  const int wo = (x.w() + 2 * pad - k) / stride + 1;
  Tensor64 y(x.n(), w.n(), ho, wo);
  for (int n = 0; n < x.n(); ++n)
    for (int co = 0; co < w.n(); ++co)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          double s = bias.empty() ? 0.0 : bias[co];
          for (int ci = 0; ci < x.c(); ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * stride + ky - pad, ix = ox * stride + kx - pad;
                if (iy < 0 || iy >= x.h() || ix < 0 || ix >= x.w()) continue;
                s += x.at(n, ci, iy, ix) * w.at(co, ci, ky, kx);
              }
          y.at(n, co, oy, ox) = s;
        }
  return y;
}

inline Tensor64 dense(const Tensor64& x, const Tensor64& w, const std::vector<double>& bias) {
  const int in = static_cast<int>(x.stride0());
  Tensor64 y(x.n(), w.n(), 1, 1);
  for (int n = 0; n < x.n(); ++n)
    for (int o = 0; o < w.n(); ++o) {
      double s = bias.empty() ? 0.0 : bias[o];
      for (int i = 0; i < in; ++i) s += w.data[static_cast<std::size_t>(o) * in + i] *
                                        x.data[static_cast<std::size_t>(n) * in + i];
      y.data[static_cast<std::size_t>(n) * w.n() + o] = s;
    }
  return y;
}

/// Mean cross-entropy: first pass finds the row max, second sums exponentials.
inline double cross_entropy(const Tensor64& logits, std::span<const int> labels) {
  const int n = logits.n(), k = static_cast<int>(logits.stride0());
  double total = 0;
  for (int i = 0; i < n; ++i) {
    const double* row = logits.data.data() + static_cast<std::size_t>(i) * k;
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double s = 0;
    for (int j = 0; j < k; ++j) s += std::exp(row[j] - mx);
    total += -(row[labels[i]] - mx - std::log(s));
  }
  return total / n;
}

/// Largest |a - b| over max(|b|) of the whole buffer.
inline double rel_diff(std::span<const double> a, std::span<const double> b) {
  double err = 0, scale = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    err = std::max(err, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return scale > 0 ? err / scale : err;
}

/// Central differences of f over every entry of `x`.
inline std::vector<double> numeric_grad(std::vector<double>& x, const std::function<double()>& f,
                                        double eps = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = f();
    x[i] = keep - eps;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

/// sum(a * b), the scalar loss the gradient checks differentiate.
inline double dot(const Tensor64& a, const Tensor64& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

}  // namespace oracle
