#include "smarthand/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "smarthand/error.hpp"

namespace smarthand {

namespace {

double max_abs(const RealMatrix& a) {
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::abs(v));
  return m;
}

constexpr double kRelativePivotFloor = 1e-14;

}  // namespace

std::vector<double> solve_dense(RealMatrix a, std::vector<double> b) {
  const int n = a.rows;
  require(a.cols == n && static_cast<int>(b.size()) == n, ErrorKind::InvalidArgument,
          "solve_dense: shape mismatch");
  const double floor = kRelativePivotFloor * std::max(max_abs(a), 1e-300);
  for (int k = 0; k < n; ++k) {
    int pivot = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(pivot, k))) pivot = i;
    if (!(std::abs(a(pivot, k)) > floor))
      fail(ErrorKind::Singular, "singular system at column " + std::to_string(k));
    if (pivot != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(pivot, j));
      std::swap(b[k], b[pivot]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (int j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

RealMatrix invert(RealMatrix a) {
  const int n = a.rows;
  require(a.cols == n, ErrorKind::InvalidArgument, "invert: matrix not square");
  RealMatrix inv(n, n);
  for (int i = 0; i < n; ++i) inv(i, i) = 1.0;
  const double floor = kRelativePivotFloor * std::max(max_abs(a), 1e-300);
  for (int k = 0; k < n; ++k) {
    int pivot = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(pivot, k))) pivot = i;
    if (!(std::abs(a(pivot, k)) > floor))
      fail(ErrorKind::Singular, "singular matrix at column " + std::to_string(k));
    if (pivot != k) {
      for (int j = 0; j < n; ++j) {
        std::swap(a(k, j), a(pivot, j));
        std::swap(inv(k, j), inv(pivot, j));
      }
    }
    const double d = a(k, k);
    for (int j = 0; j < n; ++j) {
      a(k, j) /= d;
      inv(k, j) /= d;
    }
    for (int i = 0; i < n; ++i) {
      if (i == k) continue;
      const double f = a(i, k);
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        a(i, j) -= f * a(k, j);
        inv(i, j) -= f * inv(k, j);
      }
    }
  }
  return inv;
}

}  // namespace smarthand
