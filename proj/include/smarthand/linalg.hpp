#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace smarthand {

/// Dense row-major real matrix used by the circuit solvers.
struct RealMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  RealMatrix() = default;
  RealMatrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  bool operator==(const RealMatrix&) const = default;
};

/// Solves A x = b by Gaussian elimination with partial pivoting.
/// Throws Error(Singular) when a pivot vanishes relative to the matrix scale.
std::vector<double> solve_dense(RealMatrix a, std::vector<double> b);

/// Inverse of a square matrix by Gauss-Jordan elimination with partial pivoting.
RealMatrix invert(RealMatrix a);

}  // namespace smarthand
