#include <algorithm>
#include <cmath>
#include <limits>

#include "smarthand/error.hpp"
#include "smarthand/sensorsim.hpp"

namespace smarthand {

ElectrodeDrive ElectrodeDrive::isolation(int rows, int cols, int grounded_row, double v_ref) {
  require(grounded_row >= 0 && grounded_row < rows, ErrorKind::InvalidArgument,
          "grounded row out of range");
  ElectrodeDrive d;
  d.row_potential.assign(rows, v_ref);
  d.row_potential[grounded_row] = 0.0;
  d.col_potential.assign(cols, v_ref);
  return d;
}

ElectrodeDrive ElectrodeDrive::floating(int rows, int cols, int row, int col, double v_drive) {
  require(row >= 0 && row < rows && col >= 0 && col < cols, ErrorKind::InvalidArgument,
          "driven electrode out of range");
  ElectrodeDrive d;
  d.row_potential.assign(rows, std::nullopt);
  d.col_potential.assign(cols, std::nullopt);
  d.row_potential[row] = v_drive;
  d.col_potential[col] = 0.0;
  return d;
}

NodalSolution nodal_oracle(const SensorGrid& grid, const ElectrodeDrive& drive) {
  const int rows = grid.rows, cols = grid.cols;
  require(rows >= 1 && cols >= 1 && rows <= kGridRows && cols <= kGridCols,
          ErrorKind::InvalidArgument, "nodal_oracle supports grids up to 32x32");
  require(static_cast<int>(drive.row_potential.size()) == rows &&
              static_cast<int>(drive.col_potential.size()) == cols,
          ErrorKind::InvalidArgument, "drive does not match grid shape");
  for (double r : grid.resistance)
    require(r > 0 && !std::isnan(r), ErrorKind::InvalidArgument,
            "crossing resistance must be positive");

  // Nodes 0..rows-1 are row electrodes, rows..rows+cols-1 column electrodes.
  const int n = rows + cols;
  auto conductance = [&](int r, int c) { return 1.0 / grid.r(r, c); };
  std::vector<std::optional<double>> pinned(n);
  for (int r = 0; r < rows; ++r) pinned[r] = drive.row_potential[r];
  for (int c = 0; c < cols; ++c) pinned[rows + c] = drive.col_potential[c];

  std::vector<int> unknown_index(n, -1);
  int unknowns = 0;
  for (int i = 0; i < n; ++i)
    if (!pinned[i]) unknown_index[i] = unknowns++;

  std::vector<double> potential(n, 0.0);
  for (int i = 0; i < n; ++i)
    if (pinned[i]) potential[i] = *pinned[i];

  if (unknowns > 0) {
    // KCL at every floating electrode: sum_j g_ij (V_i - V_j) = 0.
    RealMatrix a(unknowns, unknowns);
    std::vector<double> b(unknowns, 0.0);
    auto stamp = [&](int i, int j, double g) {
      const int ui = unknown_index[i], uj = unknown_index[j];
      if (ui >= 0) {
        a(ui, ui) += g;
        if (uj >= 0)
          a(ui, uj) -= g;
        else
          b[ui] += g * potential[j];
      }
    };
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double g = conductance(r, c);
        if (g == 0.0) continue;
        stamp(r, rows + c, g);
        stamp(rows + c, r, g);
      }
    }
    for (int i = 0; i < unknowns; ++i)
      if (a(i, i) == 0.0) fail(ErrorKind::Singular, "floating electrode with no conductive path");
    const auto x = solve_dense(std::move(a), std::move(b));
    for (int i = 0; i < n; ++i)
      if (unknown_index[i] >= 0) potential[i] = x[unknown_index[i]];
  }

  NodalSolution s;
  s.row_potential.assign(potential.begin(), potential.begin() + rows);
  s.col_potential.assign(potential.begin() + rows, potential.end());
  s.row_current.assign(rows, 0.0);
  s.col_current.assign(cols, 0.0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double g = conductance(r, c);
      const double i_rc = g * (potential[r] - potential[rows + c]);  // row -> column
      if (pinned[r]) s.row_current[r] += i_rc;
      if (pinned[rows + c]) s.col_current[c] -= i_rc;
    }
  }
  return s;
}

RealMatrix floating_scan(const SensorGrid& grid) {
  RealMatrix m(grid.rows, grid.cols);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const auto s = nodal_oracle(grid, ElectrodeDrive::floating(grid.rows, grid.cols, r, c, 1.0));
      m(r, c) = s.row_current[r];
    }
  }
  return m;
}

namespace {

/// Port model of the complete bipartite crossing network for given
/// conductances. The last column electrode is the reference node.
struct PortModel {
  int rows, cols;
  RealMatrix x;  ///< inverse of the reduced Laplacian, padded with the reference node

  PortModel(int rows_, int cols_, const std::vector<double>& g) : rows(rows_), cols(cols_) {
    const int n = rows + cols;
    RealMatrix lap(n - 1, n - 1);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double gv = g[static_cast<std::size_t>(r) * cols + c];
        const int u = r, v = rows + c;
        if (u < n - 1) lap(u, u) += gv;
        if (v < n - 1) lap(v, v) += gv;
        if (u < n - 1 && v < n - 1) {
          lap(u, v) -= gv;
          lap(v, u) -= gv;
        }
      }
    }
    const RealMatrix inv = invert(std::move(lap));
    x = RealMatrix(n, n);
    for (int i = 0; i < n - 1; ++i)
      for (int j = 0; j < n - 1; ++j) x(i, j) = inv(i, j);
  }

  double effective_resistance(int r, int c) const {
    const int a = r, b = rows + c;
    return x(a, a) + x(b, b) - 2.0 * x(a, b);
  }

  /// Potential difference across crossing (u, v) for unit current injected
  /// at row r and extracted at column c.
  double transfer(int r, int c, int u, int v) const {
    const int a = r, b = rows + c, p = u, q = rows + v;
    return x(p, a) - x(p, b) - x(q, a) + x(q, b);
  }
};

double max_relative_mismatch(const RealMatrix& measured, const PortModel& model) {
  double worst = 0.0;
  for (int r = 0; r < measured.rows; ++r)
    for (int c = 0; c < measured.cols; ++c) {
      const double predicted = 1.0 / model.effective_resistance(r, c);
      worst = std::max(worst, std::abs(predicted - measured(r, c)) / measured(r, c));
    }
  return worst;
}

}  // namespace

CrosstalkResult crosstalk_solve(const RealMatrix& measured, const CrosstalkOptions& options) {
  const int rows = measured.rows, cols = measured.cols;
  require(rows >= 1 && cols >= 1 && rows <= kGridRows && cols <= kGridCols,
          ErrorKind::InvalidArgument, "crosstalk_solve supports grids up to 32x32");
  for (double m : measured.data)
    require(m > 0 && std::isfinite(m), ErrorKind::InvalidArgument,
            "port conductances must be positive and finite");

  const int k = rows * cols;
  // log-conductance parametrisation keeps every iterate physical.
  std::vector<double> theta(k);
  for (int i = 0; i < k; ++i) theta[i] = std::log(measured.data[i]);
  auto conductances = [&](const std::vector<double>& t) {
    std::vector<double> g(k);
    for (int i = 0; i < k; ++i) g[i] = std::exp(t[i]);
    return g;
  };

  std::vector<double> g = conductances(theta);
  PortModel model(rows, cols, g);
  double residual = max_relative_mismatch(measured, model);

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    RealMatrix jac(k, k);
    std::vector<double> rhs(k);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const int row_k = r * cols + c;
        const double reff = model.effective_resistance(r, c);
        const double scale = 1.0 / (reff * reff * measured(r, c));
        rhs[row_k] = (measured(r, c) - 1.0 / reff) / measured(r, c);
        for (int u = 0; u < rows; ++u) {
          for (int v = 0; v < cols; ++v) {
            const double t = model.transfer(r, c, u, v);
            jac(row_k, u * cols + v) = g[u * cols + v] * t * t * scale;
          }
        }
      }
    }
    const auto step = solve_dense(std::move(jac), std::move(rhs));

    // Backtrack until the port mismatch does not grow.
    double lambda = 1.0;
    std::vector<double> trial(k);
    std::vector<double> g_trial;
    double trial_residual = residual;
    for (int halving = 0; halving < 40; ++halving, lambda *= 0.5) {
      for (int i = 0; i < k; ++i) trial[i] = theta[i] + lambda * step[i];
      g_trial = conductances(trial);
      try {
        PortModel candidate(rows, cols, g_trial);
        trial_residual = max_relative_mismatch(measured, candidate);
        if (trial_residual <= residual || halving == 39) {
          model = std::move(candidate);
          break;
        }
      } catch (const Error&) {
        // Singular candidate; shrink the step.
      }
    }

    double max_update = 0.0;
    for (int i = 0; i < k; ++i)
      max_update = std::max(max_update, std::abs(std::expm1(trial[i] - theta[i])));
    theta = trial;
    g = std::move(g_trial);
    residual = trial_residual;

    if (max_update < options.tolerance) {
      CrosstalkResult result;
      result.resistance = RealMatrix(rows, cols);
      for (int i = 0; i < k; ++i) result.resistance.data[i] = 1.0 / g[i];
      result.iterations = iter;
      result.residual = residual;
      return result;
    }
  }
  throw NonConvergenceError("crosstalk_solve did not converge in " +
                                std::to_string(options.max_iterations) +
                                " iterations (residual " + std::to_string(residual) + ")",
                            options.max_iterations, residual);
}

}  // namespace smarthand
