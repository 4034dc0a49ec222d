#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "nscale/errors.hpp"

namespace nscale {

// Axis-aligned box in R^d.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const double* x, double margin = 0.0) const {
    for (int k = 0; k < dim(); ++k)
      if (x[k] < lo[k] + margin || x[k] > hi[k] - margin) return false;
    return true;
  }
};

// Uniform periodic grid on the unit torus T^d: nodes i/n per axis, spacing
// 1/n. Trapezoid quadrature on a periodic grid is the plain node average, so
// weights are 1/n^d and sum to the unit cell volume.
struct TorusGrid {
  int dim = 1;
  int n = 64;

  TorusGrid() = default;
  TorusGrid(int dim_, int n_) : dim(dim_), n(n_) {
    if (dim < 1 || dim > 3) throw InputError("TorusGrid: dim must be 1..3");
    if (n < 2) throw InputError("TorusGrid: need at least 2 points per dim");
  }

  std::size_t points() const {
    std::size_t p = 1;
    for (int k = 0; k < dim; ++k) p *= static_cast<std::size_t>(n);
    return p;
  }
  double spacing() const { return 1.0 / n; }
  double quad_weight() const { return 1.0 / static_cast<double>(points()); }

  // Node coordinates for a flat index (axis 0 fastest).
  void node(std::size_t idx, double* y) const {
    for (int k = 0; k < dim; ++k) {
      y[k] = static_cast<double>(idx % n) / n;
      idx /= n;
    }
  }

  std::size_t index(const int* i) const {
    std::size_t idx = 0;
    for (int k = dim - 1; k >= 0; --k) {
      int w = ((i[k] % n) + n) % n;  // periodic wrap
      idx = idx * n + static_cast<std::size_t>(w);
    }
    return idx;
  }

  bool operator==(const TorusGrid& o) const { return dim == o.dim && n == o.n; }
};

// Iterates the product of several torus grids; `at` fills the concatenated
// coordinates of a flat multi-index (grid 0 fastest).
struct ProductGrid {
  std::vector<TorusGrid> grids;

  std::size_t points() const {
    std::size_t p = 1;
    for (const auto& g : grids) p *= g.points();
    return p;
  }
  int total_dim() const {
    int d = 0;
    for (const auto& g : grids) d += g.dim;
    return d;
  }
  void at(std::size_t idx, double* y) const {
    for (const auto& g : grids) {
      g.node(idx % g.points(), y);
      y += g.dim;
      idx /= g.points();
    }
  }
  double quad_weight() const { return 1.0 / static_cast<double>(points()); }
};

}  // namespace nscale
