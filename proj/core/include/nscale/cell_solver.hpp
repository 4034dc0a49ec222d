#pragma once

#include <vector>

#include <Eigen/Dense>

#include "nscale/torus_grid.hpp"

namespace nscale {

// Symmetric d x d coefficient samples on a TorusGrid. Stored values carry the
// weight e^{-V1/sigma}; the common factor e^{-V0(x0)/sigma} is kept
// symbolically in log_scale so small temperatures stay well-conditioned:
// true field = exp(log_scale) * values.
struct CoefficientField {
  TorusGrid grid;
  int level = 0;
  int dim = 1;                 // matrix dimension d
  std::vector<double> values;  // points() * d*d, row-major per node
  double log_scale = 0.0;
  std::vector<double> slow;    // (x0..., fixed torus prefix...) for reports

  Eigen::MatrixXd at(std::size_t node) const {
    Eigen::MatrixXd m(dim, dim);
    const double* v = values.data() + node * dim * dim;
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) m(a, b) = v[a * dim + b];
    return m;
  }
  void set(std::size_t node, const Eigen::MatrixXd& m) {
    double* v = values.data() + node * dim * dim;
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) v[a * dim + b] = m(a, b);
  }

  // Minimum eigenvalue over all nodes (of the stored, scaled values).
  double min_eigenvalue() const;
  // Largest |K - K^T| entry over all nodes.
  double max_asymmetry() const;
};

// Mean-zero periodic corrector theta at one hierarchy level: d scalar fields
// and their gradients. grad stores (∂_a theta_c) row-major per node, so
// column c of (I + grad) is e_c + ∇theta_c.
struct CorrectorField {
  TorusGrid grid;
  int level = 0;
  int dim = 1;
  std::vector<double> theta;  // component-major: theta[c*points + i]
  std::vector<double> grad;   // points * d*d
  double residual = 0.0;      // worst relative l2 residual over columns
  int iterations = 0;
};

struct CellSolveOptions {
  double tol = 1e-10;       // relative l2 residual
  int max_iterations = 2000;
};

// Solves the periodic cell problem div(K (grad theta + I)) = 0 on T^d by
// preconditioned conjugate gradients on the pseudo-spectral operator, one
// right-hand side per coordinate direction. Throws EllipticityError if K is
// not symmetric positive definite at every node, ConvergenceError if the
// iteration cap is hit.
CorrectorField solve_cell(const CoefficientField& K, const CellSolveOptions& opt = {});

// Per-level quadratures used by the hierarchy recursion and its invariants.
struct LevelIntegral {
  Eigen::MatrixXd symmetric;    // ∫ (I+G)^T K (I+G)
  Eigen::MatrixXd one_sided;    // ∫ K (I+G)
  Eigen::MatrixXd mean_i_plus_g;  // ∫ (I+G), equals I for exact solves
};

LevelIntegral integrate_level(const CoefficientField& K, const CorrectorField& th);

}  // namespace nscale
