#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "nscale/cell_solver.hpp"
#include "nscale/potential.hpp"
#include "nscale/torus_grid.hpp"

namespace nscale {

// Recursive cell-problem hierarchy. Level tensors are built top-down:
// K_N = e^{-V/sigma} I, then for each level the corrector solves
// div(K (grad theta + I)) = 0 and the next coarser tensor is the torus
// quadrature of (I+G)^T K (I+G). All stored values carry the weight
// e^{-V1/sigma}; the macroscopic factor e^{-V0(x0)/sigma} lives in
// log_scale (see CoefficientField).

struct HierarchyOptions {
  CellSolveOptions cell;
  // Retain per-level corrector-gradient tables over the full product grid
  // (needed by the variational reconstruction check).
  bool keep_gradient_tables = false;
};

struct LevelSnapshot {
  CoefficientField field;
  CorrectorField corrector;
};

struct HierarchyDiagnostics {
  double max_residual = 0.0;
  double max_energy_gap = 0.0;   // |sym - one_sided| integration identity
  double max_mean_gap = 0.0;     // |mean(I+G) - I|
  double max_asymmetry = 0.0;    // of the assembled level tensors
  double min_field_eigenvalue = std::numeric_limits<double>::infinity();
  std::size_t cell_solves = 0;
};

// Corrector gradients of every level over the product of the fast grids,
// ProductGrid order (level-1 slot fastest); g[j-1] covers levels 1..j.
struct GradientTables {
  std::vector<TorusGrid> grids;
  std::vector<std::vector<double>> g;
};

struct HierarchySolution {
  int dim = 1;
  int n_scales = 1;
  double sigma = 1.0;
  Eigen::VectorXd x0;
  double log_scale = 0.0;   // -V0(x0)/sigma
  double z1 = 1.0;          // mean of e^{-V1/sigma} over the product grid
  Eigen::MatrixXd k_eff;    // fully integrated tensor, = Z(x) M(x) un-scaled
  std::vector<LevelSnapshot> levels;  // levels N..1, fixed at the origin prefix
  HierarchyDiagnostics diag;
  std::optional<GradientTables> tables;

  // M(x) = K_eff / Z(x); the e^{-V0/sigma} factors cancel.
  Eigen::MatrixXd effective_tensor_raw() const { return k_eff / z1; }
};

// Solves the full chain K_N -> theta_N -> ... -> K_1 -> theta_1 -> K_eff at
// macroscopic point x0. grids[i] discretizes the level-(i+1) torus.
HierarchySolution solve_hierarchy(const MultiscalePotential& p, double sigma,
                                  const Eigen::VectorXd& x0,
                                  const std::vector<TorusGrid>& grids,
                                  const HierarchyOptions& opt = {});

// Level tensor K_level as a field over its own torus at a fixed slow point
// (x0, prefix), prefix = (y_1, ..., y_{level-1}). Solves the subtree of cell
// problems below `level`.
CoefficientField level_field(const MultiscalePotential& p, double sigma, int level,
                             const Eigen::VectorXd& x0,
                             const std::vector<Eigen::VectorXd>& prefix,
                             const std::vector<TorusGrid>& grids,
                             const HierarchyOptions& opt = {});

// log of Zhat(x0, y_1..y_k) = ∫ e^{+V1/sigma} dy_{k+1}..dy_N: the quadrature
// over exactly the scales integrated out of the level-k tensor, in the same
// e^{+V0/sigma}-normalized scale. Cauchy-Schwarz on mean(I+G) = I gives the
// pointwise ellipticity floor e·K_k(x0, y_1..y_k) e >= exp(-log_zhat);
// for k = N the floor is the Boltzmann weight itself (empty quadrature).
double log_zhat(const MultiscalePotential& p, double sigma, int k,
                const Eigen::VectorXd& x0,
                const std::vector<Eigen::VectorXd>& y_upto_k,
                const std::vector<TorusGrid>& grids);

}  // namespace nscale
