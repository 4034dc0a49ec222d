#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nscale/hierarchy.hpp"
#include "nscale/potential.hpp"
#include "nscale/torus_grid.hpp"

namespace nscale {

// Z(x) = ∫...∫ e^{-V(x,y)/sigma} dy over (T^d)^N, evaluated in the log domain
// (Boltzmann weights are shifted by their max before exponentiation).
struct ZResult {
  double log_z;
  double z;  // exp(log_z); may underflow to 0 for deep wells, log_z is exact
};
ZResult compute_z(const MultiscalePotential& p, double sigma,
                  const Eigen::VectorXd& x0, const std::vector<TorusGrid>& grids);

// d = 1 closed form: M(x) = 1 / (Z1(x) Zhat1(x)) with Z1, Zhat1 the N-fold
// quadratures of e^{∓V1/sigma}. Throws InputError for d != 1.
struct OneDimClosedForm {
  double z1;
  double zhat1;
  double m;
  double log_z1;
  double log_zhat1;
};
OneDimClosedForm closed_form_1d(const MultiscalePotential& p, double sigma, double x,
                                const std::vector<TorusGrid>& grids);

// M(x) = K_eff(x) / Z(x) from a full hierarchy solve; output symmetrized.
// Throws ConsistencyError if the asymmetry residual exceeds 1e-6.
Eigen::MatrixXd effective_tensor(const MultiscalePotential& p, double sigma,
                                 const Eigen::VectorXd& x0,
                                 const std::vector<TorusGrid>& grids,
                                 const HierarchyOptions& opt = {},
                                 double* asymmetry = nullptr);

// Uniform tabulation grid over a box.
struct XGrid {
  Box box;
  std::vector<int> nodes;  // per dimension

  int dim() const { return static_cast<int>(nodes.size()); }
  std::size_t count() const {
    std::size_t c = 1;
    for (int n : nodes) c *= static_cast<std::size_t>(n);
    return c;
  }
  double spacing(int k) const { return (box.hi[k] - box.lo[k]) / (nodes[k] - 1); }
  void coord(std::size_t idx, double* x) const {
    for (int k = 0; k < dim(); ++k) {
      x[k] = box.lo[k] + spacing(k) * static_cast<double>(idx % nodes[k]);
      idx /= nodes[k];
    }
  }
  std::size_t index(const int* i) const {
    std::size_t idx = 0;
    for (int k = dim() - 1; k >= 0; --k) idx = idx * nodes[k] + i[k];
    return idx;
  }
};

// Tabulated coarse-grained model: Z, Psi = -sigma log Z, M, div M and grad Psi
// over an x-grid, with interpolation for the SDE integrator (cubic in 1d,
// multilinear in higher dimension). Immutable after construction.
class EffectiveModel {
 public:
  int dim = 1;
  double sigma = 1.0;
  std::string potential_name;
  std::string potential_params;
  int n_scales = 1;
  std::vector<int> torus_n;
  XGrid xgrid;
  int interpolation_order = 3;

  std::vector<double> z;         // per node
  std::vector<double> log_z;     // per node
  std::vector<double> psi;       // per node
  std::vector<double> m;         // per node, d*d row-major
  std::vector<double> div_m;     // per node, d
  std::vector<double> grad_psi;  // per node, d

  // Evaluation throws ExtrapolationError outside the one-node margin.
  // m_at repairs tiny negative eigenvalues produced by interpolation and
  // counts the repairs in *clamps when given.
  Eigen::MatrixXd m_at(const double* x, std::size_t* clamps = nullptr) const;
  double psi_at(const double* x) const;
  double z_at(const double* x) const;
  Eigen::VectorXd grad_psi_at(const double* x) const;
  Eigen::VectorXd div_m_at(const double* x) const;

  // CSV round trip; the header records sigma, grids, potential and version.
  void write_csv(const std::string& path) const;
  static EffectiveModel read_csv(const std::string& path);

  bool covers(const Box& b, double margin_nodes = 1.0) const;
};

struct ModelBuildOptions {
  std::vector<TorusGrid> grids;
  HierarchyOptions hier;
  int workers = 0;
};

EffectiveModel build_effective_model(const MultiscalePotential& p, double sigma,
                                     const XGrid& xgrid, const ModelBuildOptions& opt);

// Rebuilds div_m and grad_psi from the tabulated m and psi by centered
// differences (one-sided at the box edges).
void finite_difference_tables(EffectiveModel& model);

// Smallest centered box with V0 >= min V0 + mass_exponent * sigma on its
// boundary; Gibbs mass outside is below e^{-mass_exponent}.
Box auto_box(const MultiscalePotential& p, double sigma, double mass_exponent = 40.0);

// Default tabulation resolution: 129 nodes per dim in 1d, 65 in 2d, 33 in 3d.
int default_x_nodes(int dim);

}  // namespace nscale
