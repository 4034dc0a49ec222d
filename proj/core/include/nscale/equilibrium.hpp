#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nscale/potential.hpp"
#include "nscale/torus_grid.hpp"

namespace nscale {

// Normalized density tabulated on a uniform box grid (1d or 2d), trapezoid
// quadrature. log_norm records the log of the raw integral before
// normalization.
struct DensityTable {
  int dim = 1;
  Box box;
  std::vector<int> nodes;
  std::vector<double> density;  // normalized: integrate(1) == 1
  double log_norm = 0.0;
  double sigma = 1.0;

  std::size_t count() const {
    std::size_t c = 1;
    for (int n : nodes) c *= static_cast<std::size_t>(n);
    return c;
  }
  double spacing(int k) const { return (box.hi[k] - box.lo[k]) / (nodes[k] - 1); }
  void coord(std::size_t idx, double* x) const {
    for (int k = 0; k < dim; ++k) {
      x[k] = box.lo[k] + spacing(k) * static_cast<double>(idx % nodes[k]);
      idx /= nodes[k];
    }
  }
  double quad_weight(std::size_t idx) const;
  double integrate(const std::function<double(const double*)>& f) const;
  // 1d only: cumulative distribution at x by trapezoid.
  double cdf(double x) const;
};

// Tabulates exp(-neg_log) over the grid and normalizes.
DensityTable tabulate_density(const std::function<double(const double*)>& neg_log,
                              const Box& box, const std::vector<int>& nodes,
                              double sigma);

// pi^eps ∝ e^{-V^eps/sigma}. Resolution: at least min_nodes_per_period grid
// nodes per finest period eps^N (default 32); an explicit nodes_override
// below 8 nodes per period throws ResolutionError.
DensityTable pi_epsilon(const MultiscalePotential& p, double sigma, double epsilon,
                        const Box& box, int nodes_override = 0,
                        int min_nodes_per_period = 32);

// pi^0 ∝ Z(x), tabulated by the N-fold torus quadrature per node.
DensityTable pi_zero(const MultiscalePotential& p, double sigma, const Box& box,
                     const std::vector<int>& nodes,
                     const std::vector<TorusGrid>& grids);

// pi_ref ∝ e^{-V0/sigma}.
DensityTable pi_ref(const MultiscalePotential& p, double sigma, const Box& box,
                    const std::vector<int>& nodes);

// L1 distance ∫|a - b| in [0, 2] and relative entropy ∫ a log(a/b) >= 0.
// Both require a common grid; kl requires b > 0 wherever a > 0.
double tv_distance(const DensityTable& a, const DensityTable& b);
double kl_divergence(const DensityTable& a, const DensityTable& b);

struct WeakGapRow {
  double epsilon;
  std::string observable;
  double full_value;    // ∫ f dpi^eps
  double coarse_value;  // ∫ f dpi^0
  double gap;
};

std::vector<WeakGapRow> weak_convergence_table(
    const MultiscalePotential& p, double sigma,
    const std::vector<std::string>& observables, const std::vector<double>& eps_list,
    const Box& box, const std::vector<TorusGrid>& grids,
    int min_nodes_per_period = 32);

void write_weak_gap_csv(const std::string& path, const std::vector<WeakGapRow>& rows);

// K(s) = -log I0(s) + s I1(s)/I0(s), the relative-entropy limit of the
// sine-perturbed Gaussian example; positive and increasing for s > 0.
double K_of_s(double s);

// Smallest nonzero eigenvalue of -sigma (1/rho)(rho m u')' on [lo, hi] with
// natural boundary conditions; rho = exp(log_weight), m = mobility (or 1).
// Discrete weighted Sturm-Liouville, midpoint fluxes, LAPACK tridiagonal
// eigensolve.
double spectral_gap_1d(const std::function<double(double)>& log_weight, double lo,
                       double hi, int n, double sigma,
                       const std::function<double(double)>* mobility = nullptr);

// Geometric-mean midpoints straight from a tabulated density.
double spectral_gap_1d(const DensityTable& density, double sigma);

// Muckenhoupt diagnostic for V^eps(x) = x^2 (1 + alpha cos(2 pi x / eps)):
// B±(r) = (∫_r^{±∞} pi)^{1/2} (∫_0^{±r} 1/pi)^{1/2}, computed in the log
// domain (the normalizer cancels).
struct MuckenhouptRow {
  double r;
  double log_b_plus;
  double log_b_minus;
  double b_plus;   // exp(log_b_plus); may overflow to inf, log is exact
  double b_minus;
};

std::vector<MuckenhouptRow> muckenhoupt_profile(double alpha, double sigma,
                                                double epsilon,
                                                const std::vector<double>& r_values);

void write_muckenhoupt_csv(const std::string& path,
                           const std::vector<MuckenhouptRow>& rows);

}  // namespace nscale
