#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nscale/effective_model.hpp"
#include "nscale/potential.hpp"
#include "nscale/rng.hpp"

namespace nscale {

struct InitialLaw {
  enum class Kind { point, gaussian };
  Kind kind = Kind::point;
  Eigen::VectorXd x0;
  double stddev = 0.0;  // gaussian only, isotropic
};

struct SimulationSpec {
  explicit SimulationSpec(MultiscalePotential p) : potential(std::move(p)) {}

  MultiscalePotential potential;
  double sigma = 1.0;
  double epsilon = 0.0;  // > 0 for the full model; ignored by the homogenized one
  double dt = 0.0;       // 0 = use the stability default
  double horizon = 1.0;
  std::size_t paths = 100000;
  std::uint64_t seed = 0;
  InitialLaw initial;
  double safety_box = 0.0;  // 0 = 4x the auto box half-width
  int snapshot_stride = 0;  // steps between retained snapshots, 0 = none
  int workers = 0;
};

// Stability default for the full model:
//   dt = min(1e-3, c * eps^{2N} / hessian_scale),
// hessian_scale = (2π)^2 sup|V1| + ||∇²V0||, the stiffest drift Lipschitz
// scale at the finest level.
double stable_dt_full(const MultiscalePotential& p, double sigma, double epsilon,
                      double c = 0.05);

struct EnsembleSummary {
  struct Row {
    std::string observable;
    double value;
    double stderr_;
  };
  std::vector<Row> rows;
};

struct TrajectoryEnsemble {
  int dim = 1;
  std::size_t paths = 0;
  std::uint64_t seed = 0;
  std::string kind;        // "full" or "homogenized"
  std::string spec_hash;   // sha256 of the canonical spec fingerprint
  double horizon = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;
  std::vector<double> terminal;        // paths * dim
  std::vector<double> snapshot_times;
  std::vector<double> snapshots;       // time-major: [t][path][comp]
  std::size_t psd_clamps = 0;

  // raw moments 1..4 per component, with Monte Carlo standard errors
  EnsembleSummary summary() const;
  void write_samples_csv(const std::string& path) const;
  void write_summary_csv(const std::string& path) const;
};

// Euler-Maruyama for dX = -grad V^eps(X) dt + sqrt(2 sigma) dW. Increments
// come from the counting RNG keyed by (seed, path, step); ensembles are
// bit-identical under any worker count. Throws BlowUpError if a path leaves
// the safety box.
TrajectoryEnsemble simulate_full(const SimulationSpec& spec);

// Euler-Maruyama for the coarse-grained SDE
//   dX = (-M ∇Psi + sigma div M) dt + sqrt(2 sigma) S(X) dW,  S = sqrt(M),
// with M, ∇Psi, div M interpolated from the tabulated model. Interpolated M
// with tiny negative eigenvalues is repaired by clamping; more than 0.1% of
// steps clamped fails the run with PsdError.
TrajectoryEnsemble simulate_homogenized(const SimulationSpec& spec,
                                        const EffectiveModel& model);

// Symmetric PSD square root. Eigenvalues in [-1e-12, 0) are clamped to 0;
// below that throws PsdError.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a);

// Named observables of the first component: "one", "x", "x2", "x4",
// "bump" (= exp(-1/(1-u^2)) for |u| < 1, u = x/2).
double observable_eval(const std::string& name, const double* x, int dim);

struct WeakErrorRow {
  std::string observable;
  double full_mean, full_se;
  double homog_mean, homog_se;
  double gap, gap_se;
};

// |E f(X_T^eps) - E f(X_T^0)| with Monte Carlo confidence intervals.
std::vector<WeakErrorRow> weak_error(const TrajectoryEnsemble& full,
                                     const TrajectoryEnsemble& homog,
                                     const std::vector<std::string>& observables);

void write_weak_error_csv(const std::string& path,
                          const std::vector<WeakErrorRow>& rows);

struct GofResult {
  double chi2 = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

// Pearson chi-squared against a target law given by its CDF, with
// equiprobable bins (expected count = n/bins in every bin).
GofResult chi_squared_gof(const std::vector<double>& samples,
                          const std::function<double(double)>& cdf, int bins);

// Canonical description string hashed into spec_hash.
std::string spec_fingerprint(const SimulationSpec& spec, const std::string& kind);

}  // namespace nscale
