#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nscale/torus_grid.hpp"

namespace nscale {

using ParamMap = std::map<std::string, double>;

// Multiscale potential V(x0, y1, ..., yN) = V0(x0) + V1(x0, y1, ..., yN).
// V0 is a smooth confining potential on R^d; V1 is smooth, bounded and
// 1-periodic in every y slot. Immutable after construction; evaluation is
// safe for unlimited concurrent use.
class MultiscalePotential {
 public:
  struct Callables {
    std::function<double(const double*)> v0;
    // Gradient of V0; null registers a finite-difference fallback.
    std::function<void(const double*, double*)> grad_v0;
    std::function<double(const double*, const double*)> v1;
    // grad_v1(i, x0, y, out): i = 0 differentiates in x0, i >= 1 in y_i.
    std::function<void(int, const double*, const double*, double*)> grad_v1;
  };

  struct Meta {
    std::string name = "custom";
    std::string params;            // canonical "key=value;..." string
    double sup_v1 = 0.0;           // declared bound on |V1|
    double hessian_v0 = 0.0;       // declared bound on ||∇²V0||
    std::optional<double> declared_osc;
    double fd_step = 1e-5;         // base step for FD fallbacks
  };

  MultiscalePotential(int dim, int n_scales, Callables c, Meta meta);

  int dim() const { return dim_; }
  int n_scales() const { return n_scales_; }

  double v0(const double* x0) const { return c_.v0(x0); }
  // V1 with the torus arguments wrapped mod 1.
  double v1(const double* x0, const double* y) const;
  // V0(x0) + V1(x0, y mod 1).
  double evaluate(const double* x0, const double* y) const;

  // ∇_{x_i} V, i = 0..N. Central finite differences with step
  // fd_step*(1+|x|) when no analytic gradient is registered.
  void grad_scale(int i, const double* x0, const double* y, double* out) const;
  bool has_analytic_grad(int i) const;

  const std::string& name() const { return meta_.name; }
  const std::string& params() const { return meta_.params; }
  double sup_v1_bound() const { return meta_.sup_v1; }
  double hessian_v0_bound() const { return meta_.hessian_v0; }
  std::optional<double> declared_osc() const { return meta_.declared_osc; }
  double fd_step() const { return meta_.fd_step; }

 private:
  struct Impl {
    Callables c;
  };
  int dim_;
  int n_scales_;
  Callables c_;
  Meta meta_;
};

// V^eps(x) = V(x, x/eps, ..., x/eps^N) and its gradient
// ∇V^eps = Σ_i eps^{-i} (∇_{x_i} V) at the collapsed arguments.
class EpsilonView {
 public:
  EpsilonView(MultiscalePotential p, double epsilon);

  double evaluate(const double* x) const;
  void grad(const double* x, double* out) const;
  double epsilon() const { return epsilon_; }
  const MultiscalePotential& base() const { return p_; }

 private:
  void collapse(const double* x, double* y) const;
  MultiscalePotential p_;
  double epsilon_;
  std::vector<double> powers_;  // eps^-i
};

EpsilonView epsilon_view(const MultiscalePotential& p, double epsilon);

// Grid sampling spec for the oscillation sup-inf. Sample counts are clamped
// so the total grid stays below ~3e7 points.
struct OscSpec {
  Box x_box;                // box for the macroscopic slot
  int x_samples = 256;      // per dimension
  int y_samples = 256;      // per dimension and scale
};

// Grid-sampled osc(V1) = sup V1 - inf V1 over x_box x (T^d)^N. Monotone
// nondecreasing under grid refinement.
double oscillation(const MultiscalePotential& p, const OscSpec& spec);

// Declared osc when available, otherwise the sampled value.
double oscillation_or_declared(const MultiscalePotential& p, const OscSpec& spec);

// Named catalog. Every entry is an analytic form so experiments are fully
// reproducible from the config file.
MultiscalePotential make_potential(const std::string& name, const ParamMap& params);
std::vector<std::string> potential_catalog();

}  // namespace nscale
