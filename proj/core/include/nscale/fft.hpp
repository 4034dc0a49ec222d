#pragma once

#include <cstddef>
#include <vector>

namespace nscale {

// Pseudo-spectral first derivatives and a constant-coefficient inverse
// Laplacian on the unit torus T^d (d = 1..3), n collocation points per axis.
// Derivatives are exact on the resolved trigonometric band; the Nyquist mode
// derivative is zeroed, which keeps d/dx real and antisymmetric so that
// -div(K grad .) assembled from these pieces is symmetric positive
// semidefinite for pointwise SPD K.
//
// Instances own their FFTW plans and scratch buffers; use one instance per
// thread. Plan creation is serialized internally (FFTW requirement).
class SpectralOps {
 public:
  SpectralOps(int dim, int n);
  ~SpectralOps();
  SpectralOps(const SpectralOps&) = delete;
  SpectralOps& operator=(const SpectralOps&) = delete;

  int dim() const { return dim_; }
  int n() const { return n_; }
  std::size_t points() const { return npts_; }

  // g[a] = ∂_a u, a = 0..dim-1.
  void gradient(const double* u, std::vector<std::vector<double>>& g);

  // out = Σ_a ∂_a f[a].
  void divergence(const std::vector<std::vector<double>>& f, double* out);

  // out = (-kbar Δ)^{-1} r restricted to mean-zero functions (the zero mode
  // is projected out).
  void inv_laplacian(const double* r, double kbar, double* out);

 private:
  void forward(const double* u);
  void backward(double* out);
  double wavenumber(int idx) const;  // signed frequency times 2π

  int dim_;
  int n_;
  std::size_t npts_;
  void* plan_fwd_ = nullptr;
  void* plan_bwd_ = nullptr;
  void* buf_ = nullptr;       // fftw_complex[npts], in-place transforms
  std::vector<double> spec_;  // saved forward spectrum (re, im interleaved)
};

}  // namespace nscale
