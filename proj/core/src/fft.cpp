#include "nscale/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include "nscale/errors.hpp"

namespace nscale {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

SpectralOps::SpectralOps(int dim, int n) : dim_(dim), n_(n) {
  if (dim < 1 || dim > 3) throw InputError("SpectralOps: dim must be 1..3");
  if (n < 4) throw InputError("SpectralOps: need n >= 4");
  npts_ = 1;
  for (int k = 0; k < dim; ++k) npts_ *= static_cast<std::size_t>(n);
  buf_ = fftw_malloc(sizeof(fftw_complex) * npts_);
  if (!buf_) throw Error("SpectralOps: allocation failed");
  spec_.resize(2 * npts_);
  int dims[3] = {n, n, n};
  std::lock_guard lock(planner_mutex());
  auto* b = static_cast<fftw_complex*>(buf_);
  plan_fwd_ = fftw_plan_dft(dim, dims, b, b, FFTW_FORWARD, FFTW_ESTIMATE);
  plan_bwd_ = fftw_plan_dft(dim, dims, b, b, FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!plan_fwd_ || !plan_bwd_) throw Error("SpectralOps: FFTW planning failed");
}

SpectralOps::~SpectralOps() {
  std::lock_guard lock(planner_mutex());
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
  if (buf_) fftw_free(buf_);
}

double SpectralOps::wavenumber(int idx) const {
  int k = idx <= n_ / 2 ? idx : idx - n_;
  if (n_ % 2 == 0 && idx == n_ / 2) k = 0;  // zero the Nyquist derivative
  return 2.0 * M_PI * k;
}

void SpectralOps::forward(const double* u) {
  auto* b = static_cast<fftw_complex*>(buf_);
  for (std::size_t i = 0; i < npts_; ++i) {
    b[i][0] = u[i];
    b[i][1] = 0.0;
  }
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  for (std::size_t i = 0; i < npts_; ++i) {
    spec_[2 * i] = b[i][0];
    spec_[2 * i + 1] = b[i][1];
  }
}

void SpectralOps::backward(double* out) {
  auto* b = static_cast<fftw_complex*>(buf_);
  fftw_execute(static_cast<fftw_plan>(plan_bwd_));
  const double scale = 1.0 / static_cast<double>(npts_);
  for (std::size_t i = 0; i < npts_; ++i) out[i] = b[i][0] * scale;
}

void SpectralOps::gradient(const double* u, std::vector<std::vector<double>>& g) {
  g.resize(dim_);
  for (auto& v : g) v.resize(npts_);
  forward(u);
  auto* b = static_cast<fftw_complex*>(buf_);
  for (int a = 0; a < dim_; ++a) {
    for (std::size_t i = 0; i < npts_; ++i) {
      std::size_t rem = i;
      for (int k = 0; k < a; ++k) rem /= n_;
      const double kk = wavenumber(static_cast<int>(rem % n_));
      // multiply by i*kk
      b[i][0] = -kk * spec_[2 * i + 1];
      b[i][1] = kk * spec_[2 * i];
    }
    backward(g[a].data());
  }
}

void SpectralOps::divergence(const std::vector<std::vector<double>>& f, double* out) {
  auto* b = static_cast<fftw_complex*>(buf_);
  std::vector<double> acc_re(npts_, 0.0), acc_im(npts_, 0.0);
  for (int a = 0; a < dim_; ++a) {
    forward(f[a].data());
    for (std::size_t i = 0; i < npts_; ++i) {
      std::size_t rem = i;
      for (int k = 0; k < a; ++k) rem /= n_;
      const double kk = wavenumber(static_cast<int>(rem % n_));
      acc_re[i] += -kk * spec_[2 * i + 1];
      acc_im[i] += kk * spec_[2 * i];
    }
  }
  for (std::size_t i = 0; i < npts_; ++i) {
    b[i][0] = acc_re[i];
    b[i][1] = acc_im[i];
  }
  backward(out);
}

void SpectralOps::inv_laplacian(const double* r, double kbar, double* out) {
  forward(r);
  auto* b = static_cast<fftw_complex*>(buf_);
  for (std::size_t i = 0; i < npts_; ++i) {
    std::size_t rem = i;
    double k2 = 0.0;
    for (int a = 0; a < dim_; ++a) {
      const double kk = wavenumber(static_cast<int>(rem % n_));
      k2 += kk * kk;
      rem /= n_;
    }
    if (k2 == 0.0) {
      b[i][0] = 0.0;
      b[i][1] = 0.0;
    } else {
      const double s = 1.0 / (kbar * k2);
      b[i][0] = spec_[2 * i] * s;
      b[i][1] = spec_[2 * i + 1] * s;
    }
  }
  backward(out);
}

}  // namespace nscale
