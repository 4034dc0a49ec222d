#include "nscale/cell_solver.hpp"

#include <cmath>
#include <sstream>

#include "nscale/errors.hpp"
#include "nscale/fft.hpp"

namespace nscale {

double CoefficientField::min_eigenvalue() const {
  const std::size_t npts = grid.points();
  double lo = std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  for (std::size_t i = 0; i < npts; ++i) {
    if (dim == 1) {
      lo = std::min(lo, values[i]);
    } else {
      es.compute(at(i), Eigen::EigenvaluesOnly);
      lo = std::min(lo, es.eigenvalues().minCoeff());
    }
  }
  return lo;
}

double CoefficientField::max_asymmetry() const {
  const std::size_t npts = grid.points();
  double m = 0.0;
  for (std::size_t i = 0; i < npts; ++i) {
    const double* v = values.data() + i * dim * dim;
    for (int a = 0; a < dim; ++a)
      for (int b = a + 1; b < dim; ++b)
        m = std::max(m, std::abs(v[a * dim + b] - v[b * dim + a]));
  }
  return m;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

CorrectorField solve_cell(const CoefficientField& K, const CellSolveOptions& opt) {
  const int d = K.dim;
  const std::size_t npts = K.grid.points();
  if (K.values.size() != npts * d * d)
    throw InputError("solve_cell: coefficient array size mismatch");
  if (K.grid.dim != d)
    throw InputError("solve_cell: grid dimension must match matrix dimension");

  const double asym = K.max_asymmetry();
  const double mineig = K.min_eigenvalue();
  if (mineig <= 0.0 || !std::isfinite(mineig)) {
    std::ostringstream os;
    os << "solve_cell: coefficient not positive definite (min eig " << mineig
       << ") at level " << K.level;
    throw EllipticityError(os.str());
  }
  if (asym > 1e-10 * std::abs(mineig) + 1e-14) {
    std::ostringstream os;
    os << "solve_cell: coefficient asymmetry " << asym << " at level " << K.level;
    throw EllipticityError(os.str());
  }

  SpectralOps ops(d, K.grid.n);

  // preconditioner scale: mean of trace/d
  double kbar = 0.0;
  for (std::size_t i = 0; i < npts; ++i) {
    const double* v = K.values.data() + i * d * d;
    for (int a = 0; a < d; ++a) kbar += v[a * d + a];
  }
  kbar /= static_cast<double>(npts * d);

  CorrectorField out;
  out.grid = K.grid;
  out.level = K.level;
  out.dim = d;
  out.theta.assign(static_cast<std::size_t>(d) * npts, 0.0);
  out.grad.assign(npts * d * d, 0.0);
  out.residual = 0.0;

  // A u = -div(K grad u); apply via spectral gradient / divergence.
  std::vector<std::vector<double>> g, f(d);
  for (auto& v : f) v.resize(npts);
  auto apply_A = [&](const std::vector<double>& u, std::vector<double>& Au) {
    ops.gradient(u.data(), g);
    for (std::size_t i = 0; i < npts; ++i) {
      const double* kv = K.values.data() + i * d * d;
      for (int a = 0; a < d; ++a) {
        double s = 0.0;
        for (int b = 0; b < d; ++b) s += kv[a * d + b] * g[b][i];
        f[a][i] = s;
      }
    }
    ops.divergence(f, Au.data());
    for (std::size_t i = 0; i < npts; ++i) Au[i] = -Au[i];
  };

  std::vector<double> b(npts), x(npts), r(npts), z(npts), p(npts), Ap(npts);

  for (int c = 0; c < d; ++c) {
    // b = div(K e_c)
    for (int a = 0; a < d; ++a)
      for (std::size_t i = 0; i < npts; ++i)
        f[a][i] = K.values[i * d * d + a * d + c];
    ops.divergence(f, b.data());

    const double bnorm = std::sqrt(dot(b, b));
    std::fill(x.begin(), x.end(), 0.0);
    if (bnorm > 0.0) {
      r = b;
      ops.inv_laplacian(r.data(), kbar, z.data());
      p = z;
      double rz = dot(r, z);
      int it = 0;
      double rel = 1.0;
      for (; it < opt.max_iterations; ++it) {
        apply_A(p, Ap);
        const double pAp = dot(p, Ap);
        if (pAp <= 0.0) break;  // numerically singular direction
        const double alpha = rz / pAp;
        for (std::size_t i = 0; i < npts; ++i) {
          x[i] += alpha * p[i];
          r[i] -= alpha * Ap[i];
        }
        rel = std::sqrt(dot(r, r)) / bnorm;
        if (rel <= opt.tol) break;
        ops.inv_laplacian(r.data(), kbar, z.data());
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < npts; ++i) p[i] = z[i] + beta * p[i];
      }
      if (rel > opt.tol) {
        std::ostringstream os;
        os << "solve_cell: PCG stalled at relative residual " << rel
           << " after " << it << " iterations (level " << K.level << ")";
        throw ConvergenceError(os.str(), rel, it);
      }
      out.residual = std::max(out.residual, rel);
      out.iterations = std::max(out.iterations, it + 1);
    }

    // enforce the mean-zero gauge exactly
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(npts);
    for (std::size_t i = 0; i < npts; ++i) out.theta[c * npts + i] = x[i] - mean;

    ops.gradient(out.theta.data() + c * npts, g);
    for (int a = 0; a < d; ++a)
      for (std::size_t i = 0; i < npts; ++i) out.grad[i * d * d + a * d + c] = g[a][i];
  }
  return out;
}

LevelIntegral integrate_level(const CoefficientField& K, const CorrectorField& th) {
  const int d = K.dim;
  const std::size_t npts = K.grid.points();
  if (th.grid.points() != npts || th.dim != d)
    throw InputError("integrate_level: field/corrector mismatch");

  Eigen::MatrixXd sym = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd one = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd ig(d, d), kv(d, d);
  const double w = K.grid.quad_weight();
  for (std::size_t i = 0; i < npts; ++i) {
    const double* kp = K.values.data() + i * d * d;
    const double* gp = th.grad.data() + i * d * d;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        kv(a, b) = kp[a * d + b];
        ig(a, b) = (a == b ? 1.0 : 0.0) + gp[a * d + b];
      }
    sym.noalias() += w * ig.transpose() * kv * ig;
    one.noalias() += w * kv * ig;
    mean += w * ig;
  }
  return {sym, one, mean};
}

}  // namespace nscale
