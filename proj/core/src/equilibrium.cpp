#include "nscale/equilibrium.hpp"

#include <lapacke.h>

#include <cmath>
#include <fstream>
#include <iomanip>

#include "nscale/effective_model.hpp"
#include "nscale/errors.hpp"
#include "nscale/sde.hpp"
#include "nscale/special.hpp"

namespace nscale {

double DensityTable::quad_weight(std::size_t idx) const {
  double w = 1.0;
  for (int k = 0; k < dim; ++k) {
    const int i = static_cast<int>(idx % nodes[k]);
    idx /= nodes[k];
    w *= (i == 0 || i == nodes[k] - 1) ? 0.5 * spacing(k) : spacing(k);
  }
  return w;
}

double DensityTable::integrate(const std::function<double(const double*)>& f) const {
  double acc = 0.0;
  double x[3];
  const std::size_t n = count();
  for (std::size_t i = 0; i < n; ++i) {
    coord(i, x);
    acc += quad_weight(i) * density[i] * f(x);
  }
  return acc;
}

double DensityTable::cdf(double x) const {
  if (dim != 1) throw InputError("DensityTable::cdf: 1d only");
  if (x <= box.lo[0]) return 0.0;
  if (x >= box.hi[0]) return 1.0;
  const double h = spacing(0);
  const double t = (x - box.lo[0]) / h;
  const auto i = static_cast<std::size_t>(t);
  double acc = 0.0;
  for (std::size_t j = 0; j < i; ++j)
    acc += 0.5 * h * (density[j] + density[j + 1]);
  const double u = t - static_cast<double>(i);
  const double di = density[i];
  const double dj = density[i + 1];
  acc += 0.5 * u * h * (di + (di + u * (dj - di)));
  return acc;
}

DensityTable tabulate_density(const std::function<double(const double*)>& neg_log,
                              const Box& box, const std::vector<int>& nodes,
                              double sigma) {
  DensityTable t;
  t.dim = static_cast<int>(nodes.size());
  t.box = box;
  t.nodes = nodes;
  t.sigma = sigma;
  if (t.dim < 1 || t.dim > 2)
    throw InputError("tabulate_density: 1d and 2d only");
  for (int n : nodes)
    if (n < 3) throw InputError("tabulate_density: need at least 3 nodes per dim");

  const std::size_t count = t.count();
  std::vector<double> nl(count);
  double x[3];
  double nl_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    t.coord(i, x);
    nl[i] = neg_log(x);
    nl_min = std::min(nl_min, nl[i]);
  }
  t.density.resize(count);
  double raw = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    t.density[i] = std::exp(-(nl[i] - nl_min));
    raw += t.quad_weight(i) * t.density[i];
  }
  t.log_norm = std::log(raw) - nl_min;
  for (double& v : t.density) v /= raw;
  return t;
}

DensityTable pi_epsilon(const MultiscalePotential& p, double sigma, double epsilon,
                        const Box& box, int nodes_override, int min_nodes_per_period) {
  if (epsilon <= 0.0) throw InputError("pi_epsilon: epsilon must be positive");
  const double period = std::pow(epsilon, p.n_scales());
  const EpsilonView view = epsilon_view(p, epsilon);
  std::vector<int> nodes(p.dim());
  for (int k = 0; k < p.dim(); ++k) {
    const double span = box.hi[k] - box.lo[k];
    if (nodes_override > 0) {
      nodes[k] = nodes_override;
      const double per_period = period / (span / (nodes_override - 1));
      if (per_period < 8.0)
        throw ResolutionError(
            "pi_epsilon: fewer than 8 quadrature nodes per finest period");
    } else {
      nodes[k] = static_cast<int>(std::ceil(span * min_nodes_per_period / period)) + 1;
      nodes[k] = std::max(nodes[k], 129);
    }
  }
  return tabulate_density(
      [&](const double* x) { return view.evaluate(x) / sigma; }, box, nodes, sigma);
}

DensityTable pi_zero(const MultiscalePotential& p, double sigma, const Box& box,
                     const std::vector<int>& nodes,
                     const std::vector<TorusGrid>& grids) {
  Eigen::VectorXd x0(p.dim());
  return tabulate_density(
      [&](const double* x) {
        for (int k = 0; k < p.dim(); ++k) x0[k] = x[k];
        return -compute_z(p, sigma, x0, grids).log_z;
      },
      box, nodes, sigma);
}

DensityTable pi_ref(const MultiscalePotential& p, double sigma, const Box& box,
                    const std::vector<int>& nodes) {
  return tabulate_density([&](const double* x) { return p.v0(x) / sigma; }, box,
                          nodes, sigma);
}

namespace {

void check_common_grid(const DensityTable& a, const DensityTable& b,
                       const char* who) {
  if (a.dim != b.dim || a.nodes != b.nodes)
    throw InputError(std::string(who) + ": tables must share a grid");
  for (int k = 0; k < a.dim; ++k)
    if (std::abs(a.box.lo[k] - b.box.lo[k]) > 1e-12 ||
        std::abs(a.box.hi[k] - b.box.hi[k]) > 1e-12)
      throw InputError(std::string(who) + ": tables must share a box");
}

}  // namespace

double tv_distance(const DensityTable& a, const DensityTable& b) {
  check_common_grid(a, b, "tv_distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.count(); ++i)
    acc += a.quad_weight(i) * std::abs(a.density[i] - b.density[i]);
  return acc;
}

double kl_divergence(const DensityTable& a, const DensityTable& b) {
  check_common_grid(a, b, "kl_divergence");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.count(); ++i) {
    const double pa = a.density[i];
    if (pa <= 0.0) continue;
    const double pb = b.density[i];
    if (pb <= 0.0)
      throw InputError("kl_divergence: support violation (b = 0 where a > 0)");
    acc += a.quad_weight(i) * pa * std::log(pa / pb);
  }
  return std::max(0.0, acc);
}

std::vector<WeakGapRow> weak_convergence_table(
    const MultiscalePotential& p, double sigma,
    const std::vector<std::string>& observables, const std::vector<double>& eps_list,
    const Box& box, const std::vector<TorusGrid>& grids, int min_nodes_per_period) {
  std::vector<int> nodes0(p.dim(), p.dim() == 1 ? 4097 : 257);
  const DensityTable p0 = pi_zero(p, sigma, box, nodes0, grids);

  std::vector<WeakGapRow> rows;
  for (double eps : eps_list) {
    const DensityTable pe = pi_epsilon(p, sigma, eps, box, 0, min_nodes_per_period);
    for (const auto& name : observables) {
      auto f = [&](const double* x) { return observable_eval(name, x, p.dim()); };
      WeakGapRow r;
      r.epsilon = eps;
      r.observable = name;
      r.full_value = pe.integrate(f);
      r.coarse_value = p0.integrate(f);
      r.gap = std::abs(r.full_value - r.coarse_value);
      rows.push_back(r);
    }
  }
  return rows;
}

void write_weak_gap_csv(const std::string& path, const std::vector<WeakGapRow>& rows) {
  std::ofstream os(path);
  if (!os) throw Error("write_weak_gap_csv: cannot open " + path);
  os << std::setprecision(17);
  os << "# nscale-weak-gaps v1\n";
  os << "epsilon,observable,pi_eps_value,pi0_value,gap\n";
  for (const auto& r : rows)
    os << r.epsilon << "," << r.observable << "," << r.full_value << ","
       << r.coarse_value << "," << r.gap << "\n";
}

double K_of_s(double s) {
  if (s <= 0.0) throw InputError("K_of_s: s must be positive");
  const double i0s = bessel_i0_scaled(s);
  const double i1s = bessel_i1_scaled(s);
  // log I0 = log(i0_scaled) + s
  return -(std::log(i0s) + s) + s * (i1s / i0s);
}

double spectral_gap_1d(const std::function<double(double)>& log_weight, double lo,
                       double hi, int n, double sigma,
                       const std::function<double(double)>* mobility) {
  if (n < 16) throw InputError("spectral_gap_1d: need at least 16 nodes");
  if (hi <= lo) throw InputError("spectral_gap_1d: empty interval");
  const double h = (hi - lo) / (n - 1);

  // normalize weights by the max to keep the generalized problem conditioned
  std::vector<double> lw(n), wm(n - 1);
  double lw_max = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    lw[i] = log_weight(lo + i * h);
    lw_max = std::max(lw_max, lw[i]);
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = std::exp(lw[i] - lw_max);
  for (int i = 0; i + 1 < n; ++i) {
    const double xm = lo + (i + 0.5) * h;
    double m = mobility ? (*mobility)(xm) : 1.0;
    if (m <= 0.0) throw InputError("spectral_gap_1d: mobility must be positive");
    wm[i] = std::exp(log_weight(xm) - lw_max) * m;
  }

  // generalized problem A u = lambda B u reduced to standard tridiagonal
  std::vector<double> diag(n), off(n - 1);
  const double s_h2 = sigma / (h * h);
  for (int i = 0; i < n; ++i) {
    double a = 0.0;
    if (i > 0) a += wm[i - 1];
    if (i + 1 < n) a += wm[i];
    diag[i] = s_h2 * a / w[i];
  }
  for (int i = 0; i + 1 < n; ++i)
    off[i] = -s_h2 * wm[i] / std::sqrt(w[i] * w[i + 1]);

  std::vector<double> evals(2);
  std::vector<lapack_int> isuppz(4);
  lapack_int m_found = 0;
  std::vector<double> zdummy(2 * static_cast<std::size_t>(n));
  const lapack_int info = LAPACKE_dstevr(
      LAPACK_COL_MAJOR, 'N', 'I', n, diag.data(), off.data(), 0.0, 0.0, 1, 2,
      0.0, &m_found, evals.data(), zdummy.data(), n, isuppz.data());
  if (info != 0 || m_found < 2)
    throw ConvergenceError("spectral_gap_1d: tridiagonal eigensolve failed",
                           static_cast<double>(info), 0);
  return evals[1];
}

double spectral_gap_1d(const DensityTable& density, double sigma) {
  if (density.dim != 1) throw InputError("spectral_gap_1d: 1d table required");
  const int n = density.nodes[0];
  const double lo = density.box.lo[0];
  const double h = density.spacing(0);
  auto logw = [&](double x) {
    // log-linear interpolation between nodes (geometric-mean midpoints)
    double t = (x - lo) / h;
    int i = static_cast<int>(std::floor(t));
    if (i < 0) i = 0;
    if (i > n - 2) i = n - 2;
    const double u = t - i;
    const double la = std::log(std::max(density.density[i], 1e-300));
    const double lb = std::log(std::max(density.density[i + 1], 1e-300));
    return (1.0 - u) * la + u * lb;
  };
  return spectral_gap_1d(logw, lo, density.box.hi[0], n, sigma);
}

std::vector<MuckenhouptRow> muckenhoupt_profile(double alpha, double sigma,
                                                double epsilon,
                                                const std::vector<double>& r_values) {
  if (std::abs(alpha) >= 1.0)
    throw InputError("muckenhoupt_profile: need |alpha| < 1");
  if (sigma <= 0.0 || epsilon <= 0.0)
    throw InputError("muckenhoupt_profile: sigma, epsilon must be positive");

  auto v = [&](double x) {
    return x * x * (1.0 + alpha * std::cos(2.0 * M_PI * x / epsilon));
  };
  const double h = epsilon / 64.0;

  std::vector<MuckenhouptRow> rows;
  for (double r : r_values) {
    if (r <= 0.0) throw InputError("muckenhoupt_profile: r must be positive");
    // tail: ∫_r^∞ e^{-V/sigma}; truncate when the envelope drops 60 decades
    const double vr = v(r);
    const double xmax =
        std::sqrt((vr + 140.0 * sigma) / (1.0 - std::abs(alpha))) + epsilon;
    std::vector<double> tail_terms;
    for (double x = r; x < xmax; x += h)
      tail_terms.push_back(-v(x + 0.5 * h) / sigma);
    const double log_tail = log_sum_exp(tail_terms) + std::log(h);
    // forward: ∫_0^r e^{+V/sigma}
    std::vector<double> fwd_terms;
    const auto steps = static_cast<std::size_t>(std::ceil(r / h));
    const double hf = r / static_cast<double>(steps);
    for (std::size_t i = 0; i < steps; ++i)
      fwd_terms.push_back(v((static_cast<double>(i) + 0.5) * hf) / sigma);
    const double log_fwd = log_sum_exp(fwd_terms) + std::log(hf);

    MuckenhouptRow row;
    row.r = r;
    row.log_b_plus = 0.5 * (log_tail + log_fwd);
    row.log_b_minus = row.log_b_plus;  // V is even
    row.b_plus = std::exp(row.log_b_plus);
    row.b_minus = row.b_plus;
    rows.push_back(row);
  }
  return rows;
}

void write_muckenhoupt_csv(const std::string& path,
                           const std::vector<MuckenhouptRow>& rows) {
  std::ofstream os(path);
  if (!os) throw Error("write_muckenhoupt_csv: cannot open " + path);
  os << std::setprecision(17);
  os << "# nscale-muckenhoupt v1\n";
  os << "r,log_b_plus,log_b_minus,b_plus,b_minus\n";
  for (const auto& r : rows)
    os << r.r << "," << r.log_b_plus << "," << r.log_b_minus << "," << r.b_plus
       << "," << r.b_minus << "\n";
}

}  // namespace nscale
