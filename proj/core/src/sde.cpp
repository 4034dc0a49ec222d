#include "nscale/sde.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "nscale/errors.hpp"
#include "nscale/manifest.hpp"
#include "nscale/parallel.hpp"
#include "nscale/special.hpp"

namespace nscale {

double stable_dt_full(const MultiscalePotential& p, double sigma, double epsilon,
                      double c) {
  if (epsilon <= 0.0) throw InputError("stable_dt_full: epsilon must be positive");
  (void)sigma;
  const double four_pi2 = 4.0 * M_PI * M_PI;
  const double scale =
      four_pi2 * std::max(p.sup_v1_bound(), 1e-3) + p.hessian_v0_bound();
  const double eps_pow = std::pow(epsilon, 2.0 * p.n_scales());
  return std::min(1e-3, c * eps_pow / scale);
}

std::string spec_fingerprint(const SimulationSpec& spec, const std::string& kind) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << kind << "|" << spec.potential.name() << "|" << spec.potential.params()
     << "|sigma=" << spec.sigma << "|eps=" << spec.epsilon << "|dt=" << spec.dt
     << "|T=" << spec.horizon << "|paths=" << spec.paths << "|seed=" << spec.seed
     << "|init=" << (spec.initial.kind == InitialLaw::Kind::point ? "point" : "gauss");
  for (int k = 0; k < spec.initial.x0.size(); ++k) os << "," << spec.initial.x0[k];
  os << "|istd=" << spec.initial.stddev;
  return os.str();
}

namespace {

constexpr std::uint32_t kInitStep = 0xFFFFFFFFu;

struct StepPlan {
  std::size_t nsteps;
  double dt;
};

StepPlan plan_steps(double horizon, double dt) {
  if (horizon <= 0.0) throw InputError("simulate: horizon must be positive");
  if (dt <= 0.0) throw InputError("simulate: dt must be positive");
  const auto nsteps = static_cast<std::size_t>(std::llround(horizon / dt));
  const std::size_t n = std::max<std::size_t>(1, nsteps);
  return {n, horizon / static_cast<double>(n)};
}

void draw_initial(const InitialLaw& law, const CountingNormals& rng,
                  std::uint64_t path, int d, double* x) {
  if (law.x0.size() != d) throw InputError("simulate: initial point dim mismatch");
  for (int k = 0; k < d; ++k) x[k] = law.x0[k];
  if (law.kind == InitialLaw::Kind::gaussian && law.stddev > 0.0) {
    double z[6];
    rng.fill(path, kInitStep, d, z);
    for (int k = 0; k < d; ++k) x[k] += law.stddev * z[k];
  }
}

double default_safety(const MultiscalePotential& p, double sigma) {
  const Box b = auto_box(p, sigma);
  double w = 0.0;
  for (int k = 0; k < b.dim(); ++k)
    w = std::max(w, std::max(std::abs(b.lo[k]), std::abs(b.hi[k])));
  return 4.0 * w;
}

}  // namespace

TrajectoryEnsemble simulate_full(const SimulationSpec& spec) {
  const int d = spec.potential.dim();
  if (spec.epsilon <= 0.0) throw InputError("simulate_full: epsilon must be positive");
  if (spec.paths == 0) throw InputError("simulate_full: need at least one path");

  SimulationSpec s = spec;
  if (s.dt <= 0.0) s.dt = stable_dt_full(s.potential, s.sigma, s.epsilon);
  const StepPlan plan = plan_steps(s.horizon, s.dt);
  const double dt = plan.dt;
  const double noise = std::sqrt(2.0 * s.sigma * dt);
  const double safety =
      s.safety_box > 0.0 ? s.safety_box : default_safety(s.potential, s.sigma);

  const EpsilonView view = epsilon_view(s.potential, s.epsilon);
  const CountingNormals rng(s.seed);

  TrajectoryEnsemble ens;
  ens.dim = d;
  ens.paths = s.paths;
  ens.seed = s.seed;
  ens.kind = "full";
  ens.spec_hash = sha256_hex(spec_fingerprint(s, "full"));
  ens.horizon = s.horizon;
  ens.dt = dt;
  ens.steps = plan.nsteps;
  ens.terminal.resize(s.paths * d);

  const int stride = s.snapshot_stride;
  std::size_t n_snaps = 0;
  if (stride > 0) {
    n_snaps = plan.nsteps / stride;
    ens.snapshots.assign(n_snaps * s.paths * d, 0.0);
    for (std::size_t k = 1; k <= n_snaps; ++k)
      ens.snapshot_times.push_back(static_cast<double>(k * stride) * dt);
  }

  parallel_for(s.paths, s.workers, [&](std::size_t begin, std::size_t end) {
    double x[3], g[3], z[6];
    for (std::size_t path = begin; path < end; ++path) {
      draw_initial(s.initial, rng, path, d, x);
      for (std::size_t step = 0; step < plan.nsteps; ++step) {
        view.grad(x, g);
        rng.fill(path, static_cast<std::uint32_t>(step), d, z);
        for (int k = 0; k < d; ++k) x[k] += -g[k] * dt + noise * z[k];
        for (int k = 0; k < d; ++k) {
          if (!(std::abs(x[k]) <= safety)) {
            std::ostringstream os;
            os << "simulate_full: path " << path << " escaped |x| > " << safety
               << " at step " << step;
            throw BlowUpError(os.str(), static_cast<long>(step));
          }
        }
        if (stride > 0 && (step + 1) % stride == 0) {
          const std::size_t snap = (step + 1) / stride - 1;
          if (snap < n_snaps)
            for (int k = 0; k < d; ++k)
              ens.snapshots[(snap * s.paths + path) * d + k] = x[k];
        }
      }
      for (int k = 0; k < d; ++k) ens.terminal[path * d + k] = x[k];
    }
  });
  return ens;
}

TrajectoryEnsemble simulate_homogenized(const SimulationSpec& spec,
                                        const EffectiveModel& model) {
  const int d = spec.potential.dim();
  if (model.dim != d) throw InputError("simulate_homogenized: model dim mismatch");
  if (spec.paths == 0) throw InputError("simulate_homogenized: need at least one path");

  SimulationSpec s = spec;
  if (s.dt <= 0.0) s.dt = 1e-3;
  const StepPlan plan = plan_steps(s.horizon, s.dt);
  const double dt = plan.dt;
  const double noise = std::sqrt(2.0 * s.sigma * dt);

  const CountingNormals rng(s.seed);

  TrajectoryEnsemble ens;
  ens.dim = d;
  ens.paths = s.paths;
  ens.seed = s.seed;
  ens.kind = "homogenized";
  ens.spec_hash = sha256_hex(spec_fingerprint(s, "homogenized"));
  ens.horizon = s.horizon;
  ens.dt = dt;
  ens.steps = plan.nsteps;
  ens.terminal.resize(s.paths * d);

  const int stride = s.snapshot_stride;
  std::size_t n_snaps = 0;
  if (stride > 0) {
    n_snaps = plan.nsteps / stride;
    ens.snapshots.assign(n_snaps * s.paths * d, 0.0);
    for (std::size_t k = 1; k <= n_snaps; ++k)
      ens.snapshot_times.push_back(static_cast<double>(k * stride) * dt);
  }

  std::atomic<std::size_t> clamps{0};

  parallel_for(s.paths, s.workers, [&](std::size_t begin, std::size_t end) {
    double x[3], z[6];
    std::size_t local_clamps = 0;
    Eigen::VectorXd drift(d);
    for (std::size_t path = begin; path < end; ++path) {
      draw_initial(s.initial, rng, path, d, x);
      for (std::size_t step = 0; step < plan.nsteps; ++step) {
        const Eigen::MatrixXd M = model.m_at(x, &local_clamps);
        const Eigen::VectorXd gpsi = model.grad_psi_at(x);
        const Eigen::VectorXd divm = model.div_m_at(x);
        drift = -M * gpsi + s.sigma * divm;
        rng.fill(path, static_cast<std::uint32_t>(step), d, z);
        if (d == 1) {
          x[0] += drift[0] * dt + noise * std::sqrt(M(0, 0)) * z[0];
        } else {
          const Eigen::MatrixXd S = psd_sqrt(M);
          for (int a = 0; a < d; ++a) {
            double dz = 0.0;
            for (int b = 0; b < d; ++b) dz += S(a, b) * z[b];
            x[a] += drift[a] * dt + noise * dz;
          }
        }
        if (stride > 0 && (step + 1) % stride == 0) {
          const std::size_t snap = (step + 1) / stride - 1;
          if (snap < n_snaps)
            for (int k = 0; k < d; ++k)
              ens.snapshots[(snap * s.paths + path) * d + k] = x[k];
        }
      }
      for (int k = 0; k < d; ++k) ens.terminal[path * d + k] = x[k];
    }
    clamps += local_clamps;
  });

  ens.psd_clamps = clamps.load();
  const double total_steps =
      static_cast<double>(plan.nsteps) * static_cast<double>(s.paths);
  if (ens.psd_clamps > 1e-3 * total_steps) {
    std::ostringstream os;
    os << "simulate_homogenized: " << ens.psd_clamps
       << " PSD repairs exceed 0.1% of " << total_steps << " steps";
    throw PsdError(os.str());
  }
  return ens;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw InputError("psd_sqrt: matrix must be square");
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()))
    throw InputError("psd_sqrt: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  Eigen::VectorXd ev = es.eigenvalues();
  const double floor = -1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < floor) throw PsdError("psd_sqrt: eigenvalue below -1e-12");
    if (ev[i] < 0.0) ev[i] = 0.0;
  }
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

double observable_eval(const std::string& name, const double* x, int dim) {
  (void)dim;
  const double v = x[0];
  if (name == "one") return 1.0;
  if (name == "x") return v;
  if (name == "x2") return v * v;
  if (name == "x4") return v * v * v * v;
  if (name == "bump") {
    const double u = v / 2.0;
    if (std::abs(u) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - u * u));
  }
  throw InputError("unknown observable '" + name + "'");
}

namespace {

struct MeanSe {
  double mean;
  double se;
};

MeanSe observable_stats(const TrajectoryEnsemble& e, const std::string& name) {
  const std::size_t n = e.paths;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = observable_eval(name, e.terminal.data() + i * e.dim, e.dim);
    s1 += f;
    s2 += f * f;
  }
  const double mean = s1 / static_cast<double>(n);
  const double var = std::max(0.0, s2 / static_cast<double>(n) - mean * mean);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace

EnsembleSummary TrajectoryEnsemble::summary() const {
  EnsembleSummary s;
  for (int c = 0; c < dim; ++c) {
    double m[4] = {0, 0, 0, 0};
    double sq[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < paths; ++i) {
      const double v = terminal[i * dim + c];
      double p = 1.0;
      for (int k = 0; k < 4; ++k) {
        p *= v;
        m[k] += p;
        sq[k] += p * p;
      }
    }
    for (int k = 0; k < 4; ++k) {
      const double mean = m[k] / static_cast<double>(paths);
      const double var =
          std::max(0.0, sq[k] / static_cast<double>(paths) - mean * mean);
      std::ostringstream name;
      name << "m" << (k + 1) << "_" << c;
      s.rows.push_back({name.str(), mean, std::sqrt(var / static_cast<double>(paths))});
    }
  }
  return s;
}

void TrajectoryEnsemble::write_samples_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error("write_samples_csv: cannot open " + path);
  os << std::setprecision(17);
  os << "# nscale-ensemble v1\n";
  os << "# kind=" << kind << "\n# spec_hash=" << spec_hash << "\n# seed=" << seed
     << "\n# paths=" << paths << "\n# dt=" << dt << "\n# horizon=" << horizon
     << "\n# steps=" << steps << "\n# psd_clamps=" << psd_clamps << "\n";
  os << "path";
  for (int k = 0; k < dim; ++k) os << ",X" << k;
  os << "\n";
  for (std::size_t i = 0; i < paths; ++i) {
    os << i;
    for (int k = 0; k < dim; ++k) os << "," << terminal[i * dim + k];
    os << "\n";
  }
}

void TrajectoryEnsemble::write_summary_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error("write_summary_csv: cannot open " + path);
  os << std::setprecision(17);
  os << "# nscale-ensemble-summary v1\n";
  os << "observable,value,stderr,spec_hash\n";
  for (const auto& row : summary().rows)
    os << row.observable << "," << row.value << "," << row.stderr_ << ","
       << spec_hash << "\n";
}

std::vector<WeakErrorRow> weak_error(const TrajectoryEnsemble& full,
                                     const TrajectoryEnsemble& homog,
                                     const std::vector<std::string>& observables) {
  if (std::abs(full.horizon - homog.horizon) > 1e-12)
    throw InputError("weak_error: ensembles have different horizons");
  if (full.dim != homog.dim) throw InputError("weak_error: dimension mismatch");
  std::vector<WeakErrorRow> rows;
  for (const auto& name : observables) {
    const MeanSe a = observable_stats(full, name);
    const MeanSe b = observable_stats(homog, name);
    WeakErrorRow r;
    r.observable = name;
    r.full_mean = a.mean;
    r.full_se = a.se;
    r.homog_mean = b.mean;
    r.homog_se = b.se;
    r.gap = std::abs(a.mean - b.mean);
    r.gap_se = std::sqrt(a.se * a.se + b.se * b.se);
    rows.push_back(r);
  }
  return rows;
}

void write_weak_error_csv(const std::string& path,
                          const std::vector<WeakErrorRow>& rows) {
  std::ofstream os(path);
  if (!os) throw Error("write_weak_error_csv: cannot open " + path);
  os << std::setprecision(17);
  os << "# nscale-weak-error v1\n";
  os << "observable,full_mean,full_se,homog_mean,homog_se,gap,gap_se\n";
  for (const auto& r : rows)
    os << r.observable << "," << r.full_mean << "," << r.full_se << ","
       << r.homog_mean << "," << r.homog_se << "," << r.gap << "," << r.gap_se
       << "\n";
}

GofResult chi_squared_gof(const std::vector<double>& samples,
                          const std::function<double(double)>& cdf, int bins) {
  if (bins < 2) throw InputError("chi_squared_gof: need at least 2 bins");
  if (samples.size() < static_cast<std::size_t>(bins) * 5)
    throw InputError("chi_squared_gof: too few samples for the bin count");

  // equiprobable bin edges by bisection on the cdf
  double lo = -1.0, hi = 1.0;
  while (cdf(lo) > 1e-12) lo *= 2.0;
  while (cdf(hi) < 1.0 - 1e-12) hi *= 2.0;
  std::vector<double> edges(bins - 1);
  for (int k = 1; k < bins; ++k) {
    const double target = static_cast<double>(k) / bins;
    double a = lo, b = hi;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (cdf(mid) < target)
        a = mid;
      else
        b = mid;
    }
    edges[k - 1] = 0.5 * (a + b);
  }

  std::vector<std::size_t> counts(bins, 0);
  for (double v : samples) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    ++counts[static_cast<std::size_t>(it - edges.begin())];
  }
  const double expected =
      static_cast<double>(samples.size()) / static_cast<double>(bins);
  double chi2 = 0.0;
  for (std::size_t c : counts) {
    const double diff = static_cast<double>(c) - expected;
    chi2 += diff * diff / expected;
  }
  GofResult r;
  r.chi2 = chi2;
  r.dof = bins - 1;
  r.p_value = chi_squared_pvalue(chi2, r.dof);
  return r;
}

}  // namespace nscale
