#include "nscale/variational.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "nscale/errors.hpp"
#include "nscale/special.hpp"

namespace nscale {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
}

FourierTrial FourierTrial::random(int dim, int modes, double amplitude,
                                  SequenceRng& rng) {
  FourierTrial t;
  t.dim = dim;
  t.modes = modes;
  // half lattice: first nonzero component positive
  std::array<int, 3> k{0, 0, 0};
  const int m = modes;
  auto push = [&](std::array<int, 3> kk) {
    for (int c = 0; c < 3; ++c) {
      if (kk[c] > 0) {
        t.lattice.push_back(kk);
        return;
      }
      if (kk[c] < 0) return;
    }
  };
  if (dim == 1) {
    for (k[0] = 1; k[0] <= m; ++k[0]) push(k);
  } else if (dim == 2) {
    for (k[0] = -m; k[0] <= m; ++k[0])
      for (k[1] = -m; k[1] <= m; ++k[1]) push({k[0], k[1], 0});
  } else {
    for (k[0] = -m; k[0] <= m; ++k[0])
      for (k[1] = -m; k[1] <= m; ++k[1])
        for (k[2] = -m; k[2] <= m; ++k[2]) push({k[0], k[1], k[2]});
  }
  t.cos_coef.resize(t.lattice.size());
  t.sin_coef.resize(t.lattice.size());
  for (std::size_t i = 0; i < t.lattice.size(); ++i) {
    // decay with |k| keeps random trials smooth
    double kn = 0;
    for (int c = 0; c < dim; ++c) kn += t.lattice[i][c] * t.lattice[i][c];
    const double damp = amplitude / (1.0 + kn);
    t.cos_coef[i] = damp * (2.0 * rng.uniform() - 1.0);
    t.sin_coef[i] = damp * (2.0 * rng.uniform() - 1.0);
  }
  return t;
}

double FourierTrial::eval(const double* y) const {
  double s = 0.0;
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    double ph = 0.0;
    for (int c = 0; c < dim; ++c) ph += lattice[i][c] * y[c];
    ph *= kTwoPi;
    s += cos_coef[i] * std::cos(ph) + sin_coef[i] * std::sin(ph);
  }
  return s;
}

void FourierTrial::grad(const double* y, double* out) const {
  for (int c = 0; c < dim; ++c) out[c] = 0.0;
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    double ph = 0.0;
    for (int c = 0; c < dim; ++c) ph += lattice[i][c] * y[c];
    ph *= kTwoPi;
    const double dc = -std::sin(ph) * cos_coef[i] + std::cos(ph) * sin_coef[i];
    for (int c = 0; c < dim; ++c) out[c] += kTwoPi * lattice[i][c] * dc;
  }
}

TrialFieldSet random_trials(const MultiscalePotential& p, int level_i, int modes,
                            double amplitude, std::uint64_t seed) {
  if (level_i < 0 || level_i >= p.n_scales())
    throw InputError("random_trials: level out of range");
  SequenceRng rng(seed);
  TrialFieldSet set;
  set.level_from = level_i + 1;
  for (int j = level_i + 1; j <= p.n_scales(); ++j)
    set.v.push_back(FourierTrial::random(p.dim(), modes, amplitude, rng));
  Eigen::VectorXd e(p.dim());
  for (int c = 0; c < p.dim(); ++c) e[c] = rng.normal();
  const double n = e.norm();
  set.e = n > 0 ? Eigen::VectorXd(e / n) : Eigen::VectorXd::Unit(p.dim(), 0);
  return set;
}

double quadratic_value(const MultiscalePotential& p, double sigma, int level_i,
                       const Eigen::VectorXd& x0,
                       const std::vector<Eigen::VectorXd>& prefix,
                       const TrialFieldSet& trials,
                       const std::vector<TorusGrid>& grids) {
  const int d = p.dim();
  const int N = p.n_scales();
  if (sigma <= 0) throw InputError("quadratic_value: sigma must be positive");
  if (level_i < 0 || level_i >= N) throw InputError("quadratic_value: bad level");
  if (static_cast<int>(prefix.size()) != level_i)
    throw InputError("quadratic_value: prefix must have level_i entries");
  if (trials.level_from != level_i + 1 ||
      static_cast<int>(trials.v.size()) != N - level_i)
    throw InputError("quadratic_value: trial set does not match level");
  if (trials.e.size() != d) throw InputError("quadratic_value: direction dim mismatch");
  if (static_cast<int>(grids.size()) != N)
    throw InputError("quadratic_value: need one grid per scale");

  ProductGrid pg;
  for (int j = level_i + 1; j <= N; ++j) pg.grids.push_back(grids[j - 1]);
  const std::size_t total = pg.points();

  std::vector<double> y(static_cast<std::size_t>(N) * d, 0.0);
  for (int j = 1; j <= level_i; ++j)
    for (int c = 0; c < d; ++c) y[(j - 1) * d + c] = prefix[j - 1][c];

  std::vector<double> yfree(static_cast<std::size_t>(pg.total_dim()));
  double acc = 0.0;
  std::vector<double> g(d);
  for (std::size_t i = 0; i < total; ++i) {
    pg.at(i, yfree.data());
    std::copy(yfree.begin(), yfree.end(), y.begin() + level_i * d);
    double field[3];
    for (int c = 0; c < d; ++c) field[c] = trials.e[c];
    for (std::size_t j = 0; j < trials.v.size(); ++j) {
      trials.v[j].grad(yfree.data() + j * d, g.data());
      for (int c = 0; c < d; ++c) field[c] += g[c];
    }
    double norm2 = 0.0;
    for (int c = 0; c < d; ++c) norm2 += field[c] * field[c];
    acc += norm2 * std::exp(-p.v1(x0.data(), y.data()) / sigma);
  }
  return acc / static_cast<double>(total);
}

double reconstruction_value(const MultiscalePotential& p, double sigma,
                            const HierarchySolution& sol, const Eigen::VectorXd& e) {
  if (!sol.tables)
    throw DependencyError(
        "reconstruction_value: hierarchy was solved without gradient tables");
  const int d = sol.dim;
  const int N = sol.n_scales;
  const int mm = d * d;
  if (e.size() != d) throw InputError("reconstruction_value: direction dim mismatch");

  const auto& tab = *sol.tables;
  ProductGrid pg{tab.grids};
  const std::size_t total = pg.points();
  std::vector<std::size_t> level_points(N);
  {
    std::size_t acc = 1;
    for (int j = 1; j <= N; ++j) {
      acc *= tab.grids[j - 1].points();
      level_points[j - 1] = acc;  // points of the product of slots 1..j
    }
  }

  std::vector<double> y(static_cast<std::size_t>(pg.total_dim()));
  double accum = 0.0;
  double vec[3], nxt[3];
  for (std::size_t i = 0; i < total; ++i) {
    pg.at(i, y.data());
    for (int c = 0; c < d; ++c) vec[c] = e[c];
    for (int j = 1; j <= N; ++j) {
      const std::size_t idx_j = i % level_points[j - 1];
      const double* G = tab.g[j - 1].data() + idx_j * mm;
      for (int a = 0; a < d; ++a) {
        double s = vec[a];
        for (int c = 0; c < d; ++c) s += G[a * d + c] * vec[c];
        nxt[a] = s;
      }
      for (int a = 0; a < d; ++a) vec[a] = nxt[a];
    }
    double norm2 = 0.0;
    for (int c = 0; c < d; ++c) norm2 += vec[c] * vec[c];
    accum += norm2 * std::exp(-p.v1(sol.x0.data(), y.data()) / sigma);
  }
  return accum / static_cast<double>(total);
}

BoundChainReport check_bound_chain(const EffectiveModel& model,
                                   const MultiscalePotential& p,
                                   const std::vector<TorusGrid>& grids,
                                   int n_random_directions, std::uint64_t seed) {
  const int d = model.dim;
  const int mm = d * d;
  BoundChainReport rep;

  OscSpec osc_spec;
  osc_spec.x_box = model.xgrid.box;
  rep.osc = oscillation_or_declared(p, osc_spec);
  const double lower = std::exp(-rep.osc / model.sigma);

  std::vector<Eigen::VectorXd> dirs;
  for (int c = 0; c < d; ++c) dirs.push_back(Eigen::VectorXd::Unit(d, c));
  SequenceRng rng(seed);
  for (int r = 0; r < n_random_directions; ++r) {
    Eigen::VectorXd e(d);
    for (int c = 0; c < d; ++c) e[c] = rng.normal();
    if (e.norm() == 0) e = Eigen::VectorXd::Unit(d, 0);
    dirs.push_back(e.normalized());
  }

  const std::size_t count = model.xgrid.count();
  std::vector<double> xc(d);
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    model.xgrid.coord(i, xc.data());
    Eigen::MatrixXd M(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) M(a, b) = model.m[i * mm + a * d + b];

    // inner bound 1/(Z1 Zhat1) by direct quadrature at this node
    ProductGrid pg{grids};
    const std::size_t total = pg.points();
    std::vector<double> neg(total), pos(total);
    std::vector<double> y(static_cast<std::size_t>(p.n_scales()) * d);
    for (std::size_t q = 0; q < total; ++q) {
      pg.at(q, y.data());
      const double v = p.v1(xc.data(), y.data()) / model.sigma;
      neg[q] = -v;
      pos[q] = v;
    }
    const double inner = std::exp(-(log_mean_exp(neg) + log_mean_exp(pos)));

    for (const auto& e : dirs) {
      const double mv = e.dot(M * e);
      double margin = std::min(mv - lower, 1.0 - mv);
      if (d == 1) {
        margin = std::min(margin, std::min(mv - inner, inner - lower));
      }
      BoundChainRow row;
      row.node = i;
      row.x.assign(xc.begin(), xc.end());
      row.direction.assign(e.data(), e.data() + d);
      row.lower = lower;
      row.inner = inner;
      row.m_value = mv;
      row.upper = 1.0;
      row.margin = margin;
      rep.worst_margin = std::min(rep.worst_margin, margin);
      rep.rows.push_back(std::move(row));
    }
  }
  return rep;
}

void BoundChainReport::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error("BoundChainReport: cannot open " + path);
  os << std::setprecision(17);
  os << "# nscale-bounds v1\n# osc=" << osc << "\n";
  os << "node";
  if (!rows.empty()) {
    for (std::size_t k = 0; k < rows[0].x.size(); ++k) os << ",x" << k;
    for (std::size_t k = 0; k < rows[0].direction.size(); ++k) os << ",e" << k;
  }
  os << ",lower,inner_1d,m_value,upper,margin\n";
  for (const auto& r : rows) {
    os << r.node;
    for (double v : r.x) os << "," << v;
    for (double v : r.direction) os << "," << v;
    os << "," << r.lower << "," << r.inner << "," << r.m_value << "," << r.upper
       << "," << r.margin << "\n";
  }
}

EllipticityReport ellipticity_floor(const MultiscalePotential& p, double sigma,
                                    const std::vector<TorusGrid>& grids,
                                    const Box& x_box, int points_per_level,
                                    std::uint64_t seed, const HierarchyOptions& opt) {
  const int d = p.dim();
  EllipticityReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  SequenceRng rng(seed);
  for (int level = 1; level <= p.n_scales(); ++level) {
    for (int pt = 0; pt < points_per_level; ++pt) {
      Eigen::VectorXd x0(d);
      for (int c = 0; c < d; ++c) x0[c] = rng.uniform(x_box.lo[c], x_box.hi[c]);
      std::vector<Eigen::VectorXd> prefix;
      for (int j = 1; j < level; ++j) {
        Eigen::VectorXd y(d);
        for (int c = 0; c < d; ++c) y[c] = rng.uniform();
        prefix.push_back(y);
      }
      const CoefficientField field = level_field(p, sigma, level, x0, prefix, grids, opt);
      const double mineig = field.min_eigenvalue();
      const double floor = std::exp(-log_zhat(p, sigma, level, x0, prefix, grids));
      EllipticityRow row;
      row.level = level;
      row.slow = field.slow;
      row.min_eig = mineig;
      row.floor = floor;
      row.margin = mineig - floor;
      rep.worst_margin = std::min(rep.worst_margin, row.margin);
      rep.rows.push_back(std::move(row));
    }
  }
  return rep;
}

void EllipticityReport::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error("EllipticityReport: cannot open " + path);
  os << std::setprecision(17);
  os << "# nscale-ellipticity v1\n";
  os << "level,slow,min_eig,floor,margin\n";
  for (const auto& r : rows) {
    os << r.level << ",\"";
    for (std::size_t i = 0; i < r.slow.size(); ++i) os << (i ? " " : "") << r.slow[i];
    os << "\"," << r.min_eig << "," << r.floor << "," << r.margin << "\n";
  }
}

}  // namespace nscale
