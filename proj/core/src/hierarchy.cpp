#include "nscale/hierarchy.hpp"

#include <cmath>

#include "nscale/errors.hpp"
#include "nscale/special.hpp"

namespace nscale {

namespace {

void check_grids(const MultiscalePotential& p, const std::vector<TorusGrid>& grids) {
  if (static_cast<int>(grids.size()) != p.n_scales())
    throw InputError("hierarchy: need one torus grid per scale");
  for (const auto& g : grids)
    if (g.dim != p.dim()) throw InputError("hierarchy: grid dim mismatch");
}

// Top-down sweep over levels N..k_stop with slots 1..k_stop-1 frozen.
// sweep_down(target) solves every level above `target` and leaves the
// K_target values over the free slots (k_stop..target), slot k_stop fastest.
struct Engine {
  const MultiscalePotential& p;
  double sigma;
  const Eigen::VectorXd& x0;
  const std::vector<TorusGrid>& grids;  // grids[i] discretizes level i+1
  const HierarchyOptions& opt;
  int k_stop;
  std::vector<Eigen::VectorXd> prefix;  // frozen y_1..y_{k_stop-1}

  HierarchyDiagnostics diag;
  std::vector<LevelSnapshot> snapshots;  // origin-prefix chain, outer levels
  std::optional<GradientTables> tables;

  int d() const { return p.dim(); }
  int N() const { return p.n_scales(); }
  double log_scale() const { return -p.v0(x0.data()) / sigma; }

  std::size_t free_points(int from_level, int to_level) const {
    std::size_t q = 1;
    for (int j = from_level; j <= to_level; ++j) q *= grids[j - 1].points();
    return q;
  }

  // Fills all N*d torus coordinates: frozen prefix, free slots k_stop..upto
  // decoded from idx (slot k_stop fastest), slots above `upto` zeroed.
  void decode(std::size_t idx, int upto, double* y) const {
    const int dd = d();
    for (int j = 1; j < k_stop; ++j)
      for (int k = 0; k < dd; ++k) y[(j - 1) * dd + k] = prefix[j - 1][k];
    for (int j = k_stop; j <= upto; ++j) {
      grids[j - 1].node(idx % grids[j - 1].points(), y + (j - 1) * dd);
      idx /= grids[j - 1].points();
    }
    for (int j = upto + 1; j <= N(); ++j)
      for (int k = 0; k < dd; ++k) y[(j - 1) * dd + k] = 0.0;
  }

  void fill_slow(CoefficientField& field, std::size_t q, int level) const {
    const int dd = d();
    std::vector<double> y(static_cast<std::size_t>(N()) * dd);
    decode(q, level - 1, y.data());
    field.slow.assign(x0.data(), x0.data() + dd);
    field.slow.insert(field.slow.end(), y.begin(), y.begin() + (level - 1) * dd);
  }

  // Solve + integrate one cell problem; returns the symmetrized next-level
  // tensor and optionally records the snapshot / gradient table slice.
  Eigen::MatrixXd process(CoefficientField& field, std::size_t q,
                          std::size_t q_count, int level) {
    diag.min_field_eigenvalue =
        std::min(diag.min_field_eigenvalue, field.min_eigenvalue());
    diag.max_asymmetry = std::max(diag.max_asymmetry, field.max_asymmetry());

    CorrectorField corr = solve_cell(field, opt.cell);
    ++diag.cell_solves;
    diag.max_residual = std::max(diag.max_residual, corr.residual);

    const LevelIntegral li = integrate_level(field, corr);
    diag.max_energy_gap = std::max(
        diag.max_energy_gap,
        (li.symmetric - li.one_sided).cwiseAbs().maxCoeff() /
            std::max(1e-300, li.symmetric.cwiseAbs().maxCoeff()));
    diag.max_mean_gap = std::max(
        diag.max_mean_gap,
        (li.mean_i_plus_g - Eigen::MatrixXd::Identity(d(), d())).cwiseAbs().maxCoeff());

    if (tables && k_stop == 1) {
      const int mm = d() * d();
      auto& tab = tables->g[level - 1];
      for (std::size_t node = 0; node < field.grid.points(); ++node) {
        const double* src = corr.grad.data() + node * mm;
        std::copy(src, src + mm, tab.data() + (q + q_count * node) * mm);
      }
    }
    if (q == 0) snapshots.push_back({field, std::move(corr)});
    return 0.5 * (li.symmetric + li.symmetric.transpose());
  }

  std::vector<double> sweep_down(int target) {
    const int dd = d();
    const int mm = dd * dd;

    if (opt.keep_gradient_tables && k_stop == 1) {
      tables.emplace();
      tables->grids = grids;
      tables->g.resize(N());
      for (int j = 1; j <= N(); ++j)
        tables->g[j - 1].resize(free_points(1, j) * mm);
    }

    std::vector<double> kv(free_points(k_stop, N()) * mm);
    {
      std::vector<double> y(static_cast<std::size_t>(N()) * dd);
      const std::size_t total = kv.size() / mm;
      for (std::size_t i = 0; i < total; ++i) {
        decode(i, N(), y.data());
        const double w = std::exp(-p.v1(x0.data(), y.data()) / sigma);
        double* out = kv.data() + i * mm;
        for (int a = 0; a < dd; ++a)
          for (int b = 0; b < dd; ++b) out[a * dd + b] = (a == b ? w : 0.0);
      }
    }

    for (int j = N(); j > target; --j) {
      const TorusGrid& gj = grids[j - 1];
      const std::size_t nj = gj.points();
      const std::size_t q_count = free_points(k_stop, j - 1);
      std::vector<double> next(q_count * mm);

      CoefficientField field;
      field.grid = gj;
      field.level = j;
      field.dim = dd;
      field.log_scale = log_scale();
      field.values.resize(nj * mm);

      for (std::size_t q = 0; q < q_count; ++q) {
        for (std::size_t node = 0; node < nj; ++node) {
          const double* src = kv.data() + (q + q_count * node) * mm;
          std::copy(src, src + mm, field.values.data() + node * mm);
        }
        fill_slow(field, q, j);
        const Eigen::MatrixXd knext = process(field, q, q_count, j);
        double* out = next.data() + q * mm;
        for (int a = 0; a < dd; ++a)
          for (int b = 0; b < dd; ++b) out[a * dd + b] = knext(a, b);
      }
      kv = std::move(next);
    }
    return kv;
  }

  CoefficientField assemble_field(std::vector<double>&& kv, int level) const {
    CoefficientField field;
    field.grid = grids[level - 1];
    field.level = level;
    field.dim = d();
    field.log_scale = log_scale();
    field.values = std::move(kv);
    field.slow.assign(x0.data(), x0.data() + d());
    for (const auto& pr : prefix)
      field.slow.insert(field.slow.end(), pr.data(), pr.data() + d());
    return field;
  }
};

}  // namespace

HierarchySolution solve_hierarchy(const MultiscalePotential& p, double sigma,
                                  const Eigen::VectorXd& x0,
                                  const std::vector<TorusGrid>& grids,
                                  const HierarchyOptions& opt) {
  if (sigma <= 0.0) throw InputError("solve_hierarchy: sigma must be positive");
  if (x0.size() != p.dim()) throw InputError("solve_hierarchy: x0 dim mismatch");
  check_grids(p, grids);

  Engine eng{p, sigma, x0, grids, opt, 1, {}};
  std::vector<double> kv = eng.sweep_down(1);

  // level-1 field: free slot is y_1 only
  CoefficientField field = eng.assemble_field(std::move(kv), 1);
  CorrectorField corr = solve_cell(field, opt.cell);
  ++eng.diag.cell_solves;
  eng.diag.max_residual = std::max(eng.diag.max_residual, corr.residual);
  eng.diag.min_field_eigenvalue =
      std::min(eng.diag.min_field_eigenvalue, field.min_eigenvalue());
  const LevelIntegral li = integrate_level(field, corr);
  eng.diag.max_energy_gap = std::max(
      eng.diag.max_energy_gap,
      (li.symmetric - li.one_sided).cwiseAbs().maxCoeff() /
          std::max(1e-300, li.symmetric.cwiseAbs().maxCoeff()));
  eng.diag.max_mean_gap = std::max(
      eng.diag.max_mean_gap,
      (li.mean_i_plus_g - Eigen::MatrixXd::Identity(p.dim(), p.dim()))
          .cwiseAbs()
          .maxCoeff());
  if (eng.tables) {
    const int mm = p.dim() * p.dim();
    std::copy(corr.grad.begin(), corr.grad.end(), eng.tables->g[0].begin());
    (void)mm;
  }
  eng.snapshots.push_back({field, std::move(corr)});

  HierarchySolution sol;
  sol.dim = p.dim();
  sol.n_scales = p.n_scales();
  sol.sigma = sigma;
  sol.x0 = x0;
  sol.log_scale = -p.v0(x0.data()) / sigma;
  sol.k_eff = 0.5 * (li.symmetric + li.symmetric.transpose());
  sol.levels = std::move(eng.snapshots);
  sol.diag = eng.diag;
  sol.tables = std::move(eng.tables);

  // Z1 by direct quadrature of e^{-V1/sigma} over the full product grid.
  ProductGrid pg{grids};
  const std::size_t total = pg.points();
  std::vector<double> y(static_cast<std::size_t>(p.n_scales()) * p.dim());
  double acc = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    pg.at(i, y.data());
    acc += std::exp(-p.v1(x0.data(), y.data()) / sigma);
  }
  sol.z1 = acc / static_cast<double>(total);
  return sol;
}

CoefficientField level_field(const MultiscalePotential& p, double sigma, int level,
                             const Eigen::VectorXd& x0,
                             const std::vector<Eigen::VectorXd>& prefix,
                             const std::vector<TorusGrid>& grids,
                             const HierarchyOptions& opt) {
  if (sigma <= 0.0) throw InputError("level_field: sigma must be positive");
  if (level < 1 || level > p.n_scales())
    throw InputError("level_field: level out of range");
  if (static_cast<int>(prefix.size()) != level - 1)
    throw InputError("level_field: prefix must have level-1 entries");
  for (const auto& pr : prefix)
    if (pr.size() != p.dim()) throw InputError("level_field: prefix dim mismatch");
  check_grids(p, grids);

  Engine eng{p, sigma, x0, grids, opt, level, prefix};
  std::vector<double> kv = eng.sweep_down(level);
  return eng.assemble_field(std::move(kv), level);
}

double log_zhat(const MultiscalePotential& p, double sigma, int k,
                const Eigen::VectorXd& x0,
                const std::vector<Eigen::VectorXd>& y_upto_k,
                const std::vector<TorusGrid>& grids) {
  if (sigma <= 0.0) throw InputError("log_zhat: sigma must be positive");
  if (k < 1 || k > p.n_scales()) throw InputError("log_zhat: level out of range");
  if (static_cast<int>(y_upto_k.size()) != k)
    throw InputError("log_zhat: need the k fixed torus slots y_1..y_k");
  check_grids(p, grids);

  const int dd = p.dim();
  ProductGrid pg;
  for (int j = k + 1; j <= p.n_scales(); ++j) pg.grids.push_back(grids[j - 1]);
  const std::size_t total = pg.points();
  std::vector<double> y(static_cast<std::size_t>(p.n_scales()) * dd, 0.0);
  for (int j = 1; j <= k; ++j)
    for (int c = 0; c < dd; ++c) y[(j - 1) * dd + c] = y_upto_k[j - 1][c];
  std::vector<double> vals(total);
  std::vector<double> yfree(static_cast<std::size_t>(std::max(1, pg.total_dim())));
  for (std::size_t i = 0; i < total; ++i) {
    pg.at(i, yfree.data());
    std::copy(yfree.begin(), yfree.begin() + pg.total_dim(), y.begin() + k * dd);
    vals[i] = p.v1(x0.data(), y.data()) / sigma;
  }
  return log_mean_exp(vals);
}

}  // namespace nscale
