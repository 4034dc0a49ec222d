#include "nscale/pipeline.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "nscale/equilibrium.hpp"
#include "nscale/errors.hpp"
#include "nscale/manifest.hpp"
#include "nscale/sde.hpp"
#include "nscale/variational.hpp"
#include "nscale/version.hpp"

namespace fs = std::filesystem;

namespace nscale {

namespace {

std::string eps_tag(double eps) {
  std::ostringstream os;
  os << eps;
  std::string s = os.str();
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

RunManifest start_manifest(const ExperimentConfig& cfg, const std::string& command) {
  RunManifest m;
  m.command = command;
  m.config_hash = sha256_hex(canonical_json(cfg));
  m.code_version = version;
  m.started = timestamp_utc();
  return m;
}

void finish_manifest(RunManifest& m, PipelineResult& result,
                     const std::string& out_dir, const std::string& name) {
  m.finished = timestamp_utc();
  for (const auto& f : result.files) m.add_file(f);
  const std::string path = (fs::path(out_dir) / name).string();
  m.write(path);
  result.files.push_back(path);
  result.output_dir = out_dir;
}

void dump_correctors(const HierarchySolution& sol, const std::string& out_dir,
                     std::vector<std::string>& files) {
  for (const auto& lvl : sol.levels) {
    std::ostringstream name;
    name << "corrector_level" << lvl.field.level << ".csv";
    const std::string path = (fs::path(out_dir) / name.str()).string();
    std::ofstream os(path);
    if (!os) throw Error("dump_correctors: cannot open " + path);
    os << std::setprecision(17);
    os << "# nscale-corrector v1\n# level=" << lvl.field.level
       << "\n# log_scale=" << lvl.field.log_scale << "\n# slow=";
    for (std::size_t i = 0; i < lvl.field.slow.size(); ++i)
      os << (i ? " " : "") << lvl.field.slow[i];
    os << "\n";
    const int d = lvl.field.dim;
    os << "node";
    for (int k = 0; k < d; ++k) os << ",y" << k;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) os << ",K" << a << b;
    for (int c = 0; c < d; ++c) os << ",theta" << c;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) os << ",G" << a << b;
    os << "\n";
    const std::size_t npts = lvl.field.grid.points();
    double y[3];
    for (std::size_t i = 0; i < npts; ++i) {
      lvl.field.grid.node(i, y);
      os << i;
      for (int k = 0; k < d; ++k) os << "," << y[k];
      for (int e = 0; e < d * d; ++e) os << "," << lvl.field.values[i * d * d + e];
      for (int c = 0; c < d; ++c) os << "," << lvl.corrector.theta[c * npts + i];
      for (int e = 0; e < d * d; ++e) os << "," << lvl.corrector.grad[i * d * d + e];
      os << "\n";
    }
    files.push_back(path);
  }
}

}  // namespace

std::string resolve_output_dir(const ExperimentConfig& cfg) {
  const char* root = std::getenv("NSCALE_OUT_ROOT");
  fs::path dir = cfg.output_dir;
  if (root && *root) dir = fs::path(root) / dir;
  fs::create_directories(dir);
  return dir.string();
}

XGrid make_xgrid(const ExperimentConfig& cfg, const MultiscalePotential& p) {
  XGrid g;
  g.box = cfg.grids.x_box ? *cfg.grids.x_box
                          : auto_box(p, cfg.sigma, cfg.grids.box_mass_exponent);
  const int n = cfg.grids.x_nodes > 0 ? cfg.grids.x_nodes : default_x_nodes(p.dim());
  g.nodes.assign(p.dim(), n);
  return g;
}

EffectiveModel obtain_model(const ExperimentConfig& cfg, const MultiscalePotential& p,
                            const std::string& model_path) {
  if (!model_path.empty()) return EffectiveModel::read_csv(model_path);
  ModelBuildOptions opt;
  opt.grids = torus_grids(cfg, p);
  opt.hier.cell.tol = cfg.solver.tol;
  opt.hier.cell.max_iterations = cfg.solver.max_iterations;
  opt.workers = cfg.workers;
  return build_effective_model(p, cfg.sigma, make_xgrid(cfg, p), opt);
}

PipelineResult run_solve(const ExperimentConfig& cfg) {
  const std::string out_dir = resolve_output_dir(cfg);
  RunManifest man = start_manifest(cfg, "solve");
  PipelineResult res;

  const MultiscalePotential p = instantiate(cfg.potential);
  const EffectiveModel model = obtain_model(cfg, p, "");
  const std::string model_path = (fs::path(out_dir) / "model.csv").string();
  model.write_csv(model_path);
  res.files.push_back(model_path);

  if (cfg.dump_correctors) {
    HierarchyOptions hopt;
    hopt.cell.tol = cfg.solver.tol;
    hopt.cell.max_iterations = cfg.solver.max_iterations;
    Eigen::VectorXd center = 0.5 * (model.xgrid.box.lo + model.xgrid.box.hi);
    const HierarchySolution sol =
        solve_hierarchy(p, cfg.sigma, center, torus_grids(cfg, p), hopt);
    dump_correctors(sol, out_dir, res.files);
  }

  finish_manifest(man, res, out_dir, "manifest_solve.json");
  return res;
}

PipelineResult run_bounds(const ExperimentConfig& cfg, const std::string& model_path) {
  const std::string out_dir = resolve_output_dir(cfg);
  RunManifest man = start_manifest(cfg, "bounds");
  PipelineResult res;

  const MultiscalePotential p = instantiate(cfg.potential);
  const std::vector<TorusGrid> grids = torus_grids(cfg, p);
  const EffectiveModel model = obtain_model(cfg, p, model_path);

  const BoundChainReport chain = check_bound_chain(model, p, grids);
  const std::string chain_path = (fs::path(out_dir) / "bounds.csv").string();
  chain.write_csv(chain_path);
  res.files.push_back(chain_path);

  HierarchyOptions hopt;
  hopt.cell.tol = cfg.solver.tol;
  hopt.cell.max_iterations = cfg.solver.max_iterations;
  const EllipticityReport ell =
      ellipticity_floor(p, cfg.sigma, grids, model.xgrid.box, 16, 20240902, hopt);
  const std::string ell_path = (fs::path(out_dir) / "ellipticity.csv").string();
  ell.write_csv(ell_path);
  res.files.push_back(ell_path);

  finish_manifest(man, res, out_dir, "manifest_bounds.json");
  if (!chain.ok())
    throw BoundViolationError("bound chain violated; worst margin " +
                              std::to_string(chain.worst_margin));
  if (!ell.ok())
    throw BoundViolationError("ellipticity floor violated; worst margin " +
                              std::to_string(ell.worst_margin));
  return res;
}

PipelineResult run_simulate(const ExperimentConfig& cfg, const std::string& model_path) {
  const std::string out_dir = resolve_output_dir(cfg);
  RunManifest man = start_manifest(cfg, "simulate");
  PipelineResult res;

  const MultiscalePotential p = instantiate(cfg.potential);
  SimulationSpec spec(p);
  spec.sigma = cfg.sigma;
  spec.horizon = cfg.sde.horizon;
  spec.paths = cfg.sde.paths;
  spec.seed = cfg.sde.seed;
  spec.initial = cfg.sde.initial;
  spec.snapshot_stride = cfg.sde.snapshot_stride;
  spec.safety_box = cfg.sde.safety_box;
  spec.workers = cfg.workers;

  std::vector<TrajectoryEnsemble> fulls;
  if (cfg.sde.run_full) {
    if (cfg.epsilons.empty())
      throw ConfigError("simulate: run_full needs a nonempty epsilons list");
    for (double eps : cfg.epsilons) {
      SimulationSpec s = spec;
      s.epsilon = eps;
      s.dt = cfg.sde.dt_full;
      TrajectoryEnsemble ens = simulate_full(s);
      const std::string tag = "full_eps" + eps_tag(eps);
      const std::string sp = (fs::path(out_dir) / (tag + "_samples.csv")).string();
      const std::string su = (fs::path(out_dir) / (tag + "_summary.csv")).string();
      ens.write_samples_csv(sp);
      ens.write_summary_csv(su);
      res.files.push_back(sp);
      res.files.push_back(su);
      fulls.push_back(std::move(ens));
    }
  }

  if (cfg.sde.run_homogenized) {
    const EffectiveModel model = obtain_model(cfg, p, model_path);
    SimulationSpec s = spec;
    s.dt = cfg.sde.dt_homog;
    TrajectoryEnsemble homog = simulate_homogenized(s, model);
    const std::string sp = (fs::path(out_dir) / "homog_samples.csv").string();
    const std::string su = (fs::path(out_dir) / "homog_summary.csv").string();
    homog.write_samples_csv(sp);
    homog.write_summary_csv(su);
    res.files.push_back(sp);
    res.files.push_back(su);

    for (std::size_t i = 0; i < fulls.size(); ++i) {
      const auto rows = weak_error(fulls[i], homog, cfg.sde.observables);
      const std::string wp =
          (fs::path(out_dir) / ("weak_error_eps" + eps_tag(cfg.epsilons[i]) + ".csv"))
              .string();
      write_weak_error_csv(wp, rows);
      res.files.push_back(wp);
    }
  }

  finish_manifest(man, res, out_dir, "manifest_simulate.json");
  return res;
}

PipelineResult run_analyze(const ExperimentConfig& cfg) {
  const std::string out_dir = resolve_output_dir(cfg);
  RunManifest man = start_manifest(cfg, "analyze");
  PipelineResult res;

  const MultiscalePotential p = instantiate(cfg.potential);
  const std::vector<TorusGrid> grids = torus_grids(cfg, p);
  const Box box = cfg.grids.x_box
                      ? *cfg.grids.x_box
                      : auto_box(p, cfg.sigma, cfg.grids.box_mass_exponent);

  if (cfg.analysis.weak_convergence) {
    const auto rows =
        weak_convergence_table(p, cfg.sigma, cfg.analysis.weak_observables,
                               cfg.analysis.weak_epsilons, box, grids);
    const std::string path = (fs::path(out_dir) / "weak_gaps.csv").string();
    write_weak_gap_csv(path, rows);
    res.files.push_back(path);
  }

  if (cfg.analysis.tv_kl) {
    const std::string path = (fs::path(out_dir) / "tv_kl.csv").string();
    std::ofstream os(path);
    os << std::setprecision(17);
    os << "# nscale-tvkl v1\nepsilon,tv,kl,pinsker_bound\n";
    std::vector<int> nodes0(p.dim(), 0);
    for (double eps : cfg.analysis.tvkl_epsilons) {
      const DensityTable pe = pi_epsilon(p, cfg.sigma, eps, box);
      const DensityTable p0 = pi_zero(p, cfg.sigma, box, pe.nodes, grids);
      const double tv = tv_distance(pe, p0);
      const double kl = kl_divergence(pe, p0);
      os << eps << "," << tv << "," << kl << "," << std::sqrt(2.0 * kl) << "\n";
    }
    res.files.push_back(path);
  }

  if (cfg.analysis.k_curve) {
    const std::string path = (fs::path(out_dir) / "k_curve.csv").string();
    std::ofstream os(path);
    os << std::setprecision(17);
    os << "# nscale-kcurve v1\ns,K\n";
    const double lmin = std::log(cfg.analysis.k_s_min);
    const double lmax = std::log(cfg.analysis.k_s_max);
    for (int i = 0; i < cfg.analysis.k_points; ++i) {
      const double s =
          std::exp(lmin + (lmax - lmin) * i /
                             std::max(1, cfg.analysis.k_points - 1));
      os << s << "," << K_of_s(s) << "\n";
    }
    res.files.push_back(path);
  }

  if (cfg.analysis.muckenhoupt) {
    std::vector<double> rs;
    for (int n = 1; n <= cfg.analysis.muck_n; ++n)
      rs.push_back(cfg.analysis.muck_epsilon * (2.0 * M_PI * n + M_PI / 2.0));
    const auto rows = muckenhoupt_profile(cfg.analysis.muck_alpha, cfg.sigma,
                                          cfg.analysis.muck_epsilon, rs);
    const std::string path = (fs::path(out_dir) / "muckenhoupt.csv").string();
    write_muckenhoupt_csv(path, rows);
    res.files.push_back(path);
    const auto base = muckenhoupt_profile(0.0, cfg.sigma, cfg.analysis.muck_epsilon, rs);
    const std::string bpath = (fs::path(out_dir) / "muckenhoupt_baseline.csv").string();
    write_muckenhoupt_csv(bpath, base);
    res.files.push_back(bpath);
  }

  if (cfg.analysis.spectral_gaps) {
    if (p.dim() != 1)
      throw ConfigError("analysis.spectral_gaps requires a 1d potential");
    const double eps = cfg.analysis.gap_epsilon;
    OscSpec ospec;
    ospec.x_box = box;
    const double osc = oscillation_or_declared(p, ospec);
    const double lo = box.lo[0], hi = box.hi[0];
    const int n = std::max(
        4097, static_cast<int>(std::ceil((hi - lo) * 48.0 /
                                         std::pow(eps, p.n_scales()))) |
                  1);

    const double rho = spectral_gap_1d(
        [&](double x) { return -p.v0(&x) / cfg.sigma; }, lo, hi, n, cfg.sigma);
    const EpsilonView view = epsilon_view(p, eps);
    const double gap_eps = spectral_gap_1d(
        [&](double x) { return -view.evaluate(&x) / cfg.sigma; }, lo, hi, n,
        cfg.sigma);
    // coarse-grained gap with mobility M(x): d = 1 closed form
    auto logz = [&](double x) {
      Eigen::VectorXd x0(1);
      x0[0] = x;
      return compute_z(p, cfg.sigma, x0, grids).log_z / 1.0;
    };
    std::function<double(double)> mob = [&](double x) {
      return closed_form_1d(p, cfg.sigma, x, grids).m;
    };
    const double gap_coarse =
        spectral_gap_1d(logz, lo, hi, std::min(n, 8193), cfg.sigma, &mob);

    const std::string path = (fs::path(out_dir) / "spectral_gaps.csv").string();
    std::ofstream os(path);
    os << std::setprecision(17);
    os << "# nscale-gaps v1\nmeasure,gap,floor\n";
    os << "pi_ref," << rho << ",\n";
    os << "pi_eps," << gap_eps << "," << rho * std::exp(-2.0 * osc / cfg.sigma) << "\n";
    os << "pi_zero_mobility," << gap_coarse << ","
       << rho * std::exp(-3.0 * osc / cfg.sigma) << "\n";
    res.files.push_back(path);
  }

  finish_manifest(man, res, out_dir, "manifest_analyze.json");
  return res;
}

PipelineResult run_all(const ExperimentConfig& cfg) {
  PipelineResult all;
  PipelineResult r1 = run_solve(cfg);
  all.files = r1.files;
  all.output_dir = r1.output_dir;
  const std::string model_path = r1.files.front();
  PipelineResult r2 = run_bounds(cfg, model_path);
  all.files.insert(all.files.end(), r2.files.begin(), r2.files.end());
  if (cfg.sde.run_full || cfg.sde.run_homogenized) {
    PipelineResult r3 = run_simulate(cfg, model_path);
    all.files.insert(all.files.end(), r3.files.begin(), r3.files.end());
  }
  PipelineResult r4 = run_analyze(cfg);
  all.files.insert(all.files.end(), r4.files.begin(), r4.files.end());
  return all;
}

}  // namespace nscale
