#include "nscale/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nscale/errors.hpp"

namespace nscale {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
}

Box parse_box(const json& j) {
  if (!j.contains("lo") || !j.contains("hi"))
    throw ConfigError("config: x_box needs 'lo' and 'hi'");
  const auto lo = j.at("lo").get<std::vector<double>>();
  const auto hi = j.at("hi").get<std::vector<double>>();
  if (lo.size() != hi.size() || lo.empty())
    throw ConfigError("config: x_box lo/hi must have equal nonzero length");
  Box b;
  b.lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), lo.size());
  b.hi = Eigen::Map<const Eigen::VectorXd>(hi.data(), hi.size());
  for (int k = 0; k < b.dim(); ++k)
    if (b.lo[k] >= b.hi[k]) throw ConfigError("config: x_box must have lo < hi");
  return b;
}

InitialLaw parse_initial(const json& j) {
  reject_unknown(j, {"type", "x", "stddev"}, "sde.initial");
  InitialLaw law;
  const std::string type = j.value("type", "point");
  if (type == "point")
    law.kind = InitialLaw::Kind::point;
  else if (type == "gaussian")
    law.kind = InitialLaw::Kind::gaussian;
  else
    throw ConfigError("config: initial.type must be 'point' or 'gaussian'");
  const auto x = j.value("x", std::vector<double>{0.0});
  law.x0 = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  law.stddev = j.value("stddev", 0.0);
  if (law.kind == InitialLaw::Kind::gaussian && law.stddev <= 0.0)
    throw ConfigError("config: gaussian initial law needs stddev > 0");
  return law;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: JSON parse failure: ") + e.what());
  }

  reject_unknown(j,
                 {"potential", "sigma", "epsilons", "grids", "solver", "sde",
                  "analysis", "output_dir", "workers", "dump_correctors"},
                 "top level");

  ExperimentConfig cfg;
  if (!j.contains("potential")) throw ConfigError("config: 'potential' is required");
  {
    const json& p = j.at("potential");
    reject_unknown(p, {"name", "params"}, "potential");
    cfg.potential.name = p.value("name", "");
    if (cfg.potential.name.empty())
      throw ConfigError("config: potential.name is required");
    if (p.contains("params"))
      for (auto it = p.at("params").begin(); it != p.at("params").end(); ++it)
        cfg.potential.params[it.key()] = it.value().get<double>();
  }
  cfg.sigma = j.value("sigma", 1.0);
  cfg.epsilons = j.value("epsilons", std::vector<double>{});
  if (j.contains("grids")) {
    const json& g = j.at("grids");
    reject_unknown(g, {"torus_n", "x_box", "x_nodes", "box_mass_exponent"}, "grids");
    if (g.contains("torus_n")) {
      if (g.at("torus_n").is_array())
        cfg.grids.torus_n = g.at("torus_n").get<std::vector<int>>();
      else
        cfg.grids.torus_n = {g.at("torus_n").get<int>()};
    }
    if (g.contains("x_box")) cfg.grids.x_box = parse_box(g.at("x_box"));
    cfg.grids.x_nodes = g.value("x_nodes", 0);
    cfg.grids.box_mass_exponent = g.value("box_mass_exponent", 40.0);
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    reject_unknown(s, {"tol", "max_iterations"}, "solver");
    cfg.solver.tol = s.value("tol", 1e-10);
    cfg.solver.max_iterations = s.value("max_iterations", 2000);
  }
  if (j.contains("sde")) {
    const json& s = j.at("sde");
    reject_unknown(s,
                   {"dt_full", "dt_homog", "horizon", "paths", "seed", "initial",
                    "snapshot_stride", "run_full", "run_homogenized", "safety_box",
                    "observables"},
                   "sde");
    cfg.sde.dt_full = s.value("dt_full", 0.0);
    cfg.sde.dt_homog = s.value("dt_homog", 1e-3);
    cfg.sde.horizon = s.value("horizon", 1.0);
    cfg.sde.paths = s.value("paths", static_cast<std::size_t>(100000));
    cfg.sde.seed = s.value("seed", static_cast<std::uint64_t>(42));
    if (s.contains("initial")) cfg.sde.initial = parse_initial(s.at("initial"));
    cfg.sde.snapshot_stride = s.value("snapshot_stride", 0);
    cfg.sde.run_full = s.value("run_full", true);
    cfg.sde.run_homogenized = s.value("run_homogenized", true);
    cfg.sde.safety_box = s.value("safety_box", 0.0);
    if (s.contains("observables"))
      cfg.sde.observables = s.at("observables").get<std::vector<std::string>>();
  }
  if (j.contains("analysis")) {
    const json& a = j.at("analysis");
    reject_unknown(a,
                   {"weak_convergence", "weak_epsilons", "weak_observables", "tv_kl",
                    "tvkl_epsilons", "k_curve", "k_s_min", "k_s_max", "k_points",
                    "muckenhoupt", "muck_alpha", "muck_epsilon", "muck_n",
                    "spectral_gaps", "gap_epsilon"},
                   "analysis");
    cfg.analysis.weak_convergence = a.value("weak_convergence", false);
    if (a.contains("weak_epsilons"))
      cfg.analysis.weak_epsilons = a.at("weak_epsilons").get<std::vector<double>>();
    if (a.contains("weak_observables"))
      cfg.analysis.weak_observables =
          a.at("weak_observables").get<std::vector<std::string>>();
    cfg.analysis.tv_kl = a.value("tv_kl", false);
    if (a.contains("tvkl_epsilons"))
      cfg.analysis.tvkl_epsilons = a.at("tvkl_epsilons").get<std::vector<double>>();
    cfg.analysis.k_curve = a.value("k_curve", false);
    cfg.analysis.k_s_min = a.value("k_s_min", 0.01);
    cfg.analysis.k_s_max = a.value("k_s_max", 20.0);
    cfg.analysis.k_points = a.value("k_points", 64);
    cfg.analysis.muckenhoupt = a.value("muckenhoupt", false);
    cfg.analysis.muck_alpha = a.value("muck_alpha", 0.5);
    cfg.analysis.muck_epsilon = a.value("muck_epsilon", 0.2);
    cfg.analysis.muck_n = a.value("muck_n", 6);
    cfg.analysis.spectral_gaps = a.value("spectral_gaps", false);
    cfg.analysis.gap_epsilon = a.value("gap_epsilon", 0.2);
  }
  cfg.output_dir = j.value("output_dir", "out");
  cfg.workers = j.value("workers", 0);
  cfg.dump_correctors = j.value("dump_correctors", false);

  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_json(const ExperimentConfig& cfg) {
  json j;
  j["potential"]["name"] = cfg.potential.name;
  for (const auto& [k, v] : cfg.potential.params) j["potential"]["params"][k] = v;
  j["sigma"] = cfg.sigma;
  j["epsilons"] = cfg.epsilons;
  j["grids"]["torus_n"] = cfg.grids.torus_n;
  if (cfg.grids.x_box) {
    j["grids"]["x_box"]["lo"] =
        std::vector<double>(cfg.grids.x_box->lo.data(),
                            cfg.grids.x_box->lo.data() + cfg.grids.x_box->lo.size());
    j["grids"]["x_box"]["hi"] =
        std::vector<double>(cfg.grids.x_box->hi.data(),
                            cfg.grids.x_box->hi.data() + cfg.grids.x_box->hi.size());
  }
  j["grids"]["x_nodes"] = cfg.grids.x_nodes;
  j["grids"]["box_mass_exponent"] = cfg.grids.box_mass_exponent;
  j["solver"]["tol"] = cfg.solver.tol;
  j["solver"]["max_iterations"] = cfg.solver.max_iterations;
  j["sde"]["dt_full"] = cfg.sde.dt_full;
  j["sde"]["dt_homog"] = cfg.sde.dt_homog;
  j["sde"]["horizon"] = cfg.sde.horizon;
  j["sde"]["paths"] = cfg.sde.paths;
  j["sde"]["seed"] = cfg.sde.seed;
  j["sde"]["initial"]["type"] =
      cfg.sde.initial.kind == InitialLaw::Kind::point ? "point" : "gaussian";
  j["sde"]["initial"]["x"] = std::vector<double>(
      cfg.sde.initial.x0.data(), cfg.sde.initial.x0.data() + cfg.sde.initial.x0.size());
  j["sde"]["initial"]["stddev"] = cfg.sde.initial.stddev;
  j["sde"]["snapshot_stride"] = cfg.sde.snapshot_stride;
  j["sde"]["run_full"] = cfg.sde.run_full;
  j["sde"]["run_homogenized"] = cfg.sde.run_homogenized;
  j["sde"]["safety_box"] = cfg.sde.safety_box;
  j["sde"]["observables"] = cfg.sde.observables;
  j["analysis"]["weak_convergence"] = cfg.analysis.weak_convergence;
  j["analysis"]["weak_epsilons"] = cfg.analysis.weak_epsilons;
  j["analysis"]["weak_observables"] = cfg.analysis.weak_observables;
  j["analysis"]["tv_kl"] = cfg.analysis.tv_kl;
  j["analysis"]["tvkl_epsilons"] = cfg.analysis.tvkl_epsilons;
  j["analysis"]["k_curve"] = cfg.analysis.k_curve;
  j["analysis"]["k_s_min"] = cfg.analysis.k_s_min;
  j["analysis"]["k_s_max"] = cfg.analysis.k_s_max;
  j["analysis"]["k_points"] = cfg.analysis.k_points;
  j["analysis"]["muckenhoupt"] = cfg.analysis.muckenhoupt;
  j["analysis"]["muck_alpha"] = cfg.analysis.muck_alpha;
  j["analysis"]["muck_epsilon"] = cfg.analysis.muck_epsilon;
  j["analysis"]["muck_n"] = cfg.analysis.muck_n;
  j["analysis"]["spectral_gaps"] = cfg.analysis.spectral_gaps;
  j["analysis"]["gap_epsilon"] = cfg.analysis.gap_epsilon;
  j["workers"] = cfg.workers;
  j["dump_correctors"] = cfg.dump_correctors;
  return j.dump();
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.sigma <= 0.0) throw ConfigError("config: sigma must be positive");
  for (double e : cfg.epsilons)
    if (e <= 0.0) throw ConfigError("config: epsilons must be positive");
  const MultiscalePotential p = instantiate(cfg.potential);
  if (p.dim() * p.n_scales() > 6)
    throw ConfigError(
        "config: d*N exceeds the cost cap 6 (nested quadrature would blow up)");
  if (!cfg.grids.torus_n.empty() &&
      static_cast<int>(cfg.grids.torus_n.size()) != 1 &&
      static_cast<int>(cfg.grids.torus_n.size()) != p.n_scales())
    throw ConfigError("config: torus_n needs one entry, or one per scale");
  for (int n : cfg.grids.torus_n)
    if (n < 4) throw ConfigError("config: torus_n entries must be >= 4");
  if (cfg.grids.x_box && cfg.grids.x_box->dim() != p.dim())
    throw ConfigError("config: x_box dimension mismatch");
  if (cfg.sde.paths == 0) throw ConfigError("config: sde.paths must be positive");
  if (cfg.sde.horizon <= 0.0) throw ConfigError("config: sde.horizon must be positive");
  if (cfg.sde.initial.x0.size() != p.dim())
    throw ConfigError("config: sde.initial.x dimension mismatch");
  if (cfg.solver.tol <= 0.0) throw ConfigError("config: solver.tol must be positive");
  for (const auto& name : cfg.sde.observables) {
    const double probe[3] = {0.1, 0.1, 0.1};
    observable_eval(name, probe, p.dim());  // throws on unknown names
  }
}

MultiscalePotential instantiate(const PotentialSpec& spec) {
  return make_potential(spec.name, spec.params);
}

std::vector<TorusGrid> torus_grids(const ExperimentConfig& cfg,
                                   const MultiscalePotential& p) {
  std::vector<int> ns = cfg.grids.torus_n;
  if (ns.empty()) ns = {p.dim() == 1 ? 64 : 32};
  if (ns.size() == 1) ns.assign(p.n_scales(), ns[0]);
  std::vector<TorusGrid> grids;
  for (int n : ns) grids.emplace_back(p.dim(), n);
  return grids;
}

}  // namespace nscale
