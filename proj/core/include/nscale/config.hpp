#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nscale/potential.hpp"
#include "nscale/sde.hpp"
#include "nscale/torus_grid.hpp"

namespace nscale {

// Experiment configuration, read from a JSON file. The schema is documented
// in the README; unknown keys are rejected so typos fail loudly.

struct PotentialSpec {
  std::string name;
  ParamMap params;
};

struct GridSpec {
  std::vector<int> torus_n;       // one entry per scale; a single entry is
                                  // replicated across scales
  std::optional<Box> x_box;       // absent = auto box from the 40-sigma rule
  int x_nodes = 0;                // per dim; 0 = dimension default
  double box_mass_exponent = 40.0;
};

struct SolverSpec {
  double tol = 1e-10;
  int max_iterations = 2000;
};

struct SdeSpec {
  double dt_full = 0.0;  // 0 = stability default
  double dt_homog = 1e-3;
  double horizon = 1.0;
  std::size_t paths = 100000;
  std::uint64_t seed = 42;
  InitialLaw initial;
  int snapshot_stride = 0;
  bool run_full = true;
  bool run_homogenized = true;
  double safety_box = 0.0;
  std::vector<std::string> observables = {"x", "x2", "x4", "bump"};
};

struct AnalysisSpec {
  bool weak_convergence = false;
  std::vector<double> weak_epsilons = {0.2, 0.1, 0.05};
  std::vector<std::string> weak_observables = {"x2", "x4", "bump"};

  bool tv_kl = false;
  std::vector<double> tvkl_epsilons = {0.02};

  bool k_curve = false;
  double k_s_min = 0.01;
  double k_s_max = 20.0;
  int k_points = 64;

  bool muckenhoupt = false;
  double muck_alpha = 0.5;
  double muck_epsilon = 0.2;
  int muck_n = 6;

  bool spectral_gaps = false;
  double gap_epsilon = 0.2;
};

struct ExperimentConfig {
  PotentialSpec potential;
  double sigma = 1.0;
  std::vector<double> epsilons;  // full-model sweep
  GridSpec grids;
  SolverSpec solver;
  SdeSpec sde;
  AnalysisSpec analysis;
  std::string output_dir = "out";
  int workers = 0;
  bool dump_correctors = false;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Deterministic serialization used for the manifest config hash.
std::string canonical_json(const ExperimentConfig& cfg);

// Schema/value validation beyond parsing: catalog potential, d*N cost cap,
// positive sigma and epsilons, torus grid sizing.
void validate(const ExperimentConfig& cfg);

MultiscalePotential instantiate(const PotentialSpec& spec);

// Torus grids per level from the config (replicating a single entry).
std::vector<TorusGrid> torus_grids(const ExperimentConfig& cfg,
                                   const MultiscalePotential& p);

}  // namespace nscale
