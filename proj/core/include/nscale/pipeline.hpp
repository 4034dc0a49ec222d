#pragma once

#include <string>
#include <vector>

#include "nscale/config.hpp"
#include "nscale/effective_model.hpp"

namespace nscale {

// Command pipelines shared by the CLI and the acceptance suite. Each command
// writes its outputs plus a manifest into the resolved output directory and
// returns the produced file paths (manifest last).

struct PipelineResult {
  std::vector<std::string> files;
  std::string output_dir;
};

// output_dir from config, under $NSCALE_OUT_ROOT when that is set.
std::string resolve_output_dir(const ExperimentConfig& cfg);

// Effective-model tabulation -> model.csv (+ corrector_level<k>.csv dumps).
PipelineResult run_solve(const ExperimentConfig& cfg);

// Bound chain + ellipticity floors -> bounds.csv, ellipticity.csv.
// Throws BoundViolationError after writing when a bound fails.
PipelineResult run_bounds(const ExperimentConfig& cfg,
                          const std::string& model_path = "");

// Full-model ensembles per epsilon, one homogenized ensemble, weak-error
// tables. Loads the model from model_path or builds it.
PipelineResult run_simulate(const ExperimentConfig& cfg,
                            const std::string& model_path = "");

// Equilibrium analyses per the config toggles.
PipelineResult run_analyze(const ExperimentConfig& cfg);

// solve + bounds + simulate + analyze.
PipelineResult run_all(const ExperimentConfig& cfg);

// Shared helpers.
XGrid make_xgrid(const ExperimentConfig& cfg, const MultiscalePotential& p);
EffectiveModel obtain_model(const ExperimentConfig& cfg, const MultiscalePotential& p,
                            const std::string& model_path);

}  // namespace nscale
