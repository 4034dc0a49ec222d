#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "nscale/config.hpp"
#include "nscale/errors.hpp"
#include "nscale/pipeline.hpp"
#include "nscale/version.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string output_dir;
  std::string model_path;
  int workers = -1;
  long seed = -1;
};

nscale::ExperimentConfig load(const CommonArgs& args) {
  nscale::ExperimentConfig cfg = nscale::load_config(args.config_path);
  if (!args.output_dir.empty()) cfg.output_dir = args.output_dir;
  if (args.workers >= 0) cfg.workers = args.workers;
  if (args.seed >= 0) cfg.sde.seed = static_cast<std::uint64_t>(args.seed);
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", args.output_dir, "override config output_dir");
  cmd->add_option("-w,--workers", args.workers, "worker thread cap (0 = auto)");
  cmd->add_option("--seed", args.seed, "override sde.seed");
}

void report_files(const nscale::PipelineResult& res) {
  for (const auto& f : res.files) std::printf("wrote %s\n", f.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nscale: effective dynamics of Brownian motion in N-scale "
               "periodic potentials"};
  app.set_version_flag("--version", std::string(nscale::version));
  app.require_subcommand(1);

  CommonArgs args;
  auto* c_solve = app.add_subcommand("solve", "tabulate the effective model");
  auto* c_bounds = app.add_subcommand("bounds", "verify bound chain and floors");
  auto* c_sim = app.add_subcommand("simulate", "run full and homogenized ensembles");
  auto* c_ana = app.add_subcommand("analyze", "equilibrium-measure analyses");
  auto* c_all = app.add_subcommand("all", "solve + bounds + simulate + analyze");
  for (auto* c : {c_solve, c_bounds, c_sim, c_ana, c_all}) add_common(c, args);
  c_bounds->add_option("--model", args.model_path, "model CSV from a solve run");
  c_sim->add_option("--model", args.model_path, "model CSV from a solve run");

  CLI11_PARSE(app, argc, argv);

  try {
    const nscale::ExperimentConfig cfg = load(args);
    nscale::PipelineResult res;
    if (c_solve->parsed()) res = nscale::run_solve(cfg);
    if (c_bounds->parsed()) res = nscale::run_bounds(cfg, args.model_path);
    if (c_sim->parsed()) res = nscale::run_simulate(cfg, args.model_path);
    if (c_ana->parsed()) res = nscale::run_analyze(cfg);
    if (c_all->parsed()) res = nscale::run_all(cfg);
    report_files(res);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return nscale::exit_code_for(e);
  }
  return 0;
}
