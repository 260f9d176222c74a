// Command-line front end: dataset generation, fitting, hyperparameter grid
// search, evaluation, and multi-seed benchmarks with persisted artifacts.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dglasso/experiment.hpp"

namespace {

using dglasso::Mode;
using dglasso::exp::ExperimentConfig;

std::vector<char> parse_presets(const std::string& csv) {
  std::vector<char> out;
  for (char c : csv)
    if (c != ',' && c != ' ') out.push_back(c);
  if (out.empty()) throw dglasso::InvalidConfig("no datasets given");
  return out;
}

Mode parse_mode(const std::string& name) {
  if (name == "dglasso") return Mode::Dglasso;
  if (name == "mlem") return Mode::Mlem;
  if (name == "a_only") return Mode::AOnly;
  if (name == "p_only") return Mode::POnly;
  throw dglasso::InvalidConfig("unknown mode '" + name + "'");
}

std::vector<Mode> parse_methods(const std::string& csv) {
  std::vector<Mode> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string tok = csv.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!tok.empty()) out.push_back(parse_mode(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw dglasso::InvalidConfig("no methods given");
  return out;
}

std::vector<double> parse_grid_values(const std::string& csv) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string tok = csv.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!tok.empty()) out.push_back(std::stod(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse transition/precision estimation for linear-Gaussian "
               "state-space models"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int jobs = 1;
  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--jobs", jobs, "worker threads for sweeps");

  // generate
  auto* gen = app.add_subcommand("generate", "generate a synthetic dataset");
  std::string preset = "A";
  std::string a_star_path, p_star_path;
  gen->add_option("--preset", preset, "dataset preset A|B|C|D");
  gen->add_option("--a-star", a_star_path, "user-supplied transition matrix CSV");
  gen->add_option("--p-star", p_star_path, "user-supplied precision matrix CSV");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit a model to a generated dataset");
  std::string data_dir;
  std::string mode_name = "dglasso";
  double lambda_a = 0.0, lambda_p = 0.0, theta_a = 1.0, theta_p = 1.0;
  double epsilon = 1e-3, xi = 1e-3, vartheta = 1.0;
  int max_outer = 50, max_inner = 20000;
  fit_cmd->add_option("--data", data_dir, "dataset directory from `generate`")
      ->required();
  fit_cmd->add_option("--mode", mode_name, "dglasso|mlem|a_only|p_only");
  fit_cmd->add_option("--lambda-a", lambda_a, "l1 weight on A");
  fit_cmd->add_option("--lambda-p", lambda_p, "l1 weight on P");
  fit_cmd->add_option("--theta-a", theta_a, "proximal stepsize for A");
  fit_cmd->add_option("--theta-p", theta_p, "proximal stepsize for P");
  fit_cmd->add_option("--epsilon", epsilon, "outer stopping precision");
  fit_cmd->add_option("--xi", xi, "inner stopping precision");
  fit_cmd->add_option("--vartheta", vartheta, "inner relaxation in (0,2)");
  fit_cmd->add_option("--max-outer", max_outer, "outer iteration cap");
  fit_cmd->add_option("--max-inner", max_inner, "inner iteration cap");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a fit against ground truth");
  std::string eval_data, eval_fit;
  eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
  eval_cmd->add_option("--fit", eval_fit, "fit directory")->required();

  // grid
  auto* grid_cmd = app.add_subcommand("grid", "grid search over (lambda_A, lambda_P)");
  std::string grid_preset = "A";
  std::string la_values = "1,5,8,10", lp_values = "1,5,8,10";
  std::string selection = "cnmse_filter";
  int grid_runs = 5, grid_k = 0;
  grid_cmd->add_option("--preset", grid_preset, "dataset preset");
  grid_cmd->add_option("--lambda-a-grid", la_values, "comma-separated values");
  grid_cmd->add_option("--lambda-p-grid", lp_values, "comma-separated values");
  grid_cmd->add_option("--runs", grid_runs, "time series per cell");
  grid_cmd->add_option("--selection", selection,
                       "cnmse_filter|rmse_A|test_negloglik");
  grid_cmd->add_option("--k", grid_k, "override series length");

  // benchmark
  auto* bench_cmd = app.add_subcommand("benchmark", "multi-seed method comparison");
  std::string bench_datasets = "A,B,C,D";
  std::string bench_methods = "dglasso,mlem,a_only,p_only";
  int bench_seeds = 50, bench_k = 0, bench_sparsity = 0;
  double bench_la = -1.0, bench_lp = -1.0;
  bench_cmd->add_option("--datasets", bench_datasets, "presets, e.g. A,B");
  bench_cmd->add_option("--methods", bench_methods, "modes to compare");
  bench_cmd->add_option("--seeds", bench_seeds, "number of runs per dataset");
  bench_cmd->add_option("--k", bench_k, "override series length");
  bench_cmd->add_option("--sparsity-keep", bench_sparsity,
                        "retained nonzero entries of A*");
  bench_cmd->add_option("--lambda-a", bench_la, "override tuned lambda_A");
  bench_cmd->add_option("--lambda-p", bench_lp, "override tuned lambda_P");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty())
      cfg = dglasso::exp::config_from_json(dglasso::io::read_json(config_path));
    if (app.count("--out") || cfg.output_dir.empty()) cfg.output_dir = out_dir;
    if (app.count("--seed")) cfg.seed = seed;
    if (app.count("--jobs")) cfg.jobs = jobs;

    if (gen->parsed()) {
      if (gen->count("--preset") || config_path.empty()) {
        cfg.preset = preset.at(0);
        cfg.dataset = dglasso::preset_spec(preset.at(0), cfg.seed);
      }
      std::optional<std::filesystem::path> a_path, p_path;
      if (!a_star_path.empty()) a_path = a_star_path;
      if (!p_star_path.empty()) p_path = p_star_path;
      dglasso::exp::cmd_generate(cfg, a_path, p_path);
    } else if (fit_cmd->parsed()) {
      cfg.solver.mode = parse_mode(mode_name);
      cfg.solver.lambda_A = lambda_a;
      cfg.solver.lambda_P = lambda_p;
      cfg.solver.theta_A = theta_a;
      cfg.solver.theta_P = theta_p;
      cfg.solver.epsilon = epsilon;
      cfg.solver.max_outer = max_outer;
      cfg.solver.inner.xi = xi;
      cfg.solver.inner.vartheta = vartheta;
      cfg.solver.inner.max_iter = max_inner;
      dglasso::exp::cmd_fit(cfg, data_dir);
    } else if (eval_cmd->parsed()) {
      dglasso::exp::cmd_eval(eval_data, eval_fit, cfg.output_dir);
    } else if (grid_cmd->parsed()) {
      if (!cfg.grid) {
        dglasso::exp::GridConfig grid;
        grid.lambda_A_values = parse_grid_values(la_values);
        grid.lambda_P_values = parse_grid_values(lp_values);
        grid.runs = grid_runs;
        grid.selection_metric = selection;
        cfg.grid = grid;
      }
      if (grid_cmd->count("--preset") || config_path.empty()) {
        cfg.preset = grid_preset.at(0);
        cfg.dataset = dglasso::preset_spec(grid_preset.at(0), cfg.seed);
      }
      if (grid_k > 0) cfg.dataset.K = grid_k;
      dglasso::exp::cmd_grid(cfg);
    } else if (bench_cmd->parsed()) {
      std::optional<std::pair<double, double>> lambda_override;
      if (bench_la >= 0.0 && bench_lp >= 0.0)
        lambda_override = {bench_la, bench_lp};
      std::optional<int> k_override, sparsity;
      if (bench_k > 0) k_override = bench_k;
      if (bench_sparsity > 0) sparsity = bench_sparsity;
      dglasso::exp::cmd_benchmark(cfg, parse_presets(bench_datasets),
                                  parse_methods(bench_methods), bench_seeds,
                                  lambda_override, k_override, sparsity);
    }
  } catch (const dglasso::IoError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const dglasso::InvalidConfig& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
