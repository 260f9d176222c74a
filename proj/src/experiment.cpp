#include "dglasso/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

namespace dglasso::exp {

namespace fs = std::filesystem;
using nlohmann::json;

void GridConfig::validate() const {
  if (lambda_A_values.empty() || lambda_P_values.empty())
    throw InvalidConfig("grid: lambda value lists must be nonempty");
  if (runs < 1) throw InvalidConfig("grid: runs must be >= 1");
  if (selection_metric != "cnmse_filter" && selection_metric != "rmse_A" &&
      selection_metric != "test_negloglik")
    throw InvalidConfig("grid: unknown selection metric '" + selection_metric +
                        "'");
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    if (d.is_string()) {
      const std::string name = d.get<std::string>();
      if (name.size() != 1) throw InvalidConfig("bad preset name " + name);
      cfg.preset = name[0];
      cfg.dataset = preset_spec(name[0], cfg.seed);
    } else {
      if (d.contains("preset")) {
        cfg.preset = d.at("preset").get<std::string>().at(0);
        cfg.dataset = preset_spec(*cfg.preset, 0);
        DatasetSpec overlay = io::dataset_spec_from_json(d);
        overlay.cond_log10 = cfg.dataset.cond_log10;
        cfg.dataset = overlay;
      } else {
        cfg.dataset = io::dataset_spec_from_json(d);
      }
    }
  }
  if (j.contains("solver"))
    cfg.solver = io::solver_config_from_json(j.at("solver"));
  if (j.contains("grid")) {
    GridConfig g;
    const json& jg = j.at("grid");
    g.lambda_A_values = jg.at("lambda_A_values").get<std::vector<double>>();
    g.lambda_P_values = jg.at("lambda_P_values").get<std::vector<double>>();
    g.runs = jg.value("runs", g.runs);
    g.selection_metric = jg.value("selection_metric", g.selection_metric);
    g.validate();
    cfg.grid = g;
  }
  if (j.contains("output_dir"))
    cfg.output_dir = j.at("output_dir").get<std::string>();
  cfg.seed = j.value("seed", cfg.seed);
  cfg.jobs = j.value("jobs", cfg.jobs);
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["dataset"] = io::to_json(cfg.dataset);
  if (cfg.preset) j["dataset"]["preset"] = std::string(1, *cfg.preset);
  j["solver"] = io::to_json(cfg.solver);
  if (cfg.grid) {
    j["grid"] = {{"lambda_A_values", cfg.grid->lambda_A_values},
                 {"lambda_P_values", cfg.grid->lambda_P_values},
                 {"runs", cfg.grid->runs},
                 {"selection_metric", cfg.grid->selection_metric}};
  }
  j["output_dir"] = cfg.output_dir.string();
  j["seed"] = cfg.seed;
  j["jobs"] = cfg.jobs;
  return j;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t group,
                          std::uint64_t index) {
  return Rng(master).split(group).split(index).next_u64();
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  std::vector<std::thread> pool;
  const int count = std::min(jobs, n);
  pool.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

std::pair<double, double> tuned_lambdas(char preset) {
  // Grid-searched per dataset on a log grid, scoring the filtered-mean cNMSE
  // with support-recovery F1 as the tie breaker (ties within run noise).
  switch (preset) {
    case 'A': return {40.0, 20.0};
    case 'B': return {40.0, 10.0};
    case 'C': return {40.0, 4.0};
    case 'D': return {40.0, 1.0};
    default: return {40.0, 10.0};
  }
}

RunOutcome run_single(const DatasetSpec& spec, const SolverConfig<double>& solver,
                      const std::string& dataset_label,
                      const std::string& method_label, int run_index) {
  RunOutcome outcome;
  outcome.dataset = dataset_label;
  outcome.method = method_label;
  outcome.run = run_index;
  outcome.seed = spec.seed;
  outcome.lambda_A = solver.lambda_A;
  outcome.lambda_P = solver.lambda_P;
  try {
    auto [gt, train, test] = make_dataset<double>(spec);
    const FixedParams<double> fixed = fixed_params<double>(spec);
    const FitResult<double> fitted = fit(train, fixed, solver);
    outcome.report = evaluate(gt, fitted, fixed, test);
    outcome.wall_time_seconds = fitted.wall_time_seconds;
    outcome.outer_iterations = fitted.outer_iterations;
    outcome.converged = fitted.converged;
    for (std::size_t i = 0; i + 1 < fitted.loss_trace.size(); ++i)
      if (fitted.loss_trace[i + 1] >
          fitted.loss_trace[i] + 1e-9 * std::abs(fitted.loss_trace[i]))
        outcome.descent_ok = false;
  } catch (const std::exception& e) {
    outcome.error = e.what();
  }
  return outcome;
}

std::vector<RunOutcome> run_benchmark_cells(
    const std::vector<char>& presets, const std::vector<Mode>& methods,
    int seeds, std::uint64_t master_seed,
    std::optional<std::pair<double, double>> lambda_override,
    std::optional<int> k_override, std::optional<int> sparsity_keep, int jobs) {
  struct Task {
    DatasetSpec spec;
    SolverConfig<double> solver;
    std::string dataset;
    std::string method;
    int run;
  };
  std::vector<Task> tasks;
  for (std::size_t d = 0; d < presets.size(); ++d) {
    for (int r = 0; r < seeds; ++r) {
      DatasetSpec spec = preset_spec(presets[d], derive_seed(master_seed, d, r));
      if (k_override) spec.K = *k_override;
      if (sparsity_keep) spec.sparsity_keep = *sparsity_keep;
      for (Mode mode : methods) {
        SolverConfig<double> solver;
        solver.mode = mode;
        auto [la, lp] = lambda_override ? *lambda_override
                                        : tuned_lambdas(presets[d]);
        if (mode == Mode::Mlem) {
          solver.lambda_A = solver.lambda_P = 0.0;
        } else {
          solver.lambda_A = la;
          solver.lambda_P = lp;
        }
        tasks.push_back({spec, solver,
                         std::string(1, presets[d]), mode_name(mode), r});
      }
    }
  }
  std::vector<RunOutcome> outcomes(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), jobs, [&](int i) {
    const Task& t = tasks[static_cast<std::size_t>(i)];
    outcomes[static_cast<std::size_t>(i)] =
        run_single(t.spec, t.solver, t.dataset, t.method, t.run);
  });
  return outcomes;
}

std::vector<RunOutcome> run_grid_cells(const DatasetSpec& spec,
                                       const GridConfig& grid,
                                       const SolverConfig<double>& solver_base,
                                       std::uint64_t master_seed, int jobs) {
  grid.validate();
  struct Task {
    DatasetSpec spec;
    SolverConfig<double> solver;
    int run;
  };
  std::vector<Task> tasks;
  for (double la : grid.lambda_A_values)
    for (double lp : grid.lambda_P_values)
      for (int r = 0; r < grid.runs; ++r) {
        DatasetSpec s = spec;
        s.seed = derive_seed(master_seed, 0, static_cast<std::uint64_t>(r));
        SolverConfig<double> solver = solver_base;
        solver.lambda_A = la;
        solver.lambda_P = lp;
        tasks.push_back({s, solver, r});
      }
  std::vector<RunOutcome> outcomes(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), jobs, [&](int i) {
    const Task& t = tasks[static_cast<std::size_t>(i)];
    outcomes[static_cast<std::size_t>(i)] =
        run_single(t.spec, t.solver, "grid", mode_name(t.solver.mode), t.run);
  });
  return outcomes;
}

namespace {

json artifact_header(const json& config) {
  return json{{"format_version", io::kFormatVersion},
              {"tool_version", io::kToolVersion},
              {"config_hash", io::config_hash(config)}};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string());
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("missing input file: " + p.string());
}

constexpr const char* kMetricColumns =
    "rmse_A,auc_A,f1_A,rmse_P,auc_P,f1_P,rmse_Q,cnmse_filter,cnmse_smooth,"
    "cnmse_pred,test_negloglik";

void append_metrics(std::ostream& out, const MetricsReport& r) {
  auto fd = [](double v) { return io::format_double(v); };
  out << fd(r.rmse_A) << ',' << fd(r.edges_A.auc) << ',' << fd(r.edges_A.f1)
      << ',' << fd(r.rmse_P) << ',' << fd(r.edges_P.auc) << ','
      << fd(r.edges_P.f1) << ',' << fd(r.rmse_Q) << ',' << fd(r.cnmse_filter)
      << ',' << fd(r.cnmse_smooth) << ',' << fd(r.cnmse_pred) << ','
      << fd(r.test_negloglik);
}

double metric_by_name(const MetricsReport& r, const std::string& name) {
  if (name == "cnmse_filter") return r.cnmse_filter;
  if (name == "rmse_A") return r.rmse_A;
  if (name == "test_negloglik") return r.test_negloglik;
  throw InvalidConfig("unknown selection metric " + name);
}

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;
  int count = 0;
};

Aggregate aggregate(const std::vector<double>& xs) {
  Aggregate a;
  a.count = static_cast<int>(xs.size());
  if (xs.empty()) return a;
  for (double x : xs) a.mean += x;
  a.mean /= double(a.count);
  for (double x : xs) a.stddev += (x - a.mean) * (x - a.mean);
  a.stddev = a.count > 1 ? std::sqrt(a.stddev / double(a.count - 1)) : 0.0;
  return a;
}

}  // namespace

void cmd_generate(const ExperimentConfig& cfg,
                  const std::optional<fs::path>& a_star_path,
                  const std::optional<fs::path>& p_star_path) {
  ensure_dir(cfg.output_dir);
  DatasetSpec spec = cfg.dataset;
  spec.seed = cfg.seed;
  spec.validate();

  GroundTruth<double> gt;
  TimeSeries<double> train, test;
  if (a_star_path || p_star_path) {
    // User-supplied ground truth replaces the random generator; both
    // matrices must be given.
    if (!a_star_path || !p_star_path)
      throw InvalidConfig("--a-star and --p-star must be supplied together");
    require_file(*a_star_path);
    require_file(*p_star_path);
    gt.A_star = io::read_matrix_csv(*a_star_path);
    gt.P_star = io::read_matrix_csv(*p_star_path);
    if (gt.A_star.rows() != spec.Nx || gt.P_star.rows() != spec.Nx)
      throw DimensionMismatch("supplied ground truth does not match Nx");
    gt.Q_star = spd_inverse(gt.P_star, "P_star");
    gt.spec = spec;
    const FixedParams<double> fixed = fixed_params<double>(spec);
    Rng root(spec.seed);
    Rng rng_train = root.split(1);
    Rng rng_test = root.split(2);
    train = simulate(gt, fixed, spec.K, rng_train);
    test = simulate(gt, fixed, spec.K, rng_test);
  } else {
    std::tie(gt, train, test) = make_dataset<double>(spec);
  }

  io::write_matrix_csv(cfg.output_dir / "A_star.csv", gt.A_star);
  io::write_matrix_csv(cfg.output_dir / "P_star.csv", gt.P_star);
  io::write_series_csv(cfg.output_dir / "train.csv", train);
  io::write_series_csv(cfg.output_dir / "test.csv", test);

  json config = to_json(cfg);
  json spec_json = artifact_header(config);
  spec_json["dataset"] = io::to_json(spec);
  if (cfg.preset) spec_json["dataset"]["preset"] = std::string(1, *cfg.preset);
  spec_json["rng"] = {{"name", Rng::kName},
                      {"version", Rng::kVersion},
                      {"streams",
                       {{"ground_truth", 0}, {"train", 1}, {"test", 2}}}};
  io::write_json(cfg.output_dir / "spec.json", spec_json);
}

void cmd_fit(const ExperimentConfig& cfg, const fs::path& data_dir) {
  require_file(data_dir / "train.csv");
  require_file(data_dir / "spec.json");
  ensure_dir(cfg.output_dir);

  const json spec_json = io::read_json(data_dir / "spec.json");
  const DatasetSpec spec = io::dataset_spec_from_json(spec_json.at("dataset"));
  const TimeSeries<double> train = io::read_series_csv(data_dir / "train.csv");
  const FixedParams<double> fixed = fixed_params<double>(spec);

  const FitResult<double> result = fit(train, fixed, cfg.solver);

  io::write_matrix_csv(cfg.output_dir / "A_hat.csv", result.A_hat);
  io::write_matrix_csv(cfg.output_dir / "P_hat.csv", result.P_hat);

  json config = to_json(cfg);
  json fit_json = artifact_header(config);
  fit_json["solver"] = io::to_json(cfg.solver);
  fit_json["outer_iterations"] = result.outer_iterations;
  fit_json["converged"] = result.converged;
  fit_json["wall_time_seconds"] = result.wall_time_seconds;
  fit_json["loss_trace"] = result.loss_trace;
  io::write_json(cfg.output_dir / "fit.json", fit_json);
}

void cmd_eval(const fs::path& data_dir, const fs::path& fit_dir,
              const fs::path& out_dir) {
  for (const char* f : {"A_star.csv", "P_star.csv", "test.csv", "spec.json"})
    require_file(data_dir / f);
  for (const char* f : {"A_hat.csv", "P_hat.csv"}) require_file(fit_dir / f);
  ensure_dir(out_dir);

  const json spec_json = io::read_json(data_dir / "spec.json");
  const DatasetSpec spec = io::dataset_spec_from_json(spec_json.at("dataset"));
  GroundTruth<double> gt;
  gt.spec = spec;
  gt.A_star = io::read_matrix_csv(data_dir / "A_star.csv");
  gt.P_star = io::read_matrix_csv(data_dir / "P_star.csv");
  gt.Q_star = spd_inverse(gt.P_star, "P_star");
  const TimeSeries<double> test = io::read_series_csv(data_dir / "test.csv");

  FitResult<double> fitted;
  fitted.A_hat = io::read_matrix_csv(fit_dir / "A_hat.csv");
  fitted.P_hat = io::read_matrix_csv(fit_dir / "P_hat.csv");
  fitted.Q_hat = spd_inverse(fitted.P_hat, "P_hat");

  const MetricsReport report =
      evaluate(gt, fitted, fixed_params<double>(spec), test);
  json config = {{"data", data_dir.string()}, {"fit", fit_dir.string()}};
  json out = artifact_header(config);
  out["metrics"] = io::to_json(report);
  io::write_json(out_dir / "metrics.json", out);
  std::cout << out.dump(2) << std::endl;
}

void cmd_grid(const ExperimentConfig& cfg) {
  if (!cfg.grid) throw InvalidConfig("grid command requires a grid config");
  ensure_dir(cfg.output_dir);
  DatasetSpec spec = cfg.dataset;
  const std::vector<RunOutcome> outcomes =
      run_grid_cells(spec, *cfg.grid, cfg.solver, cfg.seed, cfg.jobs);

  const json config = to_json(cfg);
  std::ofstream out(cfg.output_dir / "grid.csv");
  if (!out) throw IoError("cannot write grid.csv");
  out << "# config_hash=" << io::config_hash(config)
      << " tool_version=" << io::kToolVersion << '\n';
  out << "lambda_A,lambda_P,run,seed," << kMetricColumns << ",error\n";
  for (const RunOutcome& o : outcomes) {
    out << io::format_double(o.lambda_A) << ',' << io::format_double(o.lambda_P)
        << ',' << o.run << ',' << o.seed << ',';
    append_metrics(out, o.report);
    out << ',' << o.error << '\n';
  }
  out.close();

  // Aggregate the selection metric per cell and pick the minimizer.
  std::map<std::pair<double, double>, std::vector<double>> cell_values;
  for (const RunOutcome& o : outcomes)
    if (o.ok())
      cell_values[{o.lambda_A, o.lambda_P}].push_back(
          metric_by_name(o.report, cfg.grid->selection_metric));
  if (cell_values.empty()) throw Error("grid: every cell failed");
  std::pair<double, double> best_cell;
  double best_value = infinity<double>();
  for (const auto& [cell, values] : cell_values) {
    const double mean = aggregate(values).mean;
    if (mean < best_value) {
      best_value = mean;
      best_cell = cell;
    }
  }
  json best = artifact_header(config);
  best["selection_metric"] = cfg.grid->selection_metric;
  best["lambda_A"] = best_cell.first;
  best["lambda_P"] = best_cell.second;
  best["value"] = best_value;
  io::write_json(cfg.output_dir / "best.json", best);
}

void cmd_benchmark(const ExperimentConfig& cfg, const std::vector<char>& presets,
                   const std::vector<Mode>& methods, int seeds,
                   std::optional<std::pair<double, double>> lambda_override,
                   std::optional<int> k_override,
                   std::optional<int> sparsity_keep) {
  ensure_dir(cfg.output_dir);
  const std::vector<RunOutcome> outcomes =
      run_benchmark_cells(presets, methods, seeds, cfg.seed, lambda_override,
                          k_override, sparsity_keep, cfg.jobs);

  const json config = to_json(cfg);
  std::ofstream out(cfg.output_dir / "benchmark.csv");
  if (!out) throw IoError("cannot write benchmark.csv");
  out << "# config_hash=" << io::config_hash(config)
      << " tool_version=" << io::kToolVersion << '\n';
  out << "dataset,method,run,seed,lambda_A,lambda_P," << kMetricColumns
      << ",wall_time_seconds,error\n";
  for (const RunOutcome& o : outcomes) {
    out << o.dataset << ',' << o.method << ',' << o.run << ',' << o.seed << ','
        << io::format_double(o.lambda_A) << ',' << io::format_double(o.lambda_P)
        << ',';
    append_metrics(out, o.report);
    out << ',' << io::format_double(o.wall_time_seconds) << ',' << o.error
        << '\n';
  }
  out.close();

  // Aggregated table, one row per dataset x method.
  const std::vector<std::pair<std::string, std::function<double(const MetricsReport&)>>>
      columns = {
          {"RMSE(A)", [](const MetricsReport& r) { return r.rmse_A; }},
          {"AUC(A)", [](const MetricsReport& r) { return r.edges_A.auc; }},
          {"F1(A)", [](const MetricsReport& r) { return r.edges_A.f1; }},
          {"RMSE(P)", [](const MetricsReport& r) { return r.rmse_P; }},
          {"AUC(P)", [](const MetricsReport& r) { return r.edges_P.auc; }},
          {"F1(P)", [](const MetricsReport& r) { return r.edges_P.f1; }},
          {"RMSE(Q)", [](const MetricsReport& r) { return r.rmse_Q; }},
          {"cNMSE(mu)", [](const MetricsReport& r) { return r.cnmse_filter; }},
          {"cNMSE(mu_s)", [](const MetricsReport& r) { return r.cnmse_smooth; }},
          {"cNMSE(nu)", [](const MetricsReport& r) { return r.cnmse_pred; }},
          {"test_negloglik",
           [](const MetricsReport& r) { return r.test_negloglik; }},
      };

  std::ofstream md(cfg.output_dir / "benchmark.md");
  if (!md) throw IoError("cannot write benchmark.md");
  md << "# Benchmark (" << seeds << " seeds)\n\n";
  md << "| dataset | method |";
  for (const auto& c : columns) md << ' ' << c.first << " |";
  md << "\n|---|---|";
  for (std::size_t i = 0; i < columns.size(); ++i) md << "---|";
  md << '\n';

  json run_record = artifact_header(config);
  run_record["config"] = config;
  json aggregates = json::array();
  for (char preset : presets) {
    for (Mode mode : methods) {
      std::vector<const RunOutcome*> group;
      for (const RunOutcome& o : outcomes)
        if (o.ok() && o.dataset == std::string(1, preset) &&
            o.method == mode_name(mode))
          group.push_back(&o);
      md << "| " << preset << " | " << mode_name(mode) << " |";
      json agg{{"dataset", std::string(1, preset)},
               {"method", mode_name(mode)},
               {"runs", group.size()}};
      std::vector<double> walltimes;
      for (const auto& c : columns) {
        std::vector<double> values;
        for (const RunOutcome* o : group) values.push_back(c.second(o->report));
        const Aggregate a = aggregate(values);
        std::ostringstream cell;
        cell.precision(4);
        cell << a.mean;
        md << ' ' << cell.str() << " |";
        agg[c.first] = {{"mean", a.mean}, {"stddev", a.stddev}};
      }
      for (const RunOutcome* o : group) walltimes.push_back(o->wall_time_seconds);
      agg["wall_time_seconds_mean"] = aggregate(walltimes).mean;
      aggregates.push_back(agg);
      md << '\n';
    }
  }
  run_record["aggregates"] = aggregates;
  json per_run = json::array();
  for (const RunOutcome& o : outcomes) {
    json jo{{"dataset", o.dataset},       {"method", o.method},
            {"run", o.run},               {"seed", o.seed},
            {"lambda_A", o.lambda_A},     {"lambda_P", o.lambda_P},
            {"wall_time_seconds", o.wall_time_seconds},
            {"outer_iterations", o.outer_iterations},
            {"converged", o.converged}};
    if (o.ok())
      jo["metrics"] = io::to_json(o.report);
    else
      jo["error"] = o.error;
    per_run.push_back(jo);
  }
  run_record["runs"] = per_run;
  io::write_json(cfg.output_dir / "benchmark.json", run_record);
}

}  // namespace dglasso::exp
