// solid: command-line driver for single runs and replicated benchmarks.
//
//   solid run   --objective toy --mode solid --seed 1 --steps 9 --out trace.csv
//   solid bench --objective beach --dim 8 --modes solid,none --reps 20 --out long.csv
//
// Every option of a subcommand may also come from `--config FILE`, a file of
// `key = value` lines keyed by the long option names; command-line flags win.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "solid/solid.hpp"

namespace {

struct Options {
  std::string objective;
  std::optional<std::string> dataset;
  std::optional<double> bandwidth;
  std::optional<std::size_t> dim;
  std::optional<std::size_t> n0;
  std::optional<std::size_t> steps;
  std::optional<double> g, rho, delta, line_delta, nu, noise_var;
  std::optional<std::size_t> chain_m, burn_in, subsample_m, q, candidates;
  std::vector<std::size_t> oracle_active;  // 1-based on the command line
  std::uint64_t seed = 1;
  std::string out;
  bool no_timing = false;

  // run
  std::string mode = "solid";
  // bench
  std::vector<std::string> modes{"solid", "gvs", "oracle", "none"};
  std::size_t reps = 10;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  std::optional<std::string> summary;
};

void add_common(CLI::App& app, Options& o) {
  app.add_option("--objective", o.objective, "toy, beach, drum or simba");
  app.add_option("--dataset", o.dataset, "delimited text file: inputs then response; replaces --objective");
  app.add_option("--bandwidth", o.bandwidth, "kernel smoother bandwidth for --dataset")->check(CLI::PositiveNumber);
  app.add_option("--dim", o.dim, "ambient dimension p0 (default 3 for toy, 15 otherwise)");
  app.add_option("--n0", o.n0, "initial design size");
  app.add_option("--steps", o.steps, "sequential budget N");
  app.add_option("--g", o.g, "global inclusion threshold");
  app.add_option("--rho", o.rho, "local importance threshold");
  app.add_option("--delta", o.delta, "prediction cloud spread and search radius");
  app.add_option("--line-delta", o.line_delta, "line-search ball radius (defaults to --delta)");
  app.add_option("--chain-m", o.chain_m, "retained MCMC draws M");
  app.add_option("--burn-in", o.burn_in, "discarded sweeps (defaults to M)");
  app.add_option("--subsample-m", o.subsample_m, "draws used for marginal surfaces m");
  app.add_option("--q", o.q, "prediction points per draw for local importance");
  app.add_option("--candidates", o.candidates, "candidate points per set c");
  app.add_option("--nu", o.nu, "risk aversion of the incumbent");
  app.add_option("--noise-var", o.noise_var, "observation noise variance");
  app.add_option("--oracle-active", o.oracle_active, "1-based active variables for oracle mode")->delimiter(',');
  app.add_option("--seed", o.seed, "base seed");
  app.add_option("--out", o.out, "output CSV path (required)");
  app.add_flag("--no-timing", o.no_timing, "write wall_ms as 0 so output is byte-reproducible");
}

struct Problem {
  solid::Objective objective;
  solid::RunConfig config;
};

Problem build_problem(const Options& o) {
  if (o.out.empty()) throw std::invalid_argument("--out is required");
  const bool toy = !o.dataset && o.objective == "toy";
  solid::RunConfig cfg;
  std::size_t p0 = 15;
  double noise = 0.05;
  if (toy) {
    cfg.n0 = 10;
    cfg.steps = 9;
    cfg.g = 0.5;
    cfg.rho = 0.3;
    cfg.delta = 0.15;
    cfg.chain_m = 500;
    cfg.subsample_m = 25;
    cfg.candidates = 300;
    p0 = 3;
    noise = 0.08;
  } else if (o.objective == "simba") {
    cfg.n0 = 80;
  }
  if (o.n0) cfg.n0 = *o.n0;
  if (o.steps) cfg.steps = *o.steps;
  if (o.g) cfg.g = *o.g;
  if (o.rho) cfg.rho = *o.rho;
  if (o.delta) cfg.delta = *o.delta;
  if (o.line_delta) cfg.line_delta = *o.line_delta;
  if (o.chain_m) cfg.chain_m = *o.chain_m;
  if (o.burn_in) cfg.burn_in = *o.burn_in;
  if (o.subsample_m) cfg.subsample_m = *o.subsample_m;
  if (o.q) cfg.q = *o.q;
  if (o.candidates) cfg.candidates = *o.candidates;
  if (o.nu) cfg.nu = *o.nu;
  if (o.noise_var) noise = *o.noise_var;
  cfg.seed = o.seed;
  for (auto k : o.oracle_active) {
    if (k == 0) throw std::invalid_argument("--oracle-active indices are 1-based");
    cfg.oracle_active.push_back(k - 1);
  }

  if (o.dataset) {
    if (!o.bandwidth) throw std::invalid_argument("--dataset needs --bandwidth");
    auto data = solid::load_dataset(*o.dataset, *o.bandwidth);
    if (o.dim && *o.dim != static_cast<std::size_t>(data.X.cols()))
      throw std::invalid_argument("--dim does not match the dataset's input columns");
    return {solid::make_smoothed_objective(std::move(data), noise), cfg};
  }
  if (o.objective.empty()) throw std::invalid_argument("one of --objective or --dataset is required");
  if (o.dim) p0 = *o.dim;
  return {solid::make_objective(o.objective, p0, noise), cfg};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

int cmd_run(const Options& o) {
  auto problem = build_problem(o);
  problem.config.mode = solid::parse_mode(o.mode);
  problem.config.validate(problem.objective.p0);
  std::cerr << "run: " << problem.objective.name << " p0=" << problem.objective.p0 << " mode=" << o.mode
            << " seed=" << o.seed << " N=" << problem.config.steps << '\n';
  solid::RunTrace trace;
  int status = 0;
  try {
    trace = solid::run(problem.objective, problem.config);
  } catch (const solid::RunAborted& e) {
    std::cerr << "error: " << e.what() << '\n';
    trace = e.trace;
    status = 3;
  }
  auto out = open_out(o.out);
  solid::write_trace_csv(out, trace, !o.no_timing);
  if (!trace.steps.empty())
    std::cerr << "final f(chi) = " << trace.steps.back().f_at_chi
              << ", overall improvement = " << solid::overall_improvement(trace) << '\n';
  return status;
}

int cmd_bench(const Options& o) {
  if (o.reps < 1) throw std::invalid_argument("--reps must be at least 1");
  auto problem = build_problem(o);
  std::vector<solid::Mode> modes;
  for (const auto& m : o.modes) modes.push_back(solid::parse_mode(m));
  for (auto m : modes) {
    auto cfg = problem.config;
    cfg.mode = m;
    if (m != solid::Mode::oracle) cfg.oracle_active.clear();
    cfg.validate(problem.objective.p0);
  }
  std::cerr << "bench: " << problem.objective.name << " p0=" << problem.objective.p0 << " modes=" << modes.size()
            << " reps=" << o.reps << " threads=" << o.threads << '\n';
  const auto results = solid::run_bench(problem.objective, problem.config, modes, o.reps, o.threads,
                                        [](const solid::BenchResult& r) {
                                          std::cerr << "  " << solid::to_string(r.job.mode) << " seed " << r.job.seed
                                                    << (r.ok ? " done" : " FAILED: " + r.error);
                                          if (r.ok) std::cerr << " overall=" << solid::overall_improvement(r.trace);
                                          std::cerr << '\n';
                                        });
  auto out = open_out(o.out);
  solid::write_long_csv(out, results, !o.no_timing);

  std::string summary_path = o.summary.value_or("");
  if (summary_path.empty()) {
    const auto dot = o.out.rfind('.');
    summary_path = (dot == std::string::npos ? o.out : o.out.substr(0, dot)) + "_summary.csv";
  }
  auto sout = open_out(summary_path);
  solid::write_summary_csv(sout, solid::summarize(results, modes));

  bool failed = false;
  for (const auto& r : results) failed = failed || !r.ok;
  return failed ? 3 : 0;
}

// Config keys without a section belong to the subcommand being run.
class SubcommandConfig : public CLI::ConfigTOML {
 public:
  explicit SubcommandConfig(const CLI::App& app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigTOML::from_config(input);
    const auto subs = app_.get_subcommands();
    if (subs.empty()) return items;
    for (auto& item : items)
      if (item.parents.empty()) item.parents.push_back(subs.front()->get_name());
    return items;
  }

 private:
  const CLI::App& app_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential optimization with local variable selection"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --config follow the subcommand
  Options o;

  auto* run = app.add_subcommand("run", "one sequential run; writes a per-step CSV");
  add_common(*run, o);
  run->add_option("--mode", o.mode, "solid, gvs, oracle or none");

  auto* bench = app.add_subcommand("bench", "replicated runs with paired seeds; writes long and summary CSVs");
  add_common(*bench, o);
  bench->add_option("--modes", o.modes, "comma-separated modes")->delimiter(',');
  bench->add_option("--reps", o.reps, "replications per mode");
  bench->add_option("--threads", o.threads, "worker threads");
  bench->add_option("--summary", o.summary, "summary CSV path (default: <out>_summary.csv)");
  run->configurable();
  bench->configurable();
  app.set_config("--config", "", "file of key = value settings for the chosen subcommand (flags win)");
  app.config_formatter(std::make_shared<SubcommandConfig>(app));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    if (*run) return cmd_run(o);
    return cmd_bench(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
