#pragma once

// The sequential optimization loop and its baselines.
//
// Each step refits the surrogate (repeating while global selection removes
// columns), estimates the maximizer, picks the next design point by AEI and
// evaluates the objective there. Only SOLID mode uses local selection.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "acquisition.hpp"
#include "design.hpp"
#include "gp.hpp"
#include "mcmc.hpp"
#include "optimum.hpp"
#include "random.hpp"
#include "region.hpp"
#include "testbed.hpp"
#include "varsel.hpp"

namespace solid {

enum class Mode { solid, gvs, oracle, none };

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::solid: return "solid";
    case Mode::gvs: return "gvs";
    case Mode::oracle: return "oracle";
    case Mode::none: return "none";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "solid") return Mode::solid;
  if (s == "gvs") return Mode::gvs;
  if (s == "oracle") return Mode::oracle;
  if (s == "none") return Mode::none;
  throw std::invalid_argument("unknown mode '" + s + "' (expected solid, gvs, oracle or none)");
}

struct RunConfig {
  std::size_t n0 = 70;
  std::size_t steps = 25;  // N
  double g = 0.05;
  double rho = 0.02;
  double delta = 0.30;
  std::optional<double> line_delta;  // ball radius of the AEI line search; defaults to delta
  std::size_t chain_m = 1000;
  std::optional<std::size_t> burn_in;
  std::size_t subsample_m = 100;
  std::size_t q = 100;
  std::size_t candidates = 300;
  double nu = 1.0;
  Mode mode = Mode::solid;
  std::vector<std::size_t> oracle_active;  // 0-based original indices
  std::uint64_t seed = 1;
  std::size_t design_restarts = 100;
  double oracle_fill = 0.5;  // value fed to the objective for columns outside the oracle set
  Priors priors;

  double search_radius() const { return line_delta.value_or(delta); }

  void validate(std::size_t p0) const {
    if (n0 < 2) throw std::invalid_argument("n0 must be at least 2");
    if (chain_m < 1) throw std::invalid_argument("chain length M must be positive");
    if (subsample_m < 1 || subsample_m > chain_m) throw std::invalid_argument("need 1 <= m <= M");
    if (!(g > 0.0 && g < 1.0)) throw std::invalid_argument("g must lie in (0,1)");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0,1)");
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    if (!(search_radius() > 0.0)) throw std::invalid_argument("line-search radius must be positive");
    if (q < 3) throw std::invalid_argument("q must be at least 3");
    if (candidates < 1) throw std::invalid_argument("candidates must be positive");
    if (nu < 0.0) throw std::invalid_argument("nu must be non-negative");
    if (design_restarts < 1) throw std::invalid_argument("design restarts must be positive");
    priors.validate();
    if (mode == Mode::oracle) {
      if (oracle_active.empty()) throw std::invalid_argument("oracle mode needs a non-empty oracle-active list");
      for (auto k : oracle_active)
        if (k >= p0) throw std::invalid_argument("oracle-active index out of range");
    } else if (!oracle_active.empty()) {
      throw std::invalid_argument("oracle-active list given for a non-oracle mode");
    }
  }
};

struct StepRecord {
  std::size_t step = 0;
  Eigen::VectorXd chi_hat;                  // original coordinates
  double f_at_chi = 0.0;                    // noiseless objective at chi_hat
  std::vector<std::size_t> global_keep;     // original indices still modelled
  std::vector<std::size_t> local_active;    // original indices searched this step
  Eigen::VectorXd fill_in;                  // values used for unmodelled coordinates
  std::size_t refits = 0;                   // extra chains run after removals
  std::optional<CandidateOrigin> chosen_set;
  std::optional<Eigen::VectorXd> next_point;  // original coordinates; absent at the last step
  std::optional<double> observed;
  double wall_ms = 0.0;
};

struct RunTrace {
  std::string objective;
  Mode mode = Mode::solid;
  std::uint64_t seed = 0;
  std::size_t p0 = 0;
  std::vector<StepRecord> steps;
};

class RunAborted : public std::runtime_error {
 public:
  RunAborted(const std::string& what, RunTrace partial) : std::runtime_error(what), trace(std::move(partial)) {}
  RunTrace trace;
};

/// f(chi^i) - f(chi^0) for i = 1..N.
inline std::vector<double> improvement(const RunTrace& trace) {
  std::vector<double> out;
  for (std::size_t i = 1; i < trace.steps.size(); ++i) out.push_back(trace.steps[i].f_at_chi - trace.steps[0].f_at_chi);
  return out;
}

/// Mean of improvement(); 0 when there are no sequential steps.
inline double overall_improvement(const RunTrace& trace) {
  const auto imp = improvement(trace);
  if (imp.empty()) return 0.0;
  double s = 0.0;
  for (double v : imp) s += v;
  return s / static_cast<double>(imp.size());
}

namespace detail {

// Stream ids; every consumer of randomness draws from its own stream.
inline constexpr std::uint64_t kDesignStream = 1;
inline constexpr std::uint64_t kNoiseStream = 2;
inline constexpr std::uint64_t kChainStreamBase = 1'000;
inline constexpr std::uint64_t kLocalStreamBase = 2'000'000;
inline constexpr std::uint64_t kCandidateStreamBase = 3'000'000;

inline Eigen::VectorXd embed(const Eigen::VectorXd& x, const std::vector<std::size_t>& columns,
                             const Eigen::VectorXd& fill) {
  Eigen::VectorXd out = fill;
  for (std::size_t j = 0; j < columns.size(); ++j)
    out[static_cast<Eigen::Index>(columns[j])] = x[static_cast<Eigen::Index>(j)];
  return out;
}

inline Eigen::VectorXd restrict_to(const Eigen::VectorXd& full, const std::vector<std::size_t>& columns) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    out[static_cast<Eigen::Index>(j)] = full[static_cast<Eigen::Index>(columns[j])];
  return out;
}

inline std::vector<std::size_t> to_original(const std::vector<std::size_t>& idx,
                                            const std::vector<std::size_t>& columns) {
  std::vector<std::size_t> out;
  for (auto k : idx) out.push_back(columns[k]);
  return out;
}

inline std::vector<std::size_t> all_indices(std::size_t p) {
  std::vector<std::size_t> out(p);
  for (std::size_t k = 0; k < p; ++k) out[k] = k;
  return out;
}

inline Design initial_design(const Objective& obj, const RunConfig& cfg, Rng& noise_rng, Eigen::VectorXd& fill) {
  Rng design_rng = make_stream(cfg.seed, kDesignStream);
  const DesignMatrix X0 = maximin_lhs(cfg.n0, obj.p0, cfg.design_restarts, design_rng);

  Design d;
  d.columns = all_indices(obj.p0);
  if (cfg.mode == Mode::oracle) {
    std::set<std::size_t> uniq(cfg.oracle_active.begin(), cfg.oracle_active.end());
    d.columns.assign(uniq.begin(), uniq.end());
  }
  fill = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(obj.p0), cfg.oracle_fill);
  d.X.resize(X0.rows(), static_cast<Eigen::Index>(d.columns.size()));
  for (std::size_t j = 0; j < d.columns.size(); ++j)
    d.X.col(static_cast<Eigen::Index>(j)) = X0.col(static_cast<Eigen::Index>(d.columns[j]));
  d.y.resize(X0.rows());
  for (Eigen::Index i = 0; i < X0.rows(); ++i) {
    const Eigen::VectorXd x = embed(d.X.row(i).transpose(), d.columns, fill);
    d.y[i] = noisy_eval(obj, x, noise_rng);
  }
  return d;
}

}  // namespace detail

/// Runs the loop in any mode. Throws RunAborted (carrying the steps finished so
/// far) if global selection removes every variable.
inline RunTrace run(const Objective& obj, const RunConfig& cfg) {
  cfg.validate(obj.p0);
  using detail::embed;
  using detail::restrict_to;

  RunTrace trace;
  trace.objective = obj.name;
  trace.mode = cfg.mode;
  trace.seed = cfg.seed;
  trace.p0 = obj.p0;

  Rng noise_rng = make_stream(cfg.seed, detail::kNoiseStream);
  Eigen::VectorXd fill;
  Design design = detail::initial_design(obj, cfg, noise_rng, fill);

  std::optional<Eigen::VectorXd> prev_chi;  // original coordinates
  const bool global_selection = cfg.mode == Mode::solid || cfg.mode == Mode::gvs;

  for (std::size_t i = 0; i <= cfg.steps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    StepRecord rec;
    rec.step = i;

    // fit, dropping globally inactive columns until none are removed
    PosteriorDraws draws;
    std::vector<Surface> subset;
    Eigen::VectorXd chi_full;
    for (std::size_t refit = 0;; ++refit) {
      Rng seed_rng = make_stream(cfg.seed, detail::kChainStreamBase + i * 64 + refit);
      ChainConfig cc;
      cc.draws = cfg.chain_m;
      cc.burn_in = cfg.burn_in;
      cc.seed = seed_rng();
      draws = run_chain(make_data(design.X, design.y), cfg.priors, cc);
      subset = draws.subset(cfg.subsample_m);
      std::vector<Eigen::VectorXd> starts;
      if (prev_chi) starts.push_back(restrict_to(*prev_chi, design.columns));
      chi_full = estimate_chi_marginal(subset, SearchRegion::unit_box(design.dim()), starts).x;
      rec.refits = refit;
      if (!global_selection) break;

      const GlobalActivity act = global_activity(draws, cfg.g);
      if (act.keep.size() == design.dim()) break;
      if (act.keep.empty()) {
        throw RunAborted("step " + std::to_string(i) + ": global selection removed every variable", trace);
      }
      for (std::size_t k = 0; k < design.dim(); ++k) {
        if (contains_index(act.keep, k)) continue;
        const auto orig = static_cast<Eigen::Index>(design.columns[k]);
        fill[orig] = prev_chi ? (*prev_chi)[orig] : chi_full[static_cast<Eigen::Index>(k)];
      }
      design = apply_global_selection(design, act).design;
    }

    const std::size_t p = design.dim();
    std::vector<std::size_t> active = detail::all_indices(p);
    Eigen::VectorXd chi = chi_full;
    std::optional<LocalActivityReport> local;
    if (cfg.mode == Mode::solid) {
      Rng local_rng = make_stream(cfg.seed, detail::kLocalStreamBase + i);
      std::optional<Eigen::VectorXd> prev_cur;
      if (prev_chi) prev_cur = restrict_to(*prev_chi, design.columns);
      const ChiEstimator est = [&](const Surface& s) { return estimate_chi_t(s, prev_cur); };
      local = local_importance(subset, LocalConfig{cfg.delta, cfg.q, cfg.rho}, local_rng, est);
      if (!local->active.empty()) active = local->active;
      if (i > 0) {
        const SearchRegion region_a = build_active_region(chi_full, active);
        std::vector<Eigen::VectorXd> starts{chi_full};
        if (prev_cur) starts.push_back(region_a.project(*prev_cur));
        chi = estimate_chi_marginal(subset, region_a, starts).x;
      }
    }

    rec.chi_hat = embed(chi, design.columns, fill);
    rec.f_at_chi = obj(rec.chi_hat);
    rec.global_keep = design.columns;
    rec.local_active = detail::to_original(active, design.columns);
    rec.fill_in = fill;
    prev_chi = rec.chi_hat;

    if (i < cfg.steps) {
      const MarginalSurface surface(subset);
      const Incumbent inc = select_incumbent(surface, design.X, cfg.nu);
      const double tau = std::sqrt(posterior_nugget(subset));
      const AugmentedEi aei(surface, inc.fhat, tau);
      const ScalarField aei_fn = [&](const Eigen::VectorXd& x) { return aei(x); };
      const VectorField grad_fn = [&](const Eigen::VectorXd& x) { return aei.gradient(x, active); };

      Rng cand_rng = make_stream(cfg.seed, detail::kCandidateStreamBase + i);
      CandidateSet chosen;
      if (cfg.mode == Mode::solid) {
        CandidateSet restricted = build_candidates(build_restricted_region(local->chi_draws, cfg.delta, chi, active),
                                                   cfg.candidates, cand_rng, CandidateOrigin::restricted);
        CandidateSet unrestricted = build_candidates(build_active_region(chi, active), cfg.candidates, cand_rng,
                                                     CandidateOrigin::unrestricted);
        evaluate_aei(restricted, aei_fn);
        evaluate_aei(unrestricted, aei_fn);
        chosen = choose_candidate_set(restricted, unrestricted);
      } else {
        chosen = build_candidates(SearchRegion::unit_box(p), cfg.candidates, cand_rng);
        evaluate_aei(chosen, aei_fn);
      }
      rec.chosen_set = chosen.origin;
      const LineSearchResult next = line_search_maximize(chosen, cfg.search_radius(), active, aei_fn, grad_fn);

      const Eigen::VectorXd x_full = embed(next.x, design.columns, fill);
      const double y_new = noisy_eval(obj, x_full, noise_rng);
      rec.next_point = x_full;
      rec.observed = y_new;

      design.X.conservativeResize(design.X.rows() + 1, Eigen::NoChange);
      design.X.row(design.X.rows() - 1) = next.x.transpose();
      design.y.conservativeResize(design.y.size() + 1);
      design.y[design.y.size() - 1] = y_new;
    }

    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    trace.steps.push_back(std::move(rec));
  }
  return trace;
}

inline RunTrace run_solid(const Objective& obj, RunConfig cfg) {
  cfg.mode = Mode::solid;
  return run(obj, cfg);
}

/// GVS, ORACLE or NONE.
inline RunTrace run_baseline(const Objective& obj, const RunConfig& cfg) {
  if (cfg.mode == Mode::solid) throw std::invalid_argument("run_baseline: mode must be gvs, oracle or none");
  return run(obj, cfg);
}

}  // namespace solid
