#pragma once

// CSV output for single runs and replicated benchmarks.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "loop.hpp"

namespace solid {

namespace csv {

inline std::string num(double v) {
  if (std::isnan(v)) return "NA";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

inline std::string join(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (k) out += ';';
    out += num(v[k]);
  }
  return out;
}

/// 1-based, semicolon separated.
inline std::string join_indices(const std::vector<std::size_t>& idx) {
  std::string out;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (j) out += ';';
    out += std::to_string(idx[j] + 1);
  }
  return out;
}

}  // namespace csv

inline std::string to_string(CandidateOrigin o) {
  return o == CandidateOrigin::restricted ? "restricted" : "unrestricted";
}

inline const char* kTraceHeader =
    "step,f_opt,improvement,n_global_kept,n_local_active,chosen_set,chi_hat,next_point,observed,global_keep,"
    "local_active,wall_ms";

inline void write_trace_csv(std::ostream& out, const RunTrace& trace, bool timing = true) {
  out << kTraceHeader << '\n';
  for (const auto& s : trace.steps) {
    out << s.step << ',' << csv::num(s.f_at_chi) << ',' << csv::num(s.f_at_chi - trace.steps.front().f_at_chi) << ','
        << s.global_keep.size() << ',' << s.local_active.size() << ','
        << (s.chosen_set ? to_string(*s.chosen_set) : "") << ',' << csv::join(s.chi_hat) << ','
        << (s.next_point ? csv::join(*s.next_point) : "") << ',' << (s.observed ? csv::num(*s.observed) : "")
        << ',' << csv::join_indices(s.global_keep) << ',' << csv::join_indices(s.local_active) << ','
        << csv::num(timing ? s.wall_ms : 0.0) << '\n';
  }
}

// --- benchmarks --------------------------------------------------------------

struct BenchJob {
  Mode mode;
  std::uint64_t seed;
};

struct BenchResult {
  BenchJob job;
  RunTrace trace;
  bool ok = true;
  std::string error;
};

/// Runs modes x reps with paired seeds base_seed + r. Results are ordered by
/// (mode as listed, seed) whatever the thread count.
inline std::vector<BenchResult> run_bench(const Objective& obj, const RunConfig& base,
                                          const std::vector<Mode>& modes, std::size_t reps, std::size_t threads,
                                          const std::function<void(const BenchResult&)>& on_done = {}) {
  std::vector<BenchJob> jobs;
  for (auto m : modes)
    for (std::size_t r = 0; r < reps; ++r) jobs.push_back({m, base.seed + r});
  std::vector<BenchResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;

  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      RunConfig cfg = base;
      cfg.mode = jobs[j].mode;
      cfg.seed = jobs[j].seed;
      if (cfg.mode != Mode::oracle) cfg.oracle_active.clear();
      BenchResult res{jobs[j], {}, true, {}};
      try {
        res.trace = run(obj, cfg);
      } catch (const RunAborted& e) {
        res.ok = false;
        res.error = e.what();
        res.trace = e.trace;
      } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
        res.trace.objective = obj.name;
        res.trace.mode = cfg.mode;
        res.trace.seed = cfg.seed;
      }
      if (on_done) {
        std::lock_guard lock(report_mutex);
        on_done(res);
      }
      results[j] = std::move(res);
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, jobs.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

inline const char* kLongHeader =
    "objective,mode,seed,step,f_opt,improvement,n_global_kept,n_local_active,wall_ms,status";

inline void write_long_csv(std::ostream& out, const std::vector<BenchResult>& results, bool timing = true) {
  out << kLongHeader << '\n';
  for (const auto& r : results) {
    const std::string status = r.ok ? "ok" : "aborted";
    const auto& steps = r.trace.steps;
    if (steps.empty()) {
      out << r.trace.objective << ',' << to_string(r.job.mode) << ',' << r.job.seed << ",NA,NA,NA,NA,NA,NA,"
          << status << '\n';
      continue;
    }
    for (const auto& s : steps) {
      out << r.trace.objective << ',' << to_string(r.job.mode) << ',' << r.job.seed << ',' << s.step << ','
          << csv::num(s.f_at_chi) << ',' << csv::num(s.f_at_chi - steps.front().f_at_chi) << ','
          << s.global_keep.size() << ',' << s.local_active.size() << ',' << csv::num(timing ? s.wall_ms : 0.0)
          << ',' << status << '\n';
    }
  }
}

struct SummaryRow {
  std::string mode;
  std::string step;  // a step number or "overall"
  std::size_t n = 0;
  double mean = 0.0;
  double se = 0.0;
};

inline std::pair<double, double> mean_se(const std::vector<double>& v) {
  if (v.empty()) return {std::nan(""), std::nan("")};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, std::nan("")};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return {m, sd / std::sqrt(static_cast<double>(v.size()))};
}

/// Mean improvement and its standard error per (mode, step), then one
/// "overall" row per mode. Aborted runs are left out.
inline std::vector<SummaryRow> summarize(const std::vector<BenchResult>& results, const std::vector<Mode>& modes) {
  std::vector<SummaryRow> out;
  for (auto mode : modes) {
    std::map<std::size_t, std::vector<double>> by_step;
    std::vector<double> overall;
    for (const auto& r : results) {
      if (r.job.mode != mode || !r.ok || r.trace.steps.empty()) continue;
      const double f0 = r.trace.steps.front().f_at_chi;
      for (const auto& s : r.trace.steps) by_step[s.step].push_back(s.f_at_chi - f0);
      overall.push_back(overall_improvement(r.trace));
    }
    for (const auto& [step, vals] : by_step) {
      const auto [m, se] = mean_se(vals);
      out.push_back({to_string(mode), std::to_string(step), vals.size(), m, se});
    }
    const auto [m, se] = mean_se(overall);
    out.push_back({to_string(mode), "overall", overall.size(), m, se});
  }
  return out;
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "mode,step,n,mean_improvement,se_improvement\n";
  for (const auto& r : rows)
    out << r.mode << ',' << r.step << ',' << r.n << ',' << csv::num(r.mean) << ',' << csv::num(r.se) << '\n';
}

}  // namespace solid
