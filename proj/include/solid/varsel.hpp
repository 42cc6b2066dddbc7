#pragma once

// Global selection from posterior inclusion frequencies and local selection by
// how much dropping a variable from the kernel changes predictions near the
// per-draw maximizers.

#include <algorithm>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "design.hpp"
#include "gp.hpp"
#include "mcmc.hpp"
#include "optimum.hpp"
#include "random.hpp"

namespace solid {

struct GlobalActivity {
  Eigen::VectorXd bhat;
  double g = 0.05;
  std::vector<std::size_t> keep;  // current column indices with bhat >= g
};

inline GlobalActivity global_activity(std::span<const GpParams> states, double g) {
  if (states.empty()) throw std::invalid_argument("global_activity: no draws");
  if (!(g > 0.0 && g < 1.0)) throw std::invalid_argument("global_activity: g must lie in (0,1)");
  const auto p = static_cast<Eigen::Index>(states.front().dim());
  GlobalActivity out;
  out.g = g;
  out.bhat = Eigen::VectorXd::Zero(p);
  for (const auto& s : states) out.bhat += s.b.cast<double>();
  out.bhat /= static_cast<double>(states.size());
  for (Eigen::Index k = 0; k < p; ++k)
    if (out.bhat[k] >= g) out.keep.push_back(static_cast<std::size_t>(k));
  return out;
}

inline GlobalActivity global_activity(const PosteriorDraws& draws, double g) {
  std::vector<GpParams> states;
  states.reserve(draws.size());
  for (const auto& s : draws.surfaces) states.push_back(s.params());
  return global_activity(states, g);
}

/// Current inputs, responses and, per column, the original variable index.
struct Design {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::size_t> columns;

  std::size_t dim() const { return columns.size(); }
};

class EmptyModel : public std::runtime_error {
 public:
  EmptyModel() : std::runtime_error("global selection removed every variable") {}
};

struct SelectionResult {
  Design design;
  bool refit_needed = false;
};

/// Drops every column outside `activity.keep`; removals are permanent.
inline SelectionResult apply_global_selection(const Design& design, const GlobalActivity& activity) {
  if (activity.keep.empty()) throw EmptyModel();
  if (activity.keep.size() == design.dim()) return {design, false};
  SelectionResult out;
  out.refit_needed = true;
  out.design.y = design.y;
  out.design.X.resize(design.X.rows(), static_cast<Eigen::Index>(activity.keep.size()));
  for (std::size_t j = 0; j < activity.keep.size(); ++j) {
    const auto k = activity.keep[j];
    if (k >= design.dim()) throw std::out_of_range("apply_global_selection: keep index out of range");
    out.design.X.col(static_cast<Eigen::Index>(j)) = design.X.col(static_cast<Eigen::Index>(k));
    out.design.columns.push_back(design.columns[k]);
  }
  return out;
}

/// Squared sample correlation; 0 when either vector is constant.
inline double squared_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("squared_correlation: bad lengths");
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double saa = da.square().sum();
  const double sbb = db.square().sum();
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  const double sab = (da * db).sum();
  return std::clamp(sab * sab / (saa * sbb), 0.0, 1.0);
}

struct LocalConfig {
  double delta = 0.30;
  std::size_t q = 100;
  double rho = 0.02;
};

struct LocalActivityReport {
  Eigen::VectorXd L;
  double rho = 0.0;
  std::vector<std::size_t> active;      // {k : L_k >= rho}, possibly empty
  Eigen::MatrixXd r2;                   // m x p
  std::vector<Eigen::VectorXd> chi_draws;
};

using ChiEstimator = std::function<Eigen::VectorXd(const Surface&)>;

/// Local importance over an already thinned draw subset.
inline LocalActivityReport local_importance(std::span<const Surface> draws, const LocalConfig& cfg, Rng& rng,
                                            const ChiEstimator& chi_estimator = {}) {
  if (draws.empty()) throw std::invalid_argument("local_importance: empty draw subset");
  if (cfg.q < 3) throw std::invalid_argument("local_importance: q must be at least 3");
  if (!(cfg.rho > 0.0 && cfg.rho < 1.0)) throw std::invalid_argument("local_importance: rho must lie in (0,1)");
  const auto p = static_cast<Eigen::Index>(draws.front().dim());
  const auto m = static_cast<Eigen::Index>(draws.size());

  LocalActivityReport rep;
  rep.rho = cfg.rho;
  rep.r2 = Eigen::MatrixXd::Ones(m, p);
  for (Eigen::Index t = 0; t < m; ++t) {
    const Surface& draw = draws[static_cast<std::size_t>(t)];
    Eigen::VectorXd chi = chi_estimator ? chi_estimator(draw) : estimate_chi_t(draw);
    const DesignMatrix cloud = truncated_normal_cloud(chi, cfg.delta, cfg.q, rng);
    Eigen::VectorXd base(cloud.rows());
    for (Eigen::Index i = 0; i < cloud.rows(); ++i) base[i] = draw.mean(cloud.row(i).transpose());

    for (Eigen::Index k = 0; k < p; ++k) {
      if (draw.gamma()[k] == 0.0) continue;  // nothing to remove: R^2 stays 1
      GpParams reduced = draw.params();
      reduced.b[k] = 0;
      double value = 0.0;
      try {
        const Surface alt(reduced, draw.data_ptr());
        Eigen::VectorXd alt_pred(cloud.rows());
        for (Eigen::Index i = 0; i < cloud.rows(); ++i) alt_pred[i] = alt.mean(cloud.row(i).transpose());
        value = squared_correlation(base, alt_pred);
      } catch (const NotPositiveDefinite&) {
        value = 0.0;
      }
      rep.r2(t, k) = value;
    }
    rep.chi_draws.push_back(std::move(chi));
  }
  rep.L = (1.0 - rep.r2.colwise().mean().array()).matrix().transpose();
  rep.L = rep.L.cwiseMax(0.0).cwiseMin(1.0);
  for (Eigen::Index k = 0; k < p; ++k)
    if (rep.L[k] >= cfg.rho) rep.active.push_back(static_cast<std::size_t>(k));
  return rep;
}

inline LocalActivityReport local_importance(const PosteriorDraws& draws, std::size_t m, const LocalConfig& cfg,
                                            Rng& rng, const ChiEstimator& chi_estimator = {}) {
  if (m == 0 || m > draws.size()) throw std::invalid_argument("local_importance: need 1 <= m <= M");
  const auto subset = draws.subset(m);
  return local_importance(subset, cfg, rng, chi_estimator);
}

}  // namespace solid
