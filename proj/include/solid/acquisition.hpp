#pragma once

// Expected improvement, its noise-augmented variant, search regions around the
// maximizer estimates, candidate sets and the gradient line search over them.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "design.hpp"
#include "gp.hpp"
#include "normal.hpp"
#include "optimum.hpp"
#include "random.hpp"
#include "region.hpp"

namespace solid {

/// E[max(F - incumbent, 0)] for F ~ N(mean, sd^2).
inline double expected_improvement(double mean, double sd, double incumbent) {
  if (sd < 0.0) throw std::invalid_argument("expected_improvement: negative sd");
  if (sd == 0.0) return std::max(mean - incumbent, 0.0);
  const double z = (mean - incumbent) / sd;
  return std::max(0.0, sd * (z * normal_cdf(z) + normal_pdf(z)));
}

/// Share of EI kept after discounting noise-dominated uncertainty.
inline double augmentation_factor(double var, double tau) {
  if (tau == 0.0) return 1.0;
  return 1.0 - tau / std::sqrt(var + tau * tau);
}

struct Incumbent {
  std::size_t row = 0;
  double fhat = 0.0;  // marginal mean at that row
};

/// Row maximizing fhat - nu * s; earliest row on ties.
inline Incumbent select_incumbent(const MarginalSurface& surface, const Eigen::MatrixXd& X, double nu) {
  if (X.rows() == 0) throw std::invalid_argument("select_incumbent: empty design");
  if (nu < 0.0) throw std::invalid_argument("select_incumbent: nu must be non-negative");
  Incumbent best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto pr = surface.predict(X.row(i).transpose());
    const double score = pr.mean - nu * std::sqrt(pr.var);
    if (score > best_score) {
      best_score = score;
      best = {static_cast<std::size_t>(i), pr.mean};
    }
  }
  return best;
}

/// Posterior mean of the nugget (1-r)/eta over a draw subset.
inline double posterior_nugget(std::span<const Surface> draws) {
  if (draws.empty()) throw std::invalid_argument("posterior_nugget: empty draw subset");
  double s = 0.0;
  for (const auto& d : draws) s += d.params().tau2();
  return s / static_cast<double>(draws.size());
}

/// AEI(x) = EI(fhat(x), s(x); fhat(x_opt)) * (1 - tau / sqrt(s^2(x) + tau^2)).
class AugmentedEi {
 public:
  struct Parts {
    double mean;
    double var;
    double ei;
    double factor;
    double value;
  };

  AugmentedEi(const MarginalSurface& surface, double incumbent, double tau)
      : surface_(surface), incumbent_(incumbent), tau_(tau) {
    if (tau < 0.0) throw std::invalid_argument("AugmentedEi: tau must be non-negative");
  }

  double incumbent() const { return incumbent_; }
  double tau() const { return tau_; }

  Parts parts(const Eigen::VectorXd& x) const {
    const auto pr = surface_.predict(x);
    Parts out{pr.mean, pr.var, expected_improvement(pr.mean, std::sqrt(pr.var), incumbent_),
              augmentation_factor(pr.var, tau_), 0.0};
    out.value = out.ei * out.factor;
    return out;
  }

  double operator()(const Eigen::VectorXd& x) const { return parts(x).value; }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    const auto pr = surface_.predict(x);
    const auto grads = surface_.predict_gradients(x);
    const double v = pr.var;
    const double s = std::sqrt(v);
    const double ei = expected_improvement(pr.mean, s, incumbent_);
    const double factor = augmentation_factor(v, tau_);

    Eigen::VectorXd dei = Eigen::VectorXd::Zero(x.size());
    if (s > 0.0) {
      const double z = (pr.mean - incumbent_) / s;
      dei = normal_cdf(z) * grads.dmean + normal_pdf(z) * grads.dvar / (2.0 * s);
    } else if (pr.mean > incumbent_) {
      dei = grads.dmean;
    }
    Eigen::VectorXd out = factor * dei;
    if (tau_ > 0.0) {
      const double dfactor = 0.5 * tau_ * std::pow(v + tau_ * tau_, -1.5);
      out += ei * dfactor * grads.dvar;
    }
    return out;
  }

  /// Gradient with every coordinate outside `active` set to zero.
  Eigen::VectorXd gradient(const Eigen::VectorXd& x, const std::vector<std::size_t>& active) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
    if (active.empty()) return out;
    const Eigen::VectorXd full = gradient(x);
    for (auto k : active) out[static_cast<Eigen::Index>(k)] = full[static_cast<Eigen::Index>(k)];
    return out;
  }

 private:
  const MarginalSurface& surface_;
  double incumbent_;
  double tau_;
};

// --- regions -----------------------------------------------------------------

inline bool contains_index(const std::vector<std::size_t>& set, std::size_t k) {
  return std::find(set.begin(), set.end(), k) != set.end();
}

/// Active coordinates span the per-draw maximizers widened by delta (clipped
/// to [0,1]); the others are pinned at chi_hat.
inline SearchRegion build_restricted_region(const std::vector<Eigen::VectorXd>& chi_draws, double delta,
                                            const Eigen::VectorXd& chi_hat,
                                            const std::vector<std::size_t>& active) {
  if (chi_draws.empty()) throw std::invalid_argument("build_restricted_region: no maximizer draws");
  const auto p = static_cast<std::size_t>(chi_hat.size());
  std::vector<RegionEntry> entries;
  for (std::size_t k = 0; k < p; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    if (!contains_index(active, k)) {
      entries.emplace_back(Fixed{chi_hat[kk]});
      continue;
    }
    double lo = chi_draws.front()[kk];
    double hi = lo;
    for (const auto& c : chi_draws) {
      lo = std::min(lo, c[kk]);
      hi = std::max(hi, c[kk]);
    }
    entries.emplace_back(Interval{std::max(0.0, lo - delta), std::min(1.0, hi + delta)});
  }
  return SearchRegion(std::move(entries));
}

/// Full unit interval on active coordinates, chi_hat elsewhere.
inline SearchRegion build_active_region(const Eigen::VectorXd& chi_hat, const std::vector<std::size_t>& active) {
  std::vector<RegionEntry> entries;
  for (std::size_t k = 0; k < static_cast<std::size_t>(chi_hat.size()); ++k) {
    if (contains_index(active, k))
      entries.emplace_back(Interval{0.0, 1.0});
    else
      entries.emplace_back(Fixed{chi_hat[static_cast<Eigen::Index>(k)]});
  }
  return SearchRegion(std::move(entries));
}

// --- candidates --------------------------------------------------------------

enum class CandidateOrigin { restricted, unrestricted };

struct CandidateSet {
  Eigen::MatrixXd points;
  CandidateOrigin origin = CandidateOrigin::unrestricted;
  Eigen::VectorXd aei;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
};

inline constexpr std::size_t kCandidateRestarts = 10;

/// Maximin LHS over the interval coordinates; fixed coordinates become constant
/// columns. A fully pinned region yields its single point.
inline CandidateSet build_candidates(const SearchRegion& region, std::size_t c, Rng& rng,
                                     CandidateOrigin origin = CandidateOrigin::unrestricted,
                                     std::size_t restarts = kCandidateRestarts) {
  if (c == 0) throw std::invalid_argument("build_candidates: c must be positive");
  const auto free = region.active_indices();
  const auto p = static_cast<Eigen::Index>(region.dim());
  CandidateSet out;
  out.origin = origin;
  if (free.empty()) {
    out.points.resize(1, p);
    for (Eigen::Index k = 0; k < p; ++k) out.points(0, k) = region.lower(static_cast<std::size_t>(k));
    return out;
  }
  const DesignMatrix lhs = maximin_lhs(c, free.size(), restarts, rng);
  Eigen::VectorXd lo(static_cast<Eigen::Index>(free.size())), hi(static_cast<Eigen::Index>(free.size()));
  for (std::size_t j = 0; j < free.size(); ++j) {
    lo[static_cast<Eigen::Index>(j)] = region.lower(free[j]);
    hi[static_cast<Eigen::Index>(j)] = region.upper(free[j]);
  }
  const DesignMatrix scaled = rescale_to_box(lhs, lo, hi);
  out.points.resize(static_cast<Eigen::Index>(c), p);
  for (Eigen::Index k = 0; k < p; ++k)
    if (region.is_fixed(static_cast<std::size_t>(k))) out.points.col(k).setConstant(region.lower(static_cast<std::size_t>(k)));
  for (std::size_t j = 0; j < free.size(); ++j)
    out.points.col(static_cast<Eigen::Index>(free[j])) = scaled.col(static_cast<Eigen::Index>(j));
  return out;
}

inline void evaluate_aei(CandidateSet& set, const ScalarField& aei) {
  set.aei.resize(static_cast<Eigen::Index>(set.size()));
  for (Eigen::Index i = 0; i < set.points.rows(); ++i) set.aei[i] = aei(set.points.row(i).transpose());
}

/// The set holding the single largest AEI; the restricted set on ties.
inline const CandidateSet& choose_candidate_set(const CandidateSet& restricted, const CandidateSet& unrestricted) {
  if (restricted.aei.size() == 0 || unrestricted.aei.size() == 0)
    throw std::invalid_argument("choose_candidate_set: AEI not evaluated");
  return restricted.aei.maxCoeff() >= unrestricted.aei.maxCoeff() ? restricted : unrestricted;
}

// --- line search -------------------------------------------------------------

struct LineSearchConfig {
  std::size_t starts = 5;
  std::size_t searches = 5;
  std::size_t evaluations = 30;
};

struct LineSearchResult {
  Eigen::VectorXd x;
  double value = 0.0;
};

namespace detail {

/// x + t g clamped to [0,1], then pulled back into the delta-ball around origin.
inline Eigen::VectorXd ball_path(const Eigen::VectorXd& x, const Eigen::VectorXd& g, double t,
                                 const Eigen::VectorXd& origin, double delta) {
  Eigen::VectorXd y = (x + t * g).cwiseMax(0.0).cwiseMin(1.0);
  const Eigen::VectorXd d = y - origin;
  const double norm = d.norm();
  if (norm > delta) y = origin + d * (delta / norm);
  return y;
}

/// Golden-section maximization of phi on [0, t_max] with a fixed evaluation
/// budget. Returns the best evaluated t, or 0 when nothing beats phi(0).
inline std::pair<double, double> golden_section_max(const std::function<double(double)>& phi, double t_max,
                                                    double phi0, std::size_t evaluations) {
  constexpr double inv_phi = 0.6180339887498949;
  double best_t = 0.0;
  double best_v = phi0;
  auto consider = [&](double t, double v) {
    if (v > best_v) {
      best_v = v;
      best_t = t;
    }
  };
  if (evaluations == 0 || !(t_max > 0.0)) return {best_t, best_v};
  double a = 0.0;
  double b = t_max;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = phi(c);
  consider(c, fc);
  if (evaluations == 1) return {best_t, best_v};
  double fd = phi(d);
  consider(d, fd);
  for (std::size_t used = 2; used < evaluations; ++used) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = phi(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = phi(d);
      consider(d, fd);
    }
  }
  return {best_t, best_v};
}

}  // namespace detail

/// From each of the top candidates, successive gradient line searches confined
/// to the delta-ball around that candidate and to [0,1]^p. Coordinates outside
/// `active` never move; a coordinate on the boundary with an outward gradient
/// is held there. Returns the best end point over all starts (earliest on ties).
inline LineSearchResult line_search_maximize(const CandidateSet& cands, double delta,
                                             const std::vector<std::size_t>& active, const ScalarField& aei,
                                             const VectorField& gradient, const LineSearchConfig& cfg = {}) {
  if (cands.size() == 0) throw std::invalid_argument("line_search_maximize: empty candidate set");
  if (static_cast<std::size_t>(cands.aei.size()) != cands.size())
    throw std::invalid_argument("line_search_maximize: AEI not evaluated");
  if (!(delta > 0.0)) throw std::invalid_argument("line_search_maximize: delta must be positive");

  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cands.aei[static_cast<Eigen::Index>(a)] > cands.aei[static_cast<Eigen::Index>(b)];
  });
  order.resize(std::min(cfg.starts, order.size()));

  const auto p = cands.points.cols();
  std::optional<LineSearchResult> best;
  for (auto idx : order) {
    const Eigen::VectorXd origin = cands.points.row(static_cast<Eigen::Index>(idx)).transpose();
    Eigen::VectorXd x = origin;
    double fx = cands.aei[static_cast<Eigen::Index>(idx)];
    for (std::size_t j = 0; j < cfg.searches; ++j) {
      Eigen::VectorXd g = gradient(x);
      for (Eigen::Index k = 0; k < p; ++k) {
        const bool pinned = !contains_index(active, static_cast<std::size_t>(k));
        const bool outward = (x[k] >= 1.0 && g[k] > 0.0) || (x[k] <= 0.0 && g[k] < 0.0);
        if (pinned || outward || !std::isfinite(g[k])) g[k] = 0.0;
      }
      const double gnorm = g.norm();
      if (gnorm == 0.0) break;
      auto phi = [&](double t) { return aei(detail::ball_path(x, g, t, origin, delta)); };
      const auto [t, v] = detail::golden_section_max(phi, delta / gnorm, fx, cfg.evaluations);
      if (t == 0.0) break;
      x = detail::ball_path(x, g, t, origin, delta);
      fx = v;
    }
    if (!best || fx > best->value) best = LineSearchResult{x, fx};
  }
  return *best;
}

}  // namespace solid
