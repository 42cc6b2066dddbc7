#pragma once

// Multi-start bounded ascent and the maximizer estimates built on it.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gp.hpp"
#include "region.hpp"

namespace solid {

using ScalarField = std::function<double(const Eigen::VectorXd&)>;
using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct BoxOptProblem {
  ScalarField objective;
  VectorField gradient;
  SearchRegion region;
  std::vector<Eigen::VectorXd> starts;
};

struct OptResult {
  Eigen::VectorXd x;
  double value = 0.0;
  std::size_t start_index = 0;
};

inline constexpr std::size_t kDefaultMaxIters = 200;
inline constexpr double kDefaultStepTol = 1e-6;

namespace detail {

inline OptResult ascend_from(const BoxOptProblem& prob, const Eigen::VectorXd& start, std::size_t max_iters,
                             double tol) {
  constexpr double armijo = 1e-4;
  constexpr double initial_step = 0.1;
  constexpr int max_backtracks = 50;

  const auto& region = prob.region;
  const auto p = static_cast<std::size_t>(start.size());
  auto masked_gradient = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = prob.gradient(x);
    for (std::size_t k = 0; k < p; ++k)
      if (region.is_fixed(k)) g[static_cast<Eigen::Index>(k)] = 0.0;
    return g;
  };

  Eigen::VectorXd x = region.project(start);
  double f = prob.objective(x);
  Eigen::VectorXd g = masked_gradient(x);
  Eigen::VectorXd x_prev, g_prev;
  double step = initial_step;

  for (std::size_t it = 0; it < max_iters; ++it) {
    if (it > 0) {
      // Barzilai-Borwein length for ascent on a locally concave function
      const Eigen::VectorXd s = x - x_prev;
      const Eigen::VectorXd yv = g - g_prev;
      const double sy = s.dot(yv);
      step = sy < 0.0 ? s.squaredNorm() / (-sy) : initial_step;
      step = std::clamp(step, 1e-10, 1e10);
    }
    bool moved = false;
    Eigen::VectorXd x_new;
    double f_new = f;
    for (int bt = 0; bt < max_backtracks; ++bt) {
      x_new = region.project(x + step * g);
      const Eigen::VectorXd d = x_new - x;
      if (d.norm() < tol) {
        // converged; keep the last sub-tolerance step so boundaries are hit exactly
        if (d.norm() > 0.0) {
          f_new = prob.objective(x_new);
          if (f_new >= f) {
            x = std::move(x_new);
            f = f_new;
          }
        }
        break;
      }
      f_new = prob.objective(x_new);
      if (f_new >= f + armijo * g.dot(d)) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    const double travelled = (x_new - x).norm();
    x_prev = x;
    g_prev = g;
    x = std::move(x_new);
    f = f_new;
    g = masked_gradient(x);
    if (travelled < tol) break;
  }
  return {x, f, 0};
}

}  // namespace detail

/// Projected gradient ascent from every start; the best end point wins, ties to
/// the earliest start. Fixed coordinates never move.
inline OptResult maximize_in_box(const BoxOptProblem& prob, std::size_t max_iters = kDefaultMaxIters,
                                 double tol = kDefaultStepTol) {
  if (prob.starts.empty()) throw std::invalid_argument("maximize_in_box: need at least one start");
  if (!prob.objective || !prob.gradient) throw std::invalid_argument("maximize_in_box: missing callables");
  std::optional<OptResult> best;
  for (std::size_t i = 0; i < prob.starts.size(); ++i) {
    OptResult r = detail::ascend_from(prob, prob.starts[i], max_iters, tol);
    r.start_index = i;
    if (!best || r.value > best->value) best = std::move(r);
  }
  return *best;
}

/// Indices of the `count` largest responses, largest first, ties by row order.
inline std::vector<std::size_t> top_response_rows(const Eigen::VectorXd& y, std::size_t count) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(y.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return y[static_cast<Eigen::Index>(a)] > y[static_cast<Eigen::Index>(b)];
  });
  idx.resize(std::min(count, idx.size()));
  return idx;
}

inline constexpr std::size_t kTopRowStarts = 4;

/// Supplied starts first, then the design rows with the four largest responses.
inline std::vector<Eigen::VectorXd> default_starts(const TrainingData& data,
                                                   const std::vector<Eigen::VectorXd>& extra) {
  std::vector<Eigen::VectorXd> starts(extra.begin(), extra.end());
  for (auto i : top_response_rows(data.y, kTopRowStarts))
    starts.emplace_back(data.X.row(static_cast<Eigen::Index>(i)).transpose());
  return starts;
}

/// Maximizer of one draw's predictive mean over the full box.
inline Eigen::VectorXd estimate_chi_t(const Surface& draw, const std::optional<Eigen::VectorXd>& prev_chi = {}) {
  BoxOptProblem prob;
  prob.objective = [&](const Eigen::VectorXd& x) { return draw.mean(x); };
  prob.gradient = [&](const Eigen::VectorXd& x) { return draw.mean_gradient(x); };
  prob.region = SearchRegion::unit_box(draw.dim());
  std::vector<Eigen::VectorXd> extra;
  if (prev_chi) extra.push_back(*prev_chi);
  prob.starts = default_starts(draw.data(), extra);
  return maximize_in_box(prob).x;
}

/// Maximizer of the draw-averaged mean within `region`.
inline OptResult estimate_chi_marginal(std::span<const Surface> draws, const SearchRegion& region,
                                       const std::vector<Eigen::VectorXd>& extra_starts = {}) {
  const MarginalSurface surface(draws);
  if (region.dim() != surface.dim()) throw std::invalid_argument("estimate_chi_marginal: region dimension mismatch");
  BoxOptProblem prob;
  prob.objective = [&](const Eigen::VectorXd& x) { return surface.mean(x); };
  prob.gradient = [&](const Eigen::VectorXd& x) { return surface.mean_gradient(x); };
  prob.region = region;
  prob.starts = default_starts(draws.front().data(), extra_starts);
  return maximize_in_box(prob);
}

}  // namespace solid
