#pragma once

// Point sets in the unit cube: maximin Latin hypercubes, box rescaling and
// truncated-normal clouds around a centre.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "normal.hpp"
#include "random.hpp"

namespace solid {

/// Rows are points, columns are input variables, entries in [0,1].
using DesignMatrix = Eigen::MatrixXd;

/// One random Latin hypercube: a uniform draw inside each of the n strata,
/// strata independently permuted per column.
inline DesignMatrix random_lhs(std::size_t n, std::size_t p, Rng& rng) {
  if (n == 0 || p == 0) throw std::invalid_argument("random_lhs: n and p must be positive");
  DesignMatrix out(n, p);
  std::vector<std::size_t> perm(n);
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < p; ++k) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double lo = static_cast<double>(perm[i]) / dn;
      const double hi = static_cast<double>(perm[i] + 1) / dn;
      const double v = (static_cast<double>(perm[i]) + draw_uniform(rng)) / dn;
      // rounding in the division may land exactly on the upper stratum edge
      out(i, k) = std::clamp(v, lo, std::nextafter(hi, 0.0));
    }
  }
  return out;
}

/// Smallest Euclidean distance between two rows; +inf for fewer than two rows.
inline double min_pairwise_distance(const DesignMatrix& design) {
  double best = std::numeric_limits<double>::infinity();
  const auto n = design.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      best = std::min(best, (design.row(i) - design.row(j)).squaredNorm());
  return std::sqrt(best);
}

/// Best of `restarts` random Latin hypercubes under the maximin criterion.
/// Candidates come from one sequential stream, so raising `restarts` for a fixed
/// seed never lowers the achieved minimum distance. Ties keep the earlier design.
inline DesignMatrix maximin_lhs(std::size_t n, std::size_t p, std::size_t restarts, Rng& rng) {
  if (n == 0 || p == 0) throw std::invalid_argument("maximin_lhs: n and p must be positive");
  if (restarts == 0) throw std::invalid_argument("maximin_lhs: restarts must be positive");
  DesignMatrix best = random_lhs(n, p, rng);
  double best_dist = min_pairwise_distance(best);
  for (std::size_t r = 1; r < restarts; ++r) {
    DesignMatrix cand = random_lhs(n, p, rng);
    const double d = min_pairwise_distance(cand);
    if (d > best_dist) {
      best = std::move(cand);
      best_dist = d;
    }
  }
  return best;
}

/// Affine map of every column from [0,1] onto [lower_k, upper_k].
inline DesignMatrix rescale_to_box(const DesignMatrix& design, const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper) {
  const auto p = design.cols();
  if (lower.size() != p || upper.size() != p)
    throw std::invalid_argument("rescale_to_box: bound dimension mismatch");
  for (Eigen::Index k = 0; k < p; ++k) {
    if (!(lower[k] <= upper[k])) throw std::invalid_argument("rescale_to_box: lower > upper");
    if (lower[k] < 0.0 || upper[k] > 1.0)
      throw std::invalid_argument("rescale_to_box: bounds must lie in [0,1]");
  }
  DesignMatrix out(design.rows(), p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double width = upper[k] - lower[k];
    out.col(k) = (lower[k] + width * design.col(k).array()).matrix();
    if (width == 0.0) out.col(k).setConstant(lower[k]);
  }
  return out;
}

/// q independent points, each coordinate N(center_k, delta^2) truncated to [0,1]
/// and drawn by inverting the truncated CDF. `delta` is a standard deviation.
inline DesignMatrix truncated_normal_cloud(const Eigen::VectorXd& center, double delta, std::size_t q,
                                           Rng& rng) {
  if (!(delta > 0.0)) throw std::invalid_argument("truncated_normal_cloud: delta must be positive");
  if (q < 2) throw std::invalid_argument("truncated_normal_cloud: q must be at least 2");
  const auto p = center.size();
  for (Eigen::Index k = 0; k < p; ++k)
    if (!(center[k] >= 0.0 && center[k] <= 1.0))
      throw std::invalid_argument("truncated_normal_cloud: center must lie in [0,1]");

  DesignMatrix out(q, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double a = (0.0 - center[k]) / delta;
    const double b = (1.0 - center[k]) / delta;
    const double fa = normal_cdf(a);
    const double fb = normal_cdf(b);
    for (std::size_t i = 0; i < q; ++i) {
      const double u = fa + draw_uniform(rng) * (fb - fa);
      const double z = std::clamp(normal_quantile(u), a, b);
      out(static_cast<Eigen::Index>(i), k) = std::clamp(center[k] + delta * z, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace solid
