#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "solid/gp.hpp"
#include "solid/random.hpp"

namespace testing_support {

using solid::GpParams;
using solid::Rng;

inline GpParams random_params(std::size_t p, Rng& rng, bool all_included = false) {
  GpParams par = GpParams::with_dim(p);
  par.mu = solid::draw_normal(rng, 0.0, 1.0);
  par.eta = solid::draw_uniform(rng, 0.5, 3.0);
  par.r = solid::draw_uniform(rng, 0.3, 0.95);
  par.theta = solid::draw_uniform(rng, 0.1, 0.9);
  for (Eigen::Index k = 0; k < par.u.size(); ++k) {
    par.u[k] = solid::draw_uniform(rng, 0.5, 8.0);
    par.b[k] = all_included || solid::draw_uniform(rng) < 0.8 ? 1 : 0;
  }
  return par;
}

inline Eigen::MatrixXd random_inputs(std::size_t n, std::size_t p, Rng& rng) {
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index k = 0; k < X.cols(); ++k) X(i, k) = solid::draw_uniform(rng);
  return X;
}

inline Eigen::VectorXd random_responses(const Eigen::MatrixXd& X, Rng& rng) {
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    y[i] = std::sin(3.0 * X.row(i).sum()) + 0.1 * solid::draw_normal(rng, 0.0, 1.0);
  return y;
}

inline Eigen::VectorXd random_point(std::size_t p, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Eigen::VectorXd x(p);
  for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = solid::draw_uniform(rng, lo, hi);
  return x;
}

// Dense covariance-form evaluation written from the textbook formulas, used as
// an independent oracle for the Cholesky-based code paths.
struct DenseGp {
  GpParams par;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;

  double k(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) s += par.u[j] * par.b[j] * (a[j] - b[j]) * (a[j] - b[j]);
    return std::exp(-s);
  }
  Eigen::MatrixXd V() const {
    const auto n = X.rows();
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        out(i, j) = (par.r * k(X.row(i).transpose(), X.row(j).transpose()) + (i == j ? 1.0 - par.r : 0.0)) / par.eta;
    return out;
  }
  Eigen::VectorXd v(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = par.sigma2() * k(x, X.row(i).transpose());
    return out;
  }
  double mean(const Eigen::VectorXd& x) const {
    const Eigen::MatrixXd Vinv = V().inverse();
    return par.mu + v(x).dot(Vinv * (y.array() - par.mu).matrix());
  }
  double var(const Eigen::VectorXd& x) const {
    const Eigen::MatrixXd Vinv = V().inverse();
    const Eigen::VectorXd vx = v(x);
    return par.sigma2() - vx.dot(Vinv * vx);
  }
  double log_likelihood() const {
    const auto n = static_cast<double>(y.size());
    const Eigen::MatrixXd Vm = V();
    const Eigen::VectorXd res = (y.array() - par.mu).matrix();
    return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(Vm.determinant()) -
           0.5 * res.dot(Vm.inverse() * res);
  }
};

}  // namespace testing_support
