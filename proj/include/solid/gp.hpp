#pragma once

// Gaussian-process surrogate in the (eta, r) parameterisation:
//
//   Cov[y_i, y_j] = (1/eta) * W_ij,   W = r*K + (1-r)*I,
//   K(x, x') = exp(-sum_k gamma_k (x_k - x'_k)^2),   gamma_k = u_k * b_k,
//
// so sigma^2 = r/eta is the surface variance and tau^2 = (1-r)/eta the nugget.
// Predictions are of the latent surface f, not of a new noisy observation.

#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace solid {

class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One posterior state of the surrogate.
struct GpParams {
  double mu = 0.0;
  double eta = 1.0;    // total precision 1/(sigma^2 + tau^2)
  double r = 0.5;      // share of variance carried by the surface
  Eigen::VectorXd u;   // range magnitudes, >= 0
  Eigen::VectorXi b;   // inclusion indicators in {0,1}
  double theta = 0.5;  // inclusion probability

  static GpParams with_dim(std::size_t p) {
    GpParams out;
    out.u = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(p));
    out.b = Eigen::VectorXi::Ones(static_cast<Eigen::Index>(p));
    return out;
  }

  std::size_t dim() const { return static_cast<std::size_t>(u.size()); }
  Eigen::VectorXd gamma() const { return u.cwiseProduct(b.cast<double>()); }
  double sigma2() const { return r / eta; }
  double tau2() const { return (1.0 - r) / eta; }

  bool valid() const {
    if (!(eta > 0.0) || !(r > 0.0 && r < 1.0) || !(theta >= 0.0 && theta <= 1.0)) return false;
    if (u.size() != b.size()) return false;
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      if (!(u[k] >= 0.0)) return false;
      if (b[k] != 0 && b[k] != 1) return false;
    }
    return std::isfinite(mu);
  }
};

/// Squared-exponential correlation. Rejects negative ranges.
inline double kernel(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& x2,
                     const Eigen::Ref<const Eigen::VectorXd>& gamma) {
  if ((gamma.array() < 0.0).any()) throw std::invalid_argument("kernel: negative range parameter");
  return std::exp(-(gamma.array() * (x - x2).array().square()).sum());
}

inline Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& gamma) {
  const auto n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double s = (gamma.array() * (X.row(i) - X.row(j)).transpose().array().square()).sum();
      K(i, j) = K(j, i) = std::exp(-s);
    }
  }
  return K;
}

struct TrainingData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};
using DataPtr = std::shared_ptr<const TrainingData>;

inline DataPtr make_data(Eigen::MatrixXd X, Eigen::VectorXd y) {
  if (X.rows() != y.size() || X.rows() < 1)
    throw std::invalid_argument("training data: rows(X) must equal len(y) and be positive");
  return std::make_shared<const TrainingData>(TrainingData{std::move(X), std::move(y)});
}

/// Cholesky factor of W plus the jitter that made it succeed.
struct WFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  double logdet = 0.0;
};

inline constexpr double kInitialJitter = 1e-10;
inline constexpr double kMaxJitter = 1e-6;

/// Factorises W = r*K + (1-r)*I + jitter*I, escalating jitter x10 from 1e-10
/// to 1e-6 before giving up.
inline WFactor factorize_w(const Eigen::MatrixXd& K, double r) {
  Eigen::MatrixXd W = r * K;
  W.diagonal().array() += (1.0 - r);
  for (double jitter = kInitialJitter; jitter <= kMaxJitter * 1.0000001; jitter *= 10.0) {
    Eigen::MatrixXd Wj = W;
    Wj.diagonal().array() += jitter;
    WFactor f{Eigen::LLT<Eigen::MatrixXd>(Wj), jitter, 0.0};
    if (f.llt.info() != Eigen::Success) continue;
    const auto diag = f.llt.matrixLLT().diagonal();
    if (!(diag.array() > 0.0).all() || !diag.allFinite()) continue;
    f.logdet = 2.0 * diag.array().log().sum();
    return f;
  }
  throw NotPositiveDefinite("W_X is not positive definite after jitter escalation");
}

/// A surface fitted for one parameter state. Immutable once built; every
/// prediction reuses the cached factor and the weight vector W^{-1}(y - mu 1).
class Surface {
 public:
  struct Prediction {
    double mean;
    double var;
  };
  struct Gradients {
    Eigen::VectorXd dmean;
    Eigen::VectorXd dvar;
  };

  Surface(GpParams params, DataPtr data)
      : params_(std::move(params)), data_(std::move(data)) {
    check_shapes();
    gamma_ = params_.gamma();
    factor_ = factorize_w(correlation_matrix(data_->X, gamma_), params_.r);
    finish();
  }

  /// Adopts a factor computed elsewhere (the sampler already has one).
  Surface(GpParams params, DataPtr data, WFactor factor)
      : params_(std::move(params)), data_(std::move(data)), factor_(std::move(factor)) {
    check_shapes();
    gamma_ = params_.gamma();
    finish();
  }

  const GpParams& params() const { return params_; }
  const Eigen::VectorXd& gamma() const { return gamma_; }
  const TrainingData& data() const { return *data_; }
  const DataPtr& data_ptr() const { return data_; }
  const WFactor& factor() const { return factor_; }
  std::size_t dim() const { return static_cast<std::size_t>(data_->X.cols()); }

  /// W_X as factorised (jitter included).
  Eigen::MatrixXd w_matrix() const { return factor_.llt.reconstructedMatrix(); }

  Eigen::VectorXd correlations(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const auto& X = data_->X;
    Eigen::VectorXd k(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      k[i] = std::exp(-(gamma_.array() * (x.transpose() - X.row(i)).transpose().array().square()).sum());
    return k;
  }

  double mean(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return params_.mu + params_.r * correlations(x).dot(alpha_);
  }

  /// Variance before clamping; may be slightly negative from round-off.
  double raw_variance(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const Eigen::VectorXd k = correlations(x);
    return variance_from(k);
  }

  Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const Eigen::VectorXd k = correlations(x);
    return {params_.mu + params_.r * k.dot(alpha_), std::max(0.0, variance_from(k))};
  }

  Eigen::VectorXd mean_gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const Eigen::VectorXd k = correlations(x);
    const Eigen::VectorXd w = params_.r * alpha_.cwiseProduct(k);
    return spatial_derivative(x, w);
  }

  Gradients predict_gradients(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const Eigen::VectorXd k = correlations(x);
    const Eigen::VectorXd winv_k = factor_.llt.solve(k);
    Gradients g;
    g.dmean = spatial_derivative(x, params_.r * alpha_.cwiseProduct(k));
    const double c = -2.0 * params_.r * params_.r / params_.eta;
    g.dvar = spatial_derivative(x, c * winv_k.cwiseProduct(k));
    return g;
  }

  /// Gaussian log density of y under this state.
  double log_likelihood() const {
    const double n = static_cast<double>(data_->y.size());
    const double eta = params_.eta;
    const double quad = residual_.dot(alpha_);
    return -0.5 * n * std::log(2.0 * std::numbers::pi) + 0.5 * n * std::log(eta) - 0.5 * factor_.logdet -
           0.5 * eta * quad;
  }

 private:
  void check_shapes() const {
    if (!data_) throw std::invalid_argument("Surface: missing training data");
    if (static_cast<Eigen::Index>(params_.dim()) != data_->X.cols())
      throw std::invalid_argument("Surface: parameter dimension does not match design columns");
    if (data_->X.rows() != data_->y.size() || data_->y.size() < 1)
      throw std::invalid_argument("Surface: rows(X) must equal len(y) >= 1");
  }

  void finish() {
    residual_ = data_->y.array() - params_.mu;
    alpha_ = factor_.llt.solve(residual_);
  }

  double variance_from(const Eigen::VectorXd& k) const {
    const Eigen::VectorXd v = factor_.llt.matrixL().solve(k);
    const double r = params_.r;
    return (r - r * r * v.squaredNorm()) / params_.eta;
  }

  // sum_i w_i * dK(x, x_i)/dx  with  dK/dx_j = -2 gamma_j (x_j - X_ij) K
  Eigen::VectorXd spatial_derivative(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& w) const {
    const auto& X = data_->X;
    Eigen::VectorXd diff_sum = x * w.sum() - X.transpose() * w;
    return (-2.0 * gamma_.array() * diff_sum.array()).matrix();
  }

  GpParams params_;
  DataPtr data_;
  Eigen::VectorXd gamma_;
  WFactor factor_;
  Eigen::VectorXd residual_;
  Eigen::VectorXd alpha_;
};

inline Surface build_surface(const GpParams& params, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return Surface(params, make_data(X, y));
}

inline double log_likelihood(const GpParams& params, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return build_surface(params, X, y).log_likelihood();
}

/// Draw-averaged surface. The mean is the average of per-draw means; the
/// variance is that of the equally weighted mixture of per-draw predictive
/// distributions. Holds a non-owning view: the draws must outlive it.
class MarginalSurface {
 public:
  explicit MarginalSurface(std::span<const Surface> draws) : draws_(draws) {
    if (draws_.empty()) throw std::invalid_argument("MarginalSurface: empty draw subset");
  }

  std::span<const Surface> draws() const { return draws_; }
  std::size_t dim() const { return draws_.front().dim(); }

  double mean(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    double s = 0.0;
    for (const auto& d : draws_) s += d.mean(x);
    return s / static_cast<double>(draws_.size());
  }

  Eigen::VectorXd mean_gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    for (const auto& d : draws_) g += d.mean_gradient(x);
    return g / static_cast<double>(draws_.size());
  }

  Surface::Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const double m = static_cast<double>(draws_.size());
    Eigen::VectorXd means(static_cast<Eigen::Index>(draws_.size()));
    double var_sum = 0.0;
    for (std::size_t t = 0; t < draws_.size(); ++t) {
      const auto pr = draws_[t].predict(x);
      means[static_cast<Eigen::Index>(t)] = pr.mean;
      var_sum += pr.var;
    }
    const double fbar = means.mean();
    const double spread = (means.array() - fbar).square().sum() / m;
    return {fbar, std::max(0.0, var_sum / m + spread)};
  }

  Surface::Gradients predict_gradients(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const double m = static_cast<double>(draws_.size());
    const auto p = x.size();
    std::vector<double> means(draws_.size());
    std::vector<Eigen::VectorXd> dmeans(draws_.size());
    Surface::Gradients g{Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p)};
    double fbar = 0.0;
    for (std::size_t t = 0; t < draws_.size(); ++t) {
      means[t] = draws_[t].mean(x);
      auto gt = draws_[t].predict_gradients(x);
      g.dmean += gt.dmean;
      g.dvar += gt.dvar;
      dmeans[t] = std::move(gt.dmean);
      fbar += means[t];
    }
    fbar /= m;
    g.dmean /= m;
    g.dvar /= m;
    for (std::size_t t = 0; t < draws_.size(); ++t) g.dvar += (2.0 / m) * (means[t] - fbar) * dmeans[t];
    return g;
  }

 private:
  std::span<const Surface> draws_;
};

struct MarginalValue {
  double mean;
  Eigen::VectorXd gradient;
};

inline MarginalValue marginal_surface(std::span<const Surface> draws, const Eigen::VectorXd& x) {
  const MarginalSurface surface(draws);
  return {surface.mean(x), surface.mean_gradient(x)};
}

}  // namespace solid
