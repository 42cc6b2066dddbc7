#pragma once

// Metropolis-Hastings within Gibbs for the surrogate's parameters.
//
// Sweep order: eta, mu, theta, b_1..b_p from their conjugate full conditionals,
// then r by an independence sampler with a Beta(10,1) proposal, then each u_k
// (prior draw when b_k = 0, sliding-uniform random walk otherwise).

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gp.hpp"
#include "random.hpp"

namespace solid {

struct Priors {
  double sigma_mu = 100.0;  // prior sd of mu
  double a_eta = 0.1;       // Gamma shape for eta
  double b_eta = 0.1;       // Gamma rate for eta
  double a_theta = 1.0;
  double b_theta = 1.0;
  double a_u = 1.0;   // Gamma shape for u_k
  double b_u = 10.0;  // Gamma scale for u_k: mean a_u*b_u, variance a_u*b_u^2

  void validate() const {
    for (double v : {sigma_mu, a_eta, b_eta, a_theta, b_theta, a_u, b_u})
      if (!(v > 0.0)) throw std::invalid_argument("Priors: all hyperparameters must be positive");
  }
};

struct ChainConfig {
  std::size_t draws = 1000;             // M, retained states
  std::optional<std::size_t> burn_in;   // defaults to M
  std::uint64_t seed = 1;

  std::size_t burn() const { return burn_in.value_or(draws); }
};

/// Parameters of the Beta(10,1) independence proposal for r.
inline constexpr double kRProposalA = 10.0;
inline constexpr double kRProposalB = 1.0;

/// Sampler state: the current parameters and everything about W_X the
/// conditionals need, kept in step with every accepted move.
class ChainState {
 public:
  /// Likelihood ingredients for one (r, gamma) configuration.
  struct Factorized {
    Eigen::MatrixXd exponent;  // sum_k gamma_k (x_ik - x_jk)^2
    Eigen::MatrixXd K;
    WFactor factor;
    double y_winv_y = 0.0;
    double one_winv_y = 0.0;
    double one_winv_one = 0.0;

    double quad(double mu) const { return y_winv_y - 2.0 * mu * one_winv_y + mu * mu * one_winv_one; }
  };

  ChainState(GpParams params, DataPtr data) : params_(std::move(params)), data_(std::move(data)) {
    if (!data_) throw std::invalid_argument("ChainState: missing data");
    const auto& X = data_->X;
    if (static_cast<Eigen::Index>(params_.dim()) != X.cols())
      throw std::invalid_argument("ChainState: parameter dimension does not match design");
    const auto n = X.rows();
    sqdist_.resize(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
      Eigen::MatrixXd D(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) D(i, j) = (X(i, k) - X(j, k)) * (X(i, k) - X(j, k));
      sqdist_[static_cast<std::size_t>(k)] = std::move(D);
    }
    Eigen::MatrixXd exponent = Eigen::MatrixXd::Zero(n, n);
    const Eigen::VectorXd gamma = params_.gamma();
    for (Eigen::Index k = 0; k < X.cols(); ++k)
      if (gamma[k] != 0.0) exponent += gamma[k] * sqdist_[static_cast<std::size_t>(k)];
    current_ = factorize(std::move(exponent), params_.r);
  }

  const GpParams& params() const { return params_; }
  const TrainingData& data() const { return *data_; }
  const DataPtr& data_ptr() const { return data_; }
  const Factorized& current() const { return current_; }
  std::size_t n() const { return static_cast<std::size_t>(data_->y.size()); }
  std::size_t dim() const { return params_.dim(); }

  /// log L(y | params) using any factorisation (current or candidate).
  double log_likelihood(const Factorized& f, double mu, double eta) const {
    const double n = static_cast<double>(data_->y.size());
    return -0.5 * n * std::log(2.0 * std::numbers::pi) + 0.5 * n * std::log(eta) - 0.5 * f.factor.logdet -
           0.5 * eta * f.quad(mu);
  }
  double log_likelihood() const { return log_likelihood(current_, params_.mu, params_.eta); }

  /// Factorisation with gamma_k replaced; nullopt when W is not positive definite.
  std::optional<Factorized> with_gamma(std::size_t k, double gamma_k) const {
    const double delta = gamma_k - params_.gamma()[static_cast<Eigen::Index>(k)];
    Eigen::MatrixXd exponent = current_.exponent;
    if (delta != 0.0) exponent += delta * sqdist_[k];
    try {
      return factorize(std::move(exponent), params_.r);
    } catch (const NotPositiveDefinite&) {
      return std::nullopt;
    }
  }

  std::optional<Factorized> with_r(double r) const {
    try {
      return refactor(current_, r);
    } catch (const NotPositiveDefinite&) {
      return std::nullopt;
    }
  }

  // Moves that leave W_X unchanged.
  void set_mu(double mu) { params_.mu = mu; }
  void set_eta(double eta) { params_.eta = eta; }
  void set_theta(double theta) { params_.theta = theta; }
  void set_u_inactive(std::size_t k, double u) {
    if (params_.b[static_cast<Eigen::Index>(k)] != 0)
      throw std::logic_error("set_u_inactive: b_k is 1, use accept_u");
    params_.u[static_cast<Eigen::Index>(k)] = u;
  }

  // Moves that change W_X adopt the candidate factorisation.
  void accept_b(std::size_t k, int value, Factorized f) {
    params_.b[static_cast<Eigen::Index>(k)] = value;
    current_ = std::move(f);
  }
  void accept_u(std::size_t k, double u, Factorized f) {
    params_.u[static_cast<Eigen::Index>(k)] = u;
    current_ = std::move(f);
  }
  void accept_r(double r, Factorized f) {
    params_.r = r;
    current_ = std::move(f);
  }

  Surface snapshot() const { return Surface(params_, data_, current_.factor); }

 private:
  Factorized factorize(Eigen::MatrixXd exponent, double r) const {
    Factorized f;
    f.K = (-exponent.array()).exp().matrix();
    f.exponent = std::move(exponent);
    return refactor_in_place(std::move(f), r);
  }

  Factorized refactor(const Factorized& base, double r) const {
    Factorized f;
    f.exponent = base.exponent;
    f.K = base.K;
    return refactor_in_place(std::move(f), r);
  }

  Factorized refactor_in_place(Factorized f, double r) const {
    f.factor = factorize_w(f.K, r);
    const auto& y = data_->y;
    const Eigen::VectorXd winv_y = f.factor.llt.solve(y);
    const Eigen::VectorXd winv_one = f.factor.llt.solve(Eigen::VectorXd::Ones(y.size()));
    f.y_winv_y = y.dot(winv_y);
    f.one_winv_y = winv_y.sum();
    f.one_winv_one = winv_one.sum();
    return f;
  }

  GpParams params_;
  DataPtr data_;
  std::vector<Eigen::MatrixXd> sqdist_;
  Factorized current_;
};

// --- conjugate full conditionals -------------------------------------------

struct GammaShapeRate {
  double shape;
  double rate;
};
struct NormalMeanVar {
  double mean;
  double var;
};
struct BetaShapes {
  double a;
  double b;
};

inline GammaShapeRate eta_conditional(const ChainState& s, const Priors& pr) {
  const double n = static_cast<double>(s.n());
  return {0.5 * n + pr.a_eta, pr.b_eta + 0.5 * s.current().quad(s.params().mu)};
}

inline NormalMeanVar mu_conditional(const ChainState& s, const Priors& pr) {
  const double eta = s.params().eta;
  const double precision = 1.0 / (pr.sigma_mu * pr.sigma_mu) + eta * s.current().one_winv_one;
  return {eta * s.current().one_winv_y / precision, 1.0 / precision};
}

inline BetaShapes theta_conditional(const ChainState& s, const Priors& pr) {
  const double included = static_cast<double>(s.params().b.sum());
  const double p = static_cast<double>(s.dim());
  return {pr.a_theta + included, pr.b_theta + p - included};
}

/// p_k1 / (p_k1 + p_k0), with p_kl the likelihood at b_k = l times theta^l (1-theta)^(1-l).
/// `flipped` receives the factorisation for the opposite of the current b_k.
inline double inclusion_probability(const ChainState& s, std::size_t k,
                                    std::optional<ChainState::Factorized>* flipped = nullptr) {
  const auto& par = s.params();
  const auto kk = static_cast<Eigen::Index>(k);
  const int current = par.b[kk];
  auto alt = s.with_gamma(k, current == 1 ? 0.0 : par.u[kk]);

  const double ninf = -std::numeric_limits<double>::infinity();
  const double ll_current = s.log_likelihood();
  const double ll_alt = alt ? s.log_likelihood(*alt, par.mu, par.eta) : ninf;
  const double ll1 = current == 1 ? ll_current : ll_alt;
  const double ll0 = current == 1 ? ll_alt : ll_current;
  const double lp1 = par.theta > 0.0 ? ll1 + std::log(par.theta) : ninf;
  const double lp0 = par.theta < 1.0 ? ll0 + std::log1p(-par.theta) : ninf;

  if (flipped) *flipped = std::move(alt);
  if (lp1 == ninf && lp0 == ninf) return par.theta;
  if (lp0 == ninf) return 1.0;
  if (lp1 == ninf) return 0.0;
  return 1.0 / (1.0 + std::exp(lp0 - lp1));
}

inline void update_eta(ChainState& s, const Priors& pr, Rng& rng) {
  const auto c = eta_conditional(s, pr);
  s.set_eta(draw_gamma_rate(rng, c.shape, c.rate));
}

inline void update_mu(ChainState& s, const Priors& pr, Rng& rng) {
  const auto c = mu_conditional(s, pr);
  s.set_mu(draw_normal(rng, c.mean, std::sqrt(c.var)));
}

inline void update_theta(ChainState& s, const Priors& pr, Rng& rng) {
  const auto c = theta_conditional(s, pr);
  s.set_theta(draw_beta(rng, c.a, c.b));
}

inline void update_b(ChainState& s, std::size_t k, Rng& rng) {
  std::optional<ChainState::Factorized> flipped;
  const double prob = inclusion_probability(s, k, &flipped);
  const int drawn = draw_bernoulli(rng, prob) ? 1 : 0;
  if (drawn != s.params().b[static_cast<Eigen::Index>(k)] && flipped) s.accept_b(k, drawn, std::move(*flipped));
}

/// eta, mu, theta, then every b_k.
inline void gibbs_conjugate_sweep(ChainState& s, const Priors& pr, Rng& rng) {
  update_eta(s, pr, rng);
  update_mu(s, pr, rng);
  update_theta(s, pr, rng);
  for (std::size_t k = 0; k < s.dim(); ++k) update_b(s, k, rng);
}

// --- Metropolis-Hastings moves ---------------------------------------------

inline double beta_log_density(double x, double a, double b) {
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) +
         (b - 1.0) * std::log1p(-x);
}

/// Acceptance ratio for moving r to `proposed` given both likelihoods; the
/// prior on r is uniform so only the proposal densities enter.
inline double r_acceptance_log_ratio(double r, double proposed, double ll_current, double ll_proposed) {
  return ll_proposed - ll_current + beta_log_density(r, kRProposalA, kRProposalB) -
         beta_log_density(proposed, kRProposalA, kRProposalB);
}

/// Independence sampler for r. Returns whether the proposal was accepted.
inline bool mh_update_r(ChainState& s, Rng& rng) {
  const double proposed = draw_beta(rng, kRProposalA, kRProposalB);
  const double log_u = std::log(draw_uniform(rng));
  if (!(proposed > 0.0 && proposed < 1.0)) return false;
  auto f = s.with_r(proposed);
  if (!f) return false;
  const auto& par = s.params();
  const double log_ratio =
      r_acceptance_log_ratio(par.r, proposed, s.log_likelihood(), s.log_likelihood(*f, par.mu, par.eta));
  if (log_u < log_ratio) {
    s.accept_r(proposed, std::move(*f));
    return true;
  }
  return false;
}

/// Half-width driver of the sliding uniform proposal for u_k given the
/// multiplier h ~ U(1/2, 2).
inline double proposal_epsilon(double u, double h) {
  return u >= 30.0 ? std::min(50.0, u * h) : std::max(1.0, u * h);
}

struct Window {
  double lo;
  double hi;
  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Support of the u_k proposal from the current value: [max(0, u - 50 eps), u + eps].
inline Window sliding_window(double u, double h) {
  const double eps = proposal_epsilon(u, h);
  return {std::max(0.0, u - 50.0 * eps), u + eps};
}

inline double gamma_scale_log_density_kernel(double x, double shape, double scale) {
  return (shape - 1.0) * std::log(x) - x / scale;
}

/// Update of u_k. With b_k = 0 the likelihood does not depend on u_k and it is
/// redrawn from its prior. Otherwise a sliding-uniform proposal is corrected for
/// its asymmetry using the window widths at both points for the same h.
inline bool mh_update_u(ChainState& s, std::size_t k, const Priors& pr, Rng& rng) {
  const auto kk = static_cast<Eigen::Index>(k);
  const auto& par = s.params();
  if (par.b[kk] == 0) {
    s.set_u_inactive(k, draw_gamma_scale(rng, pr.a_u, pr.b_u));
    return true;
  }
  const double u = par.u[kk];
  const double h = draw_uniform(rng, 0.5, 2.0);
  const Window fwd = sliding_window(u, h);
  const double proposed = draw_uniform(rng, fwd.lo, fwd.hi);
  const double log_unif = std::log(draw_uniform(rng));
  if (!(proposed > 0.0)) return false;
  const Window back = sliding_window(proposed, h);
  if (!back.contains(u)) return false;

  auto f = s.with_gamma(k, proposed);
  if (!f) return false;
  const double log_ratio = s.log_likelihood(*f, par.mu, par.eta) - s.log_likelihood() +
                           gamma_scale_log_density_kernel(proposed, pr.a_u, pr.b_u) -
                           gamma_scale_log_density_kernel(u, pr.a_u, pr.b_u) + std::log(fwd.width()) -
                           std::log(back.width());
  if (log_unif < log_ratio) {
    s.accept_u(k, proposed, std::move(*f));
    return true;
  }
  return false;
}

inline void full_sweep(ChainState& s, const Priors& pr, Rng& rng) {
  gibbs_conjugate_sweep(s, pr, rng);
  mh_update_r(s, rng);
  for (std::size_t k = 0; k < s.dim(); ++k) mh_update_u(s, k, pr, rng);
}

// --- chains ------------------------------------------------------------------

/// m indices spread evenly over [0, M): the centre of each of m equal blocks.
inline std::vector<std::size_t> thin_indices(std::size_t total, std::size_t m) {
  std::vector<std::size_t> idx;
  if (m == 0 || total == 0) return idx;
  if (m >= total) {
    for (std::size_t i = 0; i < total; ++i) idx.push_back(i);
    return idx;
  }
  const double step = static_cast<double>(total) / static_cast<double>(m);
  for (std::size_t j = 0; j < m; ++j)
    idx.push_back(static_cast<std::size_t>((static_cast<double>(j) + 0.5) * step));
  return idx;
}

/// Retained states of one chain, in sampling order, each with its factor.
struct PosteriorDraws {
  std::vector<Surface> surfaces;

  std::size_t size() const { return surfaces.size(); }
  const GpParams& params(std::size_t i) const { return surfaces.at(i).params(); }

  /// Evenly thinned subset of `m` draws (all of them when m >= M).
  std::vector<Surface> subset(std::size_t m) const {
    std::vector<Surface> out;
    for (auto i : thin_indices(surfaces.size(), m)) out.push_back(surfaces[i]);
    return out;
  }
};

inline GpParams initial_state(const TrainingData& data, const Priors& pr, Rng& rng) {
  const auto& y = data.y;
  const double n = static_cast<double>(y.size());
  GpParams par = GpParams::with_dim(static_cast<std::size_t>(data.X.cols()));
  par.mu = y.mean();
  const double var = (y.array() - par.mu).square().sum() / (n - 1.0);
  par.eta = var > 0.0 ? 1.0 / var : 1.0;
  par.r = 0.9;
  par.theta = 0.5;
  for (Eigen::Index k = 0; k < par.u.size(); ++k) par.u[k] = draw_gamma_scale(rng, pr.a_u, pr.b_u);
  return par;
}

/// burn_in + M full sweeps from the default initial state; keeps the last M.
inline PosteriorDraws run_chain(const DataPtr& data, const Priors& priors, const ChainConfig& config) {
  priors.validate();
  if (!data || data->y.size() < 2) throw std::invalid_argument("run_chain: need at least two observations");
  if (config.draws < 1) throw std::invalid_argument("run_chain: need at least one retained draw");
  Rng rng = make_stream(config.seed, 0xC4A1);
  ChainState state(initial_state(*data, priors, rng), data);
  for (std::size_t i = 0; i < config.burn(); ++i) full_sweep(state, priors, rng);
  PosteriorDraws out;
  out.surfaces.reserve(config.draws);
  for (std::size_t i = 0; i < config.draws; ++i) {
    full_sweep(state, priors, rng);
    out.surfaces.push_back(state.snapshot());
  }
  return out;
}

inline PosteriorDraws run_chain(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Priors& priors,
                                const ChainConfig& config) {
  if (y.size() < 2) throw std::invalid_argument("run_chain: need at least two observations");
  return run_chain(make_data(X, y), priors, config);
}

}  // namespace solid
