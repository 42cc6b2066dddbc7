#pragma once

// Benchmark objectives: the toy function, Beach, Drum and Simba, and a
// Nadaraya-Watson smoother over a user-supplied dataset.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "normal.hpp"
#include "random.hpp"

namespace solid {

namespace testfn {

using std::numbers::pi;

inline void require_dim(const Eigen::VectorXd& x, Eigen::Index need, const char* name) {
  if (x.size() < need) throw std::invalid_argument(std::string(name) + ": input has too few coordinates");
}

// pnorm(z, sd = s)
inline double pnorm(double z, double sd = 1.0) { return normal_cdf(z / sd); }

inline double toy(const Eigen::VectorXd& x) {
  require_dim(x, 2, "toy");
  const double x1 = x[0], x2 = x[1];
  return 10.0 * x2 * x2 * pnorm(10.0 * (x1 - 0.4)) +
         std::sin(5.0 * pi * (x2 - x1 * x1) - x1 * x2) * pnorm(10.0 * (0.4 - x1));
}

inline double drum(const Eigen::VectorXd& x) {
  require_dim(x, 6, "drum");
  const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3], x5 = x[4], x6 = x[5];
  const double rr = (x1 - 0.5) * (x1 - 0.5) + (x2 - 0.5) * (x2 - 0.5);
  const double inner = (6.0 - x3 / 4.0) * std::cos(4.0 * pi * (x3 - 0.5)) *
                       normal_pdf(11.0 * (rr + 0.25) * (rr + 0.25)) * (1.0 - 3.0 * (x1 - 0.3) * (x1 - 0.3));
  const double middl = (1.0 + 2.0 * x4) * std::sin(2.0 * pi * x4 * (x5 - 0.3)) *
                       (pnorm(6.0 * (rr - 0.13)) * pnorm(-8.0 * (rr - 0.11))) *
                       (1.0 + x4 * x4 + x5 * x5 * (x2 - 0.2));
  const double outer = (1.0 - 2.0 * x5) * std::cos(2.0 * pi * x5 * (x4 + 0.5)) * pnorm(8.0 * (rr - 0.2)) *
                       (1.0 - x6 * x6 - x5 * x5 * (x1 + 0.2));
  return (inner + middl + outer) * (10.0 / 2.032078) - 4.4831;
}

inline double beach(const Eigen::VectorXd& x) {
  require_dim(x, 6, "beach");
  const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3], x5 = x[4], x6 = x[5];
  const double sdz = 0.2 + (2.0 + x6 + x5 - 1.5 * x1) * (3.0 + x4 - x3 - x2) / 12.0;
  const double inner = x2 * x2 + 4.0 - x1 * x2 / (x3 - 7.0) + x4 * (x5 - 0.3);
  const double bumps = (5.0 * std::sin(6.0 * pi * x1 * x6) * (x3 * x3 + 1.0) -
                        inner * inner * std::pow(std::cos(4.0 * pi * x1 * x3 * x3), 10) * (x1 * x2 * x2 - 0.5) *
                            (x2 * x6 - 0.5) * (x5 - 0.5)) *
                       (pnorm(10.0 * (0.8 - x3), sdz) * pnorm(1.0 * (x1 - 0.1), sdz) *
                        pnorm(1.0 * (x2 - 0.1), 2.0 * sdz));
  const double horiz =
      (10.5 - 30.0 * (x1 - 0.3) * (x1 - 0.3)) * (pnorm(1.0 * (0.2 - x3), sdz) * pnorm(10.0 * (0.3 - x2), sdz));
  const double vert =
      (10.5 - 30.0 * (x2 - 0.85) * (x2 - 0.85)) * (pnorm(5.0 * (x3 - 0.8), sdz) * pnorm(10.0 * (x1 - 0.8), sdz));
  return bumps + horiz + vert - 0.97013 + 0.470418;
}

inline double simba(const Eigen::VectorXd& x) {
  require_dim(x, 6, "simba");
  const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3], x5 = x[4], x6 = x[5];
  auto P = [](double z) { return normal_cdf(z); };
  auto sq = [](double v) { return v * v; };
  double y = 3.14749 + std::sin(2.0 * pi * (x1 * x1 - 2.0 * x2 * (1.0 + x3))) *
                           (P(30.0 * (x2 - 0.3)) + P(30.0 * (0.8 - x2)) - 1.0) * 2.0 *
                           std::sin(4.0 * pi * x1 + 3.0 * pi * (1.0 + x3) + 2.0 * pi * (x4 + x5) +
                                    3.0 * pi * (1.0 + x6));
  y += (4.0 + 6.0 * x1) * ((P(30.0 * x2) + P(30.0 * (0.2 - x2))) - 1.0) *
       ((P(30.0 * x1) + P(30.0 * (0.6 - x1))) - 1.0) * P(10.0 * (0.2 - x3));
  y += (1.0 - 8.0 * sq(x1 + x2 - x4 - x5 - x6)) * ((P(40.0 * x2) + P(40.0 * (0.2 - x2))) - 1.0) *
       ((P(40.0 * (x1 - 0.6)) + P(40.0 * (1.0 - x1))) - 1.0) * P(10.0 * (0.2 - x3));
  y += 0.5 * (1.0 - std::sin(8.0 * pi * x1 + 7.0 * pi * x2 * x3 - 4.0 * pi * x4 * x5 * x6)) *
       ((P(30.0 * x2) + P(30.0 * (0.3 - x2))) - 1.0) * P(8.0 * (x3 - 0.3));
  // the inner pnorm sits inside the outer one's argument, as in the R source
  y += (5.0 * std::cos(2.0 * (x2 + 0.5) * (-x4 + 0.5) * sq(-x5 + 0.5)) * (-x6 - 0.5) -
        0.02 * (sq(1.0 - x2) + sq(1.0 - x1) + sq(1.0 - x3 - 0.3 * x4) + sq(1.0 - x5 + 0.5 * x4) +
                sq(0.8 - x6 - 0.4 * x4))) *
       P(5.0 * (x2 - 1.0) + P(10.0 * (0.5 - x3)));
  return y;
}

}  // namespace testfn

struct KnownMax {
  Eigen::VectorXd argmax;  // in the function's own leading coordinates
  double value;
};

struct Objective {
  std::string name;
  std::size_t p0 = 0;
  std::vector<std::size_t> active;  // 0-based
  std::function<double(const Eigen::VectorXd&)> eval;
  double noise_var = 0.0;
  std::optional<KnownMax> known_max;

  double operator()(const Eigen::VectorXd& x) const {
    if (static_cast<std::size_t>(x.size()) != p0)
      throw std::invalid_argument("Objective " + name + ": expected " + std::to_string(p0) + " coordinates");
    return eval(x);
  }
};

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

/// Names: toy (2 active), beach, drum, simba (6 active). Coordinates beyond the
/// active ones are ignored.
inline Objective make_objective(const std::string& name, std::size_t p0, double noise_var) {
  Objective obj;
  obj.name = name;
  obj.p0 = p0;
  obj.noise_var = noise_var;
  std::size_t need = 6;
  if (name == "toy") {
    need = 2;
    obj.eval = testfn::toy;
    obj.known_max = KnownMax{vec({1.0, 1.0}), 9.999999989303937};
  } else if (name == "beach") {
    obj.eval = testfn::beach;
    obj.known_max = KnownMax{vec({1.0, 0.85, 1.0, 0.0, 0.0, 0.0}), 9.999999640364};
  } else if (name == "drum") {
    obj.eval = testfn::drum;
    obj.known_max = KnownMax{vec({0.368, 0.533, 0.0, 1.0, 0.555, 1.0}), 9.999992162213};
  } else if (name == "simba") {
    obj.eval = testfn::simba;
    obj.known_max = KnownMax{vec({0.523, 0.0999, 0.0, 0.298, 0.298, 0.245}), 10.034223026431};
  } else {
    throw std::invalid_argument("unknown objective '" + name + "' (expected toy, beach, drum or simba)");
  }
  if (p0 < need) throw std::invalid_argument(name + " needs at least " + std::to_string(need) + " dimensions");
  if (noise_var < 0.0) throw std::invalid_argument("noise variance must be non-negative");
  for (std::size_t k = 0; k < need; ++k) obj.active.push_back(k);
  return obj;
}

inline double noisy_eval(const Objective& obj, const Eigen::VectorXd& x, Rng& rng) {
  const double f = obj(x);
  if (obj.noise_var == 0.0) return f;
  return f + draw_normal(rng, 0.0, std::sqrt(obj.noise_var));
}

// --- kernel-smoothed dataset -------------------------------------------------

struct SmoothedDataset {
  Eigen::MatrixXd X;  // scaled to [0,1] per column
  Eigen::VectorXd y;
  double h = 0.1;
};

/// Nadaraya-Watson estimate with weights exp(-|x_i - x|^2 / h^2), computed in
/// log space so far-away queries do not underflow to 0/0.
inline double smoothed_value(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double h,
                             const Eigen::VectorXd& x) {
  if (X.rows() == 0) throw std::invalid_argument("smoother: empty dataset");
  if (!(h > 0.0)) throw std::invalid_argument("smoother: bandwidth must be positive");
  if (X.cols() != x.size()) throw std::invalid_argument("smoother: query dimension mismatch");
  const Eigen::VectorXd logw = -((X.rowwise() - x.transpose()).rowwise().squaredNorm().array() / (h * h)).matrix();
  const double top = logw.maxCoeff();
  const Eigen::ArrayXd w = (logw.array() - top).exp();
  return (w * y.array()).sum() / w.sum();
}

inline double smoothed_objective(const SmoothedDataset& data, const Eigen::VectorXd& x) {
  return smoothed_value(data.X, data.y, data.h, x);
}

inline Objective make_smoothed_objective(SmoothedDataset data, double noise_var) {
  Objective obj;
  obj.name = "dataset";
  obj.p0 = static_cast<std::size_t>(data.X.cols());
  obj.noise_var = noise_var;
  for (std::size_t k = 0; k < obj.p0; ++k) obj.active.push_back(k);
  auto shared = std::make_shared<const SmoothedDataset>(std::move(data));
  obj.eval = [shared](const Eigen::VectorXd& x) { return smoothed_objective(*shared, x); };
  return obj;
}

/// Min-max scales every column to [0,1]; constant columns become 0.
inline void scale_unit(Eigen::MatrixXd& X) {
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    const double lo = X.col(k).minCoeff();
    const double hi = X.col(k).maxCoeff();
    if (hi > lo)
      X.col(k) = ((X.col(k).array() - lo) / (hi - lo)).matrix();
    else
      X.col(k).setZero();
  }
}

/// Comma- or whitespace-separated numbers, last column the response. A first
/// line that does not parse as numbers is taken as a header.
inline SmoothedDataset load_dataset(const std::string& path, double h) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    bool numeric = true;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (row.empty() && numeric) continue;  // blank line
    if (!numeric) {
      if (rows.empty() && lineno == 1) continue;
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": non-numeric field");
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": inconsistent column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("dataset '" + path + "' has no rows");
  const std::size_t cols = rows.front().size();
  if (cols < 2) throw std::runtime_error("dataset '" + path + "' needs at least one input and a response");
  SmoothedDataset data;
  data.h = h;
  data.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols - 1));
  data.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k + 1 < cols; ++k)
      data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    data.y[static_cast<Eigen::Index>(i)] = rows[i][cols - 1];
  }
  scale_unit(data.X);
  return data;
}

/// K-fold cross-validated bandwidth: rows are shuffled with `seed`, row j of the
/// shuffle goes to fold j mod folds, and the grid value with the smallest mean
/// held-out squared error wins (earliest on ties).
inline double cv_bandwidth(const SmoothedDataset& data, std::size_t folds, const std::vector<double>& grid,
                           std::uint64_t seed = 1) {
  if (folds < 2) throw std::invalid_argument("cv_bandwidth: need at least two folds");
  if (grid.empty()) throw std::invalid_argument("cv_bandwidth: empty grid");
  const auto n = static_cast<std::size_t>(data.X.rows());
  if (n < folds) throw std::invalid_argument("cv_bandwidth: fewer rows than folds");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_stream(seed, 0xCF);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t j = 0; j < n; ++j) fold_of[perm[j]] = j % folds;

  double best_h = grid.front();
  double best_mse = std::numeric_limits<double>::infinity();
  for (double h : grid) {
    double sse = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      std::vector<Eigen::Index> train, test;
      for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
      const Eigen::MatrixXd Xt = data.X(train, Eigen::all);
      const Eigen::VectorXd yt = data.y(train);
      for (auto i : test) {
        const double e = smoothed_value(Xt, yt, h, data.X.row(i).transpose()) - data.y[i];
        sse += e * e;
      }
    }
    const double mse = sse / static_cast<double>(n);
    if (mse < best_mse) {
      best_mse = mse;
      best_h = h;
    }
  }
  return best_h;
}

}  // namespace solid
