#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "solid/testbed.hpp"
#include "support.hpp"

using namespace solid;

namespace {

// Reference values from an independent transcription using scipy's normal
// CDF/PDF (tests/oracles/test_functions.py).
const Eigen::VectorXd kProbeA = vec({0.2, 0.3, 0.4, 0.5, 0.6, 0.7});
const Eigen::VectorXd kProbeB = vec({0.9, 0.1, 0.5, 0.3, 0.8, 0.05});

// Every coordinate moved by +-0.02 (staying in the cube) must not raise f.
std::vector<std::string> probe_failures(const Objective& obj) {
  std::vector<std::string> out;
  const Eigen::VectorXd x0 = obj.known_max->argmax;
  const double f0 = obj.eval(x0);
  for (Eigen::Index k = 0; k < x0.size(); ++k)
    for (double step : {-0.02, 0.02}) {
      Eigen::VectorXd x = x0;
      x[k] += step;
      if (x[k] < 0.0 || x[k] > 1.0) continue;
      const double f = obj.eval(x);
      if (f > f0) out.push_back("x" + std::to_string(k + 1) + (step > 0 ? "+" : "-") + " gains " + std::to_string(f - f0));
    }
  return out;
}

}  // namespace

TEST(TestFunctions, GoldenValues) {
  EXPECT_NEAR(testfn::toy(vec({0.3, 0.7})), 0.8219142379903399, 1e-10);
  EXPECT_NEAR(testfn::beach(kProbeA), 2.3969044342974906, 1e-10);
  EXPECT_NEAR(testfn::drum(kProbeA), -1.1813753211323896, 1e-10);
  EXPECT_NEAR(testfn::simba(kProbeA), 4.277824814928707, 1e-10);
  EXPECT_NEAR(testfn::beach(kProbeB), 1.223236505541462, 1e-10);
  EXPECT_NEAR(testfn::drum(kProbeB), -3.7602118212108597, 1e-10);
  EXPECT_NEAR(testfn::simba(kProbeB), 4.092424247510988, 1e-10);
}

TEST(TestFunctions, KnownMaximaMatchArgmaxEvaluation) {
  for (const char* name : {"toy", "beach", "drum", "simba"}) {
    const auto obj = make_objective(name, std::string(name) == "toy" ? 2 : 6, 0.0);
    ASSERT_TRUE(obj.known_max);
    EXPECT_NEAR(obj.eval(obj.known_max->argmax), obj.known_max->value, 1e-9) << name;
  }
}

TEST(TestFunctions, ToyPeaksAtTen) {
  const auto toy = make_objective("toy", 2, 0.0);
  EXPECT_NEAR(toy(vec({1.0, 1.0})), 10.0, 1e-6);
  double best = -INFINITY;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 200; ++j) best = std::max(best, toy(vec({i / 200.0, j / 200.0})));
  EXPECT_NEAR(best, 10.0, 1e-6);
}

TEST(TestFunctions, BeachArgmaxIsLocalMaximum) {
  const auto f = probe_failures(make_objective("beach", 6, 0.0));
  EXPECT_TRUE(f.empty()) << f.front();
}

TEST(TestFunctions, DrumArgmaxIsLocalMaximum) {
  const auto f = probe_failures(make_objective("drum", 6, 0.0));
  EXPECT_TRUE(f.empty()) << f.front();
}

TEST(TestFunctions, SimbaArgmaxIsLocalMaximum) {
  // The published Simba argmax is rounded; see the decisions ledger.
  const auto f = probe_failures(make_objective("simba", 6, 0.0));
  EXPECT_TRUE(f.empty()) << f.front();
}

TEST(TestFunctions, InactiveDimensionsIgnored) {
  Rng rng = make_stream(1, 0);
  for (const char* name : {"beach", "drum", "simba"}) {
    const auto obj = make_objective(name, 15, 0.0);
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::VectorXd x = testing_support::random_point(15, rng);
      const double f = obj(x);
      x.tail(9) = testing_support::random_point(9, rng);
      EXPECT_EQ(obj(x), f) << name;
    }
  }
  const auto toy = make_objective("toy", 3, 0.0);
  EXPECT_EQ(toy(vec({0.3, 0.7, 0.0})), toy(vec({0.3, 0.7, 1.0})));
}

TEST(TestFunctions, FiniteOnTheCube) {
  Rng rng = make_stream(2, 0);
  for (int rep = 0; rep < 2000; ++rep) {
    const Eigen::VectorXd x = testing_support::random_point(6, rng);
    EXPECT_TRUE(std::isfinite(testfn::beach(x)));
    EXPECT_TRUE(std::isfinite(testfn::drum(x)));
    EXPECT_TRUE(std::isfinite(testfn::simba(x)));
    EXPECT_TRUE(std::isfinite(testfn::toy(x)));
  }
}

TEST(TestFunctions, RejectShortInputs) {
  EXPECT_THROW(testfn::toy(vec({0.5})), std::invalid_argument);
  EXPECT_THROW(testfn::beach(vec({0.1, 0.2, 0.3, 0.4, 0.5})), std::invalid_argument);
  EXPECT_THROW(make_objective("drum", 5, 0.0), std::invalid_argument);
  EXPECT_THROW(make_objective("nope", 6, 0.0), std::invalid_argument);
  const auto obj = make_objective("beach", 8, 0.0);
  EXPECT_THROW(obj(kProbeA), std::invalid_argument);
}

TEST(NoisyEval, NoiselessIsExact) {
  Rng rng = make_stream(3, 0);
  const auto obj = make_objective("drum", 6, 0.0);
  EXPECT_EQ(noisy_eval(obj, kProbeA, rng), obj(kProbeA));
}

TEST(NoisyEval, Moments) {
  Rng rng = make_stream(4, 0);
  const double tau2 = 0.05;
  const auto obj = make_objective("beach", 6, tau2);
  const int reps = 100000;
  std::vector<double> v(reps);
  double m = 0.0;
  for (auto& e : v) m += (e = noisy_eval(obj, kProbeA, rng));
  m /= reps;
  double ss = 0.0;
  for (double e : v) ss += (e - m) * (e - m);
  EXPECT_NEAR(m, obj(kProbeA), 3.0 * std::sqrt(tau2 / reps));
  EXPECT_NEAR(ss / (reps - 1) / tau2, 1.0, 0.02);
}

TEST(Smoother, SinglePointIsConstant) {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Constant(1, 2, 0.3);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 4.2);
  for (double h : {0.01, 0.5, 10.0}) {
    EXPECT_EQ(smoothed_value(X, y, h, vec({0.9, 0.1})), 4.2);
    EXPECT_EQ(smoothed_value(X, y, h, vec({0.3, 0.3})), 4.2);
  }
}

TEST(Smoother, NarrowBandwidthInterpolates) {
  Eigen::MatrixXd X(3, 1);
  X << 0.1, 0.5, 0.9;
  const Eigen::Vector3d y(1.0, -2.0, 5.0);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(smoothed_value(X, y, 1e-3, X.row(i).transpose()), y[i], 1e-12);
}

TEST(Smoother, HandComputedWeights) {
  Eigen::MatrixXd X(5, 2);
  X << 0.0, 0.0, 0.2, 0.1, 0.5, 0.5, 0.9, 0.3, 1.0, 1.0;
  Eigen::VectorXd y(5);
  y << 1.0, 3.0, -2.0, 0.5, 4.0;
  const double h = 0.4;
  const Eigen::Vector2d x(0.3, 0.2);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double d2 = std::pow(X(i, 0) - x[0], 2) + std::pow(X(i, 1) - x[1], 2);
    const double w = std::exp(-d2 / (h * h));
    num += w * y[i];
    den += w;
  }
  EXPECT_NEAR(smoothed_value(X, y, h, x), num / den, 1e-12);
}

TEST(Smoother, FarQueryStaysFinite) {
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 0.1;
  const Eigen::Vector2d y(1.0, 3.0);
  // raw weights underflow to zero here
  EXPECT_NEAR(smoothed_value(X, y, 1e-3, vec({1.0})), 3.0, 1e-12);
}

TEST(Smoother, OutputWithinResponseRange) {
  Rng rng = make_stream(5, 0);
  const Eigen::MatrixXd X = testing_support::random_inputs(30, 3, rng);
  Eigen::VectorXd y(30);
  for (auto& v : y) v = draw_normal(rng, 0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const double f = smoothed_value(X, y, draw_uniform(rng, 0.01, 1.0), testing_support::random_point(3, rng));
    EXPECT_GE(f, y.minCoeff());
    EXPECT_LE(f, y.maxCoeff());
  }
}

TEST(Smoother, RejectsBadInputs) {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, 1);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(smoothed_value(X, y, 0.0, vec({0.5})), std::invalid_argument);
  EXPECT_THROW(smoothed_value(X, y, 0.1, vec({0.5, 0.5})), std::invalid_argument);
}

namespace {

SmoothedDataset noisy_curve(std::uint64_t seed, std::size_t n = 120) {
  Rng rng = make_stream(seed, 7);
  SmoothedDataset d;
  d.X.resize(static_cast<Eigen::Index>(n), 1);
  d.y.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    d.X(i, 0) = draw_uniform(rng);
    d.y[i] = std::sin(2.0 * std::numbers::pi * d.X(i, 0)) + draw_normal(rng, 0.0, 0.3);
  }
  return d;
}

}  // namespace

TEST(CvBandwidth, SingleValueGrid) {
  EXPECT_EQ(cv_bandwidth(noisy_curve(1), 5, {0.3}), 0.3);
}

TEST(CvBandwidth, InteriorChoiceOnSmoothCurve) {
  const std::vector<double> grid{0.002, 0.01, 0.03, 0.06, 0.1, 0.2, 0.5, 2.0};
  int interior = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double h = cv_bandwidth(noisy_curve(seed), 5, grid, seed);
    if (h != grid.front() && h != grid.back()) ++interior;
  }
  EXPECT_GE(interior, 8);
}

TEST(CvBandwidth, DeterministicForSeed) {
  const auto d = noisy_curve(3);
  const std::vector<double> grid{0.01, 0.05, 0.1, 0.3};
  EXPECT_EQ(cv_bandwidth(d, 5, grid, 9), cv_bandwidth(d, 5, grid, 9));
}

TEST(CvBandwidth, RejectsBadArguments) {
  const auto d = noisy_curve(1, 4);
  EXPECT_THROW(cv_bandwidth(d, 1, {0.1}), std::invalid_argument);
  EXPECT_THROW(cv_bandwidth(d, 5, {0.1}), std::invalid_argument);
  EXPECT_THROW(cv_bandwidth(d, 2, {}), std::invalid_argument);
}

TEST(LoadDataset, HeaderedCommaSeparatedScaled) {
  const auto path = std::filesystem::temp_directory_path() / "solid_dataset_test.csv";
  {
    std::ofstream out(path);
    out << "a,b,y\n2,10,1.5\n4,10,2.5\n\n6,10,3.5\n";
  }
  const auto d = load_dataset(path.string(), 0.2);
  std::filesystem::remove(path);
  ASSERT_EQ(d.X.rows(), 3);
  ASSERT_EQ(d.X.cols(), 2);
  EXPECT_EQ(d.X.col(0), Eigen::Vector3d(0.0, 0.5, 1.0));
  EXPECT_EQ(d.X.col(1), Eigen::Vector3d::Zero());
  EXPECT_EQ(d.y, Eigen::Vector3d(1.5, 2.5, 3.5));
  EXPECT_EQ(d.h, 0.2);
}

TEST(LoadDataset, WhitespaceSeparatedWithoutHeader) {
  const auto path = std::filesystem::temp_directory_path() / "solid_dataset_test.txt";
  {
    std::ofstream out(path);
    out << "0 1\n1 2\n0.5   7\n";
  }
  const auto d = load_dataset(path.string(), 0.1);
  std::filesystem::remove(path);
  EXPECT_EQ(d.X.col(0), Eigen::Vector3d(0.0, 1.0, 0.5));
  EXPECT_EQ(d.y, Eigen::Vector3d(1.0, 2.0, 7.0));
}

TEST(LoadDataset, RejectsMalformedFiles) {
  const auto path = std::filesystem::temp_directory_path() / "solid_dataset_bad.csv";
  {
    std::ofstream out(path);
    out << "1,2,3\n4,5\n";
  }
  EXPECT_THROW(load_dataset(path.string(), 0.1), std::runtime_error);
  {
    std::ofstream out(path);
    out << "1,2\n3,x\n";
  }
  EXPECT_THROW(load_dataset(path.string(), 0.1), std::runtime_error);
  std::filesystem::remove(path);
  EXPECT_THROW(load_dataset("/nonexistent/file.csv", 0.1), std::runtime_error);
}

TEST(SmoothedObjective, WrapsDataset) {
  SmoothedDataset d;
  d.X = Eigen::MatrixXd(2, 1);
  d.X << 0.0, 1.0;
  d.y = Eigen::Vector2d(0.0, 2.0);
  d.h = 10.0;
  const auto obj = make_smoothed_objective(d, 0.0);
  EXPECT_EQ(obj.p0, 1u);
  EXPECT_NEAR(obj(vec({0.5})), 1.0, 1e-12);
}
