#include <vector>

#include <gtest/gtest.h>

#include "solid/loop.hpp"

using namespace solid;

namespace {

RunConfig small_config(Mode mode, std::uint64_t seed = 1) {
  RunConfig cfg;
  cfg.n0 = 20;
  cfg.steps = 3;
  cfg.chain_m = 120;
  cfg.subsample_m = 15;
  cfg.q = 20;
  cfg.candidates = 30;
  cfg.design_restarts = 5;
  cfg.mode = mode;
  cfg.seed = seed;
  return cfg;
}

void expect_same_trace(const RunTrace& a, const RunTrace& b) {
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    const auto& s = a.steps[i];
    const auto& t = b.steps[i];
    EXPECT_EQ(s.chi_hat, t.chi_hat) << "step " << i;
    EXPECT_EQ(s.f_at_chi, t.f_at_chi);
    EXPECT_EQ(s.global_keep, t.global_keep);
    EXPECT_EQ(s.local_active, t.local_active);
    EXPECT_EQ(s.next_point.has_value(), t.next_point.has_value());
    if (s.next_point && t.next_point) EXPECT_EQ(*s.next_point, *t.next_point);
    EXPECT_EQ(s.observed, t.observed);
  }
}

}  // namespace

TEST(Improvement, Arithmetic) {
  RunTrace t;
  for (double f : {1.0, 2.0, 3.0, 4.0}) {
    StepRecord r;
    r.f_at_chi = f;
    t.steps.push_back(r);
  }
  EXPECT_EQ(improvement(t), (std::vector<double>{1.0, 2.0, 3.0}));
  EXPECT_DOUBLE_EQ(overall_improvement(t), 2.0);
}

TEST(Improvement, ConstantTraceAndEmptyBudget) {
  RunTrace t;
  for (int i = 0; i < 4; ++i) {
    StepRecord r;
    r.f_at_chi = 5.5;
    t.steps.push_back(r);
  }
  for (double v : improvement(t)) EXPECT_EQ(v, 0.0);
  t.steps.resize(1);
  EXPECT_TRUE(improvement(t).empty());
  EXPECT_EQ(overall_improvement(t), 0.0);
}

TEST(RunConfig, Validation) {
  RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate(6));
  cfg.mode = Mode::oracle;
  EXPECT_THROW(cfg.validate(6), std::invalid_argument);
  cfg.oracle_active = {0, 6};
  EXPECT_THROW(cfg.validate(6), std::invalid_argument);
  cfg.oracle_active = {0, 5};
  EXPECT_NO_THROW(cfg.validate(6));
  cfg.mode = Mode::none;
  EXPECT_THROW(cfg.validate(6), std::invalid_argument);
  RunConfig bad;
  bad.subsample_m = bad.chain_m + 1;
  EXPECT_THROW(bad.validate(6), std::invalid_argument);
  EXPECT_THROW(parse_mode("SOLID"), std::invalid_argument);
  EXPECT_EQ(parse_mode(to_string(Mode::gvs)), Mode::gvs);
}

TEST(Run, ZeroBudgetGivesInitialEstimateOnly) {
  const auto obj = make_objective("beach", 8, 0.05);
  auto cfg = small_config(Mode::solid);
  cfg.steps = 0;
  const auto trace = run(obj, cfg);
  ASSERT_EQ(trace.steps.size(), 1u);
  EXPECT_FALSE(trace.steps[0].next_point);
  EXPECT_FALSE(trace.steps[0].observed);
  EXPECT_EQ(trace.steps[0].chi_hat.size(), 8);
}

TEST(Run, SolidTraceInOriginalCoordinates) {
  const auto obj = make_objective("beach", 8, 0.05);
  auto cfg = small_config(Mode::solid);
  cfg.g = 0.3;  // encourages removals
  const auto trace = run(obj, cfg);
  ASSERT_EQ(trace.steps.size(), cfg.steps + 1);
  std::size_t prev_keep = 8;
  for (const auto& s : trace.steps) {
    EXPECT_EQ(s.chi_hat.size(), 8);
    EXPECT_GE(s.chi_hat.minCoeff(), 0.0);
    EXPECT_LE(s.chi_hat.maxCoeff(), 1.0);
    EXPECT_DOUBLE_EQ(s.f_at_chi, obj(s.chi_hat));
    EXPECT_LE(s.global_keep.size(), prev_keep);
    prev_keep = s.global_keep.size();
    for (auto k : s.local_active) EXPECT_TRUE(contains_index(s.global_keep, k));
    // unmodelled coordinates of chi take the stored fill-in values
    for (Eigen::Index k = 0; k < 8; ++k)
      if (!contains_index(s.global_keep, static_cast<std::size_t>(k))) EXPECT_EQ(s.chi_hat[k], s.fill_in[k]);
    if (s.next_point) {
      EXPECT_EQ(s.next_point->size(), 8);
      EXPECT_GE(s.next_point->minCoeff(), 0.0);
      EXPECT_LE(s.next_point->maxCoeff(), 1.0);
      ASSERT_TRUE(s.chosen_set);
    }
  }
  EXPECT_FALSE(trace.steps.back().next_point);
}

TEST(Run, KeepSetNonIncreasingAcrossSeeds) {
  const auto obj = make_objective("drum", 8, 0.05);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto cfg = small_config(Mode::gvs, seed);
    cfg.g = 0.4;
    try {
      const auto trace = run(obj, cfg);
      for (std::size_t i = 1; i < trace.steps.size(); ++i) {
        const auto& before = trace.steps[i - 1].global_keep;
        for (auto k : trace.steps[i].global_keep) EXPECT_TRUE(contains_index(before, k));
      }
    } catch (const RunAborted& e) {
      SUCCEED() << "seed " << seed << " aborted: " << e.what();
    }
  }
}

TEST(Run, OracleUsesOnlyListedColumns) {
  const auto obj = make_objective("beach", 10, 0.05);
  auto cfg = small_config(Mode::oracle);
  cfg.oracle_active = {0, 1, 2, 3, 4, 5};
  const auto trace = run(obj, cfg);
  for (const auto& s : trace.steps) {
    EXPECT_EQ(s.global_keep.size(), 6u);
    EXPECT_EQ(s.local_active.size(), 6u);
    for (Eigen::Index k = 6; k < 10; ++k) EXPECT_EQ(s.chi_hat[k], cfg.oracle_fill);
  }
}

TEST(Run, NoneKeepsEveryColumn) {
  const auto obj = make_objective("beach", 15, 0.05);
  auto cfg = small_config(Mode::none);
  cfg.steps = 2;
  const auto trace = run(obj, cfg);
  for (const auto& s : trace.steps) {
    EXPECT_EQ(s.global_keep.size(), 15u);
    EXPECT_EQ(s.local_active.size(), 15u);
    EXPECT_EQ(s.refits, 0u);
  }
}

TEST(Run, GvsAndSolidShareStepZero) {
  const auto obj = make_objective("simba", 8, 0.05);
  const auto a = run(obj, small_config(Mode::solid, 4));
  const auto b = run(obj, small_config(Mode::gvs, 4));
  EXPECT_EQ(a.steps[0].chi_hat, b.steps[0].chi_hat);
  EXPECT_EQ(a.steps[0].f_at_chi, b.steps[0].f_at_chi);
  EXPECT_EQ(a.steps[0].global_keep, b.steps[0].global_keep);
}

TEST(Run, OracleWithAllColumnsEqualsNone) {
  const auto obj = make_objective("drum", 7, 0.05);
  auto oracle = small_config(Mode::oracle, 2);
  oracle.oracle_active = {0, 1, 2, 3, 4, 5, 6};
  const auto a = run(obj, oracle);
  const auto b = run(obj, small_config(Mode::none, 2));
  expect_same_trace(a, b);
  EXPECT_EQ(overall_improvement(a), overall_improvement(b));
}

TEST(Run, BitReproducible) {
  const auto obj = make_objective("beach", 8, 0.05);
  expect_same_trace(run(obj, small_config(Mode::solid, 9)), run(obj, small_config(Mode::solid, 9)));
}

TEST(Run, BaselineRejectsSolidMode) {
  const auto obj = make_objective("beach", 8, 0.05);
  EXPECT_THROW(run_baseline(obj, small_config(Mode::solid)), std::invalid_argument);
}

TEST(Run, AbortCarriesPartialTrace) {
  // A pure-noise objective with a demanding threshold empties the model.
  Objective flat;
  flat.name = "flat";
  flat.p0 = 3;
  flat.eval = [](const Eigen::VectorXd&) { return 0.0; };
  flat.noise_var = 1.0;
  auto cfg = small_config(Mode::gvs);
  cfg.g = 0.95;
  try {
    run(flat, cfg);
    FAIL() << "expected RunAborted";
  } catch (const RunAborted& e) {
    EXPECT_EQ(e.trace.objective, "flat");
    EXPECT_LE(e.trace.steps.size(), cfg.steps);
  }
}
