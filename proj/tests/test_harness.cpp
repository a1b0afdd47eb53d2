#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "plcert/errors.hpp"
#include "plcert/harness.hpp"

using namespace plcert;

TEST(Coverage, ThresholdFrozenValues) {
  EXPECT_NEAR(coverage_pass_threshold(0.05, 100), 0.884616515846890, 1e-14);
  EXPECT_NEAR(coverage_pass_threshold(0.05, 200), 0.903766894977733, 1e-14);
}

TEST(Coverage, SmallCampaignIsDeterministicAcrossParallelism) {
  CoverageConfig c{.spec = ProblemSpec(4, 0.05, 0.01, 0.2),
                   .learner = {.kind = LearnerKind::oracle, .oracle_epsilon = 0.01},
                   .dist = std::make_shared<const DataDistribution>(
                       DataDistribution::ring(4, 2, 20.0, 1.0))};
  c.total = 3000;
  c.trials = 6;
  c.risk_samples = 20000;
  c.seed = 5;
  const auto a = coverage_experiment(c);
  c.parallelism = 3;
  const auto b = coverage_experiment(c);
  ASSERT_EQ(a.details.size(), 6u);
  for (std::size_t i = 0; i < a.details.size(); ++i) {
    EXPECT_EQ(a.details[i].bound, b.details[i].bound);
    EXPECT_EQ(a.details[i].true_risk, b.details[i].true_risk);
  }
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Audit, OracleSatisfiesAssumptions) {
  AuditConfig c{.learner = {.kind = LearnerKind::oracle, .oracle_epsilon = 0.05},
                .dist = std::make_shared<const DataDistribution>(
                    DataDistribution::ring(3, 2, 20.0, 1.0)),
                .ratios = {0.0, 0.1},
                .size = 5000};
  const auto r = assumption_audit(c);
  ASSERT_EQ(r.cells.size(), 2u);
  EXPECT_TRUE(r.cells[0].skipped);
  EXPECT_FALSE(r.cells[1].skipped);
  EXPECT_TRUE(r.assumption1_holds);
  EXPECT_TRUE(r.pass);
  c.ratios = {};
  EXPECT_THROW(assumption_audit(c), PreconditionError);
}

TEST(Limit, ZeroStartIsIdentity) {
  const auto r = limit_curve(ProblemSpec(2, 0.05, 0.01, 0.2), 0.0, {1e4, 1e6, 1e8});
  EXPECT_TRUE(r.pass);
  for (double x : r.ratios) EXPECT_NEAR(x, 1.0, 1e-12);
}

TEST(Limit, ZeroEpsilonIsReportedNotPassed) {
  const auto r = limit_curve(ProblemSpec(2, 0.05, 0.0, 0.2), 0.1, {1e4, 1e6});
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.note.empty());
}

TEST(Rate, BelowThresholdIsNotAsserted) {
  const ProblemSpec spec(2, 0.05, 0.005, 0.2);
  const ConvergenceSpec conv(0.5, 0.01, 0.1);
  RateConfig c{.spec = spec, .conv = conv};
  c.total = 42680408 / 10;
  const auto r = rate_experiment(c);
  EXPECT_FALSE(r.asserted);
  EXPECT_TRUE(r.pass);
  c.total = 42680408;
  const auto s = rate_experiment(c);
  EXPECT_TRUE(s.asserted);
  EXPECT_TRUE(s.band_entered);
  EXPECT_TRUE(s.pass);
  EXPECT_LE(s.max_band_ratio, 0.5);
}

TEST(Output, TablesAndJson) {
  const auto r = limit_curve(ProblemSpec(2, 0.05, 0.01, 0.2), 0.1, {1e4, 1e6});
  std::ostringstream os;
  print_table(os, r);
  EXPECT_NE(os.str().find("1e+06"), std::string::npos);
  EXPECT_TRUE(to_json(r).contains("ratios"));
}

TEST(Rate, InfeasibleStartIsReportedWithoutAssertion) {
  RateConfig c{.spec = ProblemSpec(2, 0.05, 0.005, 0.2), .conv = ConvergenceSpec(0.5, 0.01, 0.1)};
  c.total = 1000;
  const auto r = rate_experiment(c);
  EXPECT_FALSE(r.asserted);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.bound_trajectory.size(), 1u);
  EXPECT_NE(r.note.find("feasibility"), std::string::npos);
}

TEST(Audit, SaturatedMislabelRatesDoNotCollapseTolerance) {
  // A centroid learner ignores a few mislabeled points, so both mislabel error
  // rates sit at or next to 1.
  AuditConfig c{.learner = {.kind = LearnerKind::nearest_centroid},
                .dist = std::make_shared<const DataDistribution>(
                    DataDistribution::ring(4, 2, 6.0, 1.0)),
                .ratios = {0.05, 0.1},
                .size = 10000,
                .seed = 77};
  const auto r = assumption_audit(c);
  EXPECT_DOUBLE_EQ(r.cells[0].mislabeled_train.rate(), 1.0);
  EXPECT_TRUE(r.assumption1_holds);
}
