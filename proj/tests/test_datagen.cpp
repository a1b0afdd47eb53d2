#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>

#include "plcert/datagen.hpp"
#include "plcert/errors.hpp"
#include "plcert/learners.hpp"

using namespace plcert;

TEST(Rng, DeriveSeedSeparatesStreams) {
  EXPECT_NE(derive_seed(1, stream::kTest), derive_seed(1, stream::kUnlabeled));
  EXPECT_NE(derive_seed(1, stream::kTrial, 0), derive_seed(1, stream::kTrial, 1));
  EXPECT_NE(derive_seed(1, stream::kTrial, 0), derive_seed(2, stream::kTrial, 0));
  EXPECT_EQ(derive_seed(9, stream::kAudit, 3), derive_seed(9, stream::kAudit, 3));
}

TEST(Distribution, Validation) {
  EXPECT_THROW(DataDistribution({{0.0}}, {1.0}, {}), PreconditionError);  // k < 2
  EXPECT_THROW(DataDistribution({{0.0}, {1.0}}, {1.0}, {0.3, 0.3}), PreconditionError);
  EXPECT_THROW(DataDistribution({{0.0}, {1.0}}, {0.0}, {}), PreconditionError);
  EXPECT_THROW(DataDistribution({{0.0}, {1.0, 2.0}}, {1.0}, {}), PreconditionError);
  EXPECT_NO_THROW(DataDistribution({{0.0}, {0.0}}, {1.0}, {}));
}

TEST(Distribution, RingBayesClassIsNearestCenter) {
  const auto d = DataDistribution::ring(4, 2, 10.0, 1.0);
  ASSERT_EQ(d.k(), 4);
  for (int c = 0; c < 4; ++c) EXPECT_EQ(d.bayes_class(d.centers()[c]), c);
}

TEST(Distribution, IdenticalCentersTieToLowestIndex) {
  const DataDistribution d({{0.0, 0.0}, {0.0, 0.0}}, {1.0}, {});
  const std::vector<double> x{3.0, -1.0};
  EXPECT_EQ(d.bayes_class(x), 0);
  const auto r = estimate_bayes_risk(d, 20000, 3);
  EXPECT_NEAR(r.value, 0.5, 3 * r.std_error + 1e-9);
}

TEST(Distribution, WellSeparatedRingHasTinyBayesRisk) {
  const auto d = DataDistribution::ring(4, 2, 20.0, 1.0);
  EXPECT_LT(estimate_bayes_risk(d, 20000, 5).value, 1e-3);
  EXPECT_THROW(estimate_bayes_risk(d, 100, 5), PreconditionError);
}

TEST(Sample, DeterministicAndTagged) {
  const auto d = DataDistribution::ring(3, 2, 8.0, 1.0);
  const auto a = sample(d, 500, 42);
  const auto b = sample(d, 500, 42);
  ASSERT_EQ(a.size(), 500u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.examples[i].features, b.examples[i].features);
    EXPECT_EQ(a.examples[i].label, a.examples[i].true_label);
    EXPECT_EQ(a.examples[i].provenance, Provenance::clean);
  }
  EXPECT_EQ(a.counts().clean, 500u);
  EXPECT_THROW(sample(d, 0, 1), PreconditionError);
}

TEST(Sample, PriorsAreRespected) {
  const DataDistribution d({{0.0}, {10.0}}, {1.0}, {0.8, 0.2});
  const auto s = sample(d, 20000, 1);
  const auto zeros = std::count_if(s.examples.begin(), s.examples.end(),
                                   [](const auto& e) { return e.true_label == 0; });
  EXPECT_NEAR(static_cast<double>(zeros) / 20000.0, 0.8, 3 * std::sqrt(0.16 / 20000));
}

TEST(Corruption, RandomizeIsUniformOverAllClasses) {
  const auto d = DataDistribution::ring(4, 2, 20.0, 1.0);
  const auto s = randomize_labels(sample(d, 40000, 1), 40000, 4, 2);
  EXPECT_EQ(s.counts().randomized, 40000u);
  const auto agree = std::count_if(s.examples.begin(), s.examples.end(),
                                   [](const auto& e) { return e.label == e.true_label; });
  EXPECT_NEAR(static_cast<double>(agree) / 40000.0, 0.25, 3 * std::sqrt(0.1875 / 40000));
}

TEST(Corruption, MislabelNeverKeepsTrueLabel) {
  const auto d = DataDistribution::ring(3, 2, 20.0, 1.0);
  const auto s = mislabel(sample(d, 3000, 1), 1000, 3, 2);
  const auto c = s.counts();
  EXPECT_EQ(c.mislabeled, 1000u);
  EXPECT_EQ(c.clean, 2000u);
  for (const auto& e : s.examples) {
    if (e.provenance == Provenance::mislabeled) EXPECT_NE(e.label, e.true_label);
    else EXPECT_EQ(e.label, e.true_label);
  }
  EXPECT_THROW(mislabel(sample(d, 10, 1), 11, 3, 2), PreconditionError);
}

TEST(Corruption, PseudoLabelsTagAgreement) {
  const auto d = std::make_shared<const DataDistribution>(DataDistribution::ring(4, 2, 20.0, 1.0));
  const Model f(OracleModel{d, 0.2, 5});
  const auto s = apply_pseudo_labels(sample(d, 5000, 1), f);
  const auto c = s.counts();
  EXPECT_EQ(c.pseudo_correct + c.pseudo_wrong, 5000u);
  for (const auto& e : s.examples) {
    EXPECT_EQ(e.provenance == Provenance::pseudo_correct, e.label == e.true_label);
  }
  EXPECT_NEAR(static_cast<double>(c.pseudo_wrong) / 5000.0, 0.2, 3 * std::sqrt(0.16 / 5000) + 1e-3);
}

TEST(DatasetIo, RoundTripIsExact) {
  const auto d = DataDistribution::ring(3, 2, 8.0, 1.0);
  const auto s = randomize_labels(sample(d, 50, 42), 10, 3, 7);
  std::stringstream buf;
  write_dataset(buf, s);
  const auto back = read_dataset(buf);
  ASSERT_EQ(back.size(), s.size());
  EXPECT_EQ(back.k, 3);
  EXPECT_EQ(back.origin_seed, 42u);
  EXPECT_EQ(back.distribution_id, s.distribution_id);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(back.examples[i].features, s.examples[i].features);
    EXPECT_EQ(back.examples[i].label, s.examples[i].label);
    EXPECT_EQ(back.examples[i].provenance, s.examples[i].provenance);
  }
}

TEST(DatasetIo, RejectsMalformedInput) {
  std::stringstream bad("not a dataset\n");
  EXPECT_ANY_THROW(read_dataset(bad));
}
