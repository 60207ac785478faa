#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "mrsim/classifier.hpp"
#include "oracles.hpp"

namespace mrsim {
namespace {

FeatureVector fv(std::vector<int> levels) { return FeatureVector{std::move(levels)}; }

TEST(Classifier, RejectsBadParameters) {
  EXPECT_THROW(NaiveBayesClassifier(8, 10, 0.0), ConfigError);
  EXPECT_THROW(NaiveBayesClassifier(8, 10, -1.0), ConfigError);
  EXPECT_THROW(NaiveBayesClassifier(0, 10, 1.0), ConfigError);
  EXPECT_THROW(NaiveBayesClassifier(8, 1, 1.0), ConfigError);
  EXPECT_NO_THROW(NaiveBayesClassifier(1, 10, 1.0));
}

TEST(Classifier, FreshIsExactlyHalf) {
  NaiveBayesClassifier c(8, 10, 1.0);
  EXPECT_EQ(c.posterior(fv({1, 2, 3, 4, 5, 6, 7, 8})).p_good, 0.5);
  EXPECT_EQ(c.classify(fv({10, 10, 10, 10, 10, 10, 10, 10})), Label::good);
}

TEST(Classifier, ObserveCounts) {
  NaiveBayesClassifier c(4, 10, 1.0);
  const auto f = fv({3, 1, 10, 7});
  c.observe(f, Label::good);
  EXPECT_EQ(c.class_count(Label::good), 1u);
  EXPECT_EQ(c.class_count(Label::bad), 0u);
  c.observe(f, Label::good);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(c.cond_count(Label::good, j, f.levels[j]), 2u);
  EXPECT_TRUE(c.marginals_consistent());
}

TEST(Classifier, ShapeErrors) {
  NaiveBayesClassifier c(4, 10, 1.0);
  EXPECT_THROW(c.observe(fv({1, 2, 11, 4}), Label::good), DomainError);
  EXPECT_THROW(c.observe(fv({1, 2, 0, 4}), Label::good), DomainError);
  EXPECT_THROW(c.observe(fv({1, 2, 3}), Label::good), DomainError);
  EXPECT_THROW(c.posterior(fv({1, 2, 3, 4, 5})), DomainError);
  EXPECT_EQ(c.total(), 0u);
}

TEST(Classifier, OneShotPosterior) {
  NaiveBayesClassifier c(4, 10, 1.0);
  const auto f = fv({2, 4, 6, 8});
  c.observe(f, Label::good);
  // (2/3)(2/11)^4 against (1/3)(1/10)^4
  const double good = (2.0 / 3.0) * std::pow(2.0 / 11.0, 4);
  const double bad = (1.0 / 3.0) * std::pow(1.0 / 10.0, 4);
  const double expected = good / (good + bad);
  EXPECT_NEAR(expected, 0.9563, 1e-4);
  const auto p = c.posterior(f);
  EXPECT_NEAR(p.p_good, expected, 1e-12);
  EXPECT_NEAR(p.log_score_good, std::log(good), 1e-12);
  EXPECT_NEAR(p.log_score_bad, std::log(bad), 1e-12);
}

TEST(Classifier, BadObservationsFlipClass) {
  NaiveBayesClassifier c(8, 10, 1.0);
  const auto f = fv({9, 9, 8, 8, 2, 3, 5, 5});
  c.observe(f, Label::bad);
  EXPECT_LT(c.posterior(f).p_good, 0.5);
  for (int i = 0; i < 20; ++i) c.observe(f, Label::bad);
  EXPECT_EQ(c.classify(f), Label::bad);
  EXPECT_EQ(c.classify(f) == Label::good, c.posterior(f).p_good >= 0.5);
}

TEST(Classifier, MatchesDirectOracleOnRandomTables) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 8)(rng);
    const double alpha = std::uniform_real_distribution<double>(0.1, 3.0)(rng);
    NaiveBayesClassifier c(static_cast<std::size_t>(n), 10, alpha);
    std::vector<oracle::Observation> obs;
    const int count = std::uniform_int_distribution<int>(0, 200)(rng);
    auto level = [&] { return std::uniform_int_distribution<int>(1, 10)(rng); };
    for (int k = 0; k < count; ++k) {
      std::vector<int> l(static_cast<std::size_t>(n));
      for (auto& x : l) x = level();
      const Label lab = rng() % 3 == 0 ? Label::bad : Label::good;
      obs.push_back({l, lab});
      c.observe(fv(l), lab);
    }
    std::vector<int> q(static_cast<std::size_t>(n));
    for (auto& x : q) x = level();
    const auto p = c.posterior(fv(q));
    EXPECT_NEAR(p.p_good, static_cast<double>(oracle::p_good(obs, q, 10, alpha)), 1e-9);
    EXPECT_NEAR(p.p_good + p.p_bad(), 1.0, 1e-12);
    EXPECT_TRUE(c.marginals_consistent());
  }
}

TEST(Classifier, TrainingOrderDoesNotMatter) {
  std::mt19937_64 rng(5);
  std::vector<std::pair<FeatureVector, Label>> obs;
  for (int k = 0; k < 300; ++k) {
    std::vector<int> l(8);
    for (auto& x : l) x = std::uniform_int_distribution<int>(1, 10)(rng);
    obs.push_back({fv(l), rng() % 2 ? Label::good : Label::bad});
  }
  NaiveBayesClassifier a, b;
  for (const auto& [f, l] : obs) a.observe(f, l);
  std::shuffle(obs.begin(), obs.end(), rng);
  for (const auto& [f, l] : obs) b.observe(f, l);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.posterior(obs[0].first).p_good, b.posterior(obs[0].first).p_good);
}

TEST(Classifier, GoodFeedbackNeverLowersPosterior) {
  std::mt19937_64 rng(77);
  NaiveBayesClassifier c;
  for (int k = 0; k < 500; ++k) {
    std::vector<int> l(8);
    for (auto& x : l) x = std::uniform_int_distribution<int>(1, 10)(rng);
    const auto f = fv(l);
    if (rng() % 2) {
      const double before = c.posterior(f).p_good;
      c.observe(f, Label::good);
      EXPECT_GE(c.posterior(f).p_good, before);
    } else {
      c.observe(f, Label::bad);
    }
  }
}

TEST(Classifier, LoadCountsValidatesMarginals) {
  NaiveBayesClassifier c(2, 3, 1.0);
  c.observe(fv({1, 3}), Label::good);
  c.observe(fv({2, 2}), Label::bad);
  NaiveBayesClassifier d(2, 3, 1.0);
  d.load_counts(1, 1, c.cond_table(Label::good), c.cond_table(Label::bad));
  EXPECT_EQ(c, d);
  EXPECT_THROW(d.load_counts(2, 1, c.cond_table(Label::good), c.cond_table(Label::bad)),
               ConfigError);
  EXPECT_THROW(d.load_counts(1, 1, {1, 0}, c.cond_table(Label::bad)), ConfigError);
}

}  // namespace
}  // namespace mrsim
