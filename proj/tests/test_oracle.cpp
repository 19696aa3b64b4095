#include <gtest/gtest.h>

#include <random>
#include <stdexcept>

#include "apeloss/oracle.hpp"
#include "test_helpers.hpp"

namespace apeloss {
namespace {

using L = Label;

TEST(FiniteDifference, IgnoredCoordinateIsZero) {
  const ScoreSet s({0.5, 0.5, 0.7}, {L::Positive, L::Negative, L::Ignore});
  const auto g = oracle::finite_difference_gradient(s, LossConfig{});
  EXPECT_EQ(g[2], 0.0);
}

TEST(FiniteDifference, EqualScores) {
  const ScoreSet s({0.5, 0.5}, {L::Positive, L::Negative});
  const auto g = oracle::finite_difference_gradient(s, LossConfig{});
  EXPECT_NEAR(g[0], -1.0 / 3.0, 1e-6);
  EXPECT_NEAR(g[1], 1.0 / 3.0, 1e-6);
}

TEST(FiniteDifference, EpsilonRange) {
  const ScoreSet s({0.5, 0.5}, {L::Positive, L::Negative});
  EXPECT_THROW(oracle::finite_difference_gradient(s, LossConfig{}, 1.0),
               std::invalid_argument);
  EXPECT_THROW(oracle::finite_difference_gradient(s, LossConfig{}, 1e-10),
               std::invalid_argument);
  EXPECT_NO_THROW(oracle::finite_difference_gradient(s, LossConfig{}, 1e-9));
  EXPECT_NO_THROW(oracle::finite_difference_gradient(s, LossConfig{}, 1e-3));
}

TEST(GradCheck, RandomThirtyElementSet) {
  std::mt19937_64 rng(5);
  for (int attempt = 0;; ++attempt) {
    ASSERT_LT(attempt, 1000);
    const ScoreSet s = testing::random_set(rng, 30);
    LossConfig c;
    if (!testing::non_degenerate(s, c)) continue;
    const oracle::GradCheckReport r = oracle::check_gradient(s, c);
    EXPECT_TRUE(r.passed) << "max_rel_error=" << r.max_rel_error << " at "
                          << r.worst_index;
    EXPECT_LT(r.max_rel_error, 1e-5);
    EXPECT_LT(r.worst_index, s.size());
    EXPECT_EQ(r.epsilon, oracle::kDefaultEpsilon);
    break;
  }
}

TEST(GradCheck, RejectsNonCEDistance) {
  const ScoreSet s({0.5, 0.5}, {L::Positive, L::Negative});
  LossConfig c;
  c.distance = DistanceSpec::sigmoid(8.0);
  EXPECT_THROW(oracle::check_gradient(s, c), std::invalid_argument);
}

// A deliberately wrong analytic gradient must be caught: the sigmoid
// error-driven update is not the derivative of the sigmoid loss.
TEST(GradCheck, DetectsMismatch) {
  const ScoreSet s({0.5, 0.45, 0.6}, {L::Positive, L::Negative, L::Negative});
  LossConfig c;
  c.distance = DistanceSpec::sigmoid(8.0);
  const auto fd = oracle::finite_difference_gradient(s, c);
  const auto ed = ape_loss_gradient_error_driven(s, c).gradient;
  EXPECT_GT(testing::max_rel_diff(fd, ed), 1e-2);
}

TEST(BruteForce, MatchesLossExamples) {
  const ScoreSet s({0.5, 0.5}, {L::Positive, L::Negative});
  LossConfig c;
  const LossResult bf = oracle::brute_force_loss(s, c);
  EXPECT_NEAR(bf.total_loss, 0.0577622650466621091, 1e-15);
  EXPECT_NEAR(bf.gradient[0], -1.0 / 3.0, 1e-15);
  EXPECT_NEAR(bf.gradient[1], 1.0 / 3.0, 1e-15);
}

TEST(BruteForce, EmptyNegatives) {
  const ScoreSet s({0.5, 0.2}, {L::Positive, L::Ignore});
  EXPECT_EQ(oracle::brute_force_loss(s, LossConfig{}).total_loss, 0.0);
}

TEST(BruteForce, NoPairClearsMargin) {
  const ScoreSet s({0.5, 0.6, 0.7, 0.55},
                   {L::Positive, L::Negative, L::Negative, L::Positive});
  LossConfig c;
  c.filter.mode = FilterMode::ValidNegCount;
  c.filter.threshold = 0.5;
  const LossResult bf = oracle::brute_force_loss(s, c);
  EXPECT_EQ(bf.total_loss, 0.0);
  for (const RankStats& st : bf.stats) {
    EXPECT_FALSE(st.balance_constant.has_value());
  }
}

TEST(BruteForce, SizeGuard) {
  std::vector<double> scores(2001, 0.5);
  std::vector<Label> labels(2001, L::Negative);
  labels[0] = L::Positive;
  const ScoreSet s(scores, labels);
  EXPECT_THROW(oracle::brute_force_loss(s, LossConfig{}), std::length_error);
}

TEST(BruteForce, AgreesWithMainPathAcrossGrid) {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 200; ++trial) {
    const ScoreSet s =
        testing::random_set(rng, testing::uniform_int(rng, 2, 60));
    LossConfig c = testing::random_ce_config(rng);
    const int kind = static_cast<int>(testing::uniform_int(rng, 0, 2));
    if (kind == 1) c.distance = DistanceSpec::sigmoid(c.distance.parameter);
    if (kind == 2) c.distance = DistanceSpec::step(testing::uniform(rng, 0.1, 1.0));

    const LossResult bf = oracle::brute_force_loss(s, c);
    const LossResult main = c.distance.has_lambda()
                                ? ape_loss_gradient_error_driven(s, c)
                                : ape_loss_forward(s, c);
    EXPECT_TRUE(testing::rel_close(bf.total_loss, main.total_loss, 1e-12));
    EXPECT_EQ(bf.truncated, main.truncated);
    EXPECT_LE(testing::max_rel_diff(bf.gradient, main.gradient), 1e-12);
    ASSERT_EQ(bf.stats.size(), main.stats.size());
    for (std::size_t k = 0; k < bf.stats.size(); ++k) {
      EXPECT_EQ(bf.stats[k].active_pairs, main.stats[k].active_pairs);
      EXPECT_EQ(bf.stats[k].n_neg, main.stats[k].n_neg);
      EXPECT_TRUE(testing::rel_close(bf.per_anchor_loss.at(bf.stats[k].anchor_index),
                                     main.per_anchor_loss.at(bf.stats[k].anchor_index),
                                     1e-12));
    }
  }
}

}  // namespace
}  // namespace apeloss
