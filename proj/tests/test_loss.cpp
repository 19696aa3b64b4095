#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "apeloss/loss.hpp"
#include "test_helpers.hpp"

namespace apeloss {
namespace {

using L = Label;

constexpr double kLn2Over8 = 0.0866433975699931636771540151823;

ScoreSet equal_pair() { return ScoreSet({0.5, 0.5}, {L::Positive, L::Negative}); }

TEST(Forward, NoNegatives) {
  const ScoreSet s({0.3, 0.8, 0.1}, {L::Positive, L::Positive, L::Ignore});
  const LossResult r = ape_loss_gradient_error_driven(s, LossConfig{});
  EXPECT_EQ(r.total_loss, 0.0);
  EXPECT_FALSE(r.truncated);
  for (const double g : r.gradient) EXPECT_EQ(g, 0.0);
}

TEST(Forward, NoPositivesIsFlaggedNotAnError) {
  const ScoreSet s({0.3, 0.8}, {L::Negative, L::Ignore});
  const LossResult r = ape_loss_forward(s, LossConfig{});
  EXPECT_TRUE(r.no_anchor);
  EXPECT_EQ(r.total_loss, 0.0);
  EXPECT_TRUE(r.per_anchor_loss.empty());
}

TEST(Forward, EqualScoresCE) {
  const LossResult r = ape_loss_forward(equal_pair(), LossConfig{});
  EXPECT_NEAR(r.total_loss, kLn2Over8 / 1.5, 1e-15);
  EXPECT_NEAR(r.per_anchor_loss.at(0), 0.0577622650466621091, 1e-15);
  ASSERT_EQ(r.stats.size(), 1u);
  EXPECT_EQ(r.stats[0].balance_constant, 1.5);
  EXPECT_EQ(r.stats[0].active_pairs, 1u);
  EXPECT_FALSE(r.has_gradient());
}

TEST(Forward, EqualScoresSigmoid) {
  LossConfig c;
  c.distance = DistanceSpec::sigmoid(8.0);
  const LossResult r = ape_loss_forward(equal_pair(), c);
  EXPECT_NEAR(r.total_loss, 1.0 / 3.0, 1e-15);
}

TEST(Forward, StepDistanceHasNoErrorDrivenForm) {
  LossConfig c;
  c.distance = DistanceSpec::step(0.5);
  EXPECT_NO_THROW(ape_loss_forward(equal_pair(), c));
  EXPECT_THROW(ape_loss_gradient_error_driven(equal_pair(), c),
               std::invalid_argument);
}

TEST(Forward, ReductionSumVersusMean) {
  const ScoreSet s({0.5, 0.7, 0.6}, {L::Positive, L::Positive, L::Negative});
  LossConfig c;
  c.reduction = Reduction::Sum;
  const LossResult sum = ape_loss_forward(s, c);
  c.reduction = Reduction::MeanOverPositives;
  const LossResult mean = ape_loss_forward(s, c);
  EXPECT_NEAR(sum.total_loss, 2.0 * mean.total_loss, 1e-15);
  EXPECT_NEAR(sum.total_loss,
              sum.per_anchor_loss.at(0) + sum.per_anchor_loss.at(1), 1e-15);
}

TEST(Forward, ValidNegCountSkipsAnchorsWithoutHardNegatives) {
  // u=0 has one hard negative (0.9 - 0.3 > 0.25); u=1 has none.
  const ScoreSet s({0.3, 0.95, 0.9, 0.4},
                   {L::Positive, L::Positive, L::Negative, L::Negative});
  LossConfig c;
  c.filter.mode = FilterMode::ValidNegCount;
  const LossResult r = ape_loss_gradient_error_driven(s, c);
  EXPECT_EQ(r.stats[0].n_neg, 1u);
  EXPECT_EQ(r.stats[0].active_pairs, 1u);
  EXPECT_FALSE(r.stats[1].balance_constant.has_value());
  EXPECT_EQ(r.per_anchor_loss.at(1), 0.0);
  EXPECT_EQ(r.gradient[1], 0.0);
  EXPECT_NEAR(r.per_anchor_loss.at(0), ce_distance(0.6, 8.0), 1e-15);
  // Easy negative at index 3 is filtered out of the numerator too.
  EXPECT_EQ(r.gradient[3], 0.0);

  c.filter.filter_numerator = false;
  const LossResult d = ape_loss_gradient_error_driven(s, c);
  EXPECT_EQ(d.stats[0].active_pairs, 2u);
  EXPECT_NEAR(d.per_anchor_loss.at(0),
              ce_distance(0.6, 8.0) + ce_distance(0.1, 8.0), 1e-15);
  EXPECT_GT(d.gradient[3], 0.0);
}

TEST(Forward, ValidNegCountNoPairClearsMargin) {
  const ScoreSet s({0.5, 0.6, 0.7}, {L::Positive, L::Negative, L::Negative});
  LossConfig c;
  c.filter.mode = FilterMode::ValidNegCount;
  c.filter.threshold = 0.5;
  const LossResult r = ape_loss_gradient_error_driven(s, c);
  EXPECT_EQ(r.total_loss, 0.0);
  for (const double g : r.gradient) EXPECT_EQ(g, 0.0);
}

TEST(Gradient, EqualScores) {
  LossConfig c;
  const LossResult ed = ape_loss_gradient_error_driven(equal_pair(), c);
  c.gradient_form = GradientForm::AutodiffCE;
  const LossResult ad = ape_loss_gradient_autodiff_ce(equal_pair(), c);
  for (const LossResult* r : {&ed, &ad}) {
    ASSERT_EQ(r->gradient.size(), 2u);
    EXPECT_NEAR(r->gradient[0], -1.0 / 3.0, 1e-15);
    EXPECT_NEAR(r->gradient[1], 1.0 / 3.0, 1e-15);
    EXPECT_EQ(r->gradient[0] + r->gradient[1], 0.0);
  }
}

TEST(Gradient, SaturatedPair) {
  const ScoreSet s({10.0, 0.0}, {L::Positive, L::Negative});
  const LossResult r = ape_loss_gradient_error_driven(s, LossConfig{});
  EXPECT_LT(std::abs(r.gradient[0]), 1e-30);
  EXPECT_LT(std::abs(r.gradient[1]), 1e-30);
  EXPECT_EQ(r.gradient[0] + r.gradient[1], 0.0);
}

TEST(Gradient, AutodiffRequiresCE) {
  LossConfig c;
  c.distance = DistanceSpec::sigmoid(8.0);
  EXPECT_THROW(ape_loss_gradient_autodiff_ce(equal_pair(), c),
               std::invalid_argument);
}

// Changing only what feeds the balance constant (rank_delta) rescales the
// loss and the gradient by the same frozen factor.
TEST(Gradient, BalanceConstantIsDetached) {
  const ScoreSet s({0.5, 0.55, 0.45}, {L::Positive, L::Positive, L::Negative});
  LossConfig a;
  a.gradient_form = GradientForm::AutodiffCE;
  a.reduction = Reduction::Sum;
  LossConfig b = a;
  b.rank_delta = 0.1;
  const LossResult ra = ape_loss_gradient_autodiff_ce(s, a);
  const LossResult rb = ape_loss_gradient_autodiff_ce(s, b);
  EXPECT_NE(ra.total_loss, rb.total_loss);
  for (const std::size_t u : {0u, 1u}) {
    const double bca = *ra.stats[u].balance_constant;
    const double bcb = *rb.stats[u].balance_constant;
    EXPECT_NEAR(ra.per_anchor_loss.at(u) * bca, rb.per_anchor_loss.at(u) * bcb,
                1e-15);
    EXPECT_NEAR(ra.gradient[u] * bca, rb.gradient[u] * bcb, 1e-15);
    EXPECT_NEAR(ra.gradient[u] * bca, -sigmoid_distance(0.45 - s.score(u), 8.0),
                1e-15);
  }
}

TEST(Gradient, TruncationFlag) {
  const ScoreSet s({0.5, 0.4, 0.3, 0.2},
                   {L::Positive, L::Negative, L::Negative, L::Negative});
  LossConfig c;
  c.budget = PairBudget::bounded(2);
  const LossResult r = ape_loss_gradient_error_driven(s, c);
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(r.gradient[3], 0.0);
  EXPECT_GT(r.gradient[2], 0.0);
  EXPECT_EQ(r.active_pairs(), 2u);
  c.budget = PairBudget::bounded(3);
  EXPECT_FALSE(ape_loss_forward(s, c).truncated);
}

class LossProperties : public ::testing::Test {
 protected:
  std::mt19937_64 rng{99};
};

TEST_F(LossProperties, FormsAgreeAndStructureHolds) {
  for (int trial = 0; trial < 200; ++trial) {
    const ScoreSet s =
        testing::random_set(rng, testing::uniform_int(rng, 2, 120));
    LossConfig c = testing::random_ce_config(rng);
    const LossResult ed = ape_loss_gradient_error_driven(s, c);
    c.gradient_form = GradientForm::AutodiffCE;
    const LossResult ad = ape_loss_gradient_autodiff_ce(s, c);
    EXPECT_LE(testing::max_rel_diff(ed.gradient, ad.gradient), 1e-12);
    EXPECT_EQ(ed.total_loss, ad.total_loss);

    double sum = 0.0;
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double g = ed.gradient[i];
      sum += g;
      abs_sum += std::abs(g);
      switch (s.label(i)) {
        case L::Positive:
          EXPECT_LE(g, 0.0);
          break;
        case L::Negative:
          EXPECT_GE(g, 0.0);
          break;
        case L::Ignore:
          EXPECT_EQ(g, 0.0);
          break;
      }
    }
    EXPECT_LE(std::abs(sum), 1e-12 * std::max(1.0, abs_sum));

    const double per_anchor_sum = std::accumulate(
        ed.per_anchor_loss.begin(), ed.per_anchor_loss.end(), 0.0,
        [](double acc, const auto& kv) { return acc + kv.second; });
    const double scale = c.reduction == Reduction::Sum
                             ? 1.0
                             : 1.0 / static_cast<double>(ed.stats.size());
    EXPECT_TRUE(testing::rel_close(ed.total_loss, per_anchor_sum * scale, 1e-13));
  }
}

TEST_F(LossProperties, ShiftAndPermutation) {
  for (int trial = 0; trial < 100; ++trial) {
    const ScoreSet s =
        testing::random_set(rng, testing::uniform_int(rng, 2, 80));
    const LossConfig c = testing::random_ce_config(rng);
    const LossResult base = ape_loss_gradient_error_driven(s, c);

    std::vector<double> shifted(s.scores().begin(), s.scores().end());
    for (double& x : shifted) x += 0.375;
    const LossResult sh = ape_loss_gradient_error_driven(s.with_scores(shifted), c);
    EXPECT_TRUE(testing::rel_close(sh.total_loss, base.total_loss, 1e-12));
    // Rounding in x + c perturbs differences by ~1 ulp; lambda <= 16 keeps
    // the relative effect on S well below 1e-12.
    EXPECT_LE(testing::max_rel_diff(sh.gradient, base.gradient), 1e-12);

    std::vector<std::size_t> perm(s.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> ps(s.size());
    std::vector<Label> pl(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      ps[i] = s.score(perm[i]);
      pl[i] = s.label(perm[i]);
    }
    const ScoreSet p(ps, pl);
    // Top-Q ties are broken by index; random doubles make ties vanishingly
    // rare, so the selected pair sets coincide.
    const LossResult pr = ape_loss_gradient_error_driven(p, c);
    EXPECT_TRUE(testing::rel_close(pr.total_loss, base.total_loss, 1e-12));
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_TRUE(testing::rel_close(pr.gradient[i], base.gradient[perm[i]],
                                     1e-12));
    }
  }
}

TEST_F(LossProperties, BudgetMonotone) {
  for (int trial = 0; trial < 50; ++trial) {
    const ScoreSet s =
        testing::random_set(rng, testing::uniform_int(rng, 2, 80));
    LossConfig c = testing::random_ce_config(rng);
    c.filter.mode = FilterMode::RankSum;
    const std::size_t n_neg = s.negative_indices().size();
    c.budget = PairBudget::unlimited();
    const double unlimited = ape_loss_forward(s, c).total_loss;
    double prev = 0.0;
    for (std::size_t q = 1; q <= n_neg + 3; ++q) {
      c.budget = PairBudget::bounded(q);
      const double loss = ape_loss_forward(s, c).total_loss;
      EXPECT_GE(loss, prev);
      if (q >= n_neg) EXPECT_EQ(loss, unlimited);
      prev = loss;
    }
  }
}

TEST_F(LossProperties, ThreadedMatchesSequential) {
  for (int trial = 0; trial < 20; ++trial) {
    const ScoreSet s =
        testing::random_set(rng, testing::uniform_int(rng, 2, 300));
    const LossConfig c = testing::random_ce_config(rng);
    const LossResult seq = ape_loss_gradient_error_driven(s, c);
    for (const unsigned threads : {2u, 3u, 8u}) {
      const LossResult par = ape_loss_gradient_error_driven(s, c, {threads});
      EXPECT_TRUE(testing::rel_close(par.total_loss, seq.total_loss, 1e-12));
      EXPECT_LE(testing::max_rel_diff(par.gradient, seq.gradient), 1e-12);
      ASSERT_EQ(par.stats.size(), seq.stats.size());
      for (std::size_t k = 0; k < seq.stats.size(); ++k) {
        EXPECT_EQ(par.stats[k].anchor_index, seq.stats[k].anchor_index);
        EXPECT_EQ(par.stats[k].active_pairs, seq.stats[k].active_pairs);
      }
    }
  }
}

TEST_F(LossProperties, SequentialIsBitReproducible) {
  const ScoreSet s = testing::random_set(rng, 200);
  const LossConfig c = testing::random_ce_config(rng);
  const LossResult a = ape_loss_gradient_error_driven(s, c);
  const LossResult b = ape_loss_gradient_error_driven(s, c);
  EXPECT_EQ(a.total_loss, b.total_loss);
  EXPECT_EQ(a.gradient, b.gradient);
}

}  // namespace
}  // namespace apeloss
