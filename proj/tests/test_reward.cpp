// Copyright (c) 2026 The PUP Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <memory>

#include "pup/reward.hpp"
#include "support.hpp"

using namespace pup;

namespace {

struct FixedSim final : SimilarityScorer {
  double v;
  explicit FixedSim(double x) : v(x) {}
  double similarity(const TokenSequence&, const TokenSequence&) const override { return v; }
};

struct FixedFlu final : FluencyScorer {
  double v;
  explicit FixedFlu(double x) : v(x) {}
  double fluency(const TokenSequence&) const override { return v; }
};

}  // namespace

TEST(GateReward, WeightedSumInsideTheBands) {
  const auto r = gate_reward(0.8, 0.9, 0.5, {}, {});
  EXPECT_EQ(r.gated_sim, 0.8);
  EXPECT_EQ(r.gated_flu, 0.9);
  EXPECT_EQ(r.gated_div, 0.5);
  EXPECT_NEAR(r.total, 0.74, 1e-12);
}

TEST(GateReward, ExactCopyLosesSimilarity) {
  const auto r = gate_reward(1.0, 0.9, 0.0, {}, {});
  EXPECT_EQ(r.gated_sim, 0.0);
  EXPECT_NEAR(r.total, 0.27, 1e-12);
}

TEST(GateReward, DisfluentCandidateLosesFluencyAndDiversity) {
  const auto r = gate_reward(0.8, 0.25, 0.5, {}, {});
  EXPECT_EQ(r.gated_flu, 0.0);
  EXPECT_EQ(r.gated_div, 0.0);
  EXPECT_NEAR(r.total, 0.32, 1e-12);
}

TEST(GateReward, DissimilarCandidateLosesSimilarityAndDiversity) {
  const auto r = gate_reward(0.2, 0.9, 0.5, {}, {});
  EXPECT_EQ(r.gated_sim, 0.0);
  EXPECT_EQ(r.gated_div, 0.0);
  EXPECT_NEAR(r.total, 0.27, 1e-12);
}

TEST(GateReward, BoundariesAreInclusive) {
  const RewardThresholds t;
  EXPECT_EQ(gate_reward(t.tau_min, 0.9, 0.5, {}, t).gated_sim, t.tau_min);
  EXPECT_EQ(gate_reward(t.tau_min, 0.9, 0.5, {}, t).gated_div, 0.5);
  EXPECT_EQ(gate_reward(t.tau_max, 0.9, 0.5, {}, t).gated_sim, t.tau_max);
  EXPECT_EQ(gate_reward(0.8, t.lambda_min, 0.5, {}, t).gated_flu, t.lambda_min);
  EXPECT_EQ(gate_reward(0.8, t.lambda_min, 0.5, {}, t).gated_div, 0.5);
}

TEST(GateReward, DiversitySurvivesTheUpperSimilarityGate) {
  // Only the lower similarity threshold gates diversity.
  const auto r = gate_reward(0.99, 0.9, 0.1, {}, {});
  EXPECT_EQ(r.gated_sim, 0.0);
  EXPECT_EQ(r.gated_div, 0.1);
}

TEST(GateReward, CustomWeights) {
  const auto r = gate_reward(0.5, 0.5, 0.5, {1.0, 0.0, 0.0}, {});
  EXPECT_EQ(r.total, 0.5);
}

TEST(RewardValidation, RejectsBadConstants) {
  EXPECT_THROW(validate(RewardWeights{1.5, 0.0, 0.0}), ValidationError);
  EXPECT_THROW(validate(RewardWeights{-0.1, 0.0, 0.0}), ValidationError);
  EXPECT_THROW(validate(RewardThresholds{0.9, 0.5, 0.3}), ValidationError);
  EXPECT_THROW(validate(RewardThresholds{0.3, 0.98, 1.2}), ValidationError);
  EXPECT_NO_THROW(validate(RewardWeights{}));
  EXPECT_NO_THROW(validate(RewardThresholds{}));
}

TEST(ComputeReward, EmptyCandidateScoresZero) {
  const auto r = compute_reward({"a", "b"}, {}, FixedSim(0.5), FixedFlu(0.5));
  EXPECT_EQ(r.total, 0.0);
  EXPECT_EQ(r.raw_sim, 0.0);
}

TEST(ComputeReward, UsesInverseBleuDiversity) {
  const TokenSequence src{"a", "b", "c", "d", "e"}, cand{"a", "b", "c", "d", "f"};
  const auto r = compute_reward(src, cand, FixedSim(0.5), FixedFlu(0.5));
  EXPECT_NEAR(r.raw_div, 0.225, 1e-15);
  EXPECT_NEAR(r.total, 0.4 * 0.5 + 0.3 * 0.5 + 0.3 * 0.225, 1e-15);
}

TEST(RewardModel, ToyScorersOnCopiesAndParaphrases) {
  const auto setup = testing_support::make_toy_setup({1, 300, 20, 20});
  for (const auto& row : setup.corpus.test) {
    const auto src = tokenize(row[0]);
    const auto copy = setup.reward(src, src);
    EXPECT_EQ(copy.gated_sim, 0.0);
    EXPECT_EQ(copy.raw_div, 0.0);
    const auto para = setup.reward(src, tokenize(row[1]));
    for (double v : {para.raw_sim, para.raw_flu, para.raw_div, para.total}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(NGramFluencyScorer, RejectsForeignLanguageModel) {
  const auto v = Vocabulary::build({{"a", "b"}}, 1);
  auto lm = NGramLM::train({encode(v, {"a", "b"})}, v.size(), v.hash() ^ 1);
  EXPECT_THROW(NGramFluencyScorer(v, lm), ValidationError);
}
