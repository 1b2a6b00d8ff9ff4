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

#pragma once

#include <memory>
#include <string>

#include "pup/embedding.hpp"
#include "pup/error.hpp"
#include "pup/metrics.hpp"
#include "pup/ngram_lm.hpp"
#include "pup/text.hpp"

namespace pup {

/// r_Sim(X, Y) in [0, 1].
class SimilarityScorer {
 public:
  virtual ~SimilarityScorer() = default;
  virtual double similarity(const TokenSequence& source, const TokenSequence& candidate) const = 0;
};

/// r_F(Y) in [0, 1].
class FluencyScorer {
 public:
  virtual ~FluencyScorer() = default;
  virtual double fluency(const TokenSequence& candidate) const = 0;
};

class EmbeddingSimilarityScorer final : public SimilarityScorer {
 public:
  explicit EmbeddingSimilarityScorer(EmbeddingTable table) : table_(std::move(table)) {}
  double similarity(const TokenSequence& source, const TokenSequence& candidate) const override {
    return semantic_similarity(sentence_vector(table_, source), sentence_vector(table_, candidate));
  }
  const EmbeddingTable& table() const { return table_; }

 private:
  EmbeddingTable table_;
};

class NGramFluencyScorer final : public FluencyScorer {
 public:
  NGramFluencyScorer(Vocabulary vocab, NGramLM lm) : vocab_(std::move(vocab)), lm_(std::move(lm)) {
    if (lm_.vocab_hash() != vocab_.hash())
      throw ValidationError("language model and vocabulary do not match");
  }
  double fluency(const TokenSequence& candidate) const override {
    return fluency_score(lm_, encode(vocab_, candidate));
  }
  const NGramLM& lm() const { return lm_; }

 private:
  Vocabulary vocab_;
  NGramLM lm_;
};

struct RewardWeights {
  double alpha = 0.4;  // similarity
  double beta = 0.3;   // fluency
  double gamma = 0.3;  // diversity
};

struct RewardThresholds {
  double tau_min = 0.3;
  double tau_max = 0.98;
  double lambda_min = 0.3;
};

inline void validate(const RewardWeights& w) {
  for (double v : {w.alpha, w.beta, w.gamma})
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("reward weights must lie in [0, 1]");
}

inline void validate(const RewardThresholds& t) {
  if (!(0.0 <= t.tau_min && t.tau_min < t.tau_max && t.tau_max <= 1.0))
    throw ValidationError("reward thresholds need 0 <= tau_min < tau_max <= 1");
  if (!(t.lambda_min >= 0.0 && t.lambda_min <= 1.0)) throw ValidationError("lambda_min must lie in [0, 1]");
}

struct RewardBreakdown {
  double raw_sim = 0.0;
  double raw_flu = 0.0;
  double raw_div = 0.0;
  double gated_sim = 0.0;
  double gated_flu = 0.0;
  double gated_div = 0.0;
  double total = 0.0;
};

/// Applies the similarity band, the fluency floor and the diversity gate to
/// raw component scores. Every condition reads the raw (pre-gate) values.
inline RewardBreakdown gate_reward(double raw_sim, double raw_flu, double raw_div, const RewardWeights& w,
                                   const RewardThresholds& t) {
  RewardBreakdown r;
  r.raw_sim = raw_sim;
  r.raw_flu = raw_flu;
  r.raw_div = raw_div;
  r.gated_sim = (t.tau_min <= raw_sim && raw_sim <= t.tau_max) ? raw_sim : 0.0;
  r.gated_flu = raw_flu >= t.lambda_min ? raw_flu : 0.0;
  r.gated_div = (raw_sim >= t.tau_min && raw_flu >= t.lambda_min) ? raw_div : 0.0;
  r.total = w.alpha * r.gated_sim + w.beta * r.gated_flu + w.gamma * r.gated_div;
  return r;
}

/// Full reward of a candidate paraphrase. An empty candidate scores 0 on
/// every component.
inline RewardBreakdown compute_reward(const TokenSequence& source, const TokenSequence& candidate,
                                      const SimilarityScorer& sim, const FluencyScorer& flu,
                                      const RewardWeights& weights = {},
                                      const RewardThresholds& thresholds = {}) {
  if (candidate.empty()) return {};
  return gate_reward(sim.similarity(source, candidate), flu.fluency(candidate),
                     metrics::diversity_inverse_bleu(source, candidate), weights, thresholds);
}

/// Scorers plus constants: everything needed to score a (source, candidate)
/// pair. Shared read-only during training.
struct RewardModel {
  std::shared_ptr<const SimilarityScorer> sim;
  std::shared_ptr<const FluencyScorer> flu;
  RewardWeights weights;
  RewardThresholds thresholds;

  RewardBreakdown operator()(const TokenSequence& source, const TokenSequence& candidate) const {
    return compute_reward(source, candidate, *sim, *flu, weights, thresholds);
  }
};

}  // namespace pup
