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

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "pup/autodiff.hpp"
#include "pup/error.hpp"
#include "pup/nn.hpp"
#include "pup/text.hpp"

namespace pup::decoding {

/// An autoregressive scorer: `log_probs(state, prev)` consumes the previous
/// token, advances the state and returns log p(next | ...) over the whole
/// vocabulary.
template <class M>
concept StepModel = requires(const M& m, typename M::State& s, TokenId tok) {
  { m.initial_state() } -> std::convertible_to<typename M::State>;
  { m.log_probs(s, tok) } -> std::convertible_to<std::vector<double>>;
  { m.vocab_size() } -> std::convertible_to<std::size_t>;
};

/// Generated ids (eos included when produced) and their joint log-probability.
struct Hypothesis {
  std::vector<TokenId> tokens;
  double log_prob = 0.0;
  bool finished = false;  // ended with eos

  /// Tokens without the closing eos.
  std::vector<TokenId> interior() const {
    std::vector<TokenId> out(tokens);
    if (!out.empty() && out.back() == kEosId) out.pop_back();
    return out;
  }
};

enum class Strategy { kGreedy, kSample, kBeam };

struct DecodeConfig {
  Strategy strategy = Strategy::kBeam;
  std::size_t beam_width = 8;
  double temperature = 1.0;
  std::size_t max_len = kMaxSentenceLength;
  double length_penalty = 1.0;
};

inline void validate(const DecodeConfig& c) {
  if (c.beam_width < 1) throw ValidationError("beam width must be >= 1");
  if (!(c.temperature > 0.0)) throw ValidationError("temperature must be positive");
}

/// Highest entry; ties go to the lowest id.
inline TokenId argmax(const std::vector<double>& v) {
  return static_cast<TokenId>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Length-normalised ranking score.
inline double normalized_score(const Hypothesis& h, double length_penalty) {
  if (length_penalty == 0.0 || h.tokens.empty()) return h.log_prob;
  return h.log_prob / std::pow(static_cast<double>(h.tokens.size()), length_penalty);
}

/// Stops at eos or after max_len non-eos tokens.
template <StepModel M>
Hypothesis greedy_decode(const M& model, std::size_t max_len = kMaxSentenceLength) {
  Hypothesis h;
  auto state = model.initial_state();
  TokenId prev = kSosId;
  std::size_t interior = 0;
  while (true) {
    const auto lp = model.log_probs(state, prev);
    const TokenId next = argmax(lp);
    h.log_prob += lp[static_cast<std::size_t>(next)];
    h.tokens.push_back(next);
    if (next == kEosId) {
      h.finished = true;
      break;
    }
    if (++interior >= max_len) break;
    prev = next;
  }
  return h;
}

/// Draw from softmax(log_probs / temperature). Temperatures below 1e-4
/// fall back to argmax.
inline TokenId sample_token(const std::vector<double>& log_probs, double temperature, nn::Rng& rng) {
  if (temperature < 1e-4) return argmax(log_probs);
  const double m = *std::max_element(log_probs.begin(), log_probs.end());
  std::vector<double> w(log_probs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) total += (w[i] = std::exp((log_probs[i] - m) / temperature));
  std::uniform_real_distribution<double> uniform(0.0, total);
  double u = uniform(rng);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (u < w[i]) return static_cast<TokenId>(i);
    u -= w[i];
  }
  return static_cast<TokenId>(w.size() - 1);
}

/// Multinomial decoding; the reported log_prob is under the untempered model.
template <StepModel M>
Hypothesis sample_decode(const M& model, double temperature, nn::Rng& rng, std::size_t max_len = kMaxSentenceLength) {
  if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
  Hypothesis h;
  auto state = model.initial_state();
  TokenId prev = kSosId;
  std::size_t interior = 0;
  while (true) {
    const auto lp = model.log_probs(state, prev);
    const TokenId next = sample_token(lp, temperature, rng);
    h.log_prob += lp[static_cast<std::size_t>(next)];
    h.tokens.push_back(next);
    if (next == kEosId) {
      h.finished = true;
      break;
    }
    if (++interior >= max_len) break;
    prev = next;
  }
  return h;
}

/// Beam search. Every step expands the live hypotheses and keeps the
/// beam_width best expansions by joint log-probability; an expansion ending
/// in eos (or reaching max_len tokens) retires. The search ends when no
/// hypothesis is live or beam_width hypotheses have retired. The result is
/// ranked by length-normalised score, best first.
template <StepModel M>
std::vector<Hypothesis> beam_search(const M& model, const DecodeConfig& config) {
  validate(config);
  struct Live {
    Hypothesis hyp;
    typename M::State state;
  };
  struct Expansion {
    std::size_t beam;
    TokenId token;
    double step_lp;
    double score;
  };
  std::vector<Live> live;
  live.push_back({Hypothesis{}, model.initial_state()});
  std::vector<Hypothesis> done;
  const std::size_t width = config.beam_width;

  while (!live.empty() && done.size() < width) {
    std::vector<Expansion> cand;
    std::vector<std::vector<double>> step_lps;
    std::vector<typename M::State> next_states;
    for (std::size_t b = 0; b < live.size(); ++b) {
      auto state = live[b].state;
      const TokenId prev = live[b].hyp.tokens.empty() ? kSosId : live[b].hyp.tokens.back();
      step_lps.push_back(model.log_probs(state, prev));
      next_states.push_back(std::move(state));
      const auto& lp = step_lps.back();
      for (std::size_t v = 0; v < lp.size(); ++v)
        cand.push_back({b, static_cast<TokenId>(v), lp[v], live[b].hyp.log_prob + lp[v]});
    }
    const std::size_t keep = std::min(width - done.size(), cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(),
                      [](const Expansion& a, const Expansion& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.beam != b.beam) return a.beam < b.beam;
                        if (a.step_lp != b.step_lp) return a.step_lp > b.step_lp;
                        return a.token < b.token;
                      });
    std::vector<Live> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const auto& e = cand[k];
      Hypothesis h = live[e.beam].hyp;
      h.tokens.push_back(e.token);
      h.log_prob = e.score;
      if (e.token == kEosId) {
        h.finished = true;
        done.push_back(std::move(h));
      } else if (h.tokens.size() >= config.max_len) {
        done.push_back(std::move(h));
      } else {
        next.push_back({std::move(h), next_states[e.beam]});
      }
    }
    live = std::move(next);
  }
  std::stable_sort(done.begin(), done.end(), [&](const Hypothesis& a, const Hypothesis& b) {
    const double sa = normalized_score(a, config.length_penalty), sb = normalized_score(b, config.length_penalty);
    if (sa != sb) return sa > sb;
    return a.log_prob > b.log_prob;
  });
  return done;
}

/// The policy conditioned on one encoded input.
class PolicyModel {
 public:
  using State = nn::PlainState;
  PolicyModel(const nn::Seq2SeqParams& p, const EncodedSequence& input)
      : p_(&p), init_(nn::encode_plain(p, nn::encoder_input(input))) {}
  State initial_state() const { return init_; }
  std::vector<double> log_probs(State& s, TokenId prev) const {
    auto logits = nn::decode_step_plain(*p_, s, prev);
    std::vector<double> lp(logits.size());
    ad::kernels::log_softmax(logits.data(), lp.data(), lp.size());
    return lp;
  }
  std::size_t vocab_size() const { return p_->dims.vocab_size; }

 private:
  const nn::Seq2SeqParams* p_;
  State init_;
};

/// Decodes with the configured strategy and returns the chosen hypothesis.
template <StepModel M>
Hypothesis decode(const M& model, const DecodeConfig& config, nn::Rng& rng) {
  validate(config);
  switch (config.strategy) {
    case Strategy::kGreedy:
      return greedy_decode(model, config.max_len);
    case Strategy::kSample:
      return sample_decode(model, config.temperature, rng, config.max_len);
    case Strategy::kBeam:
      break;
  }
  auto ranked = beam_search(model, config);
  return ranked.front();
}

}  // namespace pup::decoding
