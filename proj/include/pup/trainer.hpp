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
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pup/decoding.hpp"
#include "pup/error.hpp"
#include "pup/nn.hpp"
#include "pup/reward.hpp"
#include "pup/text.hpp"
#include "pup/vae.hpp"

namespace pup::trainer {

using ad::Tape;
using ad::Var;
using nn::Rng;

/// Probability of feeding the VAE's previous token to the decoder:
/// sigmoid(m - i - omega / l).
inline double delta_prob(double m, double i, double omega, double slowdown = 8.0) {
  return ad::kernels::sigmoid(m - i - omega / slowdown);
}

/// Probability of sampling (rather than taking the argmax): kappa^omega.
inline double epsilon_prob(double omega, double kappa = 0.9995) { return std::pow(kappa, omega); }

/// Per-epoch knobs of the progressive schedule.
struct ScheduleState {
  std::size_t epoch = 0;     // omega, counted from the end of pre-training
  bool pretrain = false;     // rho
  double slowdown = 8.0;     // l
  double kappa = 0.9995;
  bool progressive = true;   // false: no token hand-over, no VAE inputs
  std::size_t max_len = kMaxSentenceLength;

  double epsilon() const { return epsilon_prob(static_cast<double>(epoch), kappa); }
  double delta(std::size_t m, std::size_t i) const {
    if (!progressive) return 0.0;
    return delta_prob(static_cast<double>(m), static_cast<double>(i), static_cast<double>(epoch), slowdown);
  }
};

enum class ActionSource { kVae, kSample, kArgmax };

/// One pass of the policy over an input, guided by the VAE sample.
struct Rollout {
  std::vector<TokenId> vae_sample;  // S, eos included when the VAE produced it
  std::vector<TokenId> actions;     // Y-hat, eos included when produced
  std::vector<ActionSource> sources;
  std::vector<bool> vae_inputs;     // decoder was fed s_{i-1}
  double log_prob = 0.0;            // L(theta)
  double reward = 0.0;
  double baseline = 0.0;

  std::vector<TokenId> interior() const {
    std::vector<TokenId> out(actions);
    if (!out.empty() && out.back() == kEosId) out.pop_back();
    return out;
  }
  std::size_t from_vae_count() const {
    return static_cast<std::size_t>(std::count(sources.begin(), sources.end(), ActionSource::kVae));
  }
};

struct TapedRollout {
  Rollout rollout;
  Var log_prob;  // scalar on the tape
};

/// Generates the action sequence for one input on `tape`:
///  - decoder input at step i is s_{i-1} with probability delta, else y_{i-1};
///  - y_i = s_i while pre-training or while i <= m - omega (m = |S|);
///  - otherwise y_i is sampled with probability epsilon, else the argmax;
///  - L(theta) sums log P(y_i | .) for every step whatever the source.
/// Stops at eos or after max_len non-eos tokens.
inline TapedRollout rollout_one(Tape& tape, nn::Seq2SeqParams& policy, const EncodedSequence& source,
                                const std::vector<TokenId>& vae_sample, const ScheduleState& schedule, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  TapedRollout out{{}, tape.scalar(0.0)};
  Rollout& r = out.rollout;
  r.vae_sample = vae_sample;
  const std::size_t m = vae_sample.size();
  const double epsilon = schedule.epsilon();
  nn::TapedState state = nn::encode_taped(tape, policy, nn::encoder_input(source));
  TokenId prev_action = kSosId;
  std::size_t interior = 0;
  for (std::size_t i = 1;; ++i) {
    const double vae_in = uniform(rng);
    TokenId input = prev_action;
    bool fed_vae = false;
    if (vae_in < schedule.delta(m, i) && i - 1 <= m) {
      input = i == 1 ? kSosId : vae_sample[i - 2];
      fed_vae = true;
    }
    r.vae_inputs.push_back(fed_vae);
    Var logp = ad::log_softmax(nn::decode_step_taped(tape, policy, state, input));

    TokenId action;
    const bool follow_vae =
        i <= m && (schedule.pretrain || (schedule.progressive && static_cast<double>(i) <= static_cast<double>(m) -
                                                                      static_cast<double>(schedule.epoch)));
    if (follow_vae) {
      action = vae_sample[i - 1];
      r.sources.push_back(ActionSource::kVae);
    } else {
      std::vector<double> lp(logp.data(), logp.data() + logp.size());
      if (uniform(rng) < epsilon) {
        action = decoding::sample_token(lp, 1.0, rng);
        r.sources.push_back(ActionSource::kSample);
      } else {
        action = decoding::argmax(lp);
        r.sources.push_back(ActionSource::kArgmax);
      }
    }
    out.log_prob = out.log_prob + ad::pick(logp, static_cast<std::size_t>(action));
    r.actions.push_back(action);
    prev_action = action;
    if (action == kEosId) break;
    if (++interior >= schedule.max_len) break;
  }
  r.log_prob = out.log_prob.item();
  return out;
}

class NonFiniteGradient : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

/// A finished rollout waiting for its policy-gradient contribution.
struct PendingUpdate {
  std::unique_ptr<Tape> tape;
  Var log_prob;
  double advantage = 0.0;
};

/// theta <- theta + lr * mean_b(A_b * grad L_b(theta)), via Adam on the
/// loss -mean_b(A_b * L_b) with global-norm clipping. Throws
/// NonFiniteGradient (leaving parameters untouched) if any gradient entry is
/// not finite. Returns the pre-clip gradient norm.
inline double reinforce_update(nn::Seq2SeqParams& policy, nn::Adam& adam, std::vector<PendingUpdate>& batch,
                               double lr, double clip_norm = 2.0) {
  auto params = policy.parameters();
  nn::zero_grad(params);
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (auto& u : batch) u.tape->backward(u.log_prob, -u.advantage * scale);
  if (!nn::grads_finite(params)) {
    nn::zero_grad(params);
    throw NonFiniteGradient("non-finite policy gradient");
  }
  const double norm = nn::clip_by_global_norm(params, clip_norm);
  adam.step(params, lr);
  return norm;
}

/// When the advantage subtracts r(X, S): only in the DRL phase, in every
/// phase after pre-training, or never.
enum class BaselineMode { kDrlPhase, kAfterPretrain, kNever };

struct TrainConfig {
  nn::ModelDims dims;  // vocab_size filled from the vocabulary
  double init_scale = 0.08;
  std::size_t pretrain_epochs = 15;
  std::size_t main_epochs = 2000;
  double lr_pretrain = 0.15;
  double lr_transition = 1e-3;
  double lr_drl = 1e-4;
  /// The DRL phase (third learning rate, baseline) starts once epsilon
  /// drops below this.
  double drl_epsilon = 0.5;
  std::size_t batch_size = 32;
  double clip_norm = 2.0;
  double slowdown = 8.0;
  double kappa = 0.9995;
  std::size_t max_len = kMaxSentenceLength;
  BaselineMode baseline = BaselineMode::kDrlPhase;
  vae::SampleMode vae_mode = vae::SampleMode::kStochastic;
  bool no_pretrain = false;
  bool no_transition = false;
  std::uint64_t seed = 1;
};

inline void validate(const TrainConfig& c) {
  if (c.batch_size == 0) throw ValidationError("batch_size must be positive");
  for (double v : {c.lr_pretrain, c.lr_transition, c.lr_drl, c.clip_norm, c.slowdown, c.kappa})
    if (!(v > 0.0)) throw ValidationError("learning rates, clip norm, slowdown and kappa must be positive");
  if (c.kappa > 1.0) throw ValidationError("kappa must lie in (0, 1]");
}

/// One row of the reward curve.
struct CurveRow {
  std::size_t epoch = 0;  // global epoch counter (pre-training included)
  std::string phase;      // pretrain | transition | drl
  double mean_reward = 0.0;
  double mean_sim = 0.0, mean_flu = 0.0, mean_div = 0.0;  // raw components
  double epsilon = 1.0;
  double delta_at_first_token = 0.0;
  double train_reward = 0.0;
  std::size_t aborted_batches = 0;
};

inline std::string curve_csv_header() {
  return "epoch,phase,mean_reward,mean_sim,mean_flu,mean_div,epsilon,delta_at_first_token";
}

inline std::string curve_csv_row(const CurveRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%zu,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", r.epoch, r.phase.c_str(), r.mean_reward,
                r.mean_sim, r.mean_flu, r.mean_div, r.epsilon, r.delta_at_first_token);
  return buf;
}

struct RewardSummary {
  double reward = 0.0, sim = 0.0, flu = 0.0, div = 0.0;
};

/// Mean reward (and raw components) of outputs against their sources.
inline RewardSummary summarize_rewards(const Vocabulary& vocab, const std::vector<EncodedSequence>& sources,
                                       const std::vector<std::vector<TokenId>>& outputs, const RewardModel& reward) {
  RewardSummary s;
  if (sources.empty()) return s;
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const auto r = reward(decode_ids(vocab, sources[k].ids), decode_ids(vocab, outputs[k]));
    s.reward += r.total;
    s.sim += r.raw_sim;
    s.flu += r.raw_flu;
    s.div += r.raw_div;
  }
  const double n = static_cast<double>(sources.size());
  return {s.reward / n, s.sim / n, s.flu / n, s.div / n};
}

/// Greedy policy outputs for every input.
inline std::vector<std::vector<TokenId>> greedy_outputs(const nn::Seq2SeqParams& policy,
                                                        const std::vector<EncodedSequence>& inputs,
                                                        std::size_t max_len) {
  std::vector<std::vector<TokenId>> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) out.push_back(decoding::greedy_decode(decoding::PolicyModel(policy, x), max_len).tokens);
  return out;
}

/// VAE samples S for a set of inputs; input k draws from its own stream so
/// the samples do not depend on the order of evaluation.
inline std::vector<std::vector<TokenId>> vae_samples(const vae::VaeParams& vae, const std::vector<EncodedSequence>& inputs,
                                                     vae::SampleMode mode, std::uint64_t seed, std::size_t max_len) {
  std::vector<std::vector<TokenId>> out;
  out.reserve(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(k), std::uint64_t{0x5eed}};
    Rng rng(seq);
    out.push_back(vae::vae_sample(vae, inputs[k], mode, rng, max_len));
  }
  return out;
}

struct PupResult {
  nn::Seq2SeqParams policy;       // after the last epoch
  nn::Seq2SeqParams best_policy;  // best validation reward
  double best_reward = -1.0;
  std::size_t best_epoch = 0;
  double vae_baseline_reward = 0.0;
  std::vector<CurveRow> curve;
};

struct PupHooks {
  std::function<void(const CurveRow&)> on_epoch;
  std::function<void(std::size_t epoch, const nn::Seq2SeqParams&)> on_checkpoint;
  std::size_t checkpoint_every = 0;
};

/// Pre-training on the VAE's samples, then the progressive transition and
/// the DRL phase, validating (greedy decoding) after every epoch.
inline PupResult train_pup(const Vocabulary& vocab, const std::vector<EncodedSequence>& train,
                           const std::vector<EncodedSequence>& valid, const vae::VaeParams& vae,
                           const RewardModel& reward, const TrainConfig& cfg, const PupHooks& hooks = {}) {
  validate(cfg);
  if (vae.vocab_hash != vocab.hash()) throw ValidationError("VAE and policy vocabularies differ (hash mismatch)");
  if (vae.core.dims.vocab_size != vocab.size()) throw ValidationError("VAE vocabulary size differs from the vocabulary");
  if (train.empty()) throw ValidationError("empty training corpus");
  if (valid.empty()) throw ValidationError("empty validation corpus");

  Rng rng(cfg.seed);
  nn::ModelDims dims = cfg.dims;
  dims.vocab_size = vocab.size();
  PupResult result;
  result.policy = nn::Seq2SeqParams(dims, rng, cfg.init_scale);
  auto& policy = result.policy;
  auto params = policy.parameters();
  nn::Adam adam(params);

  const auto train_s = vae_samples(vae, train, cfg.vae_mode, cfg.seed, cfg.max_len);
  const auto valid_s = vae_samples(vae, valid, cfg.vae_mode, cfg.seed + 0x9e3779b97f4a7c15ULL, cfg.max_len);
  std::vector<double> train_s_reward(train.size());
  std::vector<TokenSequence> train_src(train.size());
  for (std::size_t k = 0; k < train.size(); ++k) {
    train_src[k] = decode_ids(vocab, train[k].ids);
    train_s_reward[k] = reward(train_src[k], decode_ids(vocab, train_s[k])).total;
  }
  result.vae_baseline_reward = summarize_rewards(vocab, valid, valid_s, reward).reward;
  double mean_s_len = 0.0;
  for (const auto& s : train_s) mean_s_len += static_cast<double>(s.size());
  mean_s_len /= static_cast<double>(train_s.size());

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t global_epoch = 0;

  auto run_epoch = [&](const ScheduleState& schedule, double lr, bool use_baseline, const std::string& phase) {
    std::shuffle(order.begin(), order.end(), rng);
    CurveRow row;
    row.epoch = global_epoch;
    row.phase = phase;
    row.epsilon = schedule.pretrain ? 1.0 : schedule.epsilon();
    row.delta_at_first_token = schedule.pretrain ? 1.0 : schedule.delta(static_cast<std::size_t>(0), 1);
    if (!schedule.pretrain && schedule.progressive)
      row.delta_at_first_token = delta_prob(mean_s_len, 1.0, static_cast<double>(schedule.epoch), schedule.slowdown);
    double train_reward = 0.0;
    std::size_t train_count = 0;
    bool aborted = false;
    for (std::size_t start = 0; start < order.size() && !aborted; start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<PendingUpdate> batch;
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t k = order[b];
        PendingUpdate u;
        u.tape = std::make_unique<Tape>();
        auto taped = rollout_one(*u.tape, policy, train[k], train_s[k], schedule, rng);
        const double r = reward(train_src[k], decode_ids(vocab, taped.rollout.interior())).total;
        u.log_prob = taped.log_prob;
        u.advantage = use_baseline ? r - train_s_reward[k] : r;
        train_reward += r;
        ++train_count;
        batch.push_back(std::move(u));
      }
      try {
        reinforce_update(policy, adam, batch, lr, cfg.clip_norm);
      } catch (const NonFiniteGradient& e) {
        row.aborted_batches = 1;
        aborted = true;
      }
    }
    row.train_reward = train_count ? train_reward / static_cast<double>(train_count) : 0.0;
    const auto summary = summarize_rewards(vocab, valid, greedy_outputs(policy, valid, cfg.max_len), reward);
    row.mean_reward = summary.reward;
    row.mean_sim = summary.sim;
    row.mean_flu = summary.flu;
    row.mean_div = summary.div;
    if (row.mean_reward > result.best_reward) {
      result.best_reward = row.mean_reward;
      result.best_epoch = global_epoch;
      result.best_policy = policy;
    }
    result.curve.push_back(row);
    if (hooks.on_epoch) hooks.on_epoch(row);
    ++global_epoch;
    if (hooks.on_checkpoint && hooks.checkpoint_every && global_epoch % hooks.checkpoint_every == 0)
      hooks.on_checkpoint(global_epoch, policy);
  };

  if (!cfg.no_pretrain) {
    for (std::size_t e = 0; e < cfg.pretrain_epochs; ++e) {
      ScheduleState s{0, true, cfg.slowdown, cfg.kappa, !cfg.no_transition, cfg.max_len};
      run_epoch(s, cfg.lr_pretrain, false, "pretrain");
    }
  }
  for (std::size_t omega = 0; omega < cfg.main_epochs; ++omega) {
    ScheduleState s{omega, false, cfg.slowdown, cfg.kappa, !cfg.no_transition, cfg.max_len};
    const bool drl = s.epsilon() < cfg.drl_epsilon;
    const bool use_baseline =
        cfg.baseline == BaselineMode::kAfterPretrain || (cfg.baseline == BaselineMode::kDrlPhase && drl);
    run_epoch(s, drl ? cfg.lr_drl : cfg.lr_transition, use_baseline, drl ? "drl" : "transition");
  }
  if (result.curve.empty()) result.best_policy = policy;
  return result;
}

}  // namespace pup::trainer
