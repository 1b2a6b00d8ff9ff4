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
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pup/decoding.hpp"
#include "pup/error.hpp"
#include "pup/nn.hpp"
#include "pup/text.hpp"

namespace pup::vae {

using ad::Tape;
using ad::Tensor;
using ad::Var;
using nn::Rng;

/// LSTM-VAE: the seq2seq stack plus the Gaussian posterior heads and the
/// latent-to-decoder-state projection.
struct VaeParams {
  nn::Seq2SeqParams core;
  std::size_t latent_dim = 0;
  std::uint64_t vocab_hash = 0;
  Tensor mu_w, mu_b;          // Z x H, Z
  Tensor logvar_w, logvar_b;  // Z x H, Z
  Tensor init_w, init_b;      // 2LH x Z, 2LH  -> [h_1..h_L, c_1..c_L]

  VaeParams() = default;
  VaeParams(const nn::ModelDims& dims, std::size_t latent, Rng& rng, double init_scale = 0.08)
      : core(dims, rng, init_scale), latent_dim(latent) {
    if (latent == 0) throw ValidationError("latent dimension must be >= 1");
    const std::size_t h = dims.hid_dim, state = 2 * dims.layers * dims.hid_dim;
    mu_w = Tensor({latent, 2 * h});
    mu_b = Tensor({latent});
    logvar_w = Tensor({latent, 2 * h});
    logvar_b = Tensor({latent});
    init_w = Tensor({state, latent});
    init_b = Tensor({state});
    for (Tensor* p : head_parameters()) nn::init_uniform(*p, rng, init_scale);
  }

  std::vector<Tensor*> head_parameters() { return {&mu_w, &mu_b, &logvar_w, &logvar_b, &init_w, &init_b}; }

  std::vector<Tensor*> parameters() {
    auto out = core.parameters();
    for (Tensor* p : head_parameters()) out.push_back(p);
    return out;
  }
  std::vector<const Tensor*> parameters() const {
    std::vector<const Tensor*> out;
    for (Tensor* p : const_cast<VaeParams*>(this)->parameters()) out.push_back(p);
    return out;
  }
};

struct Posterior {
  Var mu, logvar;
};

/// Posterior mean and log-variance from the encoder's top-layer final state
/// [h; c].
inline Posterior vae_encode(Tape& t, VaeParams& p, const EncodedSequence& input) {
  nn::TapedState s = nn::encode_taped(t, p.core, nn::encoder_input(input));
  Var top = ad::concat(s.h.back(), s.c.back());
  return {ad::affine(t.param(p.mu_w), top, t.param(p.mu_b)),
          ad::affine(t.param(p.logvar_w), top, t.param(p.logvar_b))};
}

struct PlainPosterior {
  std::vector<double> mu, logvar;
};

inline PlainPosterior vae_encode_plain(const VaeParams& p, const EncodedSequence& input) {
  nn::PlainState s = nn::encode_plain(p.core, nn::encoder_input(input));
  PlainPosterior out{std::vector<double>(p.latent_dim), std::vector<double>(p.latent_dim)};
  std::vector<double> top(s.h.back());
  top.insert(top.end(), s.c.back().begin(), s.c.back().end());
  ad::kernels::affine(p.mu_w.data.data(), top.data(), p.mu_b.data.data(), out.mu.data(), p.latent_dim, top.size());
  ad::kernels::affine(p.logvar_w.data.data(), top.data(), p.logvar_b.data.data(), out.logvar.data(), p.latent_dim,
                      top.size());
  return out;
}

/// z = mu + exp(0.5 * logvar) * noise.
inline Var reparameterize(Var mu, Var logvar, Var noise) {
  return mu + ad::exp(ad::scale(logvar, 0.5)) * noise;
}

inline std::vector<double> reparameterize(const std::vector<double>& mu, const std::vector<double>& logvar,
                                          const std::vector<double>& noise) {
  if (mu.size() != logvar.size() || mu.size() != noise.size()) throw ValidationError("latent shapes differ");
  std::vector<double> z(mu.size());
  for (std::size_t j = 0; j < z.size(); ++j) z[j] = mu[j] + std::exp(0.5 * logvar[j]) * noise[j];
  return z;
}

/// KL(N(mu, diag(exp(logvar))) || N(0, I)).
inline Var kl_gaussian(Var mu, Var logvar) {
  Tape& t = *mu.tape;
  Var ones = t.constant(std::vector<double>(mu.size(), 1.0));
  return ad::scale(ad::sum(mu * mu + ad::exp(logvar) - ones - logvar), 0.5);
}

inline double kl_gaussian(const std::vector<double>& mu, const std::vector<double>& logvar) {
  if (mu.size() != logvar.size()) throw ValidationError("latent shapes differ");
  double s = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) s += mu[j] * mu[j] + std::exp(logvar[j]) - 1.0 - logvar[j];
  return 0.5 * s;
}

struct ElboTerms {
  Var total, recon, kl;
};

/// Sum of per-position cross-entropies plus kl_weight * KL.
inline ElboTerms elbo_loss(const std::vector<Var>& logits, const std::vector<TokenId>& targets, Var mu, Var logvar,
                           double kl_weight) {
  if (logits.size() != targets.size())
    throw ValidationError("elbo_loss: " + std::to_string(logits.size()) + " logit rows for " +
                          std::to_string(targets.size()) + " targets");
  Tape& t = *mu.tape;
  Var recon = t.scalar(0.0);
  for (std::size_t i = 0; i < logits.size(); ++i)
    recon = recon + ad::cross_entropy(logits[i], static_cast<std::size_t>(targets[i]));
  Var kl = kl_gaussian(mu, logvar);
  return {recon + ad::scale(kl, kl_weight), recon, kl};
}

/// Decoder start state from a latent code: W z + b split into per-layer h
/// then c vectors, with tanh applied to the h parts only. A squashed c
/// part saturates the encoder early in training and the code stops
/// depending on the input.
inline nn::TapedState initial_state(Tape& t, VaeParams& p, Var z) {
  Var flat = ad::affine(t.param(p.init_w), z, t.param(p.init_b));
  nn::TapedState s;
  const std::size_t h = p.core.dims.hid_dim, layers = p.core.dims.layers;
  for (std::size_t l = 0; l < layers; ++l) s.h.push_back(ad::tanh(ad::slice(flat, l * h, h)));
  for (std::size_t l = 0; l < layers; ++l) s.c.push_back(ad::slice(flat, (layers + l) * h, h));
  return s;
}

inline nn::PlainState initial_state_plain(const VaeParams& p, const std::vector<double>& z) {
  const std::size_t h = p.core.dims.hid_dim, layers = p.core.dims.layers;
  std::vector<double> flat(2 * layers * h);
  ad::kernels::affine(p.init_w.data.data(), z.data(), p.init_b.data.data(), flat.data(), flat.size(), p.latent_dim);
  for (std::size_t i = 0; i < layers * h; ++i) flat[i] = std::tanh(flat[i]);
  nn::PlainState s;
  for (std::size_t l = 0; l < layers; ++l) s.h.emplace_back(flat.begin() + l * h, flat.begin() + (l + 1) * h);
  for (std::size_t l = 0; l < layers; ++l)
    s.c.emplace_back(flat.begin() + (layers + l) * h, flat.begin() + (layers + l + 1) * h);
  return s;
}

struct ElboValue {
  double total = 0.0, recon = 0.0, kl = 0.0;
};

/// One teacher-forced ELBO evaluation on a tape. Decoder inputs after sos
/// are replaced by unk with probability `word_dropout`; `noise` is the
/// standard-normal draw used for z.
inline ElboTerms sentence_elbo(Tape& t, VaeParams& p, const EncodedSequence& seq, const std::vector<double>& noise,
                               double kl_weight, const std::vector<bool>& dropped = {}) {
  Posterior post = vae_encode(t, p, seq);
  Var z = reparameterize(post.mu, post.logvar, t.constant(noise));
  nn::TapedState s = initial_state(t, p, z);
  std::vector<Var> logits;
  std::vector<TokenId> targets;
  for (std::size_t i = 1; i < seq.ids.size(); ++i) {
    TokenId in = seq.ids[i - 1];
    if (i - 1 < dropped.size() && dropped[i - 1] && i > 1) in = kUnkId;
    logits.push_back(nn::decode_step_taped(t, p.core, s, in));
    targets.push_back(seq.ids[i]);
  }
  return elbo_loss(logits, targets, post.mu, post.logvar, kl_weight);
}

struct VaeTrainConfig {
  nn::ModelDims dims;
  std::size_t latent_dim = 64;
  std::size_t epochs = 15;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double clip_norm = 2.0;
  double kl_anneal_epochs = 2.0;
  double word_dropout = 0.25;
  double init_scale = 0.08;
  std::uint64_t seed = 1;
  /// Stop after this many optimizer steps (0 = no limit).
  std::size_t max_steps = 0;
};

struct VaeEpochStats {
  std::size_t epoch = 0;
  double total = 0.0, recon = 0.0, kl = 0.0;  // per sentence
  double min_kl = 0.0;
};

struct VaeTrainResult {
  VaeParams params;
  std::vector<VaeEpochStats> history;
};

/// Minibatch ELBO training with linear KL annealing and decoder word
/// dropout. The caller's vocabulary hash is stamped into the parameters.
inline VaeTrainResult train_vae(const std::vector<EncodedSequence>& corpus, std::size_t vocab_size,
                                std::uint64_t vocab_hash, const VaeTrainConfig& cfg,
                                const std::function<void(const VaeEpochStats&)>& on_epoch = {}) {
  if (corpus.empty()) throw ValidationError("cannot train the VAE on an empty corpus");
  if (cfg.batch_size == 0) throw ValidationError("batch size must be positive");
  Rng rng(cfg.seed);
  nn::ModelDims dims = cfg.dims;
  dims.vocab_size = vocab_size;
  VaeTrainResult result{VaeParams(dims, cfg.latent_dim, rng, cfg.init_scale), {}};
  VaeParams& p = result.params;
  p.vocab_hash = vocab_hash;
  auto params = p.parameters();
  nn::Adam adam(params);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const std::size_t batches_per_epoch = (corpus.size() + cfg.batch_size - 1) / cfg.batch_size;
  const double anneal_steps = cfg.kl_anneal_epochs * static_cast<double>(batches_per_epoch);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    VaeEpochStats stats;
    stats.epoch = epoch;
    stats.min_kl = std::numeric_limits<double>::infinity();
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      if (cfg.max_steps && step >= cfg.max_steps) break;
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double kl_weight = anneal_steps > 0 ? std::min(1.0, static_cast<double>(step) / anneal_steps) : 1.0;
      nn::zero_grad(params);
      for (std::size_t b = start; b < end; ++b) {
        const auto& seq = corpus[order[b]];
        std::vector<double> noise(cfg.latent_dim);
        for (auto& v : noise) v = normal(rng);
        std::vector<bool> dropped(seq.ids.size(), false);
        for (std::size_t i = 0; i < dropped.size(); ++i) dropped[i] = uniform(rng) < cfg.word_dropout;
        Tape t;
        auto terms = sentence_elbo(t, p, seq, noise, kl_weight, dropped);
        t.backward(terms.total, 1.0 / static_cast<double>(end - start));
        stats.total += terms.total.item();
        stats.recon += terms.recon.item();
        stats.kl += terms.kl.item();
        stats.min_kl = std::min(stats.min_kl, terms.kl.item());
        ++seen;
      }
      if (!nn::grads_finite(params)) throw RuntimeError("non-finite VAE gradient at step " + std::to_string(step));
      nn::clip_by_global_norm(params, cfg.clip_norm);
      adam.step(params, cfg.lr);
      ++step;
    }
    if (seen == 0) break;
    stats.total /= static_cast<double>(seen);
    stats.recon /= static_cast<double>(seen);
    stats.kl /= static_cast<double>(seen);
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

/// Decoder conditioned on a fixed latent code, for the decoding routines.
class LatentDecoder {
 public:
  using State = nn::PlainState;
  LatentDecoder(const VaeParams& p, const std::vector<double>& z) : p_(&p), init_(initial_state_plain(p, z)) {}
  State initial_state() const { return init_; }
  std::vector<double> log_probs(State& s, TokenId prev) const {
    auto logits = nn::decode_step_plain(p_->core, s, prev);
    std::vector<double> lp(logits.size());
    ad::kernels::log_softmax(logits.data(), lp.data(), lp.size());
    return lp;
  }
  std::size_t vocab_size() const { return p_->core.dims.vocab_size; }

 private:
  const VaeParams* p_;
  State init_;
};

enum class SampleMode { kGreedy, kStochastic };

/// Paraphrase sample S for `input`: z = mu (greedy) or mu + sigma * noise
/// (stochastic), then argmax decoding until eos or max_len tokens. Returns
/// the generated ids, eos included when it was produced.
inline std::vector<TokenId> vae_sample(const VaeParams& p, const EncodedSequence& input, SampleMode mode, Rng& rng,
                                       std::size_t max_len = kMaxSentenceLength) {
  auto post = vae_encode_plain(p, input);
  std::vector<double> noise(p.latent_dim, 0.0);
  if (mode == SampleMode::kStochastic) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : noise) v = normal(rng);
  }
  LatentDecoder dec(p, reparameterize(post.mu, post.logvar, noise));
  return decoding::greedy_decode(dec, max_len).tokens;
}

inline void save_vae(const std::string& path, const VaeParams& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write '" + path + "'");
  nn::write_checkpoint(out, {nn::CheckpointKind::kVae, p.vocab_hash, p.core.dims, p.latent_dim}, p.parameters());
}

inline VaeParams load_vae(const std::string& path, std::uint64_t expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint '" + path + "'");
  const auto h = nn::read_checkpoint_header(in);
  if (h.kind != nn::CheckpointKind::kVae) throw ValidationError("'" + path + "' is not a VAE checkpoint");
  if (h.vocab_hash != expected_hash) throw ValidationError("checkpoint '" + path + "' was built for another vocabulary");
  Rng rng(0);
  VaeParams p(h.dims, h.latent_dim, rng);
  p.vocab_hash = h.vocab_hash;
  nn::read_checkpoint_tensors(in, p.parameters());
  return p;
}

}  // namespace pup::vae
