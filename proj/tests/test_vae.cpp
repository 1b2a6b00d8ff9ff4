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

#include <cmath>
#include <random>
#include <vector>

#include "pup/pup.hpp"
#include "support.hpp"

namespace {

using namespace pup;
using ad::Tape;
using ad::Tensor;
using ad::Var;

vae::VaeParams small_vae(std::uint64_t seed, double scale = 0.3) {
  nn::Rng rng(seed);
  return vae::VaeParams({14, 6, 7, 2}, 3, rng, scale);
}

TEST(Vae, ZeroWeightsGiveStandardPosterior) {
  auto p = small_vae(1);
  for (Tensor* t : p.parameters()) std::fill(t->data.begin(), t->data.end(), 0.0);
  const auto post = vae::vae_encode_plain(p, testing_support::wrap({4, 5, 6}));
  for (double m : post.mu) EXPECT_EQ(m, 0.0);
  for (double l : post.logvar) EXPECT_EQ(l, 0.0);
}

TEST(Vae, EncodingIsDeterministicAndMatchesTape) {
  auto p = small_vae(2);
  const auto seq = testing_support::wrap({4, 9, 7, 7});
  const auto a = vae::vae_encode_plain(p, seq), b = vae::vae_encode_plain(p, seq);
  EXPECT_EQ(a.mu, b.mu);
  EXPECT_EQ(a.logvar, b.logvar);
  Tape t(false);
  const auto post = vae::vae_encode(t, p, seq);
  EXPECT_EQ(post.mu.values(), a.mu);
  EXPECT_EQ(post.logvar.values(), a.logvar);
}

TEST(Vae, ReparameterizationCases) {
  const std::vector<double> mu = {0.5, -1.0, 2.0}, lv = {0.3, -0.7, 1.1};
  EXPECT_EQ(vae::reparameterize(mu, lv, {0.0, 0.0, 0.0}), mu);
  const std::vector<double> noise = {0.25, -1.5, 0.75};
  const auto z = vae::reparameterize(mu, {0.0, 0.0, 0.0}, noise);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(z[j], mu[j] + noise[j]);
  EXPECT_THROW(vae::reparameterize(mu, {0.0}, noise), ValidationError);
}

TEST(Vae, ReparameterizationGradientMatchesFiniteDifference) {
  Tensor mu({3}), lv({3});
  mu.data = {0.5, -1.0, 2.0};
  lv.data = {0.3, -0.7, 1.1};
  auto loss = [&](Tape& t) {
    Var z = vae::reparameterize(t.param(mu), t.param(lv), t.constant({0.4, -1.2, 0.9}));
    return ad::sum(z * z * t.constant({1.0, 0.5, -2.0}));
  };
  EXPECT_LT(nn::finite_difference_check(loss, {&mu, &lv}), 1e-8);
}

TEST(Vae, KlDivergenceCases) {
  EXPECT_EQ(vae::kl_gaussian({0.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(vae::kl_gaussian({1.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}), 0.5);
  EXPECT_DOUBLE_EQ(vae::kl_gaussian({0.0, 0.0, 0.0, 0.0}, {1.0, 0.0, 0.0, 0.0}), 0.5 * (std::exp(1.0) - 2.0));
  const std::vector<double> mu = {0.3, -0.2, 1.4, 0.0}, lv = {-0.5, 0.8, 0.1, -2.0};
  Tape t;
  EXPECT_NEAR(vae::kl_gaussian(t.constant(mu), t.constant(lv)).item(), vae::kl_gaussian(mu, lv), 1e-15);
  EXPECT_GT(vae::kl_gaussian(mu, lv), 0.0);
}

TEST(Vae, ElboWeightsTheKlTerm) {
  auto p = small_vae(3);
  const auto seq = testing_support::wrap({4, 5, 6});
  const std::vector<double> noise = {0.1, -0.3, 0.2};
  Tape t;
  const auto full = vae::sentence_elbo(t, p, seq, noise, 1.0);
  const auto half = vae::sentence_elbo(t, p, seq, noise, 0.5);
  const auto none = vae::sentence_elbo(t, p, seq, noise, 0.0);
  EXPECT_DOUBLE_EQ(full.total.item(), full.recon.item() + full.kl.item());
  EXPECT_DOUBLE_EQ(half.total.item(), half.recon.item() + 0.5 * half.kl.item());
  EXPECT_DOUBLE_EQ(none.total.item(), none.recon.item());
  EXPECT_EQ(full.recon.item(), none.recon.item());
}

TEST(Vae, ElboGradientMatchesFiniteDifference) {
  auto p = small_vae(4);
  const auto seq = testing_support::wrap({4, 8, 11});
  auto loss = [&](Tape& t) { return vae::sentence_elbo(t, p, seq, {0.2, -0.6, 1.1}, 0.7).total; };
  EXPECT_LT(nn::finite_difference_check(loss, p.parameters(), 3e-3, 20), 1e-4);
}

TEST(Vae, ElboRejectsMismatchedTargets) {
  Tape t;
  Var mu = t.constant({0.0}), lv = t.constant({0.0});
  EXPECT_THROW(vae::elbo_loss({t.constant({0.0, 1.0})}, {}, mu, lv, 1.0), ValidationError);
}

TEST(Vae, SamplingIsReproducibleAndBounded) {
  auto p = small_vae(5, 0.8);
  const auto seq = testing_support::wrap({4, 5, 6, 7});
  nn::Rng r1(42), r2(42);
  for (int k = 0; k < 20; ++k) {
    const auto a = vae::vae_sample(p, seq, vae::SampleMode::kStochastic, r1);
    const auto b = vae::vae_sample(p, seq, vae::SampleMode::kStochastic, r2);
    EXPECT_EQ(a, b);
    EXPECT_LE(a.size(), kMaxSentenceLength);
  }
  nn::Rng r3(1), r4(2);
  EXPECT_EQ(vae::vae_sample(p, seq, vae::SampleMode::kGreedy, r3),
            vae::vae_sample(p, seq, vae::SampleMode::kGreedy, r4));
}

TEST(Vae, TrainingIsDeterministicAndLowersTheLoss) {
  std::vector<EncodedSequence> corpus;
  for (int k = 0; k < 6; ++k) corpus.push_back(testing_support::wrap({4 + k % 3, 7, 8 + k % 2}));
  vae::VaeTrainConfig cfg;
  cfg.dims = {0, 8, 8, 1};
  cfg.latent_dim = 4;
  cfg.epochs = 30;
  cfg.batch_size = 3;
  cfg.lr = 1e-2;
  cfg.word_dropout = 0.0;
  cfg.kl_anneal_epochs = 0.0;
  const auto a = vae::train_vae(corpus, 12, 99, cfg);
  const auto b = vae::train_vae(corpus, 12, 99, cfg);
  ASSERT_EQ(a.history.size(), 30u);
  const auto pa = a.params.parameters(), pb = b.params.parameters();
  for (std::size_t k = 0; k < pa.size(); ++k) EXPECT_EQ(pa[k]->data, pb[k]->data);
  EXPECT_EQ(a.params.vocab_hash, 99u);
  EXPECT_LT(a.history.back().total, 0.6 * a.history.front().total);
}

TEST(Vae, TrainingRejectsBadInput) {
  vae::VaeTrainConfig cfg;
  EXPECT_THROW(vae::train_vae({}, 12, 1, cfg), ValidationError);
  cfg.batch_size = 0;
  EXPECT_THROW(vae::train_vae({testing_support::wrap({4})}, 12, 1, cfg), ValidationError);
}

TEST(Vae, CheckpointRoundTripsAndChecksVocabulary) {
  auto p = small_vae(6);
  p.vocab_hash = 777;
  const auto dir = testing_support::scratch_dir("vae_ckpt");
  const auto path = (dir / "vae.bin").string();
  vae::save_vae(path, p);
  const auto q = vae::load_vae(path, 777);
  EXPECT_EQ(q.latent_dim, p.latent_dim);
  EXPECT_EQ(q.core.dims, p.core.dims);
  const auto a = p.parameters();
  const auto b = q.parameters();
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k]->data, b[k]->data);
  EXPECT_THROW(vae::load_vae(path, 778), ValidationError);
  EXPECT_THROW(nn::load_policy(path, 777), ValidationError);
}

}  // namespace
