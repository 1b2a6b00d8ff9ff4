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

// Shared fixtures: small random models and the templated toy setup with its
// scorers, built the same way the preprocess command builds them.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pup/pup.hpp"

namespace testing_support {

using namespace pup;

inline std::vector<TokenId> random_interior(std::mt19937_64& rng, std::size_t vocab, std::size_t min_len,
                                            std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<TokenId> tok(kNumSpecials, static_cast<TokenId>(vocab - 1));
  std::vector<TokenId> out(len(rng));
  for (auto& t : out) t = tok(rng);
  return out;
}

inline EncodedSequence wrap(const std::vector<TokenId>& interior) {
  EncodedSequence s;
  s.ids.push_back(kSosId);
  s.ids.insert(s.ids.end(), interior.begin(), interior.end());
  s.ids.push_back(kEosId);
  return s;
}

/// Scorers and encoded corpora for the templated toy corpus.
struct ToySetup {
  toy::ToyCorpus corpus;
  Vocabulary vocab;
  std::vector<EncodedSequence> train, valid;
  RewardModel reward;
};

struct ToySetupConfig {
  std::uint64_t corpus_seed = 1;
  std::size_t n_train = 1000;
  std::size_t n_valid = 100;
  std::size_t n_test = 50;
  std::size_t min_freq = 4;
  std::size_t vocab_size = 200;
  std::size_t embedding_dim = 32;
  std::size_t embedding_window = 5;
};

inline ToySetup make_toy_setup(const ToySetupConfig& c = {}) {
  ToySetup s;
  s.corpus = toy::make_toy_corpus(c.corpus_seed, c.n_train, c.n_valid, c.n_test);
  std::vector<TokenSequence> tokens;
  for (const auto& line : s.corpus.train) tokens.push_back(tokenize(line));
  s.vocab = Vocabulary::build(tokens, c.min_freq, c.vocab_size);
  for (const auto& t : tokens) s.train.push_back(encode(s.vocab, t));
  for (const auto& line : s.corpus.valid) s.valid.push_back(encode(s.vocab, tokenize(line)));
  auto lm = NGramLM::train(s.train, s.vocab.size(), s.vocab.hash());
  const auto decoded = pipeline::decode_corpus(s.vocab, s.train);
  auto table = train_ppmi_svd(decoded, c.embedding_dim, c.embedding_window);
  s.reward = RewardModel{std::make_shared<EmbeddingSimilarityScorer>(std::move(table)),
                         std::make_shared<NGramFluencyScorer>(s.vocab, std::move(lm)), {}, {}};
  return s;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pup_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace testing_support
