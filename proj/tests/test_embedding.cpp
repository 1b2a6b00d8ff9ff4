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
#include <sstream>

#include "pup/embedding.hpp"

using namespace pup;

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    d += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  return (na == 0 || nb == 0) ? 0.0 : d / std::sqrt(na * nb);
}

}  // namespace

TEST(LoadEmbeddings, ReadsRows) {
  std::istringstream in("cat 1 0 0\ndog 0 1 0\n");
  const auto t = load_embeddings(in);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.dim(), 3u);
  EXPECT_EQ(t.vector("dog"), (std::vector<double>{0, 1, 0}));
  EXPECT_EQ(t.find("bird"), nullptr);
}

TEST(LoadEmbeddings, ShortRowFailsAtItsLine) {
  std::istringstream in("cat 1 0 0\n\ndog 0 1\n");
  try {
    load_embeddings(in);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream junk("cat 1 x 0\n");
  EXPECT_THROW(load_embeddings(junk), ParseError);
}

TEST(LoadEmbeddings, DuplicateWordLastWinsWithWarning) {
  std::istringstream in("cat 1 0\ncat 0 1\n");
  std::vector<std::string> warnings;
  const auto t = load_embeddings(in, &warnings);
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(t.vector("cat"), (std::vector<double>{0, 1}));
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("line 2"), std::string::npos);
}

TEST(LoadEmbeddings, SaveLoadRoundTrip) {
  EmbeddingTable t(2);
  t.set("a", {0.1, -1.0 / 3.0});
  t.set("b", {1e-17, 2.5});
  std::stringstream buf;
  t.save(buf);
  EXPECT_EQ(load_embeddings(buf), t);
}

TEST(PpmiSvd, ExclusivePartnersShareDirection) {
  std::vector<TokenSequence> corpus;
  for (int k = 0; k < 5; ++k) corpus.push_back({"a", "b"});
  for (int k = 0; k < 2; ++k) corpus.push_back({"c", "d"});
  const auto t = train_ppmi_svd(corpus, 4, 2);
  const double ab = cosine(t.vector("a"), t.vector("b"));
  EXPECT_GT(ab, cosine(t.vector("a"), t.vector("c")));
  EXPECT_GT(ab, cosine(t.vector("a"), t.vector("d")));
  EXPECT_NEAR(ab, 1.0, 1e-9);
}

TEST(PpmiSvd, CooccurrenceIsSymmetricWindowCount) {
  const std::vector<TokenSequence> corpus(4, TokenSequence{"x", "y", "z"});
  const auto c = cooccurrence_counts(corpus, 1);
  ASSERT_EQ(c.tokens, (std::vector<std::string>{"x", "y", "z"}));
  EXPECT_TRUE(c.counts.isApprox(c.counts.transpose()));
  EXPECT_EQ(c.counts(0, 1), 4.0);
  EXPECT_EQ(c.counts(1, 2), 4.0);
  EXPECT_EQ(c.counts(0, 2), 0.0);
  EXPECT_EQ(c.counts(0, 0), 0.0);
}

TEST(PpmiSvd, DeterministicBytes) {
  const std::vector<TokenSequence> corpus = {{"the", "cat", "sat"}, {"the", "dog", "sat"}, {"a", "cat", "ran"}};
  std::ostringstream a, b;
  train_ppmi_svd(corpus, 3, 2).save(a);
  train_ppmi_svd(corpus, 3, 2).save(b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(PpmiSvd, RejectsBadDimensions) {
  EXPECT_THROW(train_ppmi_svd({}, 2), ValidationError);
  EXPECT_THROW(train_ppmi_svd({{"a", "b"}}, 3), ValidationError);
  EXPECT_THROW(train_ppmi_svd({{"a", "b"}}, 0), ValidationError);
}

TEST(SentenceVector, SingleTokenAndOov) {
  EmbeddingTable t(2);
  t.set("a", {1, 2});
  t.set("b", {3, 0});
  EXPECT_EQ(sentence_vector(t, {"a"}), (std::vector<double>{1, 2}));
  EXPECT_EQ(sentence_vector(t, {"zz", "a"}), (std::vector<double>{1, 2}));
  EXPECT_EQ(sentence_vector(t, {"x", "y"}), (std::vector<double>{0, 0}));
  EXPECT_EQ(sentence_vector(t, {}), (std::vector<double>{0, 0}));
}

TEST(SentenceVector, EqualIdfGivesArithmeticMean) {
  EmbeddingTable t(2);
  t.set("a", {1, 2});
  t.set("b", {3, 0});
  t.compute_idf({{"a", "b"}, {"a", "b", "c"}});
  const auto v = sentence_vector(t, {"a", "b"});
  EXPECT_DOUBLE_EQ(v[0], 2.0);
  EXPECT_DOUBLE_EQ(v[1], 1.0);
}

TEST(SentenceVector, IdfWeighting) {
  EmbeddingTable t(1);
  t.set("common", {0});
  t.set("rare", {1});
  t.compute_idf({{"common", "rare"}, {"common"}, {"common"}});
  const double w_common = std::log(4.0 / 4.0) + 1.0, w_rare = std::log(4.0 / 2.0) + 1.0;
  EXPECT_DOUBLE_EQ(t.idf("common"), w_common);
  EXPECT_DOUBLE_EQ(t.idf("rare"), w_rare);
  EXPECT_DOUBLE_EQ(t.idf("unseen"), std::log(4.0) + 1.0);
  EXPECT_DOUBLE_EQ(sentence_vector(t, {"common", "rare"})[0], w_rare / (w_common + w_rare));
}

TEST(SemanticSimilarity, CosineClampedToUnitInterval) {
  EXPECT_DOUBLE_EQ(semantic_similarity({0.3, -2}, {0.3, -2}), 1.0);
  EXPECT_EQ(semantic_similarity({1, 0}, {0, 1}), 0.0);
  EXPECT_NEAR(semantic_similarity({1, 0}, {1, 1}), 0.7071, 1e-4);
  EXPECT_EQ(semantic_similarity({1, 0}, {-1, 0.1}), 0.0);
  EXPECT_EQ(semantic_similarity({0, 0}, {1, 1}), 0.0);
  EXPECT_THROW(semantic_similarity({1}, {1, 2}), ValidationError);
}
