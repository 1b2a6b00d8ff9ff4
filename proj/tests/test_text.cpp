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

#include <random>
#include <sstream>

#include "pup/text.hpp"
#include "support.hpp"

using namespace pup;

TEST(Tokenize, SplitsOnWhitespaceAndLowercases) {
  EXPECT_EQ(tokenize("how can i work in microsoft"),
            (TokenSequence{"how", "can", "i", "work", "in", "microsoft"}));
  EXPECT_EQ(tokenize("How  CAN\tI"), (TokenSequence{"how", "can", "i"}));
}

TEST(Tokenize, EmptyInput) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("   \t ").empty());
}

TEST(Tokenize, DetachesEdgePunctuationOnly) {
  EXPECT_EQ(tokenize("Don't stop!"), (TokenSequence{"don't", "stop", "!"}));
  EXPECT_EQ(tokenize("(e-mail?)"), (TokenSequence{"(", "e-mail", "?", ")"}));
  EXPECT_EQ(tokenize("..."), (TokenSequence{".", ".", "."}));
}

TEST(Vocabulary, SpecialsOccupyFirstIds) {
  const Vocabulary v;
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v.token(kPadId), "<pad>");
  EXPECT_EQ(v.id("<unk>"), kUnkId);
  EXPECT_EQ(v.token(kSosId), special_token_name(kSosId));
  EXPECT_EQ(v.token(kEosId), special_token_name(kEosId));
}

TEST(Vocabulary, MinimumFrequencyExcludesRareTokens) {
  const std::vector<TokenSequence> corpus = {{"x", "y"}, {"x", "y"}, {"x", "y"}, {"y"}};
  const auto v = Vocabulary::build(corpus, 4);
  EXPECT_FALSE(v.contains("x"));
  EXPECT_TRUE(v.contains("y"));
  EXPECT_EQ(v.id("x"), kUnkId);
}

TEST(Vocabulary, EmptyCorpusHasOnlySpecials) {
  EXPECT_EQ(Vocabulary::build({}, 1).size(), 4u);
}

TEST(Vocabulary, TiesAtTheCapKeepLexicographicallySmaller) {
  const std::vector<TokenSequence> corpus = {{"c", "b", "a", "a"}};
  const auto v = Vocabulary::build(corpus, 1, 2);
  EXPECT_TRUE(v.contains("a"));
  EXPECT_TRUE(v.contains("b"));
  EXPECT_FALSE(v.contains("c"));
  EXPECT_EQ(v.id("a"), 4);
  EXPECT_EQ(v.id("b"), 5);
}

TEST(Vocabulary, RejectsZeroMinimumFrequency) {
  EXPECT_THROW(Vocabulary::build({{"a"}}, 0), ValidationError);
}

TEST(Vocabulary, BuildIsDeterministicAndTsvRoundTrips) {
  const auto corpus = toy::make_toy_corpus(4, 200, 0, 0);
  std::vector<TokenSequence> tokens;
  for (const auto& l : corpus.train) tokens.push_back(tokenize(l));
  const auto a = Vocabulary::build(tokens, 2, 50);
  const auto b = Vocabulary::build(tokens, 2, 50);
  EXPECT_EQ(a.to_tsv(), b.to_tsv());
  EXPECT_EQ(a.hash(), b.hash());
  std::istringstream in(a.to_tsv());
  const auto c = Vocabulary::from_tsv(in);
  EXPECT_EQ(a, c);
  EXPECT_EQ(a.hash(), c.hash());
}

TEST(Vocabulary, TsvRowsAreTokenIdFrequency) {
  const auto v = Vocabulary::build({{"a", "a", "b"}}, 1);
  EXPECT_EQ(v.to_tsv(), "<pad>\t0\t0\n<sos>\t1\t0\n<eos>\t2\t0\n<unk>\t3\t0\na\t4\t2\nb\t5\t1\n");
}

TEST(Vocabulary, MalformedTsvReportsTheLine) {
  std::istringstream bad("<pad>\t0\t0\n<sos>\t1\t0\n<eos>\t2\t0\n<unk>\t3\t0\na\t9\t2\n");
  try {
    Vocabulary::from_tsv(bad);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 5u);
  }
  std::istringstream no_specials("a\t0\t1\n");
  EXPECT_THROW(Vocabulary::from_tsv(no_specials), ValidationError);
}

TEST(Encode, TruncatesToFifteenTokens) {
  TokenSequence s;
  for (int k = 0; k < 20; ++k) s.push_back("w");
  const auto v = Vocabulary::build({s}, 1);
  const auto e = encode(v, s);
  EXPECT_EQ(e.ids.size(), 17u);
  EXPECT_EQ(e.ids.front(), kSosId);
  EXPECT_EQ(e.ids.back(), kEosId);
  EXPECT_EQ(e.length(), 15u);
}

TEST(Encode, EmptyAndUnknown) {
  const auto v = Vocabulary::build({{"a"}}, 1);
  EXPECT_EQ(encode(v, {}).ids, (std::vector<TokenId>{kSosId, kEosId}));
  EXPECT_EQ(encode(v, {"zyzzyva"}).ids, (std::vector<TokenId>{kSosId, kUnkId, kEosId}));
}

TEST(DecodeIds, StripsSpecials) {
  const auto v = Vocabulary::build({{"p", "q", "r", "s", "t", "u"}}, 1);
  EXPECT_EQ(decode_ids(v, {kSosId, 7, 9, kEosId}), (TokenSequence{v.token(7), v.token(9)}));
  EXPECT_TRUE(decode_ids(v, {kSosId, kEosId}).empty());
  EXPECT_EQ(decode_ids(v, {kUnkId}), (TokenSequence{"<unk>"}));
}

TEST(DecodeIds, OutOfRangeThrows) {
  const auto v = Vocabulary::build({{"a"}}, 1);
  EXPECT_THROW(decode_ids(v, {kSosId, 5}), std::out_of_range);
  EXPECT_THROW(decode_ids(v, {-1}), std::out_of_range);
}

TEST(DecodeIds, RoundTripsInVocabularySentences) {
  const auto corpus = toy::make_toy_corpus(5, 300, 0, 0);
  std::vector<TokenSequence> tokens;
  for (const auto& l : corpus.train) tokens.push_back(tokenize(l));
  const auto v = Vocabulary::build(tokens, 1);
  for (const auto& t : tokens) {
    if (t.size() > kMaxSentenceLength) continue;
    const auto e = encode(v, t);
    for (TokenId id : e.ids) EXPECT_LT(static_cast<std::size_t>(id), v.size());
    EXPECT_EQ(decode_ids(v, e.ids), t);
  }
}

TEST(ReadCorpus, SkipsBlankLinesAndRejectsMissingFiles) {
  const auto dir = testing_support::scratch_dir("read_corpus");
  testing_support::write_lines(dir / "c.txt", {"Hello there.", "", "  ", "bye"});
  const auto c = read_corpus((dir / "c.txt").string());
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0], (TokenSequence{"hello", "there", "."}));
  EXPECT_THROW(read_corpus((dir / "missing.txt").string()), ValidationError);
  std::filesystem::remove_all(dir);
}
