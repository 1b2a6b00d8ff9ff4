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
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pup/error.hpp"

namespace pup {

using TokenId = std::int32_t;

/// Lowercased tokens of one sentence. Never holds empty strings.
using TokenSequence = std::vector<std::string>;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kSosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr TokenId kNumSpecials = 4;

inline constexpr std::size_t kMaxSentenceLength = 15;

inline const char* special_token_name(TokenId id) {
  static const char* names[] = {"<pad>", "<sos>", "<eos>", "<unk>"};
  return names[id];
}

namespace detail {

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 33 && u <= 47) || (u >= 58 && u <= 64) ||
         (u >= 91 && u <= 96) || (u >= 123 && u <= 126);
}

inline char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace detail

/// Whitespace split, ASCII lowercase, leading and trailing ASCII punctuation
/// detached one character per token. Punctuation inside a word (don't,
/// e-mail) stays attached. Non-ASCII bytes pass through untouched.
inline TokenSequence tokenize(std::string_view text) {
  TokenSequence out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::is_ascii_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !detail::is_ascii_space(text[j])) ++j;
    if (j > i) {
      std::string word;
      word.reserve(j - i);
      for (std::size_t k = i; k < j; ++k) word.push_back(detail::ascii_lower(text[k]));
      std::size_t lo = 0, hi = word.size();
      while (lo < hi && detail::is_ascii_punct(word[lo])) ++lo;
      while (hi > lo && detail::is_ascii_punct(word[hi - 1])) --hi;
      for (std::size_t k = 0; k < lo; ++k) out.emplace_back(1, word[k]);
      if (hi > lo) out.push_back(word.substr(lo, hi - lo));
      for (std::size_t k = hi; k < word.size(); ++k) out.emplace_back(1, word[k]);
    }
    i = j;
  }
  return out;
}

/// Ids of one sentence wrapped as [sos, ..., eos].
struct EncodedSequence {
  std::vector<TokenId> ids;

  std::size_t length() const { return ids.size() >= 2 ? ids.size() - 2 : 0; }
  std::vector<TokenId> interior() const {
    if (ids.size() < 2) return {};
    return {ids.begin() + 1, ids.end() - 1};
  }
  bool operator==(const EncodedSequence&) const = default;
};

/// Dense token <-> id mapping with the four specials at ids 0..3.
/// Immutable after construction.
class Vocabulary {
 public:
  Vocabulary() {
    for (TokenId id = 0; id < kNumSpecials; ++id) add(special_token_name(id), 0);
  }

  /// Keeps tokens with frequency >= min_freq, at most max_size of them,
  /// ordered by frequency descending then lexicographically.
  static Vocabulary build(const std::vector<TokenSequence>& corpus,
                          std::size_t min_freq = 4,
                          std::size_t max_size = 8000) {
    if (min_freq < 1) throw ValidationError("min_freq must be >= 1");
    std::map<std::string, std::size_t> counts;
    for (const auto& sentence : corpus)
      for (const auto& token : sentence) ++counts[token];
    std::vector<std::pair<std::string, std::size_t>> ranked;
    for (auto& [token, count] : counts)
      if (count >= min_freq) ranked.emplace_back(token, count);
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (ranked.size() > max_size) ranked.resize(max_size);
    Vocabulary vocab;
    for (auto& [token, count] : ranked) vocab.add(token, count);
    return vocab;
  }

  std::size_t size() const { return tokens_.size(); }

  TokenId id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnkId : it->second;
  }
  bool contains(const std::string& token) const { return index_.count(token) > 0; }

  const std::string& token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
      throw std::out_of_range("token id " + std::to_string(id) +
                              " outside vocabulary of size " +
                              std::to_string(tokens_.size()));
    return tokens_[static_cast<std::size_t>(id)];
  }
  std::size_t frequency(TokenId id) const { return freqs_.at(static_cast<std::size_t>(id)); }

  /// "token<TAB>id<TAB>freq" per line, specials first.
  std::string to_tsv() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < tokens_.size(); ++i)
      os << tokens_[i] << '\t' << i << '\t' << freqs_[i] << '\n';
    return os.str();
  }

  static Vocabulary from_tsv(std::istream& in) {
    Vocabulary vocab;
    vocab.tokens_.clear();
    vocab.freqs_.clear();
    vocab.index_.clear();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream fields(line);
      std::string token, id_text, freq_text;
      if (!std::getline(fields, token, '\t') || !std::getline(fields, id_text, '\t') ||
          !std::getline(fields, freq_text))
        throw ParseError("vocabulary row needs token, id and frequency", line_no);
      std::size_t id = 0, freq = 0;
      try {
        id = std::stoul(id_text);
        freq = std::stoul(freq_text);
      } catch (const std::exception&) {
        throw ParseError("non-numeric id or frequency in vocabulary", line_no);
      }
      if (id != vocab.tokens_.size()) throw ParseError("vocabulary ids must be dense and ordered", line_no);
      if (id < static_cast<std::size_t>(kNumSpecials) && token != special_token_name(static_cast<TokenId>(id)))
        throw ParseError("special token expected at id " + std::to_string(id), line_no);
      if (vocab.index_.count(token)) throw ParseError("duplicate token '" + token + "'", line_no);
      vocab.add(token, freq);
    }
    if (vocab.size() < static_cast<std::size_t>(kNumSpecials))
      throw ValidationError("vocabulary file is missing the special tokens");
    return vocab;
  }

  /// FNV-1a over the exported table; identifies a vocabulary inside
  /// checkpoints.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : to_tsv()) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && freqs_ == other.freqs_;
  }

 private:
  void add(const std::string& token, std::size_t freq) {
    index_.emplace(token, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(token);
    freqs_.push_back(freq);
  }

  std::vector<std::string> tokens_;
  std::vector<std::size_t> freqs_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Truncates to max_len tokens, maps OOV to unk and wraps with sos/eos.
inline EncodedSequence encode(const Vocabulary& vocab, const TokenSequence& tokens,
                              std::size_t max_len = kMaxSentenceLength) {
  EncodedSequence out;
  const std::size_t n = std::min(tokens.size(), max_len);
  out.ids.reserve(n + 2);
  out.ids.push_back(kSosId);
  for (std::size_t i = 0; i < n; ++i) out.ids.push_back(vocab.id(tokens[i]));
  out.ids.push_back(kEosId);
  return out;
}

/// Drops pad/sos/eos. Unknown ids render as "<unk>". Throws
/// std::out_of_range for ids outside the vocabulary.
inline TokenSequence decode_ids(const Vocabulary& vocab, const std::vector<TokenId>& ids) {
  TokenSequence out;
  for (TokenId id : ids) {
    const std::string& token = vocab.token(id);
    if (id == kPadId || id == kSosId || id == kEosId) continue;
    out.push_back(token);
  }
  return out;
}

inline std::string join(const TokenSequence& tokens, char sep = ' ') {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(sep);
    out += tokens[i];
  }
  return out;
}

/// One sentence per line; blank lines are skipped.
inline std::vector<TokenSequence> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus file '" + path + "'");
  std::vector<TokenSequence> corpus;
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = tokenize(line);
    if (!tokens.empty()) corpus.push_back(std::move(tokens));
  }
  return corpus;
}

}  // namespace pup
