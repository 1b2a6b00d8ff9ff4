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

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pup/binary_io.hpp"
#include "pup/error.hpp"
#include "pup/text.hpp"

namespace pup {

/// Interpolated Kneser-Ney n-gram model over a fixed vocabulary.
///
/// The highest order uses raw counts, lower orders use continuation counts
/// (number of distinct left extensions). Each order interpolates with the
/// next lower one using the mass freed by the absolute discount, and the
/// unigram level interpolates with the uniform distribution over every
/// predictable id (all ids except pad and sos), so every in-vocabulary word
/// gets positive probability. Sentences are left-padded with order-1 sos ids
/// and terminated by eos.
class NGramLM {
 public:
  using Context = std::vector<TokenId>;

  struct ContextStats {
    std::map<TokenId, std::uint64_t> counts;
    std::uint64_t total = 0;
    bool operator==(const ContextStats&) const = default;
  };

  static NGramLM train(const std::vector<EncodedSequence>& corpus, std::size_t vocab_size,
                       std::uint64_t vocab_hash, int order = 3, double discount = 0.75) {
    if (corpus.empty()) throw ValidationError("cannot train a language model on an empty corpus");
    if (!(discount > 0.0 && discount < 1.0)) throw ValidationError("discount must lie in (0, 1)");
    if (order < 1 || order > 4) throw ValidationError("language model order must be in [1, 4]");
    if (vocab_size <= static_cast<std::size_t>(kNumSpecials) - 2)
      throw ValidationError("vocabulary too small for a language model");

    NGramLM lm;
    lm.order_ = order;
    lm.discount_ = discount;
    lm.vocab_size_ = vocab_size;
    lm.vocab_hash_ = vocab_hash;
    lm.tables_.resize(static_cast<std::size_t>(order));

    for (const auto& seq : corpus)
      for (TokenId id : seq.ids)
        if (id < 0 || static_cast<std::size_t>(id) >= vocab_size)
          throw ValidationError("corpus id " + std::to_string(id) + " outside vocabulary");

    // Distinct n-grams of every order, needed for continuation counts.
    std::vector<std::map<std::vector<TokenId>, std::uint64_t>> grams(static_cast<std::size_t>(order) + 1);
    for (const auto& seq : corpus) {
      const auto padded = lm.pad(seq.interior());
      for (std::size_t j = static_cast<std::size_t>(order) - 1; j < padded.size(); ++j) {
        for (int k = 1; k <= order; ++k) {
          const std::size_t start = j + 1 - static_cast<std::size_t>(k);
          ++grams[static_cast<std::size_t>(k)][std::vector<TokenId>(
              padded.begin() + static_cast<std::ptrdiff_t>(start),
              padded.begin() + static_cast<std::ptrdiff_t>(j + 1))];
        }
      }
    }
    for (const auto& [gram, count] : grams[static_cast<std::size_t>(order)]) {
      auto& stats = lm.tables_.back()[Context(gram.begin(), gram.end() - 1)];
      stats.counts[gram.back()] += count;
      stats.total += count;
    }
    for (int k = order - 1; k >= 1; --k) {
      auto& table = lm.tables_[static_cast<std::size_t>(k - 1)];
      for (const auto& [gram, count] : grams[static_cast<std::size_t>(k) + 1]) {
        (void)count;
        // gram = (u, ctx..., w); drop u.
        auto& stats = table[Context(gram.begin() + 1, gram.end() - 1)];
        stats.counts[gram.back()] += 1;
        stats.total += 1;
      }
    }
    return lm;
  }

  int order() const { return order_; }
  double discount() const { return discount_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::uint64_t vocab_hash() const { return vocab_hash_; }
  std::size_t predictable_count() const { return vocab_size_ - 2; }

  bool predictable(TokenId w) const {
    return w != kPadId && w != kSosId && w >= 0 && static_cast<std::size_t>(w) < vocab_size_;
  }

  /// p(word | history), history given oldest first; only the last order-1
  /// ids are used. Returns 0 for pad/sos, which are never predicted.
  double prob(TokenId word, std::span<const TokenId> history) const {
    if (!predictable(word)) return 0.0;
    const std::size_t ctx_len = std::min(history.size(), static_cast<std::size_t>(order_) - 1);
    return prob_at(static_cast<std::size_t>(order_), word, history.subspan(history.size() - ctx_len));
  }

  /// Sum of log p over every interior token and the closing eos.
  double sequence_logprob(const EncodedSequence& seq) const {
    const auto padded = pad(seq.interior());
    double total = 0.0;
    const std::size_t ctx = static_cast<std::size_t>(order_) - 1;
    for (std::size_t j = ctx; j < padded.size(); ++j)
      total += std::log(prob(padded[j], std::span<const TokenId>(padded.data() + j - ctx, ctx)));
    return total;
  }

  /// Stats for an observed context at order k (context length k-1), or
  /// nullptr.
  const ContextStats* stats(int k, const Context& context) const {
    const auto& table = tables_.at(static_cast<std::size_t>(k - 1));
    auto it = table.find(context);
    return it == table.end() ? nullptr : &it->second;
  }

  /// Every context observed at order k.
  std::vector<Context> contexts(int k) const {
    std::vector<Context> out;
    for (const auto& [ctx, stats] : tables_.at(static_cast<std::size_t>(k - 1))) out.push_back(ctx);
    return out;
  }

  void save(std::ostream& out) const {
    out.write("PUPLM1", 6);
    binio::write_u64(out, static_cast<std::uint64_t>(order_));
    binio::write_f64(out, discount_);
    binio::write_u64(out, vocab_size_);
    binio::write_u64(out, vocab_hash_);
    for (const auto& table : tables_) {
      binio::write_u64(out, table.size());
      for (const auto& [ctx, stats] : table) {
        for (TokenId id : ctx) binio::write_i32(out, id);
        binio::write_u64(out, stats.counts.size());
        for (const auto& [w, c] : stats.counts) {
          binio::write_i32(out, w);
          binio::write_u64(out, c);
        }
      }
    }
  }

  /// Rejects files whose vocabulary hash differs from `expected_hash`.
  static NGramLM load(std::istream& in, std::uint64_t expected_hash) {
    char magic[6];
    in.read(magic, 6);
    if (!in || std::memcmp(magic, "PUPLM1", 6) != 0) throw ValidationError("not a PUPLM1 language model file");
    NGramLM lm;
    lm.order_ = static_cast<int>(binio::read_u64(in));
    lm.discount_ = binio::read_f64(in);
    lm.vocab_size_ = binio::read_u64(in);
    lm.vocab_hash_ = binio::read_u64(in);
    if (lm.order_ < 1 || lm.order_ > 4) throw ValidationError("corrupt language model header");
    if (lm.vocab_hash_ != expected_hash)
      throw ValidationError("language model was trained on a different vocabulary");
    lm.tables_.resize(static_cast<std::size_t>(lm.order_));
    for (int k = 1; k <= lm.order_; ++k) {
      const auto n_ctx = binio::read_u64(in);
      for (std::uint64_t c = 0; c < n_ctx; ++c) {
        Context ctx(static_cast<std::size_t>(k - 1));
        for (auto& id : ctx) id = binio::read_i32(in);
        ContextStats stats;
        const auto n = binio::read_u64(in);
        for (std::uint64_t e = 0; e < n; ++e) {
          const TokenId w = binio::read_i32(in);
          const auto count = binio::read_u64(in);
          stats.counts[w] = count;
          stats.total += count;
        }
        lm.tables_[static_cast<std::size_t>(k - 1)].emplace(std::move(ctx), std::move(stats));
      }
    }
    return lm;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write '" + path + "'");
    save(out);
  }
  static NGramLM load(const std::string& path, std::uint64_t expected_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open language model '" + path + "'");
    return load(in, expected_hash);
  }

  bool operator==(const NGramLM&) const = default;

 private:
  std::vector<TokenId> pad(const std::vector<TokenId>& interior) const {
    std::vector<TokenId> padded(static_cast<std::size_t>(order_) - 1, kSosId);
    padded.insert(padded.end(), interior.begin(), interior.end());
    padded.push_back(kEosId);
    return padded;
  }

  // Level-k estimate; `history` is the longest available context and level k
  // looks at its last k-1 ids.
  double prob_at(std::size_t k, TokenId word, std::span<const TokenId> history) const {
    if (k == 0) return 1.0 / static_cast<double>(predictable_count());
    const double lower = prob_at(k - 1, word, history);
    if (history.size() < k - 1) return lower;
    const auto ctx = history.subspan(history.size() - (k - 1));
    const auto& table = tables_[k - 1];
    auto it = table.find(Context(ctx.begin(), ctx.end()));
    if (it == table.end() || it->second.total == 0) return lower;
    const auto& stats = it->second;
    const double total = static_cast<double>(stats.total);
    double count = 0.0;
    if (auto c = stats.counts.find(word); c != stats.counts.end()) count = static_cast<double>(c->second);
    const double types = static_cast<double>(stats.counts.size());
    return std::max(count - discount_, 0.0) / total + discount_ * types / total * lower;
  }

  int order_ = 3;
  double discount_ = 0.75;
  std::size_t vocab_size_ = 0;
  std::uint64_t vocab_hash_ = 0;
  std::vector<std::map<Context, ContextStats>> tables_;
};

/// exp(mean log-probability per scored transition): the geometric-mean
/// per-token probability, in (0, 1]. Empty sentences score 0.
inline double fluency_score(const NGramLM& lm, const EncodedSequence& seq) {
  if (seq.length() == 0) return 0.0;
  const double transitions = static_cast<double>(seq.length() + 1);
  return std::exp(lm.sequence_logprob(seq) / transitions);
}

}  // namespace pup
