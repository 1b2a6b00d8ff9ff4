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
#include <map>
#include <string>
#include <vector>

#include "pup/error.hpp"
#include "pup/text.hpp"

namespace pup::metrics {

struct BleuConfig {
  int max_n = 4;
  bool smoothing = true;
};

/// Clipped n-gram matches and candidate n-gram total for one order.
struct NGramMatch {
  std::size_t matched = 0;
  std::size_t total = 0;
};

namespace detail {

using NGramCounts = std::map<std::vector<std::string>, std::size_t>;

inline NGramCounts count_ngrams(const TokenSequence& tokens, int n) {
  NGramCounts counts;
  const auto order = static_cast<std::size_t>(n);
  if (tokens.size() < order) return counts;
  for (std::size_t i = 0; i + order <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + order))];
  return counts;
}

inline std::size_t closest_reference_length(std::size_t candidate_length,
                                            const std::vector<TokenSequence>& references) {
  std::size_t best = references.front().size();
  for (const auto& ref : references) {
    const auto diff = [&](std::size_t r) {
      return r > candidate_length ? r - candidate_length : candidate_length - r;
    };
    if (diff(ref.size()) < diff(best) || (diff(ref.size()) == diff(best) && ref.size() < best))
      best = ref.size();
  }
  return best;
}

inline double brevity_penalty(std::size_t candidate_length, std::size_t reference_length) {
  if (candidate_length == 0) return 0.0;
  if (candidate_length > reference_length) return 1.0;
  return std::exp(1.0 - static_cast<double>(reference_length) / static_cast<double>(candidate_length));
}

inline void require_references(const std::vector<TokenSequence>& references) {
  if (references.empty()) throw ValidationError("at least one reference is required");
}

// Geometric mean of the per-order precisions with the add-one rule applied
// to orders >= 2 whenever one of them has no match.
inline double combine_precisions(const std::vector<NGramMatch>& orders, bool smoothing) {
  if (orders.empty() || orders[0].matched == 0) return 0.0;
  bool smooth = false;
  if (smoothing)
    for (std::size_t k = 1; k < orders.size(); ++k)
      if (orders[k].matched == 0) smooth = true;
  double log_sum = 0.0;
  for (std::size_t k = 0; k < orders.size(); ++k) {
    double m = static_cast<double>(orders[k].matched);
    double t = static_cast<double>(orders[k].total);
    if (smooth && k >= 1) {
      m += 1.0;
      t += 1.0;
    }
    if (m == 0.0) return 0.0;
    log_sum += std::log(m / t);
  }
  return std::exp(log_sum / static_cast<double>(orders.size()));
}

}  // namespace detail

/// Candidate n-grams clipped by the maximum count of that n-gram in any
/// single reference.
inline NGramMatch ngram_match(const TokenSequence& candidate,
                              const std::vector<TokenSequence>& references, int n) {
  if (n < 1) throw ValidationError("n-gram order must be >= 1");
  NGramMatch out;
  const auto cand = detail::count_ngrams(candidate, n);
  std::vector<detail::NGramCounts> refs;
  refs.reserve(references.size());
  for (const auto& ref : references) refs.push_back(detail::count_ngrams(ref, n));
  for (const auto& [gram, count] : cand) {
    std::size_t max_ref = 0;
    for (const auto& ref : refs) {
      auto it = ref.find(gram);
      if (it != ref.end()) max_ref = std::max(max_ref, it->second);
    }
    out.matched += std::min(count, max_ref);
    out.total += count;
  }
  return out;
}

inline double modified_ngram_precision(const TokenSequence& candidate,
                                       const std::vector<TokenSequence>& references, int n) {
  const auto m = ngram_match(candidate, references, n);
  return m.total == 0 ? 0.0 : static_cast<double>(m.matched) / static_cast<double>(m.total);
}

/// Sentence-level BLEU.
inline double bleu(const TokenSequence& candidate, const std::vector<TokenSequence>& references,
                   const BleuConfig& config = {}) {
  detail::require_references(references);
  if (config.max_n < 1 || config.max_n > 4) throw ValidationError("BLEU max_n must be in [1, 4]");
  if (candidate.empty()) return 0.0;
  std::vector<NGramMatch> orders;
  for (int n = 1; n <= config.max_n; ++n) orders.push_back(ngram_match(candidate, references, n));
  const double bp = detail::brevity_penalty(
      candidate.size(), detail::closest_reference_length(candidate.size(), references));
  return bp * detail::combine_precisions(orders, config.smoothing);
}

/// Corpus-level BLEU: counts and lengths are summed over all sentences
/// before the precisions and the brevity penalty are formed.
inline double corpus_bleu(const std::vector<TokenSequence>& candidates,
                          const std::vector<std::vector<TokenSequence>>& references,
                          const BleuConfig& config = {}) {
  if (candidates.size() != references.size())
    throw ValidationError("candidate and reference counts differ");
  std::vector<NGramMatch> orders(static_cast<std::size_t>(config.max_n));
  std::size_t cand_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    detail::require_references(references[i]);
    cand_len += candidates[i].size();
    ref_len += detail::closest_reference_length(candidates[i].size(), references[i]);
    for (int n = 1; n <= config.max_n; ++n) {
      const auto m = ngram_match(candidates[i], references[i], n);
      orders[static_cast<std::size_t>(n - 1)].matched += m.matched;
      orders[static_cast<std::size_t>(n - 1)].total += m.total;
    }
  }
  if (cand_len == 0) return 0.0;
  return detail::brevity_penalty(cand_len, ref_len) * detail::combine_precisions(orders, config.smoothing);
}

inline constexpr double kIBleuAlpha = 0.9;

/// alpha * BLEU(candidate, references) - (1 - alpha) * BLEU(candidate, {source}).
inline double i_bleu(const TokenSequence& candidate, const std::vector<TokenSequence>& references,
                     const TokenSequence& source, double alpha = kIBleuAlpha,
                     const BleuConfig& config = {}) {
  return alpha * bleu(candidate, references, config) -
         (1.0 - alpha) * bleu(candidate, {source}, config);
}

/// ROUGE-N recall, best over the references.
inline double rouge_n(const TokenSequence& candidate, const std::vector<TokenSequence>& references,
                      int n) {
  detail::require_references(references);
  if (n < 1) throw ValidationError("ROUGE order must be >= 1");
  const auto cand = detail::count_ngrams(candidate, n);
  double best = 0.0;
  for (const auto& ref : references) {
    const auto ref_counts = detail::count_ngrams(ref, n);
    std::size_t total = 0, matched = 0;
    for (const auto& [gram, count] : ref_counts) {
      total += count;
      auto it = cand.find(gram);
      if (it != cand.end()) matched += std::min(count, it->second);
    }
    if (total > 0) best = std::max(best, static_cast<double>(matched) / static_cast<double>(total));
  }
  return best;
}

/// Mean of 1 - BLEU_n(candidate, {source}) over n = 1, 2, where BLEU_n uses
/// only the order-n precision and the brevity penalty.
inline double diversity_inverse_bleu(const TokenSequence& source, const TokenSequence& candidate) {
  const std::vector<TokenSequence> refs{source};
  const double bp = detail::brevity_penalty(candidate.size(), source.size());
  double sum = 0.0;
  for (int n = 1; n <= 2; ++n) sum += 1.0 - bp * modified_ngram_precision(candidate, refs, n);
  return sum / 2.0;
}

}  // namespace pup::metrics
