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

// Position-by-position reference implementations of the overlap metrics.
// They share no code with the library: an n-gram occurrence counts as
// matched when fewer earlier occurrences of it exist than its count in the
// other side, which is clipping written as a scan instead of a table.

#pragma once

#include <cmath>
#include <cstdlib>
#include <cstddef>
#include <string>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::string>;

inline bool same_gram(const Tokens& a, std::size_t i, const Tokens& b, std::size_t j, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k)
    if (a[i + k] != b[j + k]) return false;
  return true;
}

inline std::size_t occurrences(const Tokens& haystack, const Tokens& needle, std::size_t at, std::size_t n) {
  std::size_t c = 0;
  if (haystack.size() < n) return 0;
  for (std::size_t j = 0; j + n <= haystack.size(); ++j)
    if (same_gram(haystack, j, needle, at, n)) ++c;
  return c;
}

inline std::size_t earlier_occurrences(const Tokens& s, std::size_t at, std::size_t n) {
  std::size_t c = 0;
  for (std::size_t j = 0; j < at; ++j)
    if (same_gram(s, j, s, at, n)) ++c;
  return c;
}

struct Counts {
  double matched = 0, total = 0;
};

inline Counts clipped(const Tokens& cand, const std::vector<Tokens>& refs, std::size_t n) {
  Counts out;
  if (cand.size() < n) return out;
  for (std::size_t i = 0; i + n <= cand.size(); ++i) {
    std::size_t allowed = 0;
    for (const auto& r : refs) {
      const std::size_t c = occurrences(r, cand, i, n);
      if (c > allowed) allowed = c;
    }
    out.total += 1;
    if (earlier_occurrences(cand, i, n) < allowed) out.matched += 1;
  }
  return out;
}

inline std::size_t closest_length(std::size_t c, const std::vector<Tokens>& refs) {
  std::size_t best = refs[0].size();
  long best_gap = std::labs(static_cast<long>(best) - static_cast<long>(c));
  for (const auto& r : refs) {
    const long gap = std::labs(static_cast<long>(r.size()) - static_cast<long>(c));
    if (gap < best_gap || (gap == best_gap && r.size() < best)) {
      best = r.size();
      best_gap = gap;
    }
  }
  return best;
}

inline double bp(double c, double r) {
  if (c == 0) return 0.0;
  return c > r ? 1.0 : std::exp(1.0 - r / c);
}

inline double geometric(const std::vector<Counts>& orders, bool smoothing) {
  if (orders[0].matched == 0) return 0.0;
  bool any_zero = false;
  for (std::size_t k = 1; k < orders.size(); ++k) any_zero = any_zero || orders[k].matched == 0;
  double log_sum = 0.0;
  for (std::size_t k = 0; k < orders.size(); ++k) {
    double m = orders[k].matched, t = orders[k].total;
    if (smoothing && any_zero && k > 0) {
      m += 1;
      t += 1;
    }
    if (m == 0) return 0.0;
    log_sum += std::log(m) - std::log(t);
  }
  return std::exp(log_sum / static_cast<double>(orders.size()));
}

inline double precision(const Tokens& cand, const std::vector<Tokens>& refs, std::size_t n) {
  const Counts c = clipped(cand, refs, n);
  return c.total == 0 ? 0.0 : c.matched / c.total;
}

inline double bleu(const Tokens& cand, const std::vector<Tokens>& refs, std::size_t max_n, bool smoothing) {
  if (cand.empty()) return 0.0;
  std::vector<Counts> orders;
  for (std::size_t n = 1; n <= max_n; ++n) orders.push_back(clipped(cand, refs, n));
  return bp(static_cast<double>(cand.size()), static_cast<double>(closest_length(cand.size(), refs))) *
         geometric(orders, smoothing);
}

inline double corpus_bleu(const std::vector<Tokens>& cands, const std::vector<std::vector<Tokens>>& refs,
                          std::size_t max_n, bool smoothing) {
  std::vector<Counts> orders(max_n);
  double c = 0, r = 0;
  for (std::size_t s = 0; s < cands.size(); ++s) {
    c += static_cast<double>(cands[s].size());
    r += static_cast<double>(closest_length(cands[s].size(), refs[s]));
    for (std::size_t n = 1; n <= max_n; ++n) {
      const Counts k = clipped(cands[s], refs[s], n);
      orders[n - 1].matched += k.matched;
      orders[n - 1].total += k.total;
    }
  }
  if (c == 0) return 0.0;
  return bp(c, r) * geometric(orders, smoothing);
}

// Recall of one reference's n-grams by the candidate, best over references.
inline double rouge(const Tokens& cand, const std::vector<Tokens>& refs, std::size_t n) {
  double best = 0.0;
  for (const auto& r : refs) {
    if (r.size() < n) continue;
    const Counts c = clipped(r, {cand}, n);
    if (c.total > 0 && c.matched / c.total > best) best = c.matched / c.total;
  }
  return best;
}

inline double diversity(const Tokens& source, const Tokens& cand) {
  const double penalty = bp(static_cast<double>(cand.size()), static_cast<double>(source.size()));
  const double p1 = precision(cand, {source}, 1), p2 = precision(cand, {source}, 2);
  return ((1.0 - penalty * p1) + (1.0 - penalty * p2)) / 2.0;
}

}  // namespace oracle
