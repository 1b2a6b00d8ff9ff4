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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "pup/error.hpp"
#include "pup/text.hpp"

namespace pup {

using SentenceVector = std::vector<double>;

/// Token vectors of a fixed dimension plus per-token idf weights.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  /// Inserts or overwrites. Returns false when `word` was already present.
  bool set(const std::string& word, std::vector<double> vec) {
    if (vec.size() != dim_)
      throw ValidationError("vector for '" + word + "' has dimension " + std::to_string(vec.size()) +
                            ", expected " + std::to_string(dim_));
    auto [it, inserted] = index_.emplace(word, words_.size());
    if (inserted) {
      words_.push_back(word);
      vectors_.insert(vectors_.end(), vec.begin(), vec.end());
    } else {
      std::copy(vec.begin(), vec.end(), vectors_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
    }
    return inserted;
  }

  /// nullptr for words without a vector.
  const double* find(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? nullptr : vectors_.data() + it->second * dim_;
  }

  std::vector<double> vector(const std::string& word) const {
    const double* v = find(word);
    if (!v) throw std::out_of_range("no vector for '" + word + "'");
    return {v, v + dim_};
  }

  /// Smoothed idf: ln((1 + N) / (1 + df)) + 1, always >= 1. Words unseen in
  /// the corpus get the df = 0 value.
  void compute_idf(const std::vector<TokenSequence>& corpus) {
    std::unordered_map<std::string, std::size_t> df;
    for (const auto& sentence : corpus) {
      std::set<std::string> seen(sentence.begin(), sentence.end());
      for (const auto& w : seen) ++df[w];
    }
    const double n = static_cast<double>(corpus.size());
    idf_.clear();
    for (const auto& [w, count] : df) idf_[w] = std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0;
    default_idf_ = std::log(1.0 + n) + 1.0;
  }

  double idf(const std::string& word) const {
    auto it = idf_.find(word);
    return it == idf_.end() ? default_idf_ : it->second;
  }

  /// Word-vector text format, one "token v1 ... vd" line per word.
  void save(std::ostream& out) const {
    out << std::setprecision(17);
    for (std::size_t i = 0; i < words_.size(); ++i) {
      out << words_[i];
      for (std::size_t k = 0; k < dim_; ++k) out << ' ' << vectors_[i * dim_ + k];
      out << '\n';
    }
  }

  bool operator==(const EmbeddingTable& other) const {
    return dim_ == other.dim_ && words_ == other.words_ && vectors_ == other.vectors_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  std::vector<double> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, double> idf_;
  double default_idf_ = 1.0;
};

/// Reads "token v1 ... vd" lines. The first row fixes d; a later row with a
/// different count raises ParseError carrying that line. For duplicate words
/// the last row wins and a warning is appended to `warnings` (or printed to
/// stderr when no sink is given).
inline EmbeddingTable load_embeddings(std::istream& in, std::vector<std::string>* warnings = nullptr) {
  EmbeddingTable table;
  bool have_dim = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<double> values;
    std::string item;
    while (fields >> item) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ParseError("non-numeric vector component '" + item + "'", line_no);
      }
    }
    if (!have_dim) {
      if (values.empty()) throw ParseError("row has no vector components", line_no);
      table = EmbeddingTable(values.size());
      have_dim = true;
    }
    if (values.size() != table.dim())
      throw ParseError("row has " + std::to_string(values.size()) + " components, expected " +
                           std::to_string(table.dim()),
                       line_no);
    if (!table.set(word, std::move(values))) {
      const std::string msg = "duplicate vector for '" + word + "' at line " + std::to_string(line_no) +
                              "; keeping the last one";
      if (warnings)
        warnings->push_back(msg);
      else
        std::cerr << "warning: " << msg << '\n';
    }
  }
  return table;
}

inline EmbeddingTable load_embeddings(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embeddings file '" + path + "'");
  return load_embeddings(in, warnings);
}

/// Symmetric window co-occurrence counts over the distinct tokens of the
/// corpus, tokens sorted lexicographically.
struct Cooccurrence {
  std::vector<std::string> tokens;
  Eigen::MatrixXd counts;
};

inline Cooccurrence cooccurrence_counts(const std::vector<TokenSequence>& corpus, std::size_t window) {
  Cooccurrence out;
  std::map<std::string, std::size_t> ids;
  for (const auto& s : corpus)
    for (const auto& t : s) ids.emplace(t, 0);
  for (auto& [t, id] : ids) {
    id = out.tokens.size();
    out.tokens.push_back(t);
  }
  const auto n = static_cast<Eigen::Index>(out.tokens.size());
  out.counts = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : corpus) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::size_t lo = i >= window ? i - window : 0;
      const std::size_t hi = std::min(s.size() - 1, i + window);
      for (std::size_t j = lo; j <= hi; ++j)
        if (j != i)
          out.counts(static_cast<Eigen::Index>(ids[s[i]]), static_cast<Eigen::Index>(ids[s[j]])) += 1.0;
    }
  }
  return out;
}

/// Positive pointwise mutual information of a co-occurrence matrix.
inline Eigen::MatrixXd ppmi(const Eigen::MatrixXd& counts) {
  const double total = counts.sum();
  const Eigen::VectorXd rows = counts.rowwise().sum();
  const Eigen::RowVectorXd cols = counts.colwise().sum();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(counts.rows(), counts.cols());
  if (total <= 0.0) return out;
  for (Eigen::Index i = 0; i < counts.rows(); ++i)
    for (Eigen::Index j = 0; j < counts.cols(); ++j)
      if (counts(i, j) > 0.0) out(i, j) = std::max(0.0, std::log(counts(i, j) * total / (rows(i) * cols(j))));
  return out;
}

/// Deterministic count-based embeddings: window co-occurrence -> PPMI ->
/// rank-d truncated SVD. Each token's vector is the sum of its word factor
/// U*sqrt(S) and context factor V*sqrt(S). PPMI here is symmetric, so the
/// SVD comes from an eigendecomposition (singular values |lambda|,
/// V = sign(lambda) * U) with a fixed sign convention per component. The
/// idf weights are computed from the same corpus.
inline EmbeddingTable train_ppmi_svd(const std::vector<TokenSequence>& corpus, std::size_t dim = 100,
                                     std::size_t window = 5) {
  if (corpus.empty()) throw ValidationError("cannot train embeddings on an empty corpus");
  if (dim == 0) throw ValidationError("embedding dimension must be positive");
  const auto cooc = cooccurrence_counts(corpus, window);
  const std::size_t n = cooc.tokens.size();
  if (dim > n)
    throw ValidationError("embedding dimension " + std::to_string(dim) + " exceeds the " + std::to_string(n) +
                          " distinct corpus tokens");
  const Eigen::MatrixXd m = ppmi(cooc.counts);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const Eigen::MatrixXd& u = solver.eigenvectors();

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(lambda(a)) > std::abs(lambda(b)); });

  Eigen::MatrixXd vectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < dim; ++k) {
    const Eigen::Index col = order[k];
    Eigen::VectorXd left = u.col(col);
    Eigen::Index pivot = 0;
    left.cwiseAbs().maxCoeff(&pivot);
    if (left(pivot) < 0.0) left = -left;
    const double sigma = std::abs(lambda(col));
    const double sign = lambda(col) >= 0.0 ? 1.0 : -1.0;
    vectors.col(static_cast<Eigen::Index>(k)) = (1.0 + sign) * std::sqrt(sigma) * left;
  }

  EmbeddingTable table(dim);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (std::size_t k = 0; k < dim; ++k) v[k] = vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    table.set(cooc.tokens[i], std::move(v));
  }
  table.compute_idf(corpus);
  return table;
}

/// idf-weighted mean of the vectors of in-table tokens; zero vector when no
/// token has a vector.
inline SentenceVector sentence_vector(const EmbeddingTable& table, const TokenSequence& tokens) {
  SentenceVector out(table.dim(), 0.0);
  double weight = 0.0;
  for (const auto& t : tokens) {
    const double* v = table.find(t);
    if (!v) continue;
    const double w = table.idf(t);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * v[k];
    weight += w;
  }
  if (weight > 0.0)
    for (auto& x : out) x /= weight;
  return out;
}

/// Cosine clamped to [0, 1]; 0 when either vector is zero.
inline double semantic_similarity(const SentenceVector& a, const SentenceVector& b) {
  if (a.size() != b.size()) throw ValidationError("sentence vectors differ in dimension");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

}  // namespace pup
