// Copyright 2026 The saekit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "saekit/embeddings.hpp"
#include "saekit/metrics.hpp"
#include "saekit/tensor.hpp"

namespace saekit {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
};

inline constexpr double kSemanticSimilarityThreshold = 0.1;
inline constexpr std::size_t kClusterTokenCap = 2000;

// Token ids ordered by attribution descending, ties by token id.
inline std::vector<std::uint32_t> rank_tokens(const TokenDistribution& f) {
  std::vector<std::pair<std::uint32_t, double>> items(f.begin(), f.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::uint32_t> out;
  out.reserve(items.size());
  for (const auto& [token, p] : items) out.push_back(token);
  return out;
}

// Single-linkage clusters: connected components of the graph joining every
// pair with cosine similarity strictly above `threshold`. Only the first
// `cap` tokens take part in the pairwise pass; the rest stay singletons.
// Each cluster is sorted by token id and clusters are ordered by their
// smallest token id.
inline Clusters semantic_clusters(std::span<const std::uint32_t> token_ids,
                                  const EmbeddingTable& embeddings,
                                  double threshold = kSemanticSimilarityThreshold,
                                  std::size_t cap = kClusterTokenCap) {
  for (auto t : token_ids) {
    if (!embeddings.contains(t)) throw MissingEmbeddingError(t);
  }
  const std::size_t linked = std::min(cap, token_ids.size());
  RowMatrix<double> unit(static_cast<Eigen::Index>(linked), embeddings.d_emb());
  for (std::size_t i = 0; i < linked; ++i) {
    Vector<double> e = embeddings.row(token_ids[i]).transpose().template cast<double>();
    const double norm = e.norm();
    unit.row(static_cast<Eigen::Index>(i)) = norm > 0.0 ? (e / norm).eval() : e;
  }
  RowMatrix<double> gram(static_cast<Eigen::Index>(linked), static_cast<Eigen::Index>(linked));
  gram.noalias() = unit * unit.transpose();

  UnionFind uf(token_ids.size());
  for (std::size_t i = 0; i < linked; ++i) {
    for (std::size_t j = i + 1; j < linked; ++j) {
      if (gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > threshold) uf.unite(i, j);
    }
  }

  std::vector<std::vector<std::uint32_t>> by_root(token_ids.size());
  for (std::size_t i = 0; i < token_ids.size(); ++i) by_root[uf.find(i)].push_back(token_ids[i]);
  Clusters clusters;
  for (auto& members : by_root) {
    if (members.empty()) continue;
    std::sort(members.begin(), members.end());
    clusters.push_back(std::move(members));
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return clusters;
}

}  // namespace saekit
