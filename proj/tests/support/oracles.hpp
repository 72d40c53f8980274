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

// Brute-force reference computations. Nothing here calls into the code paths
// it is used to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <queue>
#include <unordered_map>
#include <utility>
#include <vector>

#include "saekit/sae.hpp"
#include "saekit/metrics.hpp"

namespace saekit::testing {

// Full sort by (value desc, index asc), then keep the first k.
inline std::vector<double> oracle_topk(const std::vector<double>& v, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < v.size(); ++i) order.emplace_back(v[i], i);
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t i = 0; i < k; ++i) out[order[i].second] = order[i].first;
  return out;
}

// Scalar-loop encoder: matrix multiply, then sort.
template <typename Scalar>
std::vector<double> oracle_encode(const SaeParams<Scalar>& p, const std::vector<double>& x,
                                  std::size_t k) {
  const auto n = static_cast<std::size_t>(p.n()), d = static_cast<std::size_t>(p.d());
  std::vector<double> pre(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      pre[i] += static_cast<double>(p.w_enc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) *
                (x[j] - static_cast<double>(p.b_pre[static_cast<Eigen::Index>(j)]));
    }
  }
  return oracle_topk(pre, k);
}

template <typename Scalar>
std::vector<double> oracle_decode(const SaeParams<Scalar>& p, const std::vector<double>& f) {
  const auto n = static_cast<std::size_t>(p.n()), d = static_cast<std::size_t>(p.d());
  std::vector<double> out(d, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    out[r] = static_cast<double>(p.b_pre[static_cast<Eigen::Index>(r)]);
    for (std::size_t c = 0; c < n; ++c) {
      out[r] += static_cast<double>(p.w_dec(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))) * f[c];
    }
  }
  return out;
}

// Batch-mean squared reconstruction error by scalar loops.
inline double oracle_batch_loss(const SaeParams<double>& p, const RowMatrix<double>& batch,
                                std::size_t k) {
  double total = 0.0;
  for (Eigen::Index b = 0; b < batch.rows(); ++b) {
    std::vector<double> x(static_cast<std::size_t>(batch.cols()));
    for (Eigen::Index j = 0; j < batch.cols(); ++j) x[static_cast<std::size_t>(j)] = batch(b, j);
    const auto xhat = oracle_decode(p, oracle_encode(p, x, k));
    for (std::size_t j = 0; j < x.size(); ++j) total += (x[j] - xhat[j]) * (x[j] - xhat[j]);
  }
  return total / static_cast<double>(batch.rows());
}

// Smallest gap between the k-th and (k+1)-th pre-activation over the batch;
// finite differences are only meaningful when perturbations cannot cross it.
inline double topk_margin(const SaeParams<double>& p, const RowMatrix<double>& batch, std::size_t k) {
  double margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index b = 0; b < batch.rows(); ++b) {
    Vector<double> pre = p.w_enc * (batch.row(b).transpose() - p.b_pre);
    std::vector<double> s(pre.data(), pre.data() + pre.size());
    std::sort(s.begin(), s.end(), std::greater<>());
    if (k < s.size()) margin = std::min(margin, s[k - 1] - s[k]);
  }
  return margin;
}

inline std::unordered_map<std::uint32_t, double> oracle_token_counts(
    const std::vector<FeatureEvent>& events) {
  std::unordered_map<std::uint32_t, double> counts;
  for (const auto& e : events) counts[e.token_id] += 1.0;
  for (auto& [t, c] : counts) c /= static_cast<double>(events.size());
  return counts;
}

inline double oracle_entropy(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) h += p > 0.0 ? -p * std::log(p) : 0.0;
  return h;
}

// Connected components by BFS over an explicit adjacency matrix.
inline std::vector<std::vector<std::uint32_t>> oracle_components(
    const std::vector<std::uint32_t>& tokens, const RowMatrix<double>& embeddings, double threshold) {
  const std::size_t t = tokens.size();
  std::vector<std::vector<bool>> adj(t, std::vector<bool>(t, false));
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < t; ++j) {
      if (i == j) continue;
      const auto a = embeddings.row(tokens[i]);
      const auto b = embeddings.row(tokens[j]);
      const double denom = a.norm() * b.norm();
      const double cos = denom > 0 ? a.dot(b) / denom : 0.0;
      adj[i][j] = cos > threshold;
    }
  }
  std::vector<int> comp(t, -1);
  std::vector<std::vector<std::uint32_t>> out;
  for (std::size_t s = 0; s < t; ++s) {
    if (comp[s] >= 0) continue;
    std::queue<std::size_t> q;
    q.push(s);
    comp[s] = static_cast<int>(out.size());
    out.emplace_back();
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      out.back().push_back(tokens[u]);
      for (std::size_t v = 0; v < t; ++v) {
        if (adj[u][v] && comp[v] < 0) {
          comp[v] = comp[s];
          q.push(v);
        }
      }
    }
  }
  for (auto& c : out) std::sort(c.begin(), c.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Run-length encoding of a per-document occupancy bitmap.
inline std::vector<std::size_t> oracle_runs(const std::vector<FeatureEvent>& events,
                                            std::size_t max_position) {
  std::map<std::uint32_t, std::vector<bool>> occupied;
  for (const auto& e : events) {
    auto& bits = occupied[e.doc];
    bits.resize(max_position + 1, false);
    bits[e.position] = true;
  }
  std::vector<std::size_t> runs;
  for (auto& [doc, bits] : occupied) {
    std::size_t run = 0;
    for (bool b : bits) {
      if (b) {
        ++run;
      } else if (run) {
        runs.push_back(run);
        run = 0;
      }
    }
    if (run) runs.push_back(run);
  }
  return runs;
}

}  // namespace saekit::testing
