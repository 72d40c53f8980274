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
#include <cmath>
#include <cstdint>
#include <random>

#include "saekit/gradients.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace saekit::testing {

inline double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-10});
  return std::abs(a - b) / scale;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t entries = 0;
};

// Central differences of the scalar-loop loss against backward(), over every
// entry of all three parameter blocks.
inline GradCheckResult finite_difference_check(const SaeParams<double>& params,
                                               const RowMatrix<double>& batch, std::size_t k,
                                               double eps = 1e-4) {
  const auto analytic = backward(params, batch, k).grads;
  GradCheckResult out;
  auto probe = [&](double& slot, double grad) {
    const double saved = slot;
    slot = saved + eps;
    const double up = oracle_batch_loss(params, batch, k);
    slot = saved - eps;
    const double down = oracle_batch_loss(params, batch, k);
    slot = saved;
    const double numeric = (up - down) / (2 * eps);
    out.max_rel_error = std::max(out.max_rel_error, relative_error(grad, numeric));
    ++out.entries;
  };
  auto& p = const_cast<SaeParams<double>&>(params);
  for (Eigen::Index i = 0; i < p.w_enc.size(); ++i) probe(p.w_enc.data()[i], analytic.w_enc.data()[i]);
  for (Eigen::Index i = 0; i < p.w_dec.size(); ++i) probe(p.w_dec.data()[i], analytic.w_dec.data()[i]);
  for (Eigen::Index i = 0; i < p.b_pre.size(); ++i) probe(p.b_pre.data()[i], analytic.b_pre.data()[i]);
  return out;
}

struct GradInstance {
  SaeParams<double> params;
  RowMatrix<double> batch;
  std::size_t k = 0;
};

// Random small instance whose TopK selection is at least `min_margin` away
// from switching, so the loss is smooth within the finite-difference stencil.
inline GradInstance random_grad_instance(std::uint64_t seed, std::size_t batch_rows = 4,
                                         double min_margin = 1e-2) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dd(6, 8), nn(12, 16), kk(3, 4);
  GradInstance inst;
  const auto d = dd(rng), n = nn(rng);
  inst.k = kk(rng);
  for (std::uint64_t attempt = 0;; ++attempt) {
    inst.params = random_params(d, n, seed * 7919 + attempt);
    inst.batch = random_matrix(batch_rows, d, seed * 104729 + attempt);
    if (topk_margin(inst.params, inst.batch, inst.k) >= min_margin) return inst;
  }
}

}  // namespace saekit::testing
