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
#include <string>
#include <vector>

#include "saekit/error.hpp"
#include "saekit/tensor.hpp"

namespace saekit {

// Selects the indices of the k largest entries of `values`, ordered by value
// descending with ties going to the lower index. `scratch` is reused between
// calls to avoid reallocating; `out` receives exactly k indices.
template <typename Scalar>
void select_topk(std::span<const Scalar> values, std::size_t k,
                 std::vector<std::uint32_t>& scratch, std::vector<std::uint32_t>& out) {
  const std::size_t n = values.size();
  scratch.resize(n);
  std::iota(scratch.begin(), scratch.end(), 0u);
  auto before = [&](std::uint32_t a, std::uint32_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  };
  if (k < n) {
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k),
                     scratch.end(), before);
  }
  std::sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), before);
  out.assign(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k));
}

inline void check_topk_args(std::size_t n, std::size_t k) {
  if (k < 1 || k > n) {
    fail(ErrorKind::kInvalidArgument,
         "topk: k=" + std::to_string(k) + " must satisfy 1 <= k <= n=" + std::to_string(n));
  }
}

// Keeps the k largest entries of v (ties to the lowest index), zeroing the rest.
template <typename Scalar>
Vector<Scalar> topk(const Vector<Scalar>& v, std::size_t k) {
  check_topk_args(static_cast<std::size_t>(v.size()), k);
  require_finite(v, "topk");
  std::vector<std::uint32_t> scratch, idx;
  select_topk<Scalar>(std::span<const Scalar>(v.data(), static_cast<std::size_t>(v.size())), k,
                      scratch, idx);
  Vector<Scalar> out = Vector<Scalar>::Zero(v.size());
  for (auto i : idx) out[i] = v[i];
  return out;
}

}  // namespace saekit
