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

#include <cmath>
#include <cstddef>
#include <span>

#include "saekit/error.hpp"
#include "saekit/gradients.hpp"
#include "saekit/sae.hpp"

namespace saekit {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update over a flat parameter block; t is 1-based.
template <typename Scalar>
void adam_update(std::span<Scalar> param, std::span<const Scalar> grad, std::span<Scalar> m,
                 std::span<Scalar> v, double lr, std::size_t t, const AdamHyper& h = {}) {
  require(t >= 1, ErrorKind::kInvalidArgument, "adam: t must be >= 1");
  require(lr > 0.0, ErrorKind::kInvalidArgument, "adam: lr must be positive");
  require(param.size() == grad.size() && m.size() == grad.size() && v.size() == grad.size(),
          ErrorKind::kInvalidArgument, "adam: block size mismatch");
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = static_cast<double>(grad[i]);
    if (!std::isfinite(g)) fail(ErrorKind::kNumeric, "adam: non-finite gradient");
    const double mi = h.beta1 * static_cast<double>(m[i]) + (1.0 - h.beta1) * g;
    const double vi = h.beta2 * static_cast<double>(v[i]) + (1.0 - h.beta2) * g * g;
    m[i] = static_cast<Scalar>(mi);
    v[i] = static_cast<Scalar>(vi);
    const double step = lr * (mi / c1) / (std::sqrt(vi / c2) + h.eps);
    param[i] = static_cast<Scalar>(static_cast<double>(param[i]) - step);
  }
}

template <typename Scalar>
struct AdamState {
  SaeGradients<Scalar> m;
  SaeGradients<Scalar> v;

  static AdamState for_params(const SaeParams<Scalar>& p) {
    return {SaeGradients<Scalar>::zeros_like(p), SaeGradients<Scalar>::zeros_like(p)};
  }
};

template <typename Scalar>
void normalize_decoder_columns(SaeParams<Scalar>& p) {
  for (Eigen::Index j = 0; j < p.w_dec.cols(); ++j) {
    const double norm = static_cast<double>(p.w_dec.col(j).norm());
    require(norm > 0.0 && std::isfinite(norm), ErrorKind::kNumeric,
            "decoder column " + std::to_string(j) + " has zero or non-finite norm");
    p.w_dec.col(j) /= static_cast<Scalar>(norm);
  }
}

namespace detail {
template <typename M>
std::span<typename M::Scalar> flat(M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
template <typename M>
std::span<const typename M::Scalar> flat(const M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
}  // namespace detail

// Adam over all three parameter blocks, then every decoder column is rescaled
// to unit L2 norm.
template <typename Scalar>
void adam_step(SaeParams<Scalar>& p, const SaeGradients<Scalar>& g, AdamState<Scalar>& state,
               double lr, std::size_t t, const AdamHyper& h = {}) {
  using detail::flat;
  adam_update<Scalar>(flat(p.w_enc), flat(g.w_enc), flat(state.m.w_enc), flat(state.v.w_enc), lr,
                      t, h);
  adam_update<Scalar>(flat(p.w_dec), flat(g.w_dec), flat(state.m.w_dec), flat(state.v.w_dec), lr,
                      t, h);
  adam_update<Scalar>(flat(p.b_pre), flat(g.b_pre), flat(state.m.b_pre), flat(state.v.b_pre), lr,
                      t, h);
  normalize_decoder_columns(p);
}

}  // namespace saekit
