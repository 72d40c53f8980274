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

#include "saekit/error.hpp"
#include "saekit/sae.hpp"
#include "saekit/tensor.hpp"

namespace saekit {

template <typename Scalar>
struct SaeGradients {
  RowMatrix<Scalar> w_enc;
  ColMatrix<Scalar> w_dec;
  Vector<Scalar> b_pre;

  static SaeGradients zeros_like(const SaeParams<Scalar>& p) {
    return {RowMatrix<Scalar>::Zero(p.n(), p.d()), ColMatrix<Scalar>::Zero(p.d(), p.n()),
            Vector<Scalar>::Zero(p.d())};
  }
};

template <typename Scalar>
struct BackwardResult {
  SaeGradients<Scalar> grads;
  double loss = 0.0;  // mean over the batch of ||x - x_hat||^2
  SparseCodes<Scalar> codes;
};

// Analytic gradient of the batch-mean squared reconstruction error. The TopK
// selection is held fixed, so only the k selected features of each example
// receive encoder/decoder gradient.
template <typename Scalar>
BackwardResult<Scalar> backward(const SaeParams<Scalar>& p, const RowMatrix<Scalar>& batch,
                                std::size_t k) {
  require(batch.rows() >= 1, ErrorKind::kInvalidArgument, "backward: empty batch");
  require_dim(batch.cols(), p.d(), "backward");
  require_finite(batch, "backward: batch");
  check_topk_args(static_cast<std::size_t>(p.n()), k);

  const auto rows = batch.rows();
  const RowMatrix<Scalar> centered = batch.rowwise() - p.b_pre.transpose();
  RowMatrix<Scalar> pre(rows, p.n());
  pre.noalias() = centered * p.w_enc.transpose();
  require(pre.allFinite(), ErrorKind::kNumeric, "backward: non-finite pre-activation");

  BackwardResult<Scalar> out;
  out.codes.rows = static_cast<std::size_t>(rows);
  out.codes.k = k;
  out.codes.index.resize(out.codes.rows * k);
  out.codes.value.resize(out.codes.rows * k);
  std::vector<std::uint32_t> scratch, idx;
  const auto n = static_cast<std::size_t>(p.n());

  RowMatrix<Scalar> residual(rows, p.d());
  double loss_sum = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    std::span<const Scalar> row(pre.data() + static_cast<std::size_t>(r) * n, n);
    select_topk(row, k, scratch, idx);
    Vector<Scalar> recon = p.b_pre;
    for (std::size_t j = 0; j < k; ++j) {
      const auto slot = static_cast<std::size_t>(r) * k + j;
      out.codes.index[slot] = idx[j];
      out.codes.value[slot] = row[idx[j]];
      recon.noalias() += row[idx[j]] * p.w_dec.col(idx[j]);
    }
    residual.row(r) = recon.transpose() - batch.row(r);
    loss_sum += static_cast<double>(residual.row(r).squaredNorm());
  }
  out.loss = loss_sum / static_cast<double>(rows);
  require(std::isfinite(out.loss), ErrorKind::kNumeric, "backward: non-finite reconstruction loss");

  // dL/dx_hat for the batch mean.
  const Scalar scale = Scalar(2) / static_cast<Scalar>(rows);
  out.grads = SaeGradients<Scalar>::zeros_like(p);
  Vector<Scalar> enc_bias = Vector<Scalar>::Zero(p.d());
  Vector<Scalar> upstream(p.d());
  for (Eigen::Index r = 0; r < rows; ++r) {
    upstream = scale * residual.row(r).transpose();
    out.grads.b_pre += upstream;
    auto sel = out.codes.indices_of(static_cast<std::size_t>(r));
    auto val = out.codes.values_of(static_cast<std::size_t>(r));
    for (std::size_t j = 0; j < k; ++j) {
      const auto f = static_cast<Eigen::Index>(sel[j]);
      out.grads.w_dec.col(f).noalias() += val[j] * upstream;
      const Scalar dz = p.w_dec.col(f).dot(upstream);
      out.grads.w_enc.row(f).noalias() += dz * centered.row(r);
      enc_bias.noalias() += dz * p.w_enc.row(f).transpose();
    }
  }
  out.grads.b_pre -= enc_bias;

  require(out.grads.w_enc.allFinite() && out.grads.w_dec.allFinite() &&
              out.grads.b_pre.allFinite(),
          ErrorKind::kNumeric, "backward: non-finite gradient");
  return out;
}

}  // namespace saekit
