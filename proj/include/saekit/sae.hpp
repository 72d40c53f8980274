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
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "saekit/error.hpp"
#include "saekit/geometric_median.hpp"
#include "saekit/tensor.hpp"
#include "saekit/topk.hpp"

namespace saekit {

struct SaeConfig {
  std::size_t d = 0;
  std::size_t n = 32768;
  std::size_t k = 32;
  double lr = 5e-4;
  std::size_t batch_size = 32768;
  std::size_t warmup_steps = 500;
  std::size_t total_steps = 0;
  std::uint64_t seed = 0;

  // Throws kInvalidArgument naming the offending field.
  void validate() const {
    auto bad = [](const char* key, const std::string& why) {
      fail(ErrorKind::kInvalidArgument, std::string(key) + ": " + why);
    };
    if (d == 0) bad("d", "must be positive");
    if (n == 0) bad("n", "must be positive");
    if (k == 0) bad("k", "must be positive");
    if (k > n) bad("k", "k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
    if (!(lr > 0.0) || !std::isfinite(lr)) bad("lr", "must be a positive finite number");
    if (batch_size == 0) bad("batch_size", "must be at least 1");
  }
};

// TopK sparse autoencoder parameters. The decoder is stored column-major so
// each dictionary atom is contiguous; on disk it is row-major d x n.
template <typename Scalar>
struct SaeParams {
  RowMatrix<Scalar> w_enc;  // n x d
  ColMatrix<Scalar> w_dec;  // d x n
  Vector<Scalar> b_pre;     // d

  Eigen::Index d() const { return b_pre.size(); }
  Eigen::Index n() const { return w_enc.rows(); }

  void validate() const {
    require(w_enc.cols() == d() && w_dec.rows() == d() && w_dec.cols() == n(),
            ErrorKind::kDimensionMismatch, "SaeParams: inconsistent matrix shapes");
    require(w_enc.allFinite() && w_dec.allFinite() && b_pre.allFinite(), ErrorKind::kNumeric,
            "SaeParams: non-finite parameter");
  }

  template <typename To>
  SaeParams<To> cast() const {
    return {w_enc.template cast<To>(), w_dec.template cast<To>(), b_pre.template cast<To>()};
  }

  bool operator==(const SaeParams& o) const {
    return w_enc == o.w_enc && w_dec == o.w_dec && b_pre == o.b_pre;
  }
};

// k selected (index, value) pairs per example, row-major B x k.
template <typename Scalar>
struct SparseCodes {
  std::size_t rows = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> index;
  std::vector<Scalar> value;

  std::span<const std::uint32_t> indices_of(std::size_t row) const {
    return {index.data() + row * k, k};
  }
  std::span<const Scalar> values_of(std::size_t row) const { return {value.data() + row * k, k}; }
};

template <typename Scalar>
RowMatrix<Scalar> pre_activations(const SaeParams<Scalar>& p, const RowMatrix<Scalar>& x) {
  require_dim(x.cols(), p.d(), "encode");
  RowMatrix<Scalar> centered = x.rowwise() - p.b_pre.transpose();
  RowMatrix<Scalar> pre(x.rows(), p.n());
  pre.noalias() = centered * p.w_enc.transpose();
  return pre;
}

// Batched encoder: TopK of W_enc (x - b_pre) for every row of x.
template <typename Scalar>
SparseCodes<Scalar> encode_batch(const SaeParams<Scalar>& p, const RowMatrix<Scalar>& x,
                                 std::size_t k) {
  check_topk_args(static_cast<std::size_t>(p.n()), k);
  require_finite(x, "encode");
  const RowMatrix<Scalar> pre = pre_activations(p, x);
  SparseCodes<Scalar> codes;
  codes.rows = static_cast<std::size_t>(x.rows());
  codes.k = k;
  codes.index.resize(codes.rows * k);
  codes.value.resize(codes.rows * k);
  std::vector<std::uint32_t> scratch, idx;
  const auto n = static_cast<std::size_t>(p.n());
  for (std::size_t r = 0; r < codes.rows; ++r) {
    std::span<const Scalar> row(pre.data() + r * n, n);
    select_topk(row, k, scratch, idx);
    for (std::size_t j = 0; j < k; ++j) {
      codes.index[r * k + j] = idx[j];
      codes.value[r * k + j] = row[idx[j]];
    }
  }
  return codes;
}

template <typename Scalar>
Vector<Scalar> encode(const SaeParams<Scalar>& p, const Vector<Scalar>& x, std::size_t k) {
  require_dim(x.size(), p.d(), "encode");
  require_finite(x, "encode");
  const Vector<Scalar> pre = p.w_enc * (x - p.b_pre);
  return topk(pre, k);
}

template <typename Scalar>
Vector<Scalar> decode(const SaeParams<Scalar>& p, const Vector<Scalar>& f) {
  require_dim(f.size(), p.n(), "decode");
  require_finite(f, "decode");
  Vector<Scalar> out = p.b_pre;
  for (Eigen::Index j = 0; j < f.size(); ++j) {
    if (f[j] != Scalar(0)) out.noalias() += f[j] * p.w_dec.col(j);
  }
  return out;
}

// Reconstruction of each coded row, including b_pre.
template <typename Scalar>
RowMatrix<Scalar> decode_batch(const SaeParams<Scalar>& p, const SparseCodes<Scalar>& codes) {
  RowMatrix<Scalar> out(static_cast<Eigen::Index>(codes.rows), p.d());
  for (std::size_t r = 0; r < codes.rows; ++r) {
    Vector<Scalar> acc = p.b_pre;
    auto idx = codes.indices_of(r);
    auto val = codes.values_of(r);
    for (std::size_t j = 0; j < codes.k; ++j) acc.noalias() += val[j] * p.w_dec.col(idx[j]);
    out.row(static_cast<Eigen::Index>(r)) = acc.transpose();
  }
  return out;
}

// Per-example squared reconstruction error ||x - x_hat||^2 (summed, not averaged).
template <typename DerivedA, typename DerivedB>
double mse_loss(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& x_hat) {
  require(x.rows() == x_hat.rows() && x.cols() == x_hat.cols(), ErrorKind::kInvalidArgument,
          "mse_loss: dimension mismatch");
  require(x.allFinite() && x_hat.allFinite(), ErrorKind::kInvalidArgument,
          "mse_loss: non-finite input");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double diff = static_cast<double>(x(i, j)) - static_cast<double>(x_hat(i, j));
      sum += diff * diff;
    }
  }
  return sum;
}

// Mean over rows of the per-example loss.
template <typename Scalar>
double batch_mse(const SaeParams<Scalar>& p, const RowMatrix<Scalar>& x, std::size_t k) {
  require(x.rows() >= 1, ErrorKind::kInvalidArgument, "batch_mse: empty batch");
  const auto codes = encode_batch(p, x, k);
  const auto recon = decode_batch(p, codes);
  return mse_loss(x, recon) / static_cast<double>(x.rows());
}

// Uniform subsample of at most `limit` rows without replacement, order preserved.
template <typename Scalar>
RowMatrix<Scalar> subsample_rows(const RowMatrix<Scalar>& x, std::size_t limit,
                                 std::uint64_t seed) {
  const auto rows = static_cast<std::size_t>(x.rows());
  if (rows <= limit) return x;
  std::vector<std::uint32_t> order(rows);
  for (std::size_t i = 0; i < rows; ++i) order[i] = static_cast<std::uint32_t>(i);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < limit; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, rows - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  order.resize(limit);
  std::sort(order.begin(), order.end());
  RowMatrix<Scalar> out(static_cast<Eigen::Index>(limit), x.cols());
  for (std::size_t i = 0; i < limit; ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(order[i]);
  return out;
}

inline constexpr std::size_t kGeometricMedianSampleLimit = 100000;

// Gaussian encoder rows scaled to unit norm, decoder tied to the encoder
// transpose, b_pre at the geometric median of (a subsample of) `sample`.
template <typename Scalar>
SaeParams<Scalar> init_params(const SaeConfig& cfg, const RowMatrix<Scalar>& sample) {
  cfg.validate();
  require(sample.rows() >= 1, ErrorKind::kInvalidArgument, "init_params: empty sample");
  require_dim(sample.cols(), static_cast<Eigen::Index>(cfg.d), "init_params sample");

  const auto n = static_cast<Eigen::Index>(cfg.n);
  const auto d = static_cast<Eigen::Index>(cfg.d);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  RowMatrix<double> enc(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    double norm = 0.0;
    while (norm == 0.0) {
      for (Eigen::Index j = 0; j < d; ++j) enc(i, j) = gauss(rng);
      norm = enc.row(i).norm();
    }
    enc.row(i) /= norm;
  }

  SaeParams<Scalar> p;
  p.w_enc = enc.cast<Scalar>();
  p.w_dec = p.w_enc.transpose();
  const auto median_sample = subsample_rows(sample, kGeometricMedianSampleLimit, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  p.b_pre = geometric_median(median_sample).template cast<Scalar>();
  return p;
}

}  // namespace saekit
