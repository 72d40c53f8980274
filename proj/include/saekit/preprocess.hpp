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
#include <span>
#include <vector>

#include "saekit/error.hpp"
#include "saekit/shard.hpp"
#include "saekit/tensor.hpp"

namespace saekit {

inline constexpr std::size_t kMaxSequenceTokens = 64;

struct PreprocessResult {
  Document document;                 // language left as kOther; callers tag it
  std::size_t dropped_zero_rows = 0;
};

// First 64 positions, BOS row dropped, each remaining row scaled to unit L2
// norm. Zero-norm rows are removed together with their token id.
inline PreprocessResult preprocess_sequence(const RowMatrix<float>& raw,
                                            std::span<const std::uint32_t> token_ids) {
  require(raw.rows() == static_cast<Eigen::Index>(token_ids.size()), ErrorKind::kInvalidArgument,
          "preprocess_sequence: token_ids length differs from row count");
  if (raw.rows() < 2) {
    fail(ErrorKind::kDocumentTooShort,
         "preprocess_sequence: need BOS plus at least one token, got " +
             std::to_string(raw.rows()) + " rows");
  }
  require_finite(raw, "preprocess_sequence", ErrorKind::kFormat);

  const auto end = std::min<Eigen::Index>(raw.rows(), kMaxSequenceTokens);
  PreprocessResult out;
  out.document.activations.resize(end - 1, raw.cols());
  Eigen::Index kept = 0;
  for (Eigen::Index r = 1; r < end; ++r) {
    const double norm = raw.row(r).template cast<double>().norm();
    if (norm == 0.0) {
      ++out.dropped_zero_rows;
      continue;
    }
    out.document.activations.row(kept) =
        (raw.row(r).template cast<double>() / norm).template cast<float>();
    out.document.token_ids.push_back(token_ids[static_cast<std::size_t>(r)]);
    ++kept;
  }
  out.document.activations.conservativeResize(kept, raw.cols());
  return out;
}

}  // namespace saekit
