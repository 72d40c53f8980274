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

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>

#include "saekit/error.hpp"

namespace saekit {

// Row-major dense matrix; one activation / example per row.
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Column-major dense matrix; used where whole columns are read contiguously.
template <typename Scalar>
using ColMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const std::string& what,
                    ErrorKind kind = ErrorKind::kInvalidArgument) {
  if (!m.allFinite()) fail(kind, what + ": non-finite entry");
}

inline void require_dim(Eigen::Index got, Eigen::Index want, const std::string& what) {
  if (got != want) {
    fail(ErrorKind::kInvalidArgument, what + ": expected dimension " +
                                          std::to_string(want) + ", got " +
                                          std::to_string(got));
  }
}

}  // namespace saekit
