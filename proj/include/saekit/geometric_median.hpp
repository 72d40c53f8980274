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
#include <limits>
#include <optional>

#include "saekit/error.hpp"
#include "saekit/tensor.hpp"

namespace saekit {

struct WeiszfeldOptions {
  double tol = 1e-8;
  std::size_t max_iter = 200;
  // Distances below this are clamped so an iterate sitting on a data point
  // keeps a finite (large) weight instead of dividing by zero.
  double min_distance = 1e-12;
};

// Weiszfeld iteration for the point minimising the summed Euclidean distance
// to the rows of `points`. Starts from the centroid.
template <typename Scalar>
Vector<double> geometric_median(const RowMatrix<Scalar>& points,
                                const WeiszfeldOptions& opts = {}) {
  require(points.rows() >= 1, ErrorKind::kInvalidArgument,
          "geometric_median: at least one point is required");
  require_finite(points, "geometric_median");
  const RowMatrix<double> x = points.template cast<double>();
  if (x.rows() == 1) return x.row(0).transpose();

  Vector<double> y = x.colwise().mean().transpose();
  Vector<double> next(x.cols());
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    next.setZero();
    double weight_sum = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double dist = std::max((x.row(i).transpose() - y).norm(), opts.min_distance);
      const double w = 1.0 / dist;
      next.noalias() += w * x.row(i).transpose();
      weight_sum += w;
    }
    next /= weight_sum;
    const double moved = (next - y).norm();
    y.swap(next);
    if (moved < opts.tol) break;
  }
  return y;
}

}  // namespace saekit
