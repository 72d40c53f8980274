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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "saekit/activation_buffer.hpp"
#include "saekit/adam.hpp"
#include "saekit/error.hpp"
#include "saekit/gradients.hpp"
#include "saekit/sae.hpp"

namespace saekit {

struct TrainMetrics {
  std::size_t step = 0;
  double mse = 0.0;
  std::size_t dead_feature_count = 0;
  double lr_effective = 0.0;
};

inline nlohmann::ordered_json to_json(const TrainMetrics& m) {
  return {{"step", m.step},
          {"mse", m.mse},
          {"dead_feature_count", m.dead_feature_count},
          {"lr_effective", m.lr_effective}};
}

inline void write_metrics_jsonl(std::ostream& out, const std::vector<TrainMetrics>& metrics) {
  for (const auto& m : metrics) out << to_json(m).dump() << '\n';
}

struct TrainOptions {
  std::size_t metrics_interval = 100;
  // A feature counts as dead if TopK has not selected it in this many steps.
  std::size_t dead_window = 1000;
  const RowMatrix<float>* validation = nullptr;
};

template <typename Scalar>
struct TrainResult {
  SaeParams<Scalar> params;
  std::vector<TrainMetrics> metrics;
  std::size_t steps_completed = 0;
  std::optional<double> initial_validation_mse;
  std::optional<double> final_validation_mse;
};

// Linear ramp from 0 to lr over the first warmup_steps (1-based step).
inline double warmup_lr(double lr, std::size_t step, std::size_t warmup_steps) {
  if (warmup_steps == 0 || step >= warmup_steps) return lr;
  return lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
}

template <typename Scalar>
double validation_mse(const SaeParams<Scalar>& p, const RowMatrix<float>& val, std::size_t k) {
  double sum = 0.0;
  constexpr Eigen::Index kChunk = 4096;
  for (Eigen::Index start = 0; start < val.rows(); start += kChunk) {
    const auto rows = std::min(kChunk, val.rows() - start);
    const RowMatrix<Scalar> x = val.middleRows(start, rows).template cast<Scalar>();
    sum += batch_mse(p, x, k) * static_cast<double>(rows);
  }
  return sum / static_cast<double>(val.rows());
}

template <typename Scalar>
TrainResult<Scalar> train(const SaeConfig& cfg, BatchSource& source,
                          const RowMatrix<float>& init_sample, const TrainOptions& opts = {}) {
  cfg.validate();
  require(opts.metrics_interval >= 1, ErrorKind::kInvalidArgument,
          "metrics_interval: must be at least 1");
  TrainResult<Scalar> result;
  result.params = init_params<Scalar>(cfg, init_sample.template cast<Scalar>());
  if (opts.validation && opts.validation->rows() > 0) {
    require_dim(opts.validation->cols(), static_cast<Eigen::Index>(cfg.d), "validation set");
    result.initial_validation_mse = validation_mse(result.params, *opts.validation, cfg.k);
  }

  auto state = AdamState<Scalar>::for_params(result.params);
  // Step at which each feature was last selected; 0 means never.
  std::vector<std::size_t> last_active(cfg.n, 0);
  for (std::size_t step = 1; step <= cfg.total_steps; ++step) {
    auto batch = source.next_batch(cfg.batch_size);
    if (!batch) {
      throw TruncatedTrainingError("train: batch source exhausted before total_steps=" +
                                       std::to_string(cfg.total_steps),
                                   step - 1);
    }
    require_dim(batch->cols(), static_cast<Eigen::Index>(cfg.d), "training batch");
    const RowMatrix<Scalar> x = batch->template cast<Scalar>();
    const double lr_eff = warmup_lr(cfg.lr, step, cfg.warmup_steps);
    BackwardResult<Scalar> fb;
    try {
      fb = backward(result.params, x, cfg.k);
      adam_step(result.params, fb.grads, state, lr_eff, step);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNumeric) throw;
      fail(ErrorKind::kNumeric, std::string(e.what()) + " at step " + std::to_string(step));
    }
    for (auto f : fb.codes.index) last_active[f] = step;
    result.steps_completed = step;

    if (step % opts.metrics_interval == 0 || step == cfg.total_steps) {
      const std::size_t window_start = step > opts.dead_window ? step - opts.dead_window : 0;
      std::size_t dead = 0;
      for (auto s : last_active) dead += (s == 0 || s <= window_start) ? 1 : 0;
      result.metrics.push_back({step, fb.loss, dead, lr_eff});
    }
  }

  if (opts.validation && opts.validation->rows() > 0) {
    result.final_validation_mse = validation_mse(result.params, *opts.validation, cfg.k);
  }
  return result;
}

inline const std::vector<double>& default_lr_candidates() {
  static const std::vector<double> kCandidates{1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3};
  return kCandidates;
}

struct LrSearchEntry {
  double lr = 0.0;
  double validation_mse = 0.0;
};

template <typename Scalar>
struct LrSearchResult {
  double best_lr = 0.0;
  std::vector<LrSearchEntry> table;
  TrainResult<Scalar> best;
};

// Trains one SAE per candidate learning rate, each from the same seed and a
// freshly constructed (identically ordered) batch source, and keeps the one
// with the lowest validation loss. Ties go to the earlier candidate.
template <typename Scalar>
LrSearchResult<Scalar> lr_grid_search(const SaeConfig& cfg, const std::vector<double>& candidates,
                                      const std::function<std::unique_ptr<BatchSource>()>& make_source,
                                      const RowMatrix<float>& init_sample,
                                      const RowMatrix<float>& validation,
                                      TrainOptions opts = {}) {
  require(!candidates.empty(), ErrorKind::kInvalidArgument, "lr_search.candidates: empty");
  require(validation.rows() > 0, ErrorKind::kInvalidArgument,
          "lr_search: validation set is empty");
  opts.validation = &validation;
  LrSearchResult<Scalar> out;
  double best = std::numeric_limits<double>::infinity();
  for (double lr : candidates) {
    SaeConfig run = cfg;
    run.lr = lr;
    std::ostringstream tag;
    tag << "lr=" << lr << ": ";
    TrainResult<Scalar> trained;
    try {
      auto source = make_source();
      trained = train<Scalar>(run, *source, init_sample, opts);
    } catch (const TruncatedTrainingError& e) {
      throw TruncatedTrainingError(tag.str() + e.message(), e.steps_completed());
    } catch (const Error& e) {
      throw Error(e.kind(), tag.str() + e.what());
    }
    const double loss = *trained.final_validation_mse;
    out.table.push_back({lr, loss});
    if (loss < best) {
      best = loss;
      out.best_lr = lr;
      out.best = std::move(trained);
    }
  }
  return out;
}

}  // namespace saekit
