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

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "saekit/activation_buffer.hpp"
#include "saekit/error.hpp"
#include "saekit/intervention.hpp"
#include "saekit/sae.hpp"
#include "saekit/trainer.hpp"

namespace saekit {

struct RunPaths {
  std::optional<std::filesystem::path> shards;
  std::optional<std::filesystem::path> val_shards;
  std::optional<std::filesystem::path> eval_shards;
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> metrics;
  std::optional<std::filesystem::path> report;
  std::optional<std::filesystem::path> lr_table;
};

struct InterventionSettings {
  double alpha = kDefaultInterventionAlpha;
  std::size_t m = kDefaultInterventionFeatures;
  FeatureCategory category = FeatureCategory::kMixed;
  std::uint32_t layer = 0;
};

struct RunConfig {
  RunPaths paths;
  SaeConfig sae;
  std::size_t metrics_interval = 100;
  std::size_t dead_window = 1000;
  BufferOptions buffer;
  std::size_t epochs = 1;
  std::size_t init_sample_rows = kGeometricMedianSampleLimit;
  std::size_t validation_rows = 10000;
  std::vector<double> lr_candidates = default_lr_candidates();
  InterventionSettings intervention;
  std::uint64_t seed = 0;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::string& prefix,
                           const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      fail(ErrorKind::kInvalidArgument, prefix + key + ": unknown configuration key");
    }
  }
}

template <typename T>
void read_field(const nlohmann::json& obj, const char* key, const std::string& prefix, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::kInvalidArgument, prefix + key + ": wrong type");
  }
}

inline void read_count(const nlohmann::json& obj, const char* key, const std::string& prefix,
                       std::size_t& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    fail(ErrorKind::kInvalidArgument, prefix + key + ": must be a non-negative integer");
  }
  out = v.get<std::size_t>();
}

}  // namespace detail

// Parses the JSON run configuration. Relative paths are resolved against
// `base_dir`; SAE_SEED in the environment overrides "seed".
inline RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  using detail::read_count;
  using detail::read_field;
  if (!j.is_object()) fail(ErrorKind::kInvalidArgument, "config: top level must be an object");
  detail::reject_unknown(j, "", {"seed", "paths", "sae", "buffer", "lr_search", "intervention",
                                 "init_sample_rows", "validation_rows"});
  RunConfig cfg;
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer()) fail(ErrorKind::kInvalidArgument, "seed: must be an integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (const char* env = std::getenv("SAE_SEED"); env && *env) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (*end != '\0') fail(ErrorKind::kInvalidArgument, "SAE_SEED: not an unsigned integer");
    cfg.seed = v;
  }
  read_count(j, "init_sample_rows", "", cfg.init_sample_rows);
  read_count(j, "validation_rows", "", cfg.validation_rows);

  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    detail::reject_unknown(p, "paths.", {"shards", "val_shards", "eval_shards", "embeddings",
                                         "checkpoint", "metrics", "report", "lr_table"});
    auto path = [&](const char* key, std::optional<std::filesystem::path>& out) {
      if (!p.contains(key)) return;
      if (!p.at(key).is_string()) fail(ErrorKind::kInvalidArgument, std::string("paths.") + key + ": must be a string");
      std::filesystem::path v = p.at(key).get<std::string>();
      out = v.is_absolute() ? v : base_dir / v;
    };
    path("shards", cfg.paths.shards);
    path("val_shards", cfg.paths.val_shards);
    path("eval_shards", cfg.paths.eval_shards);
    path("embeddings", cfg.paths.embeddings);
    path("checkpoint", cfg.paths.checkpoint);
    path("metrics", cfg.paths.metrics);
    path("report", cfg.paths.report);
    path("lr_table", cfg.paths.lr_table);
  }

  if (j.contains("sae")) {
    const auto& s = j.at("sae");
    const std::string pre = "sae.";
    detail::reject_unknown(s, pre, {"d", "n", "k", "lr", "batch_size", "warmup_steps",
                                    "total_steps", "metrics_interval", "dead_window"});
    read_count(s, "d", pre, cfg.sae.d);
    read_count(s, "n", pre, cfg.sae.n);
    read_count(s, "k", pre, cfg.sae.k);
    read_field(s, "lr", pre, cfg.sae.lr);
    read_count(s, "batch_size", pre, cfg.sae.batch_size);
    read_count(s, "warmup_steps", pre, cfg.sae.warmup_steps);
    read_count(s, "total_steps", pre, cfg.sae.total_steps);
    read_count(s, "metrics_interval", pre, cfg.metrics_interval);
    read_count(s, "dead_window", pre, cfg.dead_window);
  }
  cfg.sae.seed = cfg.seed;

  if (j.contains("buffer")) {
    const auto& b = j.at("buffer");
    const std::string pre = "buffer.";
    detail::reject_unknown(b, pre, {"capacity", "refill_threshold", "epochs"});
    read_count(b, "capacity", pre, cfg.buffer.capacity);
    read_field(b, "refill_threshold", pre, cfg.buffer.refill_threshold);
    read_count(b, "epochs", pre, cfg.epochs);
  }
  cfg.buffer.seed = cfg.seed;

  if (j.contains("lr_search")) {
    const auto& l = j.at("lr_search");
    detail::reject_unknown(l, "lr_search.", {"candidates"});
    read_field(l, "candidates", "lr_search.", cfg.lr_candidates);
  }

  if (j.contains("intervention")) {
    const auto& iv = j.at("intervention");
    const std::string pre = "intervention.";
    detail::reject_unknown(iv, pre, {"alpha", "m", "category", "layer"});
    read_field(iv, "alpha", pre, cfg.intervention.alpha);
    read_count(iv, "m", pre, cfg.intervention.m);
    if (iv.contains("category")) {
      if (!iv.at("category").is_string()) fail(ErrorKind::kInvalidArgument, pre + "category: must be a string");
      try {
        cfg.intervention.category = category_from_string(iv.at("category").get<std::string>());
      } catch (const Error&) {
        fail(ErrorKind::kInvalidArgument, pre + "category: unknown value");
      }
    }
    read_field(iv, "layer", pre, cfg.intervention.layer);
  }
  return cfg;
}

// Field-level checks shared by every command; `d` may still be 0 here (it is
// taken from the shard header when omitted).
inline void validate_run_config(const RunConfig& cfg) {
  auto bad = [](const std::string& key, const std::string& why) {
    fail(ErrorKind::kInvalidArgument, key + ": " + why);
  };
  const auto& s = cfg.sae;
  if (s.n == 0) bad("sae.n", "must be positive");
  if (s.k == 0) bad("sae.k", "must be positive");
  if (s.k > s.n) bad("sae.k", "k=" + std::to_string(s.k) + " exceeds n=" + std::to_string(s.n));
  if (!(s.lr > 0.0)) bad("sae.lr", "must be positive");
  if (s.batch_size == 0) bad("sae.batch_size", "must be at least 1");
  if (cfg.metrics_interval == 0) bad("sae.metrics_interval", "must be at least 1");
  if (cfg.buffer.capacity <= s.batch_size) bad("buffer.capacity", "must exceed sae.batch_size");
  if (!(cfg.buffer.refill_threshold > 0.0 && cfg.buffer.refill_threshold <= 1.0)) {
    bad("buffer.refill_threshold", "must be in (0, 1]");
  }
  if (cfg.epochs == 0) bad("buffer.epochs", "must be at least 1");
  if (cfg.init_sample_rows == 0) bad("init_sample_rows", "must be at least 1");
  if (cfg.lr_candidates.empty()) bad("lr_search.candidates", "must not be empty");
  for (double lr : cfg.lr_candidates) {
    if (!(lr > 0.0)) bad("lr_search.candidates", "every candidate must be positive");
  }
  if (cfg.intervention.alpha < 0.0) bad("intervention.alpha", "must be non-negative");
  if (cfg.intervention.m == 0) bad("intervention.m", "must be at least 1");
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kInvalidArgument, "config: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kInvalidArgument, "config: invalid JSON: " + std::string(e.what()));
  }
  auto cfg = parse_run_config(j, path.parent_path());
  validate_run_config(cfg);
  return cfg;
}

}  // namespace saekit
