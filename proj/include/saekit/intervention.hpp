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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "saekit/atomic_file.hpp"
#include "saekit/binary_io.hpp"
#include "saekit/checkpoint.hpp"
#include "saekit/report.hpp"
#include "saekit/shard.hpp"

namespace saekit {

inline constexpr double kDefaultInterventionAlpha = 0.1;
inline constexpr std::size_t kDefaultInterventionFeatures = 5000;

inline const char* plan_category_name(FeatureCategory c) {
  return c == FeatureCategory::kMixed ? "Bilingual" : to_string(c);
}

struct InterventionPlan {
  std::uint32_t layer = 0;
  double alpha = kDefaultInterventionAlpha;
  std::size_t m = kDefaultInterventionFeatures;
  FeatureCategory category = FeatureCategory::kMixed;
  std::vector<std::uint32_t> mask;  // ascending feature indices
  std::string selection_criterion = "event_count_desc";
  std::string source_report;

  bool operator==(const InterventionPlan&) const = default;
};

struct FeatureSelection {
  std::vector<std::uint32_t> mask;  // ascending
  std::optional<std::string> warning;
};

// The m features of `category` with the most events (ties to the lower
// feature index). Fewer than m candidates yields all of them plus a warning.
inline FeatureSelection select_features(const AnalysisReport& report, FeatureCategory category,
                                        std::size_t m) {
  require(m >= 1, ErrorKind::kInvalidArgument, "m: must be at least 1");
  std::vector<const FeatureProfile*> pool;
  for (const auto& p : report.profiles) {
    if (!p.dead() && p.category == category) pool.push_back(&p);
  }
  if (pool.empty()) {
    fail(ErrorKind::kEmptyMask,
         std::string("select_features: report has no ") + to_string(category) + " features");
  }
  std::sort(pool.begin(), pool.end(), [](const FeatureProfile* a, const FeatureProfile* b) {
    if (a->event_count != b->event_count) return a->event_count > b->event_count;
    return a->feature < b->feature;
  });
  FeatureSelection sel;
  const std::size_t take = std::min(m, pool.size());
  if (take < m) {
    sel.warning = "requested m=" + std::to_string(m) + " but only " + std::to_string(take) + " " +
                  to_string(category) + " features exist";
  }
  for (std::size_t i = 0; i < take; ++i) sel.mask.push_back(pool[i]->feature);
  std::sort(sel.mask.begin(), sel.mask.end());
  return sel;
}

// Throws kConsistency if the plan violates its invariants against `report`.
inline void validate_plan(const InterventionPlan& plan, const AnalysisReport& report) {
  require(plan.alpha >= 0.0, ErrorKind::kInvalidArgument, "alpha: must be non-negative");
  require(plan.mask.size() <= plan.m, ErrorKind::kConsistency, "mask: larger than m");
  for (auto f : plan.mask) {
    if (f >= report.profiles.size() || report.profiles[f].category != plan.category) {
      fail(ErrorKind::kConsistency,
           "mask: feature " + std::to_string(f) + " is not " + to_string(plan.category));
    }
  }
}

inline nlohmann::ordered_json plan_to_json(const InterventionPlan& plan) {
  return {{"layer", plan.layer},
          {"alpha", plan.alpha},
          {"m", plan.m},
          {"category", plan_category_name(plan.category)},
          {"mask", plan.mask},
          {"selection_criterion", plan.selection_criterion},
          {"source_report", plan.source_report}};
}

inline InterventionPlan plan_from_json(const nlohmann::json& j) {
  InterventionPlan plan;
  try {
    plan.layer = j.at("layer").get<std::uint32_t>();
    plan.alpha = j.at("alpha").get<double>();
    plan.m = j.at("m").get<std::size_t>();
    plan.category = category_from_string(j.at("category").get<std::string>());
    plan.mask = j.at("mask").get<std::vector<std::uint32_t>>();
    plan.selection_criterion = j.value("selection_criterion", "");
    plan.source_report = j.value("source_report", "");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("plan: ") + e.what());
  }
  require(plan.alpha >= 0.0, ErrorKind::kInvalidArgument, "alpha: must be non-negative");
  require(std::is_sorted(plan.mask.begin(), plan.mask.end()) &&
              std::adjacent_find(plan.mask.begin(), plan.mask.end()) == plan.mask.end(),
          ErrorKind::kFormat, "plan: mask must be strictly ascending");
  return plan;
}

inline void save_plan(const std::filesystem::path& path, const InterventionPlan& plan) {
  write_atomically(path, [&](std::ostream& out) { out << plan_to_json(plan).dump(2) << '\n'; });
}

inline InterventionPlan load_plan(const std::filesystem::path& path) {
  auto in = binary::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, path.string() + ": invalid JSON: " + e.what());
  }
  return plan_from_json(j);
}

// alpha * W_dec (mask . E(x)) per row. b_pre is added (scaled by alpha) only
// with include_bias. Rows of x_full must already be unit-normalized.
inline RowMatrix<float> intervention_delta(const Checkpoint& sae, const RowMatrix<float>& x_full,
                                           std::span<const std::uint32_t> mask, double alpha,
                                           bool include_bias = false) {
  require_dim(x_full.cols(), sae.params.d(), "intervention_delta");
  require(alpha >= 0.0 && std::isfinite(alpha), ErrorKind::kInvalidArgument,
          "alpha: must be a non-negative finite number");
  const auto n = static_cast<std::size_t>(sae.params.n());
  std::vector<bool> in_mask(n, false);
  for (auto f : mask) {
    require(f < n, ErrorKind::kInvalidArgument,
            "mask: feature index " + std::to_string(f) + " out of range");
    in_mask[f] = true;
  }
  RowMatrix<float> delta = RowMatrix<float>::Zero(x_full.rows(), x_full.cols());
  if (alpha == 0.0 || mask.empty() || x_full.rows() == 0) return delta;

  const auto codes = encode_batch(sae.params, x_full, sae.k);
  const Vector<double> bias = sae.params.b_pre.cast<double>();
  Vector<double> acc(sae.params.d());
  for (std::size_t r = 0; r < codes.rows; ++r) {
    acc.setZero();
    auto idx = codes.indices_of(r);
    auto val = codes.values_of(r);
    for (std::size_t j = 0; j < codes.k; ++j) {
      if (!in_mask[idx[j]]) continue;
      acc.noalias() += static_cast<double>(val[j]) * sae.params.w_dec.col(idx[j]).cast<double>();
    }
    if (include_bias) acc += bias;
    delta.row(static_cast<Eigen::Index>(r)) = (alpha * acc).cast<float>().transpose();
  }
  require(delta.allFinite(), ErrorKind::kNumeric, "intervention_delta: non-finite delta");
  return delta;
}

// ---- delta shards ----------------------------------------------------------

inline constexpr std::string_view kDeltaMagic{"SAED1\0", 6};
inline constexpr std::uint32_t kDeltaVersion = 1;

// Per-token deltas aligned one-to-one with a source activation shard.
struct DeltaShard {
  std::uint32_t version = kDeltaVersion;
  std::uint32_t d = 0;
  std::uint32_t layer = 0;
  float alpha = 0.0f;
  std::vector<Document> docs;  // activations hold the deltas

  bool operator==(const DeltaShard&) const = default;
};

inline void write_delta_shard(const std::filesystem::path& path, const DeltaShard& shard) {
  write_atomically(path, [&](std::ostream& out) {
    binary::Writer w(out);
    w.bytes(kDeltaMagic);
    w.u32(shard.version);
    w.u32(shard.d);
    w.u64(shard.docs.size());
    w.u32(shard.layer);
    w.f32(shard.alpha);
    for (const auto& doc : shard.docs) {
      detail::write_document_payload(w, doc, shard.d, doc.activations);
    }
  });
}

inline DeltaShard read_delta_shard(const std::filesystem::path& path) {
  auto in = binary::open_input(path);
  binary::Reader r(in, path.string());
  const auto size = std::filesystem::file_size(path);
  r.expect_magic(kDeltaMagic);
  DeltaShard shard;
  shard.version = r.u32("version");
  if (shard.version != kDeltaVersion) {
    fail(ErrorKind::kFormat, path.string() + ": unsupported delta shard version");
  }
  shard.d = r.u32("d");
  const auto n_docs = r.u64("n_docs");
  shard.layer = r.u32("layer");
  shard.alpha = r.f32("alpha");
  for (std::uint64_t i = 0; i < n_docs; ++i) {
    shard.docs.push_back(detail::read_document_payload(r, shard.d, size));
  }
  if (!r.at_end()) fail(ErrorKind::kFormat, path.string() + ": trailing bytes after last document");
  return shard;
}

// Computes the delta for every row of `source`, preserving document order,
// language tags and token ids.
inline DeltaShard compute_delta_shard(const InterventionPlan& plan, const Checkpoint& sae,
                                      const ActivationShard& source, bool include_bias = false) {
  require(source.d == static_cast<std::uint32_t>(sae.params.d()), ErrorKind::kDimensionMismatch,
          "delta: shard d=" + std::to_string(source.d) + " does not match SAE d=" +
              std::to_string(sae.params.d()));
  DeltaShard out;
  out.d = source.d;
  out.layer = plan.layer;
  out.alpha = static_cast<float>(plan.alpha);
  out.docs.reserve(source.docs.size());
  for (std::size_t i = 0; i < source.docs.size(); ++i) {
    const auto& doc = source.docs[i];
    check_normalized(doc, "delta source doc " + std::to_string(i));
    Document delta;
    delta.language = doc.language;
    delta.token_ids = doc.token_ids;
    delta.activations = doc.size() == 0
                            ? RowMatrix<float>(0, source.d)
                            : intervention_delta(sae, doc.activations, plan.mask, plan.alpha,
                                                 include_bias);
    out.docs.push_back(std::move(delta));
  }
  return out;
}

// Throws kConsistency naming the first document / position that does not line up.
inline void verify_alignment(const DeltaShard& delta, const ActivationShard& source) {
  require(delta.d == source.d, ErrorKind::kConsistency, "alignment: d differs");
  require(delta.docs.size() == source.docs.size(), ErrorKind::kConsistency,
          "alignment: document count differs");
  for (std::size_t i = 0; i < source.docs.size(); ++i) {
    const auto& a = delta.docs[i];
    const auto& b = source.docs[i];
    if (a.token_ids != b.token_ids || a.language != b.language ||
        a.activations.rows() != b.activations.rows()) {
      fail(ErrorKind::kConsistency, "alignment: doc " + std::to_string(i) + " differs");
    }
  }
}

inline DeltaShard emit_delta_shard(const InterventionPlan& plan, const Checkpoint& sae,
                                   const std::filesystem::path& source_shard,
                                   const std::filesystem::path& out_path,
                                   bool include_bias = false) {
  const auto source = read_shard(source_shard, static_cast<std::uint32_t>(sae.params.d()));
  auto delta = compute_delta_shard(plan, sae, source, include_bias);
  verify_alignment(delta, source);
  write_delta_shard(out_path, delta);
  return delta;
}

}  // namespace saekit
