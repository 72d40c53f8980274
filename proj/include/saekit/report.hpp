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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "saekit/atomic_file.hpp"
#include "saekit/clustering.hpp"
#include "saekit/embeddings.hpp"
#include "saekit/events.hpp"
#include "saekit/metrics.hpp"

namespace saekit {

struct FeatureProfile {
  std::uint32_t feature = 0;
  double max_activation = 0.0;
  std::size_t event_count = 0;
  TokenDistribution f_token;
  std::optional<LanguageProbability> language;
  std::optional<FeatureCategory> category;
  double h_token = 0.0;
  double h_semantic = 0.0;
  double r_mono = 0.0;
  double span_mean = 0.0;

  bool dead() const { return event_count == 0; }
};

struct ReportAggregates {
  std::size_t n_features = 0;
  std::size_t dead_count = 0;
  std::size_t undefined_language_count = 0;
  // English, Japanese, Mixed shares among features with a category.
  std::optional<std::array<double, 3>> category_proportions;
  std::optional<double> mean_r_mono;
  std::optional<double> mean_span_length;
  std::string layer;
  std::string checkpoint;
};

struct AnalysisReport {
  std::vector<FeatureProfile> profiles;
  ReportAggregates aggregates;
};

struct ReportOptions {
  double activation_ratio = kActivationCollectionRatio;
  double cluster_threshold = kSemanticSimilarityThreshold;
  std::size_t cluster_token_cap = kClusterTokenCap;
  std::size_t top_tokens = 10;
  std::string layer;
  std::string checkpoint;
};

inline FeatureProfile profile_feature(std::uint32_t feature, float max_activation,
                                      std::span<const FeatureEvent> events,
                                      const EmbeddingTable& embeddings,
                                      const ReportOptions& opts = {}) {
  FeatureProfile p;
  p.feature = feature;
  p.max_activation = max_activation;
  p.event_count = events.size();
  auto dist = token_attribution(events);
  if (!dist) return p;
  p.f_token = std::move(*dist);
  p.language = language_probability(events);
  if (p.language) p.category = classify_feature(p.language->p_en, p.language->p_ja);
  p.h_token = token_entropy(p.f_token);
  const auto ranked = rank_tokens(p.f_token);
  const auto clusters =
      semantic_clusters(ranked, embeddings, opts.cluster_threshold, opts.cluster_token_cap);
  p.h_semantic = semantic_entropy(p.f_token, clusters);
  p.r_mono = monosemanticity(p.h_token, p.h_semantic);
  p.span_mean = span_lengths(events).mean;
  return p;
}

inline ReportAggregates aggregate_profiles(const std::vector<FeatureProfile>& profiles) {
  ReportAggregates agg;
  agg.n_features = profiles.size();
  std::array<std::size_t, 3> per_category{};
  std::size_t categorized = 0, live = 0;
  double r_sum = 0.0, span_sum = 0.0;
  for (const auto& p : profiles) {
    if (p.dead()) {
      ++agg.dead_count;
      continue;
    }
    ++live;
    r_sum += p.r_mono;
    span_sum += p.span_mean;
    if (p.category) {
      ++per_category[static_cast<std::size_t>(*p.category)];
      ++categorized;
    } else {
      ++agg.undefined_language_count;
    }
  }
  if (categorized > 0) {
    std::array<double, 3> props{};
    for (std::size_t c = 0; c < 3; ++c) {
      props[c] = static_cast<double>(per_category[c]) / static_cast<double>(categorized);
    }
    agg.category_proportions = props;
  }
  if (live > 0) {
    agg.mean_r_mono = r_sum / static_cast<double>(live);
    agg.mean_span_length = span_sum / static_cast<double>(live);
  }
  return agg;
}

inline AnalysisReport build_report(const EncodedEvalSet& eval, const EmbeddingTable& embeddings,
                                   const ReportOptions& opts = {}) {
  const auto maxima = scan_max_activations(eval);
  const auto events = collect_events(eval, maxima, opts.activation_ratio);
  const auto grouped = group_by_feature(events, eval.n);
  AnalysisReport report;
  report.profiles.reserve(eval.n);
  for (std::size_t i = 0; i < eval.n; ++i) {
    report.profiles.push_back(
        profile_feature(static_cast<std::uint32_t>(i), maxima[i], grouped[i], embeddings, opts));
  }
  report.aggregates = aggregate_profiles(report.profiles);
  report.aggregates.layer = opts.layer;
  report.aggregates.checkpoint = opts.checkpoint;
  return report;
}

inline AnalysisReport build_report(const Checkpoint& sae, DocumentSource& eval_docs,
                                   const EmbeddingTable& embeddings,
                                   const ReportOptions& opts = {}) {
  return build_report(encode_eval_set(sae, eval_docs), embeddings, opts);
}

// ---- JSON-lines serialization ----------------------------------------------

inline nlohmann::ordered_json profile_to_json(const FeatureProfile& p, std::size_t top_tokens) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["feature"] = p.feature;
  j["max_activation"] = p.max_activation;
  j["p_en"] = p.language ? ordered_json(p.language->p_en) : ordered_json(nullptr);
  j["p_ja"] = p.language ? ordered_json(p.language->p_ja) : ordered_json(nullptr);
  j["category"] = p.category ? ordered_json(to_string(*p.category)) : ordered_json(nullptr);
  const bool live = !p.dead();
  j["h_token"] = live ? ordered_json(p.h_token) : ordered_json(nullptr);
  j["h_semantic"] = live ? ordered_json(p.h_semantic) : ordered_json(nullptr);
  j["r_mono"] = live ? ordered_json(p.r_mono) : ordered_json(nullptr);
  j["span_mean"] = live ? ordered_json(p.span_mean) : ordered_json(nullptr);
  j["event_count"] = p.event_count;
  ordered_json top = ordered_json::array();
  const auto ranked = rank_tokens(p.f_token);
  for (std::size_t i = 0; i < std::min(top_tokens, ranked.size()); ++i) {
    top.push_back({{"token_id", ranked[i]}, {"prob", p.f_token.at(ranked[i])}});
  }
  j["top_tokens"] = std::move(top);
  return j;
}

inline nlohmann::ordered_json aggregates_to_json(const ReportAggregates& a) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["aggregate"] = true;
  j["n_features"] = a.n_features;
  j["dead_count"] = a.dead_count;
  j["undefined_language_count"] = a.undefined_language_count;
  if (a.category_proportions) {
    const auto& c = *a.category_proportions;
    j["category_proportions"] = {{"English", c[0]}, {"Japanese", c[1]}, {"Mixed", c[2]}};
  } else {
    j["category_proportions"] = nullptr;
  }
  j["mean_r_mono"] = a.mean_r_mono ? ordered_json(*a.mean_r_mono) : ordered_json(nullptr);
  j["mean_span_length"] =
      a.mean_span_length ? ordered_json(*a.mean_span_length) : ordered_json(nullptr);
  j["undefined"] = !a.mean_r_mono.has_value();
  j["layer"] = a.layer;
  j["checkpoint"] = a.checkpoint;
  return j;
}

inline void write_report_jsonl(std::ostream& out, const AnalysisReport& report,
                               std::size_t top_tokens = 10) {
  for (const auto& p : report.profiles) out << profile_to_json(p, top_tokens).dump() << '\n';
  out << aggregates_to_json(report.aggregates).dump() << '\n';
}

inline void save_report(const std::filesystem::path& path, const AnalysisReport& report,
                        std::size_t top_tokens = 10) {
  write_atomically(path, [&](std::ostream& out) { write_report_jsonl(out, report, top_tokens); });
}

// Reads back a report. Only the top tokens survive the round trip, so
// f_token of a loaded profile is the truncated list.
inline AnalysisReport load_report(const std::filesystem::path& path) {
  auto in = binary::open_input(path);
  AnalysisReport report;
  std::string line;
  std::size_t line_no = 0;
  bool saw_aggregate = false;
  auto opt_double = [](const nlohmann::json& j, const char* key) -> std::optional<double> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kFormat,
           path.string() + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    try {
      if (j.value("aggregate", false)) {
        saw_aggregate = true;
        auto& a = report.aggregates;
        a.n_features = j.at("n_features").get<std::size_t>();
        a.dead_count = j.at("dead_count").get<std::size_t>();
        a.undefined_language_count = j.value("undefined_language_count", std::size_t{0});
        if (!j.at("category_proportions").is_null()) {
          const auto& c = j.at("category_proportions");
          a.category_proportions = std::array<double, 3>{c.at("English").get<double>(),
                                                         c.at("Japanese").get<double>(),
                                                         c.at("Mixed").get<double>()};
        }
        a.mean_r_mono = opt_double(j, "mean_r_mono");
        a.mean_span_length = opt_double(j, "mean_span_length");
        a.layer = j.value("layer", "");
        a.checkpoint = j.value("checkpoint", "");
        continue;
      }
      FeatureProfile p;
      p.feature = j.at("feature").get<std::uint32_t>();
      p.max_activation = j.at("max_activation").get<double>();
      p.event_count = j.at("event_count").get<std::size_t>();
      const auto p_en = opt_double(j, "p_en");
      const auto p_ja = opt_double(j, "p_ja");
      if (p_en && p_ja) p.language = LanguageProbability{*p_en, *p_ja};
      if (!j.at("category").is_null()) p.category = category_from_string(j.at("category").get<std::string>());
      p.h_token = opt_double(j, "h_token").value_or(0.0);
      p.h_semantic = opt_double(j, "h_semantic").value_or(0.0);
      p.r_mono = opt_double(j, "r_mono").value_or(0.0);
      p.span_mean = opt_double(j, "span_mean").value_or(0.0);
      for (const auto& t : j.at("top_tokens")) {
        p.f_token.emplace(t.at("token_id").get<std::uint32_t>(), t.at("prob").get<double>());
      }
      report.profiles.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kFormat,
           path.string() + ":" + std::to_string(line_no) + ": missing or mistyped field: " + e.what());
    }
  }
  if (!saw_aggregate) fail(ErrorKind::kFormat, path.string() + ": no aggregate record");
  return report;
}

}  // namespace saekit
