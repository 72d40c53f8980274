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
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saekit/error.hpp"
#include "saekit/shard.hpp"

namespace saekit {

// One TopK-selected activation of `feature` at (doc, position) that reached
// the collection threshold.
struct FeatureEvent {
  std::uint32_t feature = 0;
  std::uint32_t doc = 0;
  std::uint32_t position = 0;
  std::uint32_t token_id = 0;
  float value = 0.0f;
  Language language = Language::kOther;

  bool operator==(const FeatureEvent&) const = default;
};

// f(v|i): token id -> probability. Ordered so every sum runs in token order.
using TokenDistribution = std::map<std::uint32_t, double>;

// Empirical token distribution of a feature's events; nullopt if there are none.
inline std::optional<TokenDistribution> token_attribution(std::span<const FeatureEvent> events) {
  if (events.empty()) return std::nullopt;
  std::map<std::uint32_t, std::size_t> counts;
  for (const auto& e : events) ++counts[e.token_id];
  TokenDistribution dist;
  const auto total = static_cast<double>(events.size());
  for (const auto& [token, count] : counts) dist.emplace(token, static_cast<double>(count) / total);
  return dist;
}

struct LanguageProbability {
  double p_en = 0.0;
  double p_ja = 0.0;
};

// Share of en / ja events; events from `other` documents are left out of the
// denominator. nullopt when no en/ja event exists.
inline std::optional<LanguageProbability> language_probability(
    std::span<const FeatureEvent> events) {
  std::size_t en = 0, ja = 0;
  for (const auto& e : events) {
    if (e.language == Language::kEn) ++en;
    if (e.language == Language::kJa) ++ja;
  }
  if (en + ja == 0) return std::nullopt;
  const auto total = static_cast<double>(en + ja);
  // p_ja is derived from the same counts, so p_en + p_ja == 1 up to rounding.
  return LanguageProbability{static_cast<double>(en) / total, static_cast<double>(ja) / total};
}

enum class FeatureCategory { kEnglish, kJapanese, kMixed };

inline const char* to_string(FeatureCategory c) {
  switch (c) {
    case FeatureCategory::kEnglish: return "English";
    case FeatureCategory::kJapanese: return "Japanese";
    case FeatureCategory::kMixed: return "Mixed";
  }
  return "Mixed";
}

inline FeatureCategory category_from_string(const std::string& s) {
  if (s == "English" || s == "en") return FeatureCategory::kEnglish;
  if (s == "Japanese" || s == "ja") return FeatureCategory::kJapanese;
  if (s == "Mixed" || s == "Bilingual" || s == "bi" || s == "mixed") return FeatureCategory::kMixed;
  fail(ErrorKind::kInvalidArgument, "category: unknown value \"" + s + "\"");
}

inline constexpr double kLanguageSelectivityThreshold = 0.9;

// Strictly above 0.9 for one language, otherwise Mixed.
inline FeatureCategory classify_feature(double p_en, double p_ja) {
  if (p_en > kLanguageSelectivityThreshold) return FeatureCategory::kEnglish;
  if (p_ja > kLanguageSelectivityThreshold) return FeatureCategory::kJapanese;
  return FeatureCategory::kMixed;
}

// Natural-log Shannon entropy; 0 log 0 is 0.
template <typename Probabilities>
double entropy_of(const Probabilities& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

inline double token_entropy(const TokenDistribution& f) {
  std::vector<double> probs;
  probs.reserve(f.size());
  for (const auto& [token, p] : f) probs.push_back(p);
  return entropy_of(probs);
}

using Clusters = std::vector<std::vector<std::uint32_t>>;

// Entropy of the attribution mass aggregated per cluster. Each token of `f`
// must appear in exactly one cluster.
inline double semantic_entropy(const TokenDistribution& f, const Clusters& clusters) {
  std::vector<double> mass;
  mass.reserve(clusters.size());
  std::size_t covered = 0;
  for (const auto& cluster : clusters) {
    double m = 0.0;
    for (auto token : cluster) {
      auto it = f.find(token);
      if (it == f.end()) {
        fail(ErrorKind::kConsistency,
             "semantic_entropy: cluster token " + std::to_string(token) + " has no attribution");
      }
      m += it->second;
      ++covered;
    }
    mass.push_back(m);
  }
  if (covered != f.size()) {
    fail(ErrorKind::kConsistency, "semantic_entropy: clusters do not partition the tokens");
  }
  return entropy_of(mass);
}

// 1 - H_semantic / H_token, defined as 1 when a single token carries all mass.
inline double monosemanticity(double h_token, double h_semantic) {
  if (h_token <= 0.0) return 1.0;
  // Merging clusters can only lower entropy; allow summation-order rounding.
  if (h_semantic > h_token * (1.0 + 1e-12) + 1e-15) {
    fail(ErrorKind::kConsistency, "monosemanticity: semantic entropy " +
                                      std::to_string(h_semantic) + " exceeds token entropy " +
                                      std::to_string(h_token));
  }
  return std::clamp(1.0 - h_semantic / h_token, 0.0, 1.0);
}

struct SpanStats {
  std::vector<std::size_t> lengths;
  double mean = 0.0;
};

// Maximal runs of consecutive positions within each document.
inline SpanStats span_lengths(std::span<const FeatureEvent> events) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> keys;
  keys.reserve(events.size());
  for (const auto& e : events) keys.emplace_back(e.doc, e.position);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  SpanStats out;
  std::size_t run = 0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const bool continues = i > 0 && keys[i].first == keys[i - 1].first &&
                           keys[i].second == keys[i - 1].second + 1;
    if (continues) {
      ++run;
    } else {
      if (run > 0) out.lengths.push_back(run);
      run = 1;
    }
  }
  if (run > 0) out.lengths.push_back(run);
  if (!out.lengths.empty()) {
    std::size_t total = 0;
    for (auto l : out.lengths) total += l;
    out.mean = static_cast<double>(total) / static_cast<double>(out.lengths.size());
  }
  return out;
}

}  // namespace saekit
