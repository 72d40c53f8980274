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
#include <vector>

#include "saekit/activation_buffer.hpp"
#include "saekit/checkpoint.hpp"
#include "saekit/metrics.hpp"
#include "saekit/sae.hpp"

namespace saekit {

inline constexpr double kActivationCollectionRatio = 0.7;

struct EncodedDocument {
  Language language = Language::kOther;
  std::vector<std::uint32_t> token_ids;
  SparseCodes<float> codes;
};

// TopK codes for every token of an evaluation set. Much smaller than the
// activations themselves, so both analysis passes run off one encode.
struct EncodedEvalSet {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<EncodedDocument> docs;
};

inline EncodedEvalSet encode_eval_set(const Checkpoint& sae, DocumentSource& source) {
  EncodedEvalSet out;
  out.n = static_cast<std::size_t>(sae.params.n());
  out.k = sae.k;
  while (auto doc = source.next_document()) {
    EncodedDocument enc;
    enc.language = doc->language;
    enc.token_ids = std::move(doc->token_ids);
    if (!enc.token_ids.empty()) {
      if (doc->activations.cols() != sae.params.d()) {
        fail(ErrorKind::kInvalidArgument, "eval document: d=" +
                                              std::to_string(doc->activations.cols()) +
                                              " does not match SAE d=" +
                                              std::to_string(sae.params.d()));
      }
      enc.codes = encode_batch(sae.params, doc->activations, sae.k);
    } else {
      enc.codes.k = sae.k;
    }
    out.docs.push_back(std::move(enc));
  }
  return out;
}

inline EncodedEvalSet encode_eval_set(const Checkpoint& sae, const std::vector<Document>& docs) {
  MemoryDocumentSource source(docs);
  return encode_eval_set(sae, source);
}

// Per-feature maximum over TopK-selected values; 0 for never-selected features.
inline std::vector<float> scan_max_activations(const EncodedEvalSet& eval) {
  std::vector<float> maxima(eval.n, 0.0f);
  for (const auto& doc : eval.docs) {
    for (std::size_t i = 0; i < doc.codes.index.size(); ++i) {
      auto& m = maxima[doc.codes.index[i]];
      m = std::max(m, doc.codes.value[i]);
    }
  }
  return maxima;
}

// Every (feature, doc, position) where the feature was selected with value at
// least 70% of its maximum. Ordered by doc, then position, then TopK rank.
inline std::vector<FeatureEvent> collect_events(const EncodedEvalSet& eval,
                                                const std::vector<float>& maxima,
                                                double ratio = kActivationCollectionRatio) {
  require(maxima.size() == eval.n, ErrorKind::kInvalidArgument,
          "collect_events: maxima size differs from n");
  std::vector<FeatureEvent> events;
  for (std::size_t d = 0; d < eval.docs.size(); ++d) {
    const auto& doc = eval.docs[d];
    for (std::size_t pos = 0; pos < doc.codes.rows; ++pos) {
      auto idx = doc.codes.indices_of(pos);
      auto val = doc.codes.values_of(pos);
      for (std::size_t j = 0; j < doc.codes.k; ++j) {
        const float max = maxima[idx[j]];
        if (max <= 0.0f) continue;
        if (static_cast<double>(val[j]) >= ratio * static_cast<double>(max)) {
          events.push_back({idx[j], static_cast<std::uint32_t>(d),
                            static_cast<std::uint32_t>(pos), doc.token_ids[pos], val[j],
                            doc.language});
        }
      }
    }
  }
  return events;
}

// Events regrouped per feature, preserving (doc, position) order within each.
inline std::vector<std::vector<FeatureEvent>> group_by_feature(
    const std::vector<FeatureEvent>& events, std::size_t n) {
  std::vector<std::vector<FeatureEvent>> out(n);
  for (const auto& e : events) out[e.feature].push_back(e);
  return out;
}

}  // namespace saekit
