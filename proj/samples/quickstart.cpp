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

// End-to-end walk through the library on synthetic data: train a TopK SAE,
// profile its features, and compute an intervention delta.

#include <cstdio>
#include <random>
#include <vector>

#include "saekit/intervention.hpp"
#include "saekit/preprocess.hpp"
#include "saekit/report.hpp"
#include "saekit/trainer.hpp"

using namespace saekit;

namespace {

// Each document mixes sparse draws from a shared atom set plus atoms
// specific to its language. Token ids mirror the atom that fired.
std::vector<Document> make_corpus(std::size_t n_docs, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  RowMatrix<float> atoms(24, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < atoms.size(); ++i) atoms.data()[i] = gauss(rng);
  atoms.rowwise().normalize();
  std::uniform_int_distribution<int> pick(0, 7);
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n_docs; ++i) {
    const Language lang = i % 2 == 0 ? Language::kEn : Language::kJa;
    const int offset = lang == Language::kEn ? 8 : 16;
    RowMatrix<float> raw(kMaxSequenceTokens, static_cast<Eigen::Index>(d));
    std::vector<std::uint32_t> ids(kMaxSequenceTokens);
    for (std::size_t t = 0; t < kMaxSequenceTokens; ++t) {
      const int atom = pick(rng) < 3 ? pick(rng) : offset + pick(rng);
      raw.row(static_cast<Eigen::Index>(t)) = atoms.row(atom) * (1.0f + 0.1f * gauss(rng));
      ids[t] = static_cast<std::uint32_t>(atom);
    }
    auto doc = preprocess_sequence(raw, ids).document;
    doc.language = lang;
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace

int main() {
  constexpr std::size_t d = 32;
  std::mt19937_64 rng(11);
  const auto docs = make_corpus(400, d, rng);
  const std::vector<Document> train_docs(docs.begin(), docs.begin() + 320);
  const std::vector<Document> eval_docs(docs.begin() + 320, docs.end());

  RowMatrix<float> sample(0, static_cast<Eigen::Index>(d));
  for (const auto& doc : train_docs) {
    sample.conservativeResize(sample.rows() + doc.activations.rows(), Eigen::NoChange);
    sample.bottomRows(doc.activations.rows()) = doc.activations;
  }

  SaeConfig cfg;
  cfg.d = d;
  cfg.n = 64;
  cfg.k = 2;
  cfg.lr = 2e-3;
  cfg.batch_size = 256;
  cfg.warmup_steps = 50;
  cfg.total_steps = 800;
  cfg.seed = 1;
  MemoryDocumentSource source(train_docs, 50);
  ActivationBuffer buffer(source, d, {8192, 0.5, cfg.seed});
  TrainOptions opts;
  opts.metrics_interval = 200;
  const auto trained = train<float>(cfg, buffer, sample, opts);
  for (const auto& m : trained.metrics) {
    std::printf("step %4zu  mse %.4f  dead %zu\n", m.step, m.mse, m.dead_feature_count);
  }

  EmbeddingTable embeddings;
  embeddings.vectors = RowMatrix<float>::Random(24, 16);
  const Checkpoint sae{trained.params, static_cast<std::uint32_t>(cfg.k)};
  const auto report = build_report(encode_eval_set(sae, eval_docs), embeddings);
  const auto& agg = report.aggregates;
  std::printf("%zu features, %zu dead\n", agg.n_features, agg.dead_count);
  if (agg.category_proportions) {
    const auto& c = *agg.category_proportions;
    std::printf("English %.2f  Japanese %.2f  Mixed %.2f\n", c[0], c[1], c[2]);
  }

  const auto selection = select_features(report, FeatureCategory::kMixed, 8);
  if (selection.warning) std::printf("note: %s\n", selection.warning->c_str());
  const auto delta = intervention_delta(sae, eval_docs.front().activations, selection.mask, 0.1);
  std::printf("steering %zu shared features, mean |delta| %.5f\n", selection.mask.size(),
              static_cast<double>(delta.cwiseAbs().mean()));
  return 0;
}
