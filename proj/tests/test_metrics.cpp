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

#include <gtest/gtest.h>

#include <random>

#include "saekit/clustering.hpp"
#include "saekit/metrics.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace saekit {
namespace {

FeatureEvent event(std::uint32_t token, Language lang = Language::kEn, std::uint32_t doc = 0,
                   std::uint32_t pos = 0) {
  FeatureEvent e;
  e.token_id = token;
  e.language = lang;
  e.doc = doc;
  e.position = pos;
  e.value = 1.0f;
  return e;
}

std::vector<FeatureEvent> random_events(std::mt19937_64& rng, std::size_t count) {
  std::uniform_int_distribution<std::uint32_t> token(0, 30), doc(0, 9), pos(0, 62), lang(0, 2);
  std::vector<FeatureEvent> out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto l = lang(rng);
    out.push_back(event(token(rng), l == 0 ? Language::kEn : l == 1 ? Language::kJa : Language::kOther,
                        doc(rng), pos(rng)));
  }
  return out;
}

TEST(TokenAttribution, Examples) {
  const std::vector<FeatureEvent> ev{event(1), event(1), event(2), event(3)};
  const auto f = token_attribution(ev);
  ASSERT_TRUE(f);
  EXPECT_EQ(*f, (TokenDistribution{{1, 0.5}, {2, 0.25}, {3, 0.25}}));
  const std::vector<FeatureEvent> one{event(7)};
  EXPECT_EQ(*token_attribution(one), (TokenDistribution{{7, 1.0}}));
  EXPECT_FALSE(token_attribution({}));
}

TEST(TokenAttribution, MatchesCountingOracle) {
  std::mt19937_64 rng(1);
  const auto ev = random_events(rng, 1000);
  const auto f = *token_attribution(ev);
  const auto want = testing::oracle_token_counts(ev);
  ASSERT_EQ(f.size(), want.size());
  double total = 0.0;
  for (const auto& [t, p] : f) {
    EXPECT_NEAR(p, want.at(t), 1e-12);
    total += p;
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(LanguageProbability, Examples) {
  std::vector<FeatureEvent> ev(9, event(1, Language::kEn));
  ev.push_back(event(1, Language::kJa));
  auto p = *language_probability(ev);
  EXPECT_DOUBLE_EQ(p.p_en, 0.9);
  EXPECT_DOUBLE_EQ(p.p_ja, 0.1);

  const std::vector<FeatureEvent> ja(4, event(1, Language::kJa));
  p = *language_probability(ja);
  EXPECT_EQ(p.p_en, 0.0);
  EXPECT_EQ(p.p_ja, 1.0);

  std::vector<FeatureEvent> with_other{event(1, Language::kEn), event(1, Language::kOther),
                                       event(1, Language::kJa), event(1, Language::kOther)};
  p = *language_probability(with_other);
  EXPECT_DOUBLE_EQ(p.p_en, 0.5);

  const std::vector<FeatureEvent> other(3, event(1, Language::kOther));
  EXPECT_FALSE(language_probability(other));
}

TEST(LanguageProbability, MatchesCountingOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ev = random_events(rng, 1 + trial * 13);
    std::size_t en = 0, ja = 0;
    for (const auto& e : ev) {
      en += e.language == Language::kEn;
      ja += e.language == Language::kJa;
    }
    const auto p = language_probability(ev);
    if (en + ja == 0) {
      EXPECT_FALSE(p);
      continue;
    }
    EXPECT_NEAR(p->p_en, static_cast<double>(en) / static_cast<double>(en + ja), 1e-12);
    EXPECT_NEAR(p->p_en + p->p_ja, 1.0, 1e-9);
  }
}

TEST(Classify, Thresholds) {
  EXPECT_EQ(classify_feature(0.95, 0.05), FeatureCategory::kEnglish);
  EXPECT_EQ(classify_feature(0.05, 0.95), FeatureCategory::kJapanese);
  EXPECT_EQ(classify_feature(0.5, 0.5), FeatureCategory::kMixed);
  EXPECT_EQ(classify_feature(0.9, 0.1), FeatureCategory::kMixed);
  EXPECT_EQ(classify_feature(0.1, 0.9), FeatureCategory::kMixed);
  EXPECT_EQ(category_from_string("bi"), FeatureCategory::kMixed);
  EXPECT_EQ(category_from_string("Bilingual"), FeatureCategory::kMixed);
  EXPECT_EQ(category_from_string("en"), FeatureCategory::kEnglish);
  EXPECT_EQ(category_from_string(to_string(FeatureCategory::kJapanese)), FeatureCategory::kJapanese);
  EXPECT_THROW(category_from_string("fr"), Error);
}

TEST(TokenEntropy, Examples) {
  EXPECT_EQ(token_entropy({{1, 1.0}}), 0.0);
  EXPECT_NEAR(token_entropy({{1, 0.5}, {2, 0.5}}), std::log(2.0), 1e-15);
  const double h = token_entropy({{1, 0.5}, {2, 0.25}, {3, 0.25}});
  EXPECT_NEAR(h, testing::oracle_entropy({0.5, 0.25, 0.25}), 1e-12);
  EXPECT_NEAR(h, 1.0397, 5e-5);
  TokenDistribution uniform;
  for (std::uint32_t t = 0; t < 7; ++t) uniform[t] = 1.0 / 7.0;
  EXPECT_NEAR(token_entropy(uniform), std::log(7.0), 1e-12);
}

TEST(SemanticEntropy, Examples) {
  const TokenDistribution f{{1, 0.5}, {2, 0.25}, {3, 0.25}};
  EXPECT_NEAR(semantic_entropy(f, {{1, 2, 3}}), 0.0, 1e-15);
  const double h = semantic_entropy(f, {{1, 2}, {3}});
  EXPECT_NEAR(h, testing::oracle_entropy({0.75, 0.25}), 1e-12);
  EXPECT_NEAR(h, 0.5623, 5e-5);
  EXPECT_NEAR(semantic_entropy({{1, 0.25}, {2, 0.25}, {3, 0.5}}, {{1, 2}, {3}}), std::log(2.0), 1e-12);
  EXPECT_THROW(semantic_entropy(f, {{1, 2}}), Error);
  EXPECT_THROW(semantic_entropy(f, {{1, 2}, {3, 4}}), Error);
}

TEST(Monosemanticity, Examples) {
  EXPECT_EQ(monosemanticity(0.0, 0.0), 1.0);
  EXPECT_EQ(monosemanticity(0.7, 0.7), 0.0);
  const double h_token = testing::oracle_entropy({0.5, 0.25, 0.25});
  const double h_sem = testing::oracle_entropy({0.75, 0.25});
  EXPECT_NEAR(monosemanticity(h_token, h_sem), 1.0 - h_sem / h_token, 1e-12);
  EXPECT_NEAR(monosemanticity(h_token, h_sem), 0.459, 5e-4);
  try {
    monosemanticity(0.5, 0.6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConsistency);
  }
}

TEST(SpanLengths, Examples) {
  const std::vector<FeatureEvent> ev{event(1, Language::kEn, 0, 0), event(1, Language::kEn, 0, 1),
                                     event(1, Language::kEn, 0, 3)};
  const auto s = span_lengths(ev);
  EXPECT_EQ(s.lengths, (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(s.mean, 1.5);
  EXPECT_EQ(span_lengths(std::vector<FeatureEvent>{event(1)}).mean, 1.0);
  // Adjacent positions in different documents do not join.
  const std::vector<FeatureEvent> split{event(1, Language::kEn, 0, 5), event(1, Language::kEn, 1, 6)};
  EXPECT_EQ(span_lengths(split).lengths, (std::vector<std::size_t>{1, 1}));
}

TEST(SpanLengths, MatchesRunLengthOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto ev = random_events(rng, 40 + trial);
    std::shuffle(ev.begin(), ev.end(), rng);
    auto got = span_lengths(ev).lengths;
    auto want = testing::oracle_runs(ev, 62);
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    EXPECT_EQ(got, want);
  }
}

EmbeddingTable table_from(const RowMatrix<float>& rows) {
  EmbeddingTable t;
  t.vectors = rows;
  return t;
}

std::vector<std::uint32_t> iota_ids(std::size_t n) {
  std::vector<std::uint32_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0u);
  return ids;
}

TEST(SemanticClusters, Examples) {
  RowMatrix<float> same(2, 3);
  same << 1, 2, 3, 1, 2, 3;
  EXPECT_EQ(semantic_clusters(iota_ids(2), table_from(same)), (Clusters{{0, 1}}));

  RowMatrix<float> ortho(2, 3);
  ortho << 1, 0, 0, 0, 1, 0;
  EXPECT_EQ(semantic_clusters(iota_ids(2), table_from(ortho)), (Clusters{{0}, {1}}));

  // Chain a-b-c links a and c through b even though cos(a, c) < 0.1.
  RowMatrix<float> chain(3, 2);
  chain << 1, 0, std::cos(0.8f), std::sin(0.8f), std::cos(1.6f), std::sin(1.6f);
  EXPECT_EQ(semantic_clusters(iota_ids(3), table_from(chain)), (Clusters{{0, 1, 2}}));

  RowMatrix<float> zero(2, 2);
  zero << 0, 0, 0, 0;
  EXPECT_EQ(semantic_clusters(iota_ids(2), table_from(zero)), (Clusters{{0}, {1}}));
}

TEST(SemanticClusters, MatchesPairwiseOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto emb = testing::random_matrix<float>(40, 6, seed);
    std::mt19937_64 rng(seed);
    std::vector<std::uint32_t> ids = iota_ids(40);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(20);
    auto got = semantic_clusters(ids, table_from(emb));
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, testing::oracle_components(ids, emb.cast<double>(), 0.1)) << seed;
  }
}

TEST(SemanticClusters, CapLeavesTailAsSingletons) {
  RowMatrix<float> same(5, 2);
  same.setOnes();
  const auto c = semantic_clusters(std::vector<std::uint32_t>{4, 3, 2, 1, 0}, table_from(same), 0.1, 3);
  EXPECT_EQ(c, (Clusters{{0}, {1}, {2, 3, 4}}));
}

TEST(SemanticClusters, MissingEmbeddingNamesToken) {
  RowMatrix<float> emb(3, 2);
  emb.setOnes();
  try {
    semantic_clusters(std::vector<std::uint32_t>{0, 9}, table_from(emb));
    FAIL();
  } catch (const MissingEmbeddingError& e) {
    EXPECT_EQ(e.token_id(), 9u);
    EXPECT_NE(std::string(e.what()).find("9"), std::string::npos);
  }
}

TEST(SemanticClusters, RankTokensByAttribution) {
  const TokenDistribution f{{5, 0.2}, {2, 0.4}, {9, 0.2}, {1, 0.2}};
  EXPECT_EQ(rank_tokens(f), (std::vector<std::uint32_t>{2, 1, 5, 9}));
}

TEST(Metrics, CoarseningNeverRaisesSemanticEntropy) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ev = random_events(rng, 200);
    const auto f = *token_attribution(ev);
    const auto emb = testing::random_matrix<float>(31, 4, static_cast<std::uint64_t>(trial));
    const auto ids = rank_tokens(f);
    auto clusters = semantic_clusters(ids, table_from(emb), 0.6);
    const double h_token = token_entropy(f);
    double h = semantic_entropy(f, clusters);
    EXPECT_LE(h, h_token + 1e-12);
    const double r = monosemanticity(h_token, h);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
    while (clusters.size() > 1) {
      const std::size_t a = rng() % clusters.size();
      std::size_t b = rng() % (clusters.size() - 1);
      if (b >= a) ++b;
      clusters[a].insert(clusters[a].end(), clusters[b].begin(), clusters[b].end());
      clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(b));
      const double next = semantic_entropy(f, clusters);
      EXPECT_LE(next, h + 1e-12);
      h = next;
    }
    EXPECT_NEAR(h, 0.0, 1e-12);
  }
}

}  // namespace
}  // namespace saekit
