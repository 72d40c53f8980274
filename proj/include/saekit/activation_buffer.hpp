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
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "saekit/error.hpp"
#include "saekit/shard.hpp"
#include "saekit/tensor.hpp"

namespace saekit {

// Anything that hands out training batches. nullopt means end of data.
class BatchSource {
 public:
  virtual ~BatchSource() = default;
  virtual std::optional<RowMatrix<float>> next_batch(std::size_t batch_size) = 0;
};

class DocumentSource {
 public:
  virtual ~DocumentSource() = default;
  virtual std::optional<Document> next_document() = 0;
};

class MemoryDocumentSource : public DocumentSource {
 public:
  explicit MemoryDocumentSource(std::vector<Document> docs, std::size_t epochs = 1)
      : docs_(std::move(docs)), epochs_(epochs) {}

  std::optional<Document> next_document() override {
    if (docs_.empty()) return std::nullopt;
    if (pos_ == docs_.size()) {
      ++epoch_;
      pos_ = 0;
    }
    if (epoch_ >= epochs_) return std::nullopt;
    return docs_[pos_++];
  }

 private:
  std::vector<Document> docs_;
  std::size_t epochs_;
  std::size_t epoch_ = 0;
  std::size_t pos_ = 0;
};

// Reads shard files in order, `epochs` times over. With require_normalized,
// every document is checked for unit-norm rows before it is handed out.
class ShardDocumentSource : public DocumentSource {
 public:
  ShardDocumentSource(std::vector<std::filesystem::path> paths, std::uint32_t d,
                      std::size_t epochs = 1, bool require_normalized = true)
      : paths_(std::move(paths)), d_(d), epochs_(epochs), require_normalized_(require_normalized) {}

  std::optional<Document> next_document() override {
    while (true) {
      if (!reader_) {
        if (file_ == paths_.size()) {
          ++epoch_;
          file_ = 0;
        }
        if (epoch_ >= epochs_ || paths_.empty()) return std::nullopt;
        reader_ = std::make_unique<ShardReader>(paths_[file_], d_);
      }
      if (auto doc = reader_->next()) {
        if (require_normalized_) check_normalized(*doc, paths_[file_].string());
        return doc;
      }
      reader_.reset();
      ++file_;
    }
  }

 private:
  std::vector<std::filesystem::path> paths_;
  std::uint32_t d_;
  std::size_t epochs_;
  bool require_normalized_;
  std::size_t epoch_ = 0;
  std::size_t file_ = 0;
  std::unique_ptr<ShardReader> reader_;
};

// Buffered activation counts used per language-model size.
inline std::size_t default_buffer_capacity(std::string_view model_size) {
  if (model_size == "150M") return 10'000'000;
  if (model_size == "440M") return 5'000'000;
  if (model_size == "980M") return 2'000'000;
  if (model_size == "1.8B") return 1'000'000;
  if (model_size == "3.7B") return 500'000;
  fail(ErrorKind::kInvalidArgument, "unknown model size " + std::string(model_size));
}

struct BufferOptions {
  std::size_t capacity = 500'000;
  double refill_threshold = 0.5;
  std::uint64_t seed = 0;
};

// Shuffling pool of activation rows between a document source and the
// trainer. Batches are drawn without replacement; when the fill level drops
// below refill_threshold * capacity the pool is topped up from the source and
// the whole store is reshuffled.
class ActivationBuffer : public BatchSource {
 public:
  ActivationBuffer(DocumentSource& source, std::size_t d, BufferOptions opts)
      : source_(source), d_(d), opts_(opts), rng_(opts.seed) {
    require(opts_.capacity >= 1, ErrorKind::kInvalidArgument, "buffer.capacity: must be positive");
    require(opts_.refill_threshold > 0.0 && opts_.refill_threshold <= 1.0,
            ErrorKind::kInvalidArgument, "buffer.refill_threshold: must be in (0, 1]");
    store_.resize(static_cast<Eigen::Index>(opts_.capacity), static_cast<Eigen::Index>(d_));
    langs_.resize(opts_.capacity);
  }

  std::optional<RowMatrix<float>> next_batch(std::size_t batch_size) override {
    require(batch_size >= 1, ErrorKind::kInvalidArgument, "batch_size: must be at least 1");
    if (batch_size >= opts_.capacity) {
      fail(ErrorKind::kInvalidArgument, "buffer.capacity: must exceed batch_size (" +
                                            std::to_string(opts_.capacity) + " <= " +
                                            std::to_string(batch_size) + ")");
    }
    if (static_cast<double>(fill_) < opts_.refill_threshold * static_cast<double>(opts_.capacity) ||
        fill_ < batch_size) {
      refill();
    }
    if (fill_ < batch_size) return std::nullopt;

    RowMatrix<float> batch(static_cast<Eigen::Index>(batch_size), static_cast<Eigen::Index>(d_));
    for (std::size_t i = 0; i < batch_size; ++i) {
      --fill_;
      batch.row(static_cast<Eigen::Index>(i)) = store_.row(static_cast<Eigen::Index>(fill_));
      ++consumed_[language_slot(langs_[fill_])];
    }
    return batch;
  }

  std::size_t fill() const { return fill_; }
  bool source_exhausted() const { return exhausted_; }

  // Rows handed out so far, by language.
  std::size_t consumed(Language lang) const { return consumed_[language_slot(lang)]; }

 private:
  static std::size_t language_slot(Language lang) {
    switch (lang) {
      case Language::kEn: return 0;
      case Language::kJa: return 1;
      default: return 2;
    }
  }

  void refill() {
    bool added = false;
    while (fill_ < opts_.capacity) {
      if (!pending_ || pending_pos_ == pending_->size()) {
        if (exhausted_) break;
        pending_ = source_.next_document();
        pending_pos_ = 0;
        if (!pending_) {
          exhausted_ = true;
          break;
        }
        if (pending_->size() > 0 &&
            pending_->activations.cols() != static_cast<Eigen::Index>(d_)) {
          fail(ErrorKind::kDimensionMismatch, "buffer: document width differs from d");
        }
        continue;
      }
      store_.row(static_cast<Eigen::Index>(fill_)) =
          pending_->activations.row(static_cast<Eigen::Index>(pending_pos_));
      langs_[fill_] = pending_->language;
      ++fill_;
      ++pending_pos_;
      added = true;
    }
    if (added) shuffle();
  }

  // Fisher-Yates over the occupied part of the store.
  void shuffle() {
    if (fill_ < 2) return;
    Vector<float> tmp(static_cast<Eigen::Index>(d_));
    for (std::size_t i = fill_ - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      const std::size_t j = pick(rng_);
      if (j == i) continue;
      tmp = store_.row(static_cast<Eigen::Index>(i)).transpose();
      store_.row(static_cast<Eigen::Index>(i)) = store_.row(static_cast<Eigen::Index>(j));
      store_.row(static_cast<Eigen::Index>(j)) = tmp.transpose();
      std::swap(langs_[i], langs_[j]);
    }
  }

  DocumentSource& source_;
  std::size_t d_;
  BufferOptions opts_;
  std::mt19937_64 rng_;
  RowMatrix<float> store_;
  std::vector<Language> langs_;
  std::size_t fill_ = 0;
  std::optional<Document> pending_;
  std::size_t pending_pos_ = 0;
  bool exhausted_ = false;
  std::array<std::size_t, 3> consumed_{};
};

}  // namespace saekit
