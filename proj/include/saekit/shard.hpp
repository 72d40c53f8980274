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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "saekit/atomic_file.hpp"
#include "saekit/binary_io.hpp"
#include "saekit/error.hpp"
#include "saekit/tensor.hpp"

namespace saekit {

enum class Language : std::uint8_t { kEn = 0, kJa = 1, kOther = 255 };

inline const char* to_string(Language lang) {
  switch (lang) {
    case Language::kEn: return "en";
    case Language::kJa: return "ja";
    case Language::kOther: return "other";
  }
  return "other";
}

inline Language language_from_byte(std::uint8_t b, const std::string& source) {
  switch (b) {
    case 0: return Language::kEn;
    case 1: return Language::kJa;
    case 255: return Language::kOther;
    default:
      fail(ErrorKind::kFormat, source + ": unknown language tag " + std::to_string(b));
  }
}

struct Document {
  Language language = Language::kOther;
  std::vector<std::uint32_t> token_ids;
  RowMatrix<float> activations;  // T x d

  std::size_t size() const { return token_ids.size(); }
  bool operator==(const Document&) const = default;
};

struct ActivationShard {
  std::uint32_t version = 1;
  std::uint32_t d = 0;
  std::vector<Document> docs;

  std::size_t total_rows() const {
    std::size_t t = 0;
    for (const auto& doc : docs) t += doc.size();
    return t;
  }
  bool operator==(const ActivationShard&) const = default;
};

inline constexpr std::string_view kShardMagic{"SAEV1\0", 6};
inline constexpr std::uint32_t kShardVersion = 1;
inline constexpr double kUnitNormTolerance = 1e-5;

namespace detail {

inline void write_document_payload(binary::Writer& w, const Document& doc, std::uint32_t d,
                                   const RowMatrix<float>& rows) {
  require(rows.rows() == static_cast<Eigen::Index>(doc.token_ids.size()),
          ErrorKind::kInvalidArgument, "document: token_ids length differs from row count");
  require(rows.cols() == static_cast<Eigen::Index>(d) || rows.rows() == 0,
          ErrorKind::kDimensionMismatch, "document: activation width differs from shard d");
  w.u8(static_cast<std::uint8_t>(doc.language));
  w.u32(static_cast<std::uint32_t>(doc.token_ids.size()));
  w.u32s(doc.token_ids);
  w.f32s({rows.data(), static_cast<std::size_t>(rows.size())});
}

inline Document read_document_payload(binary::Reader& r, std::uint32_t d,
                                      std::uint64_t bytes_total) {
  Document doc;
  doc.language = language_from_byte(r.u8("language"), r.source());
  const std::uint64_t t = r.u32("token count");
  const std::uint64_t need = t * 4 + t * d * 4;
  if (r.offset() + need > bytes_total) {
    throw CorruptionError(r.source() + ": document payload extends past end of file",
                          bytes_total);
  }
  doc.token_ids.resize(t);
  r.u32s(doc.token_ids, "token_ids");
  doc.activations.resize(static_cast<Eigen::Index>(t), d);
  r.f32s({doc.activations.data(), static_cast<std::size_t>(t * d)}, "activations");
  return doc;
}

}  // namespace detail

inline void write_shard(std::ostream& out, const ActivationShard& shard) {
  binary::Writer w(out);
  w.bytes(kShardMagic);
  w.u32(shard.version);
  w.u32(shard.d);
  w.u64(shard.docs.size());
  for (const auto& doc : shard.docs) detail::write_document_payload(w, doc, shard.d, doc.activations);
}

inline void write_shard(const std::filesystem::path& path, const ActivationShard& shard) {
  write_atomically(path, [&](std::ostream& out) { write_shard(out, shard); });
}

// Streams documents out of a shard file one at a time.
class ShardReader {
 public:
  explicit ShardReader(const std::filesystem::path& path,
                       std::optional<std::uint32_t> expected_d = std::nullopt)
      : in_(binary::open_input(path)), reader_(in_, path.string()) {
    bytes_total_ = std::filesystem::file_size(path);
    reader_.expect_magic(kShardMagic);
    version_ = reader_.u32("version");
    if (version_ != kShardVersion) {
      fail(ErrorKind::kFormat, path.string() + ": unsupported shard version " +
                                   std::to_string(version_));
    }
    d_ = reader_.u32("d");
    n_docs_ = reader_.u64("n_docs");
    if (d_ == 0) fail(ErrorKind::kFormat, path.string() + ": shard d is zero");
    if (expected_d && *expected_d != d_) {
      fail(ErrorKind::kDimensionMismatch, path.string() + ": shard d=" + std::to_string(d_) +
                                              " but consumer expects d=" +
                                              std::to_string(*expected_d));
    }
  }

  std::uint32_t version() const { return version_; }
  std::uint32_t d() const { return d_; }
  std::uint64_t n_docs() const { return n_docs_; }

  std::optional<Document> next() {
    if (read_ == n_docs_) {
      if (!reader_.at_end()) {
        fail(ErrorKind::kFormat, reader_.source() + ": trailing bytes after last document");
      }
      return std::nullopt;
    }
    ++read_;
    return detail::read_document_payload(reader_, d_, bytes_total_);
  }

 private:
  std::ifstream in_;
  binary::Reader reader_;
  std::uint64_t bytes_total_ = 0;
  std::uint32_t version_ = 0;
  std::uint32_t d_ = 0;
  std::uint64_t n_docs_ = 0;
  std::uint64_t read_ = 0;
};

inline ActivationShard read_shard(const std::filesystem::path& path,
                                  std::optional<std::uint32_t> expected_d = std::nullopt) {
  ShardReader reader(path, expected_d);
  ActivationShard shard;
  shard.version = reader.version();
  shard.d = reader.d();
  while (auto doc = reader.next()) shard.docs.push_back(std::move(*doc));
  return shard;
}

// Throws kFormat unless every row has unit L2 norm; packed shards must pass.
inline void check_normalized(const Document& doc, const std::string& where) {
  for (Eigen::Index r = 0; r < doc.activations.rows(); ++r) {
    const double norm = doc.activations.row(r).template cast<double>().norm();
    if (std::abs(norm - 1.0) > kUnitNormTolerance) {
      fail(ErrorKind::kFormat, where + ": row " + std::to_string(r) +
                                   " is not unit-norm (run `sae pack` on raw exports)");
    }
  }
}

// Shard files in a directory (sorted by name), or the path itself if it is a file.
inline std::vector<std::filesystem::path> list_shards(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::vector<fs::path> out;
  if (!fs::exists(path)) fail(ErrorKind::kIo, "no such file or directory: " + path.string());
  if (fs::is_regular_file(path)) {
    out.push_back(path);
    return out;
  }
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".saev") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace saekit
