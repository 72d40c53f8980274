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
#include <filesystem>
#include <string_view>

#include "saekit/atomic_file.hpp"
#include "saekit/binary_io.hpp"
#include "saekit/error.hpp"
#include "saekit/tensor.hpp"

namespace saekit {

inline constexpr std::string_view kEmbeddingMagic{"SEMB1", 5};

// Token embedding table; row index is the token id.
struct EmbeddingTable {
  RowMatrix<float> vectors;  // vocab_size x d_emb

  std::uint32_t d_emb() const { return static_cast<std::uint32_t>(vectors.cols()); }
  std::uint64_t vocab_size() const { return static_cast<std::uint64_t>(vectors.rows()); }

  bool contains(std::uint32_t token_id) const { return token_id < vocab_size(); }

  auto row(std::uint32_t token_id) const {
    if (!contains(token_id)) throw MissingEmbeddingError(token_id);
    return vectors.row(static_cast<Eigen::Index>(token_id));
  }
};

inline void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  write_atomically(path, [&](std::ostream& out) {
    binary::Writer w(out);
    w.bytes(kEmbeddingMagic);
    w.u32(table.d_emb());
    w.u64(table.vocab_size());
    w.f32s({table.vectors.data(), static_cast<std::size_t>(table.vectors.size())});
  });
}

inline EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  auto in = binary::open_input(path);
  binary::Reader r(in, path.string());
  r.expect_magic(kEmbeddingMagic);
  const auto d_emb = r.u32("d_emb");
  const auto vocab = r.u64("vocab_size");
  const auto size = std::filesystem::file_size(path);
  if (d_emb == 0) fail(ErrorKind::kFormat, path.string() + ": d_emb is zero");
  if (r.offset() + vocab * d_emb * 4 > size) {
    throw CorruptionError(path.string() + ": embedding payload extends past end of file", size);
  }
  EmbeddingTable table;
  table.vectors.resize(static_cast<Eigen::Index>(vocab), d_emb);
  r.f32s({table.vectors.data(), static_cast<std::size_t>(vocab * d_emb)}, "embeddings");
  return table;
}

}  // namespace saekit
