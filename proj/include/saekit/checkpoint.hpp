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
#include <vector>

#include "saekit/atomic_file.hpp"
#include "saekit/binary_io.hpp"
#include "saekit/sae.hpp"

namespace saekit {

inline constexpr std::string_view kCheckpointMagic{"SAEP1", 5};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  SaeParams<float> params;
  std::uint32_t k = 0;
};

inline void write_checkpoint(std::ostream& out, const SaeParams<float>& p, std::uint32_t k) {
  p.validate();
  binary::Writer w(out);
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(p.d()));
  w.u32(static_cast<std::uint32_t>(p.n()));
  w.u32(k);
  w.f32s({p.w_enc.data(), static_cast<std::size_t>(p.w_enc.size())});
  const RowMatrix<float> dec = p.w_dec;
  w.f32s({dec.data(), static_cast<std::size_t>(dec.size())});
  w.f32s({p.b_pre.data(), static_cast<std::size_t>(p.b_pre.size())});
}

inline void save_checkpoint(const std::filesystem::path& path, const SaeParams<float>& p,
                            std::uint32_t k) {
  write_atomically(path, [&](std::ostream& out) { write_checkpoint(out, p, k); });
}

inline Checkpoint read_checkpoint(std::istream& in, const std::string& source) {
  binary::Reader r(in, source);
  r.expect_magic(kCheckpointMagic);
  const auto version = r.u32("version");
  if (version != kCheckpointVersion) {
    fail(ErrorKind::kFormat, source + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto d = r.u32("d");
  const auto n = r.u32("n");
  const auto k = r.u32("k");
  if (d == 0 || n == 0 || k == 0 || k > n) {
    fail(ErrorKind::kFormat, source + ": invalid checkpoint header (d, n, k)");
  }
  Checkpoint ck;
  ck.k = k;
  ck.params.w_enc.resize(n, d);
  r.f32s({ck.params.w_enc.data(), static_cast<std::size_t>(n) * d}, "w_enc");
  RowMatrix<float> dec(d, n);
  r.f32s({dec.data(), static_cast<std::size_t>(d) * n}, "w_dec");
  ck.params.w_dec = dec;
  ck.params.b_pre.resize(d);
  r.f32s({ck.params.b_pre.data(), d}, "b_pre");
  ck.params.validate();
  return ck;
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto in = binary::open_input(path);
  return read_checkpoint(in, path.string());
}

}  // namespace saekit
