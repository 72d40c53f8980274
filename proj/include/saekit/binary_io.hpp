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
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "saekit/error.hpp"

// Little-endian primitive encoding shared by every on-disk format.
namespace saekit::binary {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(std::string_view raw) { out_.write(raw.data(), static_cast<std::streamsize>(raw.size())); }

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }

  void u32(std::uint32_t v) {
    std::array<char, 4> b;
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out_.write(b.data(), 4);
  }

  void u64(std::uint64_t v) {
    std::array<char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out_.write(b.data(), 8);
  }

  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  void f32s(std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
      out_.write(reinterpret_cast<const char*>(values.data()),
                 static_cast<std::streamsize>(values.size() * sizeof(float)));
    } else {
      for (float v : values) f32(v);
    }
  }

  void u32s(std::span<const std::uint32_t> values) {
    for (auto v : values) u32(v);
  }

 private:
  std::ostream& out_;
};

// Tracks the byte offset so truncation errors can say where the data ran out.
class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::uint64_t offset() const { return offset_; }
  const std::string& source() const { return source_; }

  void read_into(char* dst, std::size_t count, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(count));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got != count) {
      throw CorruptionError(source_ + ": truncated while reading " + what, offset_ + got);
    }
    offset_ += count;
  }

  std::string bytes(std::size_t count, const char* what) {
    std::string s(count, '\0');
    read_into(s.data(), count, what);
    return s;
  }

  std::uint8_t u8(const char* what) {
    char c;
    read_into(&c, 1, what);
    return static_cast<std::uint8_t>(c);
  }

  std::uint32_t u32(const char* what) {
    std::array<unsigned char, 4> b;
    read_into(reinterpret_cast<char*>(b.data()), 4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }

  std::uint64_t u64(const char* what) {
    std::array<unsigned char, 8> b;
    read_into(reinterpret_cast<char*>(b.data()), 8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }

  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

  void f32s(std::span<float> dst, const char* what) {
    if constexpr (std::endian::native == std::endian::little) {
      read_into(reinterpret_cast<char*>(dst.data()), dst.size() * sizeof(float), what);
    } else {
      for (auto& v : dst) v = f32(what);
    }
  }

  void u32s(std::span<std::uint32_t> dst, const char* what) {
    for (auto& v : dst) v = u32(what);
  }

  // True when no bytes remain.
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

  // A short file whose bytes disagree with the magic is a format error; only a
  // correct but incomplete prefix counts as truncation.
  void expect_magic(std::string_view magic) {
    std::string got(magic.size(), '\0');
    in_.read(got.data(), static_cast<std::streamsize>(magic.size()));
    got.resize(static_cast<std::size_t>(in_.gcount()));
    if (got.size() < magic.size() && got == magic.substr(0, got.size())) {
      throw CorruptionError(source_ + ": truncated while reading magic", offset_ + got.size());
    }
    offset_ += got.size();
    if (got != magic) {
      fail(ErrorKind::kFormat, source_ + ": bad magic (expected \"" +
                                   std::string(magic.substr(0, magic.find('\0'))) + "\")");
    }
  }

 private:
  std::istream& in_;
  std::string source_;
  std::uint64_t offset_ = 0;
};

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  return in;
}

}  // namespace saekit::binary
