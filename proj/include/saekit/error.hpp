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

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace saekit {

enum class ErrorKind {
  kInvalidArgument,
  kDimensionMismatch,
  kFormat,
  kCorruption,
  kIo,
  kNumeric,
  kTruncatedTraining,
  kMissingEmbedding,
  kEmptyMask,
  kConsistency,
  kDocumentTooShort,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kCorruption: return "corruption";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kTruncatedTraining: return "truncated training";
    case ErrorKind::kMissingEmbedding: return "missing embedding";
    case ErrorKind::kEmptyMask: return "empty mask";
    case ErrorKind::kConsistency: return "internal consistency";
    case ErrorKind::kDocumentTooShort: return "document too short";
  }
  return "error";
}

// Every failure raised by the library is an Error; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class CorruptionError : public Error {
 public:
  CorruptionError(const std::string& message, std::uint64_t offset)
      : Error(ErrorKind::kCorruption,
              message + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class TruncatedTrainingError : public Error {
 public:
  TruncatedTrainingError(const std::string& message, std::size_t steps_completed)
      : Error(ErrorKind::kTruncatedTraining,
              message + " (steps completed: " + std::to_string(steps_completed) + ")"),
        message_(message),
        steps_completed_(steps_completed) {}

  std::size_t steps_completed() const noexcept { return steps_completed_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  std::size_t steps_completed_;
};

class MissingEmbeddingError : public Error {
 public:
  explicit MissingEmbeddingError(std::uint32_t token_id)
      : Error(ErrorKind::kMissingEmbedding,
              "no embedding for token_id " + std::to_string(token_id)),
        token_id_(token_id) {}

  std::uint32_t token_id() const noexcept { return token_id_; }

 private:
  std::uint32_t token_id_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace saekit
