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
#include <random>
#include <string>
#include <unistd.h>

#include "saekit/sae.hpp"

namespace saekit::testing {

template <typename Scalar = double>
SaeParams<Scalar> random_params(std::size_t d, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  SaeParams<double> p;
  p.w_enc.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  p.w_dec.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
  p.b_pre.resize(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < p.w_enc.size(); ++i) p.w_enc.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < p.w_dec.size(); ++i) p.w_dec.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < p.b_pre.size(); ++i) p.b_pre[i] = 0.1 * g(rng);
  return p.template cast<Scalar>();
}

template <typename Scalar = double>
RowMatrix<Scalar> random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  RowMatrix<double> m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m.template cast<Scalar>();
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("saekit_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace saekit::testing
