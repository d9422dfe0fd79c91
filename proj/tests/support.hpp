// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "klguide/distributions.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("klguide-" + tag + "-" + std::to_string(rd()));
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

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline klguide::Logits random_logits(std::mt19937_64& gen, std::size_t size, double scale = 3.0) {
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> v(size);
  for (auto& x : v) x = normal(gen);
  return klguide::Logits(std::move(v));
}

inline klguide::Pmf random_pmf(std::mt19937_64& gen, std::size_t size) {
  std::gamma_distribution<double> gamma(0.5, 1.0);
  std::vector<double> v(size);
  double sum = 0.0;
  for (auto& x : v) sum += x = gamma(gen) + 1e-300;
  for (auto& x : v) x /= sum;
  return klguide::Pmf(std::move(v));
}

}  // namespace testing
