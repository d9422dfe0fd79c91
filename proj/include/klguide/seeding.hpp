// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace klguide {

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Per-decode seed: FNV-1a 64 over "run_seed|config_id|task_id|sample_index".
inline std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view config_id, std::string_view task_id,
                                 std::size_t sample_index) {
  std::string key = std::to_string(run_seed);
  key += '|';
  key += config_id;
  key += '|';
  key += task_id;
  key += '|';
  key += std::to_string(sample_index);
  return fnv1a64(key);
}

}  // namespace klguide
