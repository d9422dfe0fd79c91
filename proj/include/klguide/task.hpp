// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "klguide/distributions.hpp"

namespace klguide {

class Backend;

struct GroundTruth {
  TokenId fact_token = 0;
  std::size_t fact_position = 0;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// One grounded example. The with-source prefix carries source + context; the
/// without-source prefix carries the context alone and may be empty.
struct GroundedTask {
  std::string task_id;
  TokenSeq prefix_with_source;
  TokenSeq prefix_without_source;
  std::optional<GroundTruth> ground_truth;

  friend bool operator==(const GroundedTask&, const GroundedTask&) = default;
};

// Task file: JSONL, one object per line. Text tasks
//   {"task_id", "source": string|null, "context": string}
// are tokenized through the backend; token tasks
//   {"task_id", "source_tokens": [..], "context_tokens": [..], "ground_truth": {...}|null}
// are used as-is. Throws InvalidArgument naming the path and line on failure.
std::vector<GroundedTask> load_tasks(const std::filesystem::path& path, const Backend& backend);
std::vector<GroundedTask> parse_tasks(std::istream& in, const Backend& backend, const std::string& origin);

// Writes token-level task lines. The source tokens are the part of the
// with-source prefix preceding the without-source prefix, which must be a
// suffix of it.
void write_token_tasks(std::ostream& out, const std::vector<GroundedTask>& tasks);
void write_token_tasks(const std::filesystem::path& path, const std::vector<GroundedTask>& tasks);

}  // namespace klguide
