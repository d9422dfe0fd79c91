// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "klguide/backend.hpp"
#include "klguide/dual_decoder.hpp"
#include "klguide/metrics.hpp"
#include "klguide/samplers.hpp"
#include "klguide/seeding.hpp"
#include "klguide/synthetic_lm.hpp"

namespace klguide {

enum class GridGroup { baseline_T, baseline_top_p, baseline_top_k, guided_T, guided_top_p };

std::string_view to_string(GridGroup group);
GridGroup parse_grid_group(std::string_view name);

// KL half-lives swept by both guided grids, in nats.
std::vector<double> guided_sigmas();

/// Config sweep for one experiment group. With vocab_size > 0, top-k values
/// above the vocabulary clamp to "all" and duplicates are dropped.
std::vector<DecodeConfig> build_grid(GridGroup group, std::size_t vocab_size = 0);

// Union of several grids in request order, deduplicated by config_id.
std::vector<DecodeConfig> build_grids(std::span<const GridGroup> groups, std::size_t vocab_size = 0);

struct BackendSpec {
  std::string kind = "synth";  // synth | ngram | remote
  SyntheticLmParams synth_params;
  std::filesystem::path model;
  std::string url;
};

std::unique_ptr<Backend> make_backend(const BackendSpec& spec);

struct RunManifest {
  std::uint64_t run_seed = 0;
  BackendSpec backend;
  std::filesystem::path task_file;
  std::vector<GridGroup> grids;
  std::size_t n_samples_per_example = 10;
  std::size_t max_len = kDefaultMaxLen;
  std::filesystem::path output_dir;
  std::size_t workers = 1;

  void validate() const;
  // Relative paths in the document resolve against base_dir.
  static RunManifest from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunManifest load(const std::filesystem::path& path);
};

struct DecodeFailure {
  std::string task_id;
  std::string config_id;
  std::size_t sample_index = 0;
  std::string error;
};

struct GridOptions {
  std::uint64_t run_seed = 0;
  std::size_t n_samples_per_example = 10;
  std::size_t max_len = kDefaultMaxLen;
  std::size_t workers = 1;
};

struct GridRun {
  std::vector<DecodeConfig> configs;  // sorted by config_id
  std::vector<DecodeRecord> records;  // canonical order
  std::vector<DecodeFailure> failures;
  std::vector<TradeoffPoint> summary;
};

/// Decodes every (config, task, sample) triple. Work items are independent
/// and seeded by derive_seed, so the result does not depend on the worker
/// count. A failed decode becomes a DecodeFailure and is left out of the
/// aggregates; a ProtocolError aborts the whole grid.
GridRun execute_grid(const Backend& backend, std::span<const GroundedTask> tasks,
                     std::span<const DecodeConfig> configs, const GridOptions& options);

// Records JSONL in canonical (config_id, task_id, sample_index) order, error
// rows interleaved at their canonical position.
void write_records(std::ostream& out, const GridRun& run);
void write_summary_csv(std::ostream& out, const GridRun& run);

struct RecordFile {
  std::vector<DecodeRecord> records;
  std::vector<DecodeFailure> failures;
};
RecordFile read_records(const std::filesystem::path& path);

inline constexpr const char* kRecordsFileName = "records.jsonl";
inline constexpr const char* kSummaryFileName = "summary.csv";

/// Loads backend and tasks (fatal before any decoding if either fails), runs
/// the requested grids and writes records.jsonl and summary.csv into
/// output_dir.
GridRun run_grid(const RunManifest& manifest);

}  // namespace klguide
