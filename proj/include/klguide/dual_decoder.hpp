// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "klguide/backend.hpp"
#include "klguide/samplers.hpp"
#include "klguide/task.hpp"

namespace klguide {

inline constexpr std::size_t kDefaultMaxLen = 64;

enum class Termination { eos, max_len };

std::string_view to_string(Termination t);

/// One generated response plus its per-step trace. kls is empty for
/// baseline decodes; every other per-step vector has one entry per token.
struct DecodeRecord {
  std::string task_id;
  std::string config_id;
  std::size_t sample_index = 0;
  std::uint64_t seed = 0;
  TokenSeq tokens;
  std::vector<std::size_t> ranks;
  std::vector<double> kls;
  std::vector<double> temps;
  Termination terminated_by = Termination::max_len;

  friend bool operator==(const DecodeRecord&, const DecodeRecord&) = default;
};

void to_json(nlohmann::json& j, const DecodeRecord& r);
void from_json(const nlohmann::json& j, DecodeRecord& r);

/// Autoregressive dual-stream decode.
///
/// Keeps a with-source and a without-source context. Guided mode queries both
/// streams each step (two backend calls), baseline mode only the with-source
/// stream (one call). The sampled token is appended to both contexts; decoding
/// stops after emitting EOS or after max_len tokens. Backend failures are
/// rethrown with the step index attached.
DecodeRecord decode(const GroundedTask& task, const Backend& backend, const DecodeConfig& config, std::uint64_t seed,
                    std::size_t max_len = kDefaultMaxLen);

/// n independent samples; sample i is seeded with
/// derive_seed(run_seed, config.config_id, task.task_id, i).
std::vector<DecodeRecord> decode_many(const GroundedTask& task, const Backend& backend, const DecodeConfig& config,
                                      std::uint64_t run_seed, std::size_t n, std::size_t max_len = kDefaultMaxLen);

}  // namespace klguide
