// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "klguide/backend.hpp"
#include "klguide/task.hpp"

namespace klguide {

struct SyntheticLmParams {
  std::size_t n_glue = 16;
  std::size_t n_fact = 8;
  std::size_t template_len = 8;
  std::size_t fact_position = 4;
  double delta = 0.02;        // fact mass leaked to the other facts, with source
  double glue_spread = 0.5;   // 1 = uniform glue, smaller = peakier

  void validate() const;
  std::size_t vocab_size() const { return n_glue + n_fact + 1; }
};

void to_json(nlohmann::json& j, const SyntheticLmParams& p);
void from_json(const nlohmann::json& j, SyntheticLmParams& p);
SyntheticLmParams load_synthetic_params(const std::filesystem::path& path);

/// Position-scheduled language model with a known relevance structure.
///
/// Vocabulary: glue tokens [0, n_glue), fact tokens [n_glue, n_glue + n_fact),
/// then EOS. A prompt is terminated by the first EOS in the context; tokens
/// after it are the generated response and their count is the position t.
/// The designated fact is the first fact token inside the prompt (absent in the
/// without-source stream).
///
///   t <  template_len, t != fact_position  glue distribution, same in both streams
///   t == fact_position                      1 - delta on the designated fact,
///                                           delta / (n_fact - 1) on each other fact;
///                                           uniform over facts without a source
///   t >= template_len                       EOS
///
/// Tokens outside the active support get a logit of kOffSupportLogit, which
/// underflows to exactly zero probability.
class SyntheticLm final : public Backend {
 public:
  static constexpr double kOffSupportLogit = -1000.0;

  explicit SyntheticLm(SyntheticLmParams params);

  const BackendMeta& meta() const override { return meta_; }
  Logits next_logits(std::span<const TokenId> context) const override;
  std::string token_text(TokenId id) const override;
  TokenSeq tokenize(std::string_view text) const override;
  PromptPrefixes compose_prompt(const std::optional<std::string>& source, const std::string& context) const override;

  const SyntheticLmParams& params() const { return params_; }
  TokenId glue_token(std::size_t i) const { return static_cast<TokenId>(i); }
  TokenId fact_token(std::size_t i) const { return static_cast<TokenId>(params_.n_glue + i); }
  bool is_fact(TokenId id) const { return id >= params_.n_glue && id < params_.n_glue + params_.n_fact; }
  TokenId eos() const { return meta_.eos_id; }

  // KL(with || without) at the fact position, in closed form.
  double fact_position_kl() const;

 private:
  SyntheticLmParams params_;
  BackendMeta meta_;
};

/// Deterministic task generator: each task designates one fact (drawn from
/// the seed) as its source and carries a short glue context.
std::vector<GroundedTask> generate_synthetic_tasks(const SyntheticLmParams& params, std::size_t n_tasks,
                                                   std::uint64_t seed);

}  // namespace klguide
