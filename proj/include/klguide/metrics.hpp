// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "klguide/dual_decoder.hpp"
#include "klguide/task.hpp"

namespace klguide {

// Precision floor applied to zero n-gram precisions before the geometric mean.
inline constexpr double kBleuPrecisionFloor = 1e-9;

struct TradeoffPoint {
  std::string config_id;
  std::optional<double> mean_attribution;  // empty when tasks carry no ground truth
  double var_rank = 0.0;
  std::optional<double> self_bleu4;        // empty with fewer than two responses
  std::size_t n_examples = 0;
  std::size_t n_samples_per_example = 0;
  std::size_t n_records = 0;

  friend bool operator==(const TradeoffPoint&, const TradeoffPoint&) = default;
};

/// Population variance of all ranks flattened across records. Accumulated in
/// exact integer arithmetic, so the result does not depend on record order.
double var_rank(std::span<const DecodeRecord> records);

/// Mean BLEU-4 of every response against all the others as references:
/// clipped n-gram precisions for n = 1..4, equal-weight geometric mean,
/// closest-reference brevity penalty. Throws for fewer than two responses.
double self_bleu4(std::vector<TokenSeq> responses);

/// Response tokens used for diversity metrics: the record's tokens without the
/// terminating EOS.
TokenSeq response_tokens(const DecodeRecord& record, TokenId eos_id);

/// 1 iff the token at the ground-truth fact position equals the fact token.
int attribution_synthetic(const DecodeRecord& record, const GroundedTask& task);

/// Attribution grading hook. The built-in grader is the synthetic exact-match
/// oracle; an NLI grader would plug in here.
class AttributionGrader {
 public:
  virtual ~AttributionGrader() = default;
  // Score in [0, 1], or empty if this task cannot be graded.
  virtual std::optional<double> grade(const DecodeRecord& record, const GroundedTask& task) const = 0;
};

// Ungradable when the task lacks ground truth; a response that ends before
// the fact position scores 0.
class SyntheticAttributionGrader final : public AttributionGrader {
 public:
  std::optional<double> grade(const DecodeRecord& record, const GroundedTask& task) const override;
};

/// Per-config aggregates over the full record pool of each config, ordered by
/// config_id. mean_attribution is present only if every record is gradable.
std::vector<TradeoffPoint> summarize(std::span<const DecodeRecord> records, std::span<const GroundedTask> tasks,
                                     TokenId eos_id, const AttributionGrader& grader = SyntheticAttributionGrader{});

}  // namespace klguide
