// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#include "klguide/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "klguide/error.hpp"

namespace klguide {
namespace {

struct SeqHash {
  std::size_t operator()(const TokenSeq& s) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (TokenId t : s) h = (h ^ t) * 1099511628211ull;
    return h;
  }
};

using NgramCounts = std::unordered_map<TokenSeq, std::size_t, SeqHash>;

NgramCounts count_ngrams(const TokenSeq& tokens, std::size_t n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[TokenSeq(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

// Largest count of an n-gram over all responses, the response holding it, and
// the largest count among the remaining responses.
struct MaxCounts {
  std::size_t top = 0;
  std::size_t owner = 0;
  std::size_t runner_up = 0;
};

std::size_t closest_ref_length(const std::vector<std::size_t>& sorted_lengths, std::size_t own) {
  auto [lo, hi] = std::equal_range(sorted_lengths.begin(), sorted_lengths.end(), own);
  if (hi - lo >= 2) return own;
  std::optional<std::size_t> best;
  auto consider = [&](std::size_t len) {
    const auto d = len > own ? len - own : own - len;
    if (!best) {
      best = len;
      return;
    }
    const auto bd = *best > own ? *best - own : own - *best;
    if (d < bd || (d == bd && len < *best)) best = len;
  };
  if (lo != sorted_lengths.begin()) consider(*(lo - 1));
  if (hi != sorted_lengths.end()) consider(*hi);
  return *best;
}

}  // namespace

double var_rank(std::span<const DecodeRecord> records) {
  unsigned __int128 n = 0, sum = 0, sum_sq = 0;
  for (const auto& r : records) {
    for (std::size_t rank : r.ranks) {
      ++n;
      sum += rank;
      sum_sq += static_cast<unsigned __int128>(rank) * rank;
    }
  }
  if (n == 0) throw InvalidArgument("var_rank: no tokens");
  // N^2 var = N * sum_sq - sum^2, exact.
  const unsigned __int128 scaled = n * sum_sq - sum * sum;
  const long double nn = static_cast<long double>(n);
  return static_cast<double>(static_cast<long double>(scaled) / (nn * nn));
}

double self_bleu4(std::vector<TokenSeq> responses) {
  if (responses.size() < 2) throw InvalidArgument("self_bleu4: undefined for fewer than two responses");
  std::sort(responses.begin(), responses.end());
  const std::size_t count = responses.size();

  std::vector<std::size_t> lengths;
  for (const auto& r : responses) lengths.push_back(r.size());
  std::sort(lengths.begin(), lengths.end());

  std::vector<double> log_precision_sum(count, 0.0);
  for (std::size_t n = 1; n <= 4; ++n) {
    std::vector<NgramCounts> per_response;
    per_response.reserve(count);
    std::unordered_map<TokenSeq, MaxCounts, SeqHash> maxima;
    for (std::size_t i = 0; i < count; ++i) {
      per_response.push_back(count_ngrams(responses[i], n));
      for (const auto& [gram, c] : per_response.back()) {
        auto& m = maxima[gram];
        if (c > m.top) {
          m.runner_up = m.top;
          m.top = c;
          m.owner = i;
        } else if (c > m.runner_up) {
          m.runner_up = c;
        }
      }
    }
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t matched = 0, total = 0;
      for (const auto& [gram, c] : per_response[i]) {
        const auto& m = maxima.at(gram);
        const std::size_t ref_max = m.owner == i ? m.runner_up : m.top;
        matched += std::min(c, ref_max);
        total += c;
      }
      double p = total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total);
      if (p <= 0.0) p = kBleuPrecisionFloor;
      log_precision_sum[i] += std::log(p);
    }
  }

  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t c = responses[i].size();
    if (c == 0) continue;
    const std::size_t r = closest_ref_length(lengths, c);
    const double bp = c > r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
    sum += bp * std::exp(log_precision_sum[i] / 4.0);
  }
  return sum / static_cast<double>(count);
}

TokenSeq response_tokens(const DecodeRecord& record, TokenId eos_id) {
  TokenSeq out = record.tokens;
  if (record.terminated_by == Termination::eos && !out.empty() && out.back() == eos_id) out.pop_back();
  return out;
}

int attribution_synthetic(const DecodeRecord& record, const GroundedTask& task) {
  if (!task.ground_truth) throw InvalidArgument("attribution: needs synthetic task (no ground truth)");
  const auto& gt = *task.ground_truth;
  if (record.tokens.size() <= gt.fact_position) {
    throw InvalidArgument("attribution: record of length " + std::to_string(record.tokens.size()) +
                          " does not reach fact position " + std::to_string(gt.fact_position));
  }
  return record.tokens[gt.fact_position] == gt.fact_token ? 1 : 0;
}

std::optional<double> SyntheticAttributionGrader::grade(const DecodeRecord& record, const GroundedTask& task) const {
  if (!task.ground_truth) return std::nullopt;
  if (record.tokens.size() <= task.ground_truth->fact_position) return 0.0;
  return attribution_synthetic(record, task);
}

std::vector<TradeoffPoint> summarize(std::span<const DecodeRecord> records, std::span<const GroundedTask> tasks,
                                     TokenId eos_id, const AttributionGrader& grader) {
  std::map<std::string, const GroundedTask*> by_id;
  for (const auto& t : tasks) by_id.emplace(t.task_id, &t);

  std::map<std::string, std::vector<const DecodeRecord*>> groups;
  for (const auto& r : records) groups[r.config_id].push_back(&r);

  std::vector<TradeoffPoint> points;
  for (const auto& [config_id, group] : groups) {
    TradeoffPoint point;
    point.config_id = config_id;
    point.n_records = group.size();

    std::vector<DecodeRecord> pool;
    std::vector<TokenSeq> responses;
    std::map<std::string, std::size_t> per_task;
    std::vector<double> scores;
    bool gradable = true;
    for (const DecodeRecord* r : group) {
      auto it = by_id.find(r->task_id);
      if (it == by_id.end()) throw InvalidArgument("summarize: record for unknown task '" + r->task_id + "'");
      ++per_task[r->task_id];
      responses.push_back(response_tokens(*r, eos_id));
      pool.push_back(*r);
      if (gradable) {
        auto score = grader.grade(*r, *it->second);
        if (score) {
          scores.push_back(*score);
        } else {
          gradable = false;
        }
      }
    }
    point.n_examples = per_task.size();
    for (const auto& [_, n] : per_task) point.n_samples_per_example = std::max(point.n_samples_per_example, n);
    point.var_rank = var_rank(pool);
    if (responses.size() >= 2) point.self_bleu4 = self_bleu4(std::move(responses));
    if (gradable && !scores.empty()) {
      // sorted so the sum does not depend on record order
      std::sort(scores.begin(), scores.end());
      double sum = 0.0;
      for (double s : scores) sum += s;
      point.mean_attribution = sum / static_cast<double>(scores.size());
    }
    points.push_back(std::move(point));
  }
  return points;
}

}  // namespace klguide
