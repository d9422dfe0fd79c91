// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#include "klguide/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "klguide/error.hpp"

namespace klguide {

Pmf::Pmf(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw InvalidArgument("pmf: empty vector");
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) throw InvalidArgument("pmf: entries must be finite and non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) throw InvalidArgument("pmf: entries do not sum to 1");
}

Pmf Pmf::point_mass(std::size_t size, TokenId id) {
  if (id >= size) throw InvalidArgument("pmf: point mass id out of range");
  std::vector<double> probs(size, 0.0);
  probs[id] = 1.0;
  return Pmf(std::move(probs));
}

void validate_logits(const Logits& logits) {
  bool any_unmasked = false;
  for (double v : logits.values) {
    if (v == kMaskedLogit) continue;
    if (!std::isfinite(v)) throw InvalidArgument("invalid logits");
    any_unmasked = true;
  }
  if (!any_unmasked) throw InvalidArgument("empty support");
}

TokenId argmax(const Logits& logits) {
  validate_logits(logits);
  std::size_t best = 0;
  double best_v = kMaskedLogit;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits[i] > best_v) {
      best_v = logits[i];
      best = i;
    }
  }
  return static_cast<TokenId>(best);
}

Pmf softmax(const Logits& logits, double temperature) {
  if (!(temperature >= 0.0)) throw InvalidArgument("softmax: temperature must be >= 0");
  validate_logits(logits);
  if (temperature <= kGreedyTemperature) return Pmf::point_mass(logits.size(), argmax(logits));

  double max_v = kMaskedLogit;
  for (double v : logits.values) max_v = std::max(max_v, v);

  std::vector<double> probs(logits.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits.is_masked(i)) continue;
    probs[i] = std::exp((logits[i] - max_v) / temperature);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return Pmf(std::move(probs));
}

std::vector<double> log_softmax(const Logits& logits) {
  validate_logits(logits);
  double max_v = kMaskedLogit;
  for (double v : logits.values) max_v = std::max(max_v, v);
  double sum = 0.0;
  for (double v : logits.values) {
    if (v != kMaskedLogit) sum += std::exp(v - max_v);
  }
  const double lse = max_v + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

std::vector<std::size_t> ranks(const Logits& logits) {
  validate_logits(logits);
  std::vector<std::size_t> order(logits.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
  std::vector<std::size_t> rank(logits.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  return rank;
}

std::size_t rank_of(const Logits& logits, TokenId token) {
  if (token >= logits.size()) throw InvalidArgument("rank_of: token out of range");
  const double v = logits[token];
  std::size_t rank = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits[i] > v || (logits[i] == v && i < token)) ++rank;
  }
  return rank;
}

TokenId sample_categorical(std::span<const double> probs, Rng& rng) {
  double total = 0.0;
  for (double p : probs) total += p;
  if (!(total > 0.0) || !std::isfinite(total)) throw InvalidArgument("sample_categorical: degenerate pmf");

  const double u = rng.uniform() * total;
  double cum = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_nonzero = i;
    cum += probs[i];
    if (u < cum) return static_cast<TokenId>(i);
  }
  // u landed in the rounding gap above the accumulated total.
  return static_cast<TokenId>(last_nonzero);
}

TokenId sample_categorical(const Pmf& pmf, Rng& rng) { return sample_categorical(pmf.probs(), rng); }

}  // namespace klguide
