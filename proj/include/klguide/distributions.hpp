// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace klguide {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

// Sentinel for a logit removed by masking. Only masking operations produce it.
inline constexpr double kMaskedLogit = -std::numeric_limits<double>::infinity();

// Temperatures at or below this value decode greedily.
inline constexpr double kGreedyTemperature = 1e-6;

struct Logits {
  std::vector<double> values;

  Logits() = default;
  explicit Logits(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  bool is_masked(std::size_t i) const { return values[i] == kMaskedLogit; }
};

/// A normalized categorical distribution over the vocabulary.
///
/// Construction validates: every entry finite and non-negative, and the
/// entries sum to one within 1e-9.
class Pmf {
 public:
  static constexpr double kSumTolerance = 1e-9;

  Pmf() = default;
  explicit Pmf(std::vector<double> probs);

  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

  static Pmf point_mass(std::size_t size, TokenId id);

  friend bool operator==(const Pmf&, const Pmf&) = default;

 private:
  std::vector<double> probs_;
};

/// Per-decode random stream. Draws are platform independent: a 64-bit
/// Mersenne Twister feeding a 53-bit uniform on [0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

// Throws "invalid logits" for NaN or +inf entries and "empty support" when
// every entry is masked.
void validate_logits(const Logits& logits);

/// Lowest-id argmax over unmasked entries.
TokenId argmax(const Logits& logits);

/// Temperature softmax. At or below kGreedyTemperature this is a point mass on
/// the argmax; masked entries always get probability zero.
Pmf softmax(const Logits& logits, double temperature);

/// Natural-log probabilities at T = 1, computed as l_k - logsumexp(l).
std::vector<double> log_softmax(const Logits& logits);

/// rank[k] = number of tokens ordered before k when sorting by logit
/// descending, ties by ascending id. The argmax has rank 0.
std::vector<std::size_t> ranks(const Logits& logits);

/// Rank of a single token, same ordering as ranks(); O(vocab).
std::size_t rank_of(const Logits& logits, TokenId token);

/// Inverse-CDF draw walking ids in ascending order. Consumes exactly one
/// uniform from rng.
TokenId sample_categorical(std::span<const double> probs, Rng& rng);
TokenId sample_categorical(const Pmf& pmf, Rng& rng);

}  // namespace klguide
