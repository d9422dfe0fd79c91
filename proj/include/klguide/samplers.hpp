// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "klguide/distributions.hpp"

namespace klguide {

enum class DecodeMode { baseline, guided };

std::string_view to_string(DecodeMode mode);
DecodeMode parse_decode_mode(std::string_view text);

// Top-k threshold; an empty value means "all".
struct TopK {
  std::optional<std::size_t> value;

  static TopK all() { return TopK{}; }
  static TopK of(std::size_t k) { return TopK{k}; }

  bool is_all() const noexcept { return !value.has_value(); }
  std::string to_string() const;
  static TopK parse(std::string_view text);

  friend bool operator==(const TopK&, const TopK&) = default;
};

/// One decoding algorithm instance.
///
/// For baseline mode `t0` is the constant sampling temperature and `sigma` is
/// absent. For guided mode `t0` is the base temperature fed to the converter
/// and `sigma` is the KL half-life in nats (+infinity allowed).
struct DecodeConfig {
  DecodeMode mode = DecodeMode::baseline;
  double t0 = 1.0;
  TopK top_k;
  double top_p = 1.0;
  std::optional<double> sigma;
  std::string config_id;

  // Throws InvalidArgument when an invariant is broken. vocab_size = 0 skips
  // the top-k upper bound check.
  void validate(std::size_t vocab_size = 0) const;

  static DecodeConfig baseline(double t0, TopK top_k, double top_p);
  static DecodeConfig guided(double t0, TopK top_k, double top_p, double sigma);
};

// Canonical id derived only from the parameters, e.g.
// "baseline:T=0.7:k=40:p=1" or "guided:T0=1:k=all:p=0.95:sigma=inf".
// Equal parameter sets share an id, so they share derived seeds.
std::string canonical_config_id(const DecodeConfig& config);
DecodeConfig parse_config_id(std::string_view id);

// Shortest round-trip decimal; "inf" for +infinity.
std::string format_number(double value);
double parse_number(std::string_view text);

struct StepResult {
  TokenId token = 0;
  std::size_t rank = 0;
  double effective_t = 0.0;
};

/// Keeps the k largest logits (ties: lower id) and masks the rest.
Logits mask_top_k(const Logits& logits, TopK k);

/// Nucleus truncation: keeps the minimal prefix of tokens (sorted by
/// probability, ties by id) whose mass reaches p, never fewer than one
/// token, then renormalizes. p = 1 is the identity.
Pmf mask_top_p(const Pmf& pmf, double p);

// The shared pipeline: top-k on logits, temperature softmax, top-p on the
// tempered distribution, one categorical draw. rank is measured on the raw
// logits.
StepResult sample_step(const Logits& logits, double temperature, TopK top_k, double top_p, Rng& rng);

StepResult baseline_step(const Logits& logits, const DecodeConfig& config, Rng& rng);

}  // namespace klguide
