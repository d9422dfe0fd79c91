// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "klguide/distributions.hpp"

namespace klguide {

struct BackendMeta {
  std::size_t vocab_size = 0;
  TokenId eos_id = 0;
  std::string name;
  bool concurrent_sessions_safe = false;

  void validate() const;
};

struct PromptPrefixes {
  TokenSeq with_source;
  TokenSeq without_source;
};

/// Logits provider contract. next_logits must be a deterministic function of
/// the context and return exactly vocab_size finite values.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendMeta& meta() const = 0;
  virtual Logits next_logits(std::span<const TokenId> context) const = 0;

  virtual std::string token_text(TokenId id) const;
  virtual TokenSeq tokenize(std::string_view text) const;

  // Builds both stream prefixes for a text task. The default concatenates
  // tokenize(source) and tokenize(context).
  virtual PromptPrefixes compose_prompt(const std::optional<std::string>& source, const std::string& context) const;

  std::string detokenize(std::span<const TokenId> tokens) const;
};

/// Decorator that counts next_logits calls.
class CountingBackend final : public Backend {
 public:
  explicit CountingBackend(const Backend& inner) : inner_(inner) {}

  const BackendMeta& meta() const override { return inner_.meta(); }
  Logits next_logits(std::span<const TokenId> context) const override {
    queries_.fetch_add(1, std::memory_order_relaxed);
    return inner_.next_logits(context);
  }
  std::string token_text(TokenId id) const override { return inner_.token_text(id); }
  TokenSeq tokenize(std::string_view text) const override { return inner_.tokenize(text); }
  PromptPrefixes compose_prompt(const std::optional<std::string>& source, const std::string& context) const override {
    return inner_.compose_prompt(source, context);
  }

  std::uint64_t queries() const { return queries_.load(); }
  void reset() { queries_.store(0); }

 private:
  const Backend& inner_;
  mutable std::atomic<std::uint64_t> queries_{0};
};

std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace klguide
