// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "klguide/backend.hpp"

namespace klguide {

struct CorpusPair {
  std::string source;  // may be empty
  std::string target;
};

// Corpus file: JSONL of {"source": string|null, "target": string}.
std::vector<CorpusPair> load_corpus(const std::filesystem::path& path);

/// Add-k smoothed n-gram model over whitespace tokens with per-context
/// stupid backoff.
///
/// Training streams are `source <sep> target </s>` for intact examples and
/// `</s>^(order-1) target </s>` for examples without a source, i.e. the empty
/// input is marked by the boundary token. With include_empty every intact
/// example is counted a second time in the empty-input form.
///
/// At query time a context that contains `<sep>` is used as-is; any other
/// context is an empty-input stream and gets the same boundary padding. The
/// longest seen suffix window (at most order-1 tokens) supplies the
/// distribution; each backoff level multiplies by kBackoff.
class NgramModel final : public Backend {
 public:
  static constexpr const char* kFormat = "klguide-ngram-v1";
  static constexpr TokenId kEos = 0;
  static constexpr TokenId kSeparator = 1;
  static constexpr double kBackoff = 0.4;
  static constexpr double kMinProbability = 1e-30;

  struct Row {
    std::map<TokenId, std::uint64_t> next;
    std::uint64_t total = 0;
  };

  static NgramModel train(const std::vector<CorpusPair>& corpus, std::size_t order, double smoothing_k,
                          bool include_empty);
  static NgramModel from_json(const nlohmann::json& j);
  static NgramModel load(const std::filesystem::path& path);

  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  const BackendMeta& meta() const override { return meta_; }
  Logits next_logits(std::span<const TokenId> context) const override;
  std::string token_text(TokenId id) const override;
  TokenSeq tokenize(std::string_view text) const override;
  PromptPrefixes compose_prompt(const std::optional<std::string>& source, const std::string& context) const override;

  /// Smoothed conditional probability from the window actually used (no
  /// backoff weight); for inspection and tests.
  double probability(std::span<const TokenId> context, TokenId next) const;

  std::size_t order() const { return order_; }
  double smoothing_k() const { return smoothing_k_; }
  bool trained_with_empty() const { return trained_with_empty_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const std::map<TokenSeq, Row>& counts() const { return counts_; }

 private:
  NgramModel(std::size_t order, double smoothing_k, bool include_empty, std::vector<std::string> vocab);

  void count_stream(const TokenSeq& stream, std::size_t first_predicted);
  // Returns the row used and how many backoff steps were taken.
  std::pair<const Row*, std::size_t> lookup(std::span<const TokenId> context) const;

  std::size_t order_;
  double smoothing_k_;
  bool trained_with_empty_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, TokenId> index_;
  std::map<TokenSeq, Row> counts_;
  BackendMeta meta_;
};

}  // namespace klguide
