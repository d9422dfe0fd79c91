// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#include "klguide/backend.hpp"

#include <cctype>

#include "klguide/error.hpp"

namespace klguide {

void BackendMeta::validate() const {
  if (vocab_size < 2) throw ProtocolError("backend meta: vocab_size must be >= 2");
  if (eos_id >= vocab_size) throw ProtocolError("backend meta: eos_id out of range");
}

std::string Backend::token_text(TokenId id) const { return std::to_string(id); }

TokenSeq Backend::tokenize(std::string_view) const {
  throw InvalidArgument("backend '" + meta().name + "' cannot tokenize text; use token-level tasks");
}

PromptPrefixes Backend::compose_prompt(const std::optional<std::string>& source, const std::string& context) const {
  PromptPrefixes out;
  out.without_source = tokenize(context);
  if (source) out.with_source = tokenize(*source);
  out.with_source.insert(out.with_source.end(), out.without_source.begin(), out.without_source.end());
  return out;
}

std::string Backend::detokenize(std::span<const TokenId> tokens) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += token_text(tokens[i]);
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

}  // namespace klguide
