// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#include "klguide/ngram_lm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include "klguide/error.hpp"

namespace klguide {
namespace {

std::string join_ids(const TokenSeq& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(ids[i]);
  }
  return out;
}

TokenId parse_id(std::string_view text) {
  TokenId id = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidArgument("ngram model: bad token id '" + std::string(text) + "'");
  }
  return id;
}

TokenSeq parse_ids(std::string_view text) {
  TokenSeq out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(',', start);
    out.push_back(parse_id(text.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::vector<CorpusPair> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read corpus file: " + path.string());
  std::vector<CorpusPair> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      CorpusPair pair;
      if (j.contains("source") && !j["source"].is_null()) pair.source = j["source"].get<std::string>();
      pair.target = j.at("target").get<std::string>();
      corpus.push_back(std::move(pair));
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return corpus;
}

NgramModel::NgramModel(std::size_t order, double smoothing_k, bool include_empty, std::vector<std::string> vocab)
    : order_(order), smoothing_k_(smoothing_k), trained_with_empty_(include_empty), vocab_(std::move(vocab)) {
  if (order_ < 1) throw InvalidArgument("ngram: order must be >= 1");
  if (!(smoothing_k_ >= 0.0)) throw InvalidArgument("ngram: smoothing_k must be >= 0");
  if (vocab_.size() < 3) throw InvalidArgument("ngram: empty vocabulary");
  if (vocab_[kEos] != "</s>" || vocab_[kSeparator] != "<sep>") {
    throw InvalidArgument("ngram: vocabulary must start with </s>, <sep>");
  }
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], static_cast<TokenId>(i)).second) {
      throw InvalidArgument("ngram: duplicate vocabulary entry '" + vocab_[i] + "'");
    }
  }
  meta_.vocab_size = vocab_.size();
  meta_.eos_id = kEos;
  meta_.name = "ngram";
  meta_.concurrent_sessions_safe = true;
}

NgramModel NgramModel::train(const std::vector<CorpusPair>& corpus, std::size_t order, double smoothing_k,
                             bool include_empty) {
  if (corpus.empty()) throw InvalidArgument("ngram: corpus is empty");
  std::set<std::string> words;
  for (const auto& pair : corpus) {
    for (auto& w : split_whitespace(pair.source)) words.insert(std::move(w));
    for (auto& w : split_whitespace(pair.target)) words.insert(std::move(w));
  }
  words.erase("</s>");
  words.erase("<sep>");
  if (words.empty()) throw InvalidArgument("ngram: empty vocabulary");

  std::vector<std::string> vocab{"</s>", "<sep>"};
  vocab.insert(vocab.end(), words.begin(), words.end());
  NgramModel model(order, smoothing_k, include_empty, std::move(vocab));

  const std::size_t pad = order - 1;
  for (const auto& pair : corpus) {
    const TokenSeq src = model.tokenize(pair.source);
    const TokenSeq tgt = model.tokenize(pair.target);

    if (!src.empty()) {
      TokenSeq stream = src;
      stream.push_back(kSeparator);
      stream.insert(stream.end(), tgt.begin(), tgt.end());
      stream.push_back(kEos);
      model.count_stream(stream, 0);
    }
    if (src.empty() || include_empty) {
      TokenSeq stream(pad, kEos);
      stream.insert(stream.end(), tgt.begin(), tgt.end());
      stream.push_back(kEos);
      model.count_stream(stream, pad);
    }
  }
  return model;
}

void NgramModel::count_stream(const TokenSeq& stream, std::size_t first_predicted) {
  for (std::size_t i = first_predicted; i < stream.size(); ++i) {
    const std::size_t max_len = std::min(order_ - 1, i);
    for (std::size_t len = 0; len <= max_len; ++len) {
      TokenSeq key(stream.begin() + static_cast<std::ptrdiff_t>(i - len), stream.begin() + static_cast<std::ptrdiff_t>(i));
      Row& row = counts_[std::move(key)];
      ++row.next[stream[i]];
      ++row.total;
    }
  }
}

std::pair<const NgramModel::Row*, std::size_t> NgramModel::lookup(std::span<const TokenId> context) const {
  TokenSeq seq;
  if (std::find(context.begin(), context.end(), kSeparator) == context.end()) seq.assign(order_ - 1, kEos);
  seq.insert(seq.end(), context.begin(), context.end());

  const std::size_t longest = std::min(order_ - 1, seq.size());
  for (std::size_t len = longest + 1; len-- > 0;) {
    TokenSeq key(seq.end() - static_cast<std::ptrdiff_t>(len), seq.end());
    auto it = counts_.find(key);
    if (it != counts_.end()) return {&it->second, longest - len};
  }
  throw InvalidArgument("ngram: model has no unigram row");
}

Logits NgramModel::next_logits(std::span<const TokenId> context) const {
  for (TokenId id : context) {
    if (id >= vocab_.size()) throw InvalidArgument("ngram: context token out of range");
  }
  auto [row, depth] = lookup(context);
  const double vocab = static_cast<double>(vocab_.size());
  const double denom = static_cast<double>(row->total) + smoothing_k_ * vocab;
  const double backoff = static_cast<double>(depth) * std::log(kBackoff);

  std::vector<double> logits(vocab_.size());
  for (std::size_t w = 0; w < vocab_.size(); ++w) {
    auto it = row->next.find(static_cast<TokenId>(w));
    const double count = it == row->next.end() ? 0.0 : static_cast<double>(it->second);
    logits[w] = std::log(std::max((count + smoothing_k_) / denom, kMinProbability)) + backoff;
  }
  return Logits(std::move(logits));
}

double NgramModel::probability(std::span<const TokenId> context, TokenId next) const {
  if (next >= vocab_.size()) throw InvalidArgument("ngram: token out of range");
  auto [row, depth] = lookup(context);
  auto it = row->next.find(next);
  const double count = it == row->next.end() ? 0.0 : static_cast<double>(it->second);
  return (count + smoothing_k_) / (static_cast<double>(row->total) + smoothing_k_ * static_cast<double>(vocab_.size()));
}

std::string NgramModel::token_text(TokenId id) const {
  if (id >= vocab_.size()) throw InvalidArgument("ngram: token out of range");
  return vocab_[id];
}

TokenSeq NgramModel::tokenize(std::string_view text) const {
  TokenSeq out;
  for (const auto& word : split_whitespace(text)) {
    auto it = index_.find(word);
    if (it == index_.end()) throw InvalidArgument("ngram: out-of-vocabulary word '" + word + "'");
    out.push_back(it->second);
  }
  return out;
}

PromptPrefixes NgramModel::compose_prompt(const std::optional<std::string>& source, const std::string& context) const {
  PromptPrefixes out;
  out.without_source = tokenize(context);
  const TokenSeq src = source ? tokenize(*source) : TokenSeq{};
  if (src.empty()) {
    out.with_source = out.without_source;
  } else {
    out.with_source = src;
    out.with_source.push_back(kSeparator);
    out.with_source.insert(out.with_source.end(), out.without_source.begin(), out.without_source.end());
  }
  return out;
}

nlohmann::json NgramModel::to_json() const {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [ctx, row] : counts_) {
    nlohmann::json next = nlohmann::json::object();
    for (const auto& [tok, c] : row.next) next[std::to_string(tok)] = c;
    counts[join_ids(ctx)] = std::move(next);
  }
  return nlohmann::json{{"format", kFormat},
                        {"order", order_},
                        {"smoothing_k", smoothing_k_},
                        {"trained_with_empty", trained_with_empty_},
                        {"vocab", vocab_},
                        {"counts", std::move(counts)}};
}

NgramModel NgramModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kFormat) {
      throw InvalidArgument("ngram model: unsupported format '" + j.at("format").get<std::string>() + "'");
    }
    NgramModel model(j.at("order").get<std::size_t>(), j.at("smoothing_k").get<double>(),
                     j.at("trained_with_empty").get<bool>(), j.at("vocab").get<std::vector<std::string>>());
    for (const auto& [key, next] : j.at("counts").items()) {
      TokenSeq ctx = parse_ids(key);
      if (ctx.size() >= model.order_) throw InvalidArgument("ngram model: context window too long");
      Row row;
      for (const auto& [tok, c] : next.items()) {
        const TokenId id = parse_id(tok);
        if (id >= model.vocab_.size()) throw InvalidArgument("ngram model: token id out of range");
        const auto count = c.get<std::uint64_t>();
        row.next[id] = count;
        row.total += count;
      }
      model.counts_.emplace(std::move(ctx), std::move(row));
    }
    if (!model.counts_.contains(TokenSeq{})) throw InvalidArgument("ngram model: missing unigram row");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("ngram model: ") + e.what());
  }
}

NgramModel NgramModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read ngram model file: " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("malformed ngram model file " + path.string() + ": " + e.what());
  }
}

void NgramModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write ngram model file: " + path.string());
  out << to_json().dump() << '\n';
}

}  // namespace klguide
