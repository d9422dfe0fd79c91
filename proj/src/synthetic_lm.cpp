// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#include "klguide/synthetic_lm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "klguide/error.hpp"

namespace klguide {

void SyntheticLmParams::validate() const {
  if (n_glue < 2) throw InvalidArgument("synthetic params: n_glue must be >= 2");
  if (n_fact < 2) throw InvalidArgument("synthetic params: n_fact must be >= 2");
  if (template_len < 1) throw InvalidArgument("synthetic params: template_len must be >= 1");
  if (fact_position >= template_len) throw InvalidArgument("synthetic params: fact_position must be < template_len");
  if (!(delta > 0.0 && delta < 0.5)) throw InvalidArgument("synthetic params: delta must lie in (0, 0.5)");
  if (!(glue_spread > 0.0 && glue_spread <= 1.0)) {
    throw InvalidArgument("synthetic params: glue_spread must lie in (0, 1]");
  }
}

void to_json(nlohmann::json& j, const SyntheticLmParams& p) {
  j = nlohmann::json{{"n_glue", p.n_glue},
                     {"n_fact", p.n_fact},
                     {"template_len", p.template_len},
                     {"fact_position", p.fact_position},
                     {"delta", p.delta},
                     {"glue_spread", p.glue_spread}};
}

void from_json(const nlohmann::json& j, SyntheticLmParams& p) {
  SyntheticLmParams d;
  p.n_glue = j.value("n_glue", d.n_glue);
  p.n_fact = j.value("n_fact", d.n_fact);
  p.template_len = j.value("template_len", d.template_len);
  p.fact_position = j.value("fact_position", d.fact_position);
  p.delta = j.value("delta", d.delta);
  p.glue_spread = j.value("glue_spread", d.glue_spread);
}

SyntheticLmParams load_synthetic_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read synthetic params file: " + path.string());
  try {
    auto params = nlohmann::json::parse(in).get<SyntheticLmParams>();
    params.validate();
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("malformed synthetic params file " + path.string() + ": " + e.what());
  }
}

SyntheticLm::SyntheticLm(SyntheticLmParams params) : params_(params) {
  params_.validate();
  meta_.vocab_size = params_.vocab_size();
  meta_.eos_id = static_cast<TokenId>(params_.n_glue + params_.n_fact);
  meta_.name = "synthetic";
  meta_.concurrent_sessions_safe = true;
}

Logits SyntheticLm::next_logits(std::span<const TokenId> context) const {
  const std::size_t vocab = meta_.vocab_size;
  for (TokenId id : context) {
    if (id >= vocab) throw InvalidArgument("synthetic: context token out of range");
  }

  auto marker = std::find(context.begin(), context.end(), meta_.eos_id);
  std::optional<TokenId> designated;
  std::size_t position = context.size();
  if (marker != context.end()) {
    auto fact = std::find_if(context.begin(), marker, [&](TokenId id) { return is_fact(id); });
    if (fact != marker) designated = *fact;
    position = static_cast<std::size_t>(context.end() - marker) - 1;
  }

  std::vector<double> logits(vocab, kOffSupportLogit);
  if (position >= params_.template_len) {
    logits[meta_.eos_id] = 0.0;
  } else if (position == params_.fact_position) {
    if (designated) {
      const double other = std::log(params_.delta / static_cast<double>(params_.n_fact - 1));
      for (std::size_t f = 0; f < params_.n_fact; ++f) logits[fact_token(f)] = other;
      logits[*designated] = std::log1p(-params_.delta);
    } else {
      for (std::size_t f = 0; f < params_.n_fact; ++f) logits[fact_token(f)] = 0.0;
    }
  } else {
    // Glue tokens follow a geometric profile whose order rotates with t.
    const double slope = 1.0 / params_.glue_spread - 1.0;
    for (std::size_t g = 0; g < params_.n_glue; ++g) {
      const std::size_t r = (g + 3 * position) % params_.n_glue;
      logits[g] = -slope * static_cast<double>(r);
    }
  }
  return Logits(std::move(logits));
}

std::string SyntheticLm::token_text(TokenId id) const {
  if (id == meta_.eos_id) return "</s>";
  if (id < params_.n_glue) return "g" + std::to_string(id);
  if (is_fact(id)) return "f" + std::to_string(id - params_.n_glue);
  throw InvalidArgument("synthetic: token id out of range");
}

TokenSeq SyntheticLm::tokenize(std::string_view text) const {
  TokenSeq out;
  for (const auto& word : split_whitespace(text)) {
    if (word == "</s>") {
      out.push_back(meta_.eos_id);
      continue;
    }
    std::size_t idx = 0;
    auto [ptr, ec] = std::from_chars(word.data() + 1, word.data() + word.size(), idx);
    const bool numeric = word.size() > 1 && ec == std::errc() && ptr == word.data() + word.size();
    if (numeric && word[0] == 'g' && idx < params_.n_glue) {
      out.push_back(glue_token(idx));
    } else if (numeric && word[0] == 'f' && idx < params_.n_fact) {
      out.push_back(fact_token(idx));
    } else {
      throw InvalidArgument("synthetic: unknown token '" + word + "'");
    }
  }
  return out;
}

PromptPrefixes SyntheticLm::compose_prompt(const std::optional<std::string>& source, const std::string& context) const {
  PromptPrefixes out = Backend::compose_prompt(source, context);
  out.with_source.push_back(meta_.eos_id);
  out.without_source.push_back(meta_.eos_id);
  return out;
}

double SyntheticLm::fact_position_kl() const {
  const double m = static_cast<double>(params_.n_fact);
  const double d = params_.delta;
  return (1.0 - d) * std::log((1.0 - d) * m) + d * std::log(d * m / (m - 1.0));
}

std::vector<GroundedTask> generate_synthetic_tasks(const SyntheticLmParams& params, std::size_t n_tasks,
                                                   std::uint64_t seed) {
  params.validate();
  const SyntheticLm lm(params);
  std::mt19937_64 engine(seed);
  std::vector<GroundedTask> tasks;
  tasks.reserve(n_tasks);
  for (std::size_t i = 0; i < n_tasks; ++i) {
    GroundedTask task;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%05zu", i);
    task.task_id = id;

    const TokenId fact = lm.fact_token(engine() % params.n_fact);
    const std::size_t n_context = 1 + engine() % 3;
    TokenSeq context;
    for (std::size_t c = 0; c < n_context; ++c) context.push_back(lm.glue_token(engine() % params.n_glue));
    context.push_back(lm.eos());

    task.prefix_with_source.push_back(fact);
    task.prefix_with_source.insert(task.prefix_with_source.end(), context.begin(), context.end());
    task.prefix_without_source = std::move(context);
    task.ground_truth = GroundTruth{fact, params.fact_position};
    tasks.push_back(std::move(task));
  }
  return tasks;
}

}  // namespace klguide
