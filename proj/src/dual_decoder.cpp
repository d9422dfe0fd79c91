// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#include "klguide/dual_decoder.hpp"

#include "klguide/error.hpp"
#include "klguide/guidance.hpp"
#include "klguide/seeding.hpp"

namespace klguide {

std::string_view to_string(Termination t) { return t == Termination::eos ? "eos" : "max_len"; }

void to_json(nlohmann::json& j, const DecodeRecord& r) {
  j = nlohmann::json{{"task_id", r.task_id},
                     {"config_id", r.config_id},
                     {"sample_index", r.sample_index},
                     {"seed", r.seed},
                     {"tokens", r.tokens},
                     {"ranks", r.ranks},
                     {"kls", r.kls},
                     {"temps", r.temps},
                     {"terminated_by", to_string(r.terminated_by)}};
}

void from_json(const nlohmann::json& j, DecodeRecord& r) {
  j.at("task_id").get_to(r.task_id);
  j.at("config_id").get_to(r.config_id);
  j.at("sample_index").get_to(r.sample_index);
  j.at("seed").get_to(r.seed);
  j.at("tokens").get_to(r.tokens);
  j.at("ranks").get_to(r.ranks);
  j.at("kls").get_to(r.kls);
  j.at("temps").get_to(r.temps);
  const auto term = j.at("terminated_by").get<std::string>();
  if (term == "eos") {
    r.terminated_by = Termination::eos;
  } else if (term == "max_len") {
    r.terminated_by = Termination::max_len;
  } else {
    throw InvalidArgument("record: unknown terminated_by '" + term + "'");
  }
}

namespace {

Logits query(const Backend& backend, const TokenSeq& context, std::size_t step) {
  Logits logits;
  try {
    logits = backend.next_logits(context);
  } catch (const ProtocolError& e) {
    throw ProtocolError("decode step " + std::to_string(step) + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error("decode step " + std::to_string(step) + ": backend failure: " + e.what());
  }
  if (logits.size() != backend.meta().vocab_size) {
    throw ProtocolError("decode step " + std::to_string(step) + ": backend returned " +
                        std::to_string(logits.size()) + " logits for vocab size " +
                        std::to_string(backend.meta().vocab_size));
  }
  return logits;
}

void check_vocab(const TokenSeq& tokens, std::size_t vocab_size, const std::string& task_id) {
  for (TokenId id : tokens) {
    if (id >= vocab_size) {
      throw InvalidArgument("task " + task_id + ": token " + std::to_string(id) + " outside backend vocab of size " +
                            std::to_string(vocab_size));
    }
  }
}

}  // namespace

DecodeRecord decode(const GroundedTask& task, const Backend& backend, const DecodeConfig& config, std::uint64_t seed,
                    std::size_t max_len) {
  if (max_len < 1) throw InvalidArgument("decode: max_len must be >= 1");
  const BackendMeta& meta = backend.meta();
  config.validate(meta.vocab_size);
  check_vocab(task.prefix_with_source, meta.vocab_size, task.task_id);
  check_vocab(task.prefix_without_source, meta.vocab_size, task.task_id);

  const bool guided = config.mode == DecodeMode::guided;
  DecodeRecord record;
  record.task_id = task.task_id;
  record.config_id = config.config_id;
  record.seed = seed;

  TokenSeq with_ctx = task.prefix_with_source;
  TokenSeq without_ctx = task.prefix_without_source;
  Rng rng(seed);

  for (std::size_t step = 0; step < max_len; ++step) {
    const Logits with_logits = query(backend, with_ctx, step);
    TokenId token = 0;
    if (guided) {
      const Logits without_logits = query(backend, without_ctx, step);
      const auto out = guided_step(with_logits, without_logits, config, rng);
      token = out.token;
      record.ranks.push_back(out.rank);
      record.kls.push_back(out.trace.kl_nats);
      record.temps.push_back(out.trace.effective_t);
    } else {
      const auto out = baseline_step(with_logits, config, rng);
      token = out.token;
      record.ranks.push_back(out.rank);
      record.temps.push_back(out.effective_t);
    }
    record.tokens.push_back(token);
    with_ctx.push_back(token);
    if (guided) without_ctx.push_back(token);
    if (token == meta.eos_id) {
      record.terminated_by = Termination::eos;
      break;
    }
  }
  return record;
}

std::vector<DecodeRecord> decode_many(const GroundedTask& task, const Backend& backend, const DecodeConfig& config,
                                      std::uint64_t run_seed, std::size_t n, std::size_t max_len) {
  if (n < 1) throw InvalidArgument("decode_many: n must be >= 1");
  std::vector<DecodeRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto record = decode(task, backend, config, derive_seed(run_seed, config.config_id, task.task_id, i), max_len);
    record.sample_index = i;
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace klguide
