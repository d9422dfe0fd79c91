// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

// klguide command-line entry point.
//
// Exit codes: 0 success, 2 invalid input (flags, files, manifests),
// 3 backend transport or protocol failure, 1 anything else. Failures print a
// single JSON object to stderr.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "klguide/dual_decoder.hpp"
#include "klguide/error.hpp"
#include "klguide/experiments.hpp"
#include "klguide/ngram_lm.hpp"
#include "klguide/remote_backend.hpp"
#include "klguide/synthetic_lm.hpp"
#include "klguide/task.hpp"
#include "klguide/trace_render.hpp"

namespace {

using json = nlohmann::json;
using namespace klguide;

constexpr int kExitOther = 1;
constexpr int kExitInput = 2;
constexpr int kExitBackend = 3;

int fail(int code, std::string_view kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << std::endl;
  return code;
}

struct BackendFlags {
  std::string kind = "synth";
  std::string model;
  std::string url;
  std::string params;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--backend", kind, "synth | ngram | remote")->check(CLI::IsMember({"synth", "ngram", "remote"}));
    cmd->add_option("--model", model, "n-gram model file (ngram backend)");
    cmd->add_option("--url", url, "server base url (remote backend); default $KLGUIDE_REMOTE_URL");
    cmd->add_option("--params", params, "synthetic LM params JSON (synth backend)");
  }

  BackendSpec spec() const {
    BackendSpec s;
    s.kind = kind;
    if (!params.empty()) s.synth_params = load_synthetic_params(params);
    if (kind == "ngram" && model.empty()) throw InvalidArgument("--model is required for the ngram backend");
    s.model = model;
    s.url = url;
    if (s.url.empty()) {
      if (const char* env = std::getenv("KLGUIDE_REMOTE_URL")) s.url = env;
    }
    return s;
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KL-divergence guided temperature decoding"};
  app.require_subcommand(1);

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic token-level task file");
  std::size_t n_tasks = 200;
  std::uint64_t gen_seed = 0;
  SyntheticLmParams synth;
  std::string gen_out, gen_params_out;
  gen->add_option("--n-tasks", n_tasks)->required();
  gen->add_option("--seed", gen_seed)->required();
  gen->add_option("--n-glue", synth.n_glue);
  gen->add_option("--n-fact", synth.n_fact);
  gen->add_option("--template-len", synth.template_len);
  gen->add_option("--fact-pos", synth.fact_position);
  gen->add_option("--delta", synth.delta);
  gen->add_option("--glue-spread", synth.glue_spread);
  gen->add_option("--out", gen_out)->required();
  gen->add_option("--params-out", gen_params_out, "also write the model params as JSON");

  // train-ngram
  auto* train = app.add_subcommand("train-ngram", "train an n-gram backend from a JSONL corpus");
  std::string corpus_path, model_out;
  std::size_t order = 3;
  double smoothing = 0.1;
  bool include_empty = false;
  train->add_option("--corpus", corpus_path)->required();
  train->add_option("--order", order);
  train->add_option("--smoothing", smoothing);
  train->add_flag("--include-empty", include_empty);
  train->add_option("--out", model_out)->required();

  // decode
  auto* dec = app.add_subcommand("decode", "decode every task with one config");
  BackendFlags dec_backend;
  dec_backend.add_to(dec);
  std::string dec_tasks, dec_mode = "baseline", dec_top_k = "all", dec_sigma, dec_records;
  double dec_t0 = 1.0, dec_top_p = 1.0;
  std::uint64_t dec_seed = 0;
  std::size_t dec_n = 1, dec_max_len = kDefaultMaxLen;
  dec->add_option("--task-file", dec_tasks)->required();
  dec->add_option("--mode", dec_mode)->check(CLI::IsMember({"baseline", "guided"}));
  dec->add_option("--t0", dec_t0);
  dec->add_option("--top-k", dec_top_k);
  dec->add_option("--top-p", dec_top_p);
  dec->add_option("--sigma", dec_sigma, "positive real or 'inf' (guided mode)");
  dec->add_option("--seed", dec_seed);
  dec->add_option("--n", dec_n);
  dec->add_option("--max-len", dec_max_len);
  dec->add_option("--records", dec_records)->required();

  // run
  auto* run = app.add_subcommand("run", "run the experiment grids of a manifest");
  std::string manifest_path;
  run->add_option("--manifest", manifest_path)->required();

  // render
  auto* ren = app.add_subcommand("render", "render a record coloured by temperature");
  BackendFlags ren_backend;
  ren_backend.add_to(ren);
  std::string ren_records, ren_format = "ansi";
  std::size_t ren_index = 0;
  ren->add_option("--records", ren_records)->required();
  ren->add_option("--index", ren_index);
  ren->add_option("--format", ren_format)->check(CLI::IsMember({"ansi", "html"}));

  // stub-server
  auto* stub = app.add_subcommand("stub-server", "serve the synthetic LM over HTTP");
  std::string stub_params, stub_host = "127.0.0.1";
  int stub_port = 0;
  StubFaults faults;
  std::size_t slow_ms = 0;
  stub->add_option("--port", stub_port);
  stub->add_option("--host", stub_host);
  stub->add_option("--params", stub_params);
  stub->add_option("--error-first-n", faults.error_first_n);
  stub->add_option("--slow-first-n", faults.slow_first_n);
  stub->add_option("--slow-ms", slow_ms);
  stub->add_option("--logits-length-delta", faults.logits_length_delta);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kExitInput, "usage", e.what());
  }

  try {
    if (*gen) {
      synth.validate();
      write_token_tasks(gen_out, generate_synthetic_tasks(synth, n_tasks, gen_seed));
      if (!gen_params_out.empty()) write_file(gen_params_out, json(synth).dump(2) + "\n");
    } else if (*train) {
      NgramModel::train(load_corpus(corpus_path), order, smoothing, include_empty).save(model_out);
    } else if (*dec) {
      auto backend = make_backend(dec_backend.spec());
      const auto tasks = load_tasks(dec_tasks, *backend);
      const TopK top_k = TopK::parse(dec_top_k);
      DecodeConfig config;
      if (dec_mode == "guided") {
        if (dec_sigma.empty()) throw InvalidArgument("--sigma is required in guided mode");
        config = DecodeConfig::guided(dec_t0, top_k, dec_top_p, parse_number(dec_sigma));
      } else {
        if (!dec_sigma.empty()) throw InvalidArgument("--sigma is only valid in guided mode");
        config = DecodeConfig::baseline(dec_t0, top_k, dec_top_p);
      }
      config.validate(backend->meta().vocab_size);
      std::ofstream out(dec_records, std::ios::binary);
      if (!out) throw InvalidArgument("cannot write " + dec_records);
      for (const auto& task : tasks) {
        for (const auto& r : decode_many(task, *backend, config, dec_seed, dec_n, dec_max_len)) {
          out << json(r).dump() << '\n';
        }
      }
    } else if (*run) {
      const auto manifest = RunManifest::load(manifest_path);
      const auto result = run_grid(manifest);
      std::cout << json{{"records", (manifest.output_dir / kRecordsFileName).string()},
                        {"summary", (manifest.output_dir / kSummaryFileName).string()},
                        {"configs", result.configs.size()},
                        {"records_written", result.records.size()},
                        {"failures", result.failures.size()}}
                       .dump()
                << std::endl;
    } else if (*ren) {
      auto backend = make_backend(ren_backend.spec());
      const auto file = read_records(ren_records);
      if (ren_index >= file.records.size()) {
        throw InvalidArgument("--index " + std::to_string(ren_index) + " out of range (" +
                              std::to_string(file.records.size()) + " records)");
      }
      const auto& record = file.records[ren_index];
      const double t0 = parse_config_id(record.config_id).t0;
      std::cout << render_trace(record, t0, parse_trace_format(ren_format), *backend) << std::endl;
    } else if (*stub) {
      SyntheticLmParams params;
      if (!stub_params.empty()) params = load_synthetic_params(stub_params);
      faults.slow_delay = std::chrono::milliseconds(slow_ms);

      sigset_t signals;
      sigemptyset(&signals);
      sigaddset(&signals, SIGINT);
      sigaddset(&signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &signals, nullptr);  // inherited by the server threads

      StubServer server(params, faults);
      server.start(stub_host, stub_port);
      std::cout << server.base_url() << std::endl;
      int sig = 0;
      sigwait(&signals, &sig);
      server.stop();
    }
  } catch (const InvalidArgument& e) {
    return fail(kExitInput, "invalid_argument", e.what());
  } catch (const ProtocolError& e) {
    return fail(kExitBackend, "protocol", e.what());
  } catch (const RetryableError& e) {
    return fail(kExitBackend, "unreachable", e.what());
  } catch (const HttpStatusError& e) {
    return fail(kExitBackend, "http_status", e.what());
  } catch (const std::exception& e) {
    return fail(kExitOther, "error", e.what());
  }
  return 0;
}
