// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#include "klguide/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>
#include <variant>

#include "klguide/error.hpp"
#include "klguide/ngram_lm.hpp"
#include "klguide/remote_backend.hpp"

namespace klguide {
namespace {

using json = nlohmann::json;

constexpr std::pair<GridGroup, std::string_view> kGroupNames[] = {
    {GridGroup::baseline_T, "baseline_T"},         {GridGroup::baseline_top_p, "baseline_top_p"},
    {GridGroup::baseline_top_k, "baseline_top_k"}, {GridGroup::guided_T, "guided_T"},
    {GridGroup::guided_top_p, "guided_top_p"},
};

std::vector<double> tenths() {
  std::vector<double> v;
  for (int i = 1; i <= 9; ++i) v.push_back(i / 10.0);
  return v;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

std::string_view to_string(GridGroup group) {
  for (auto [g, name] : kGroupNames) {
    if (g == group) return name;
  }
  return "?";
}

GridGroup parse_grid_group(std::string_view name) {
  for (auto [g, n] : kGroupNames) {
    if (n == name) return g;
  }
  throw InvalidArgument("unknown grid '" + std::string(name) + "'");
}

std::vector<double> guided_sigmas() {
  return {1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0, 3.0, std::numeric_limits<double>::infinity()};
}

std::vector<DecodeConfig> build_grid(GridGroup group, std::size_t vocab_size) {
  std::vector<DecodeConfig> configs;
  switch (group) {
    case GridGroup::baseline_T:
      for (int i = 0; i <= 10; ++i) configs.push_back(DecodeConfig::baseline(i / 10.0, TopK::of(40), 1.0));
      break;
    case GridGroup::baseline_top_p: {
      std::vector<double> ps{0.0, 0.01, 0.05};
      for (double p : tenths()) ps.push_back(p);
      ps.insert(ps.end(), {0.95, 0.99, 1.0});
      for (double p : ps) configs.push_back(DecodeConfig::baseline(1.0, TopK::all(), p));
      break;
    }
    case GridGroup::baseline_top_k:
      for (std::size_t k : {1, 2, 5, 10, 20, 40, 80, 160, 320, 640, 1280}) {
        configs.push_back(DecodeConfig::baseline(1.0, TopK::of(k), 1.0));
      }
      configs.push_back(DecodeConfig::baseline(1.0, TopK::all(), 1.0));
      break;
    case GridGroup::guided_T:
      for (double s : guided_sigmas()) configs.push_back(DecodeConfig::guided(0.7, TopK::of(40), 1.0, s));
      break;
    case GridGroup::guided_top_p:
      for (double s : guided_sigmas()) configs.push_back(DecodeConfig::guided(1.0, TopK::all(), 0.95, s));
      break;
  }

  if (vocab_size == 0) return configs;
  std::vector<DecodeConfig> clamped;
  std::set<std::string> seen;
  for (auto c : configs) {
    if (!c.top_k.is_all() && *c.top_k.value > vocab_size) {
      c.top_k = TopK::all();
      c.config_id = canonical_config_id(c);
    }
    if (seen.insert(c.config_id).second) clamped.push_back(std::move(c));
  }
  return clamped;
}

std::vector<DecodeConfig> build_grids(std::span<const GridGroup> groups, std::size_t vocab_size) {
  std::vector<DecodeConfig> out;
  std::set<std::string> seen;
  for (GridGroup g : groups) {
    for (auto& c : build_grid(g, vocab_size)) {
      if (seen.insert(c.config_id).second) out.push_back(std::move(c));
    }
  }
  return out;
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
  if (spec.kind == "synth") return std::make_unique<SyntheticLm>(spec.synth_params);
  if (spec.kind == "ngram") return std::make_unique<NgramModel>(NgramModel::load(spec.model));
  if (spec.kind == "remote") {
    if (spec.url.empty()) throw InvalidArgument("remote backend needs a url");
    return std::make_unique<RemoteBackend>(spec.url);
  }
  throw InvalidArgument("unknown backend kind '" + spec.kind + "'");
}

void RunManifest::validate() const {
  if (grids.empty()) throw InvalidArgument("manifest: grids must be non-empty");
  if (n_samples_per_example < 1) throw InvalidArgument("manifest: n_samples_per_example must be >= 1");
  if (max_len < 1) throw InvalidArgument("manifest: max_len must be >= 1");
  if (task_file.empty()) throw InvalidArgument("manifest: task_file is required");
  if (output_dir.empty()) throw InvalidArgument("manifest: output_dir is required");
}

RunManifest RunManifest::from_json(const json& j, const std::filesystem::path& base_dir) {
  RunManifest m;
  try {
    m.run_seed = j.value("run_seed", std::uint64_t{0});
    const json& b = j.at("backend");
    m.backend.kind = b.at("kind").get<std::string>();
    if (b.contains("params")) m.backend.synth_params = b["params"].get<SyntheticLmParams>();
    if (b.contains("params_file")) {
      m.backend.synth_params = load_synthetic_params(resolve(base_dir, b["params_file"].get<std::string>()));
    }
    if (b.contains("model")) m.backend.model = resolve(base_dir, b["model"].get<std::string>());
    m.backend.url = b.value("url", std::string());
    m.task_file = resolve(base_dir, j.at("task_file").get<std::string>());
    for (const auto& g : j.at("grids")) m.grids.push_back(parse_grid_group(g.get<std::string>()));
    m.n_samples_per_example = j.value("n_samples_per_example", m.n_samples_per_example);
    m.max_len = j.value("max_len", m.max_len);
    m.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    m.workers = j.value("workers", m.workers);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("manifest: ") + e.what());
  }
  m.validate();
  return m;
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read manifest: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("malformed manifest " + path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

GridRun execute_grid(const Backend& backend, std::span<const GroundedTask> tasks,
                     std::span<const DecodeConfig> configs, const GridOptions& options) {
  if (options.n_samples_per_example < 1) throw InvalidArgument("grid: n_samples_per_example must be >= 1");
  GridRun run;
  run.configs.assign(configs.begin(), configs.end());
  std::sort(run.configs.begin(), run.configs.end(),
            [](const DecodeConfig& a, const DecodeConfig& b) { return a.config_id < b.config_id; });
  for (std::size_t i = 1; i < run.configs.size(); ++i) {
    if (run.configs[i].config_id == run.configs[i - 1].config_id) {
      throw InvalidArgument("grid: duplicate config_id '" + run.configs[i].config_id + "'");
    }
  }
  for (const auto& c : run.configs) c.validate(backend.meta().vocab_size);

  std::vector<const GroundedTask*> sorted_tasks;
  for (const auto& t : tasks) sorted_tasks.push_back(&t);
  std::sort(sorted_tasks.begin(), sorted_tasks.end(),
            [](const GroundedTask* a, const GroundedTask* b) { return a->task_id < b->task_id; });

  const std::size_t n = options.n_samples_per_example;
  const std::size_t per_config = sorted_tasks.size() * n;
  const std::size_t total = run.configs.size() * per_config;
  std::vector<std::variant<std::monostate, DecodeRecord, DecodeFailure>> results(total);

  std::mutex fatal_mutex;
  std::exception_ptr fatal;
  std::atomic<bool> abort{false};
  auto work = [&](std::size_t item) {
    const auto& config = run.configs[item / per_config];
    const auto& task = *sorted_tasks[(item % per_config) / n];
    const std::size_t sample = item % n;
    try {
      auto record = decode(task, backend, config, derive_seed(options.run_seed, config.config_id, task.task_id, sample),
                           options.max_len);
      record.sample_index = sample;
      results[item] = std::move(record);
    } catch (const ProtocolError&) {
      // a backend that breaks the wire contract invalidates the whole run
      std::lock_guard lock(fatal_mutex);
      if (!fatal) fatal = std::current_exception();
      abort.store(true);
    } catch (const std::exception& e) {
      results[item] = DecodeFailure{task.task_id, config.config_id, sample, e.what()};
    }
  };

  std::size_t workers = std::max<std::size_t>(1, options.workers);
  if (!backend.meta().concurrent_sessions_safe) workers = 1;
  workers = std::min(workers, std::max<std::size_t>(1, total));
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t item = next.fetch_add(1); item < total && !abort.load(); item = next.fetch_add(1)) work(item);
  };
  if (workers == 1) {
    loop();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(loop);
  }
  if (fatal) std::rethrow_exception(fatal);

  for (auto& r : results) {
    if (auto* rec = std::get_if<DecodeRecord>(&r)) {
      run.records.push_back(std::move(*rec));
    } else if (auto* fail = std::get_if<DecodeFailure>(&r)) {
      run.failures.push_back(std::move(*fail));
    }
  }
  run.summary = summarize(run.records, tasks, backend.meta().eos_id);
  return run;
}

void write_records(std::ostream& out, const GridRun& run) {
  auto key = [](const auto& row) { return std::tie(row.config_id, row.task_id, row.sample_index); };
  std::size_t i = 0, j = 0;
  while (i < run.records.size() || j < run.failures.size()) {
    const bool take_record =
        j == run.failures.size() || (i < run.records.size() && key(run.records[i]) < key(run.failures[j]));
    if (take_record) {
      out << json(run.records[i++]).dump() << '\n';
    } else {
      const auto& f = run.failures[j++];
      json row{{"task_id", f.task_id}, {"config_id", f.config_id}, {"sample_index", f.sample_index},
               {"error", f.error}};
      out << row.dump() << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, const GridRun& run) {
  std::map<std::string, const TradeoffPoint*> points;
  for (const auto& p : run.summary) points.emplace(p.config_id, &p);

  out << "config_id,mode,T0,top_k,top_p,sigma,mean_attribution,var_rank,self_bleu4,n_records\n";
  for (const auto& c : run.configs) {
    out << c.config_id << ',' << to_string(c.mode) << ',' << format_number(c.t0) << ',' << c.top_k.to_string() << ','
        << format_number(c.top_p) << ',' << (c.sigma ? format_number(*c.sigma) : "") << ',';
    auto it = points.find(c.config_id);
    if (it == points.end()) {
      out << ",,,0\n";
      continue;
    }
    const TradeoffPoint& p = *it->second;
    out << (p.mean_attribution ? format_number(*p.mean_attribution) : "") << ',' << format_number(p.var_rank) << ','
        << (p.self_bleu4 ? format_number(*p.self_bleu4) : "") << ',' << p.n_records << '\n';
  }
}

RecordFile read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read records file: " + path.string());
  RecordFile file;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = json::parse(line);
      if (j.contains("error")) {
        file.failures.push_back(DecodeFailure{j.at("task_id").get<std::string>(), j.at("config_id").get<std::string>(),
                                              j.at("sample_index").get<std::size_t>(), j.at("error").get<std::string>()});
      } else {
        file.records.push_back(j.get<DecodeRecord>());
      }
    } catch (const json::exception& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return file;
}

GridRun run_grid(const RunManifest& manifest) {
  manifest.validate();
  auto backend = make_backend(manifest.backend);
  const auto tasks = load_tasks(manifest.task_file, *backend);
  const auto configs = build_grids(manifest.grids, backend->meta().vocab_size);

  GridOptions options;
  options.run_seed = manifest.run_seed;
  options.n_samples_per_example = manifest.n_samples_per_example;
  options.max_len = manifest.max_len;
  options.workers = manifest.workers;
  GridRun run = execute_grid(*backend, tasks, configs, options);

  std::filesystem::create_directories(manifest.output_dir);
  std::ofstream records(manifest.output_dir / kRecordsFileName, std::ios::binary);
  std::ofstream summary(manifest.output_dir / kSummaryFileName, std::ios::binary);
  if (!records || !summary) throw InvalidArgument("cannot write outputs in " + manifest.output_dir.string());
  write_records(records, run);
  write_summary_csv(summary, run);
  return run;
}

}  // namespace klguide
