// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#include "klguide/task.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>

#include <json.hpp>

#include "klguide/backend.hpp"
#include "klguide/error.hpp"

namespace klguide {
namespace {

using json = nlohmann::json;

GroundedTask parse_task_line(const json& j, const Backend& backend) {
  GroundedTask task;
  task.task_id = j.at("task_id").get<std::string>();
  if (j.contains("source_tokens") || j.contains("context_tokens")) {
    const auto source = j.value("source_tokens", TokenSeq{});
    task.prefix_without_source = j.value("context_tokens", TokenSeq{});
    task.prefix_with_source = source;
    task.prefix_with_source.insert(task.prefix_with_source.end(), task.prefix_without_source.begin(),
                                   task.prefix_without_source.end());
    if (j.contains("ground_truth") && !j["ground_truth"].is_null()) {
      const auto& gt = j["ground_truth"];
      task.ground_truth = GroundTruth{gt.at("fact_token").get<TokenId>(), gt.at("fact_position").get<std::size_t>()};
    }
  } else {
    std::optional<std::string> source;
    if (j.contains("source") && !j["source"].is_null()) source = j["source"].get<std::string>();
    auto prefixes = backend.compose_prompt(source, j.at("context").get<std::string>());
    task.prefix_with_source = std::move(prefixes.with_source);
    task.prefix_without_source = std::move(prefixes.without_source);
  }
  return task;
}

}  // namespace

std::vector<GroundedTask> parse_tasks(std::istream& in, const Backend& backend, const std::string& origin) {
  std::vector<GroundedTask> tasks;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    try {
      auto task = parse_task_line(json::parse(line), backend);
      if (!seen.insert(task.task_id).second) throw InvalidArgument("duplicate task_id '" + task.task_id + "'");
      tasks.push_back(std::move(task));
    } catch (const json::exception& e) {
      throw InvalidArgument(where + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(where + ": " + e.what());
    }
  }
  return tasks;
}

std::vector<GroundedTask> load_tasks(const std::filesystem::path& path, const Backend& backend) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read task file: " + path.string());
  return parse_tasks(in, backend, path.string());
}

void write_token_tasks(std::ostream& out, const std::vector<GroundedTask>& tasks) {
  for (const auto& task : tasks) {
    const auto& with = task.prefix_with_source;
    const auto& without = task.prefix_without_source;
    if (without.size() > with.size() || !std::equal(without.rbegin(), without.rend(), with.rbegin())) {
      throw InvalidArgument("task " + task.task_id + ": context is not a suffix of the with-source prefix");
    }
    json j;
    j["task_id"] = task.task_id;
    j["source_tokens"] = TokenSeq(with.begin(), with.end() - static_cast<std::ptrdiff_t>(without.size()));
    j["context_tokens"] = without;
    if (task.ground_truth) {
      j["ground_truth"] = {{"fact_token", task.ground_truth->fact_token},
                           {"fact_position", task.ground_truth->fact_position}};
    } else {
      j["ground_truth"] = nullptr;
    }
    out << j.dump() << '\n';
  }
}

void write_token_tasks(const std::filesystem::path& path, const std::vector<GroundedTask>& tasks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write task file: " + path.string());
  write_token_tasks(out, tasks);
}

}  // namespace klguide
