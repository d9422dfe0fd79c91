// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#include "klguide/samplers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "klguide/error.hpp"

namespace klguide {

std::string_view to_string(DecodeMode mode) { return mode == DecodeMode::baseline ? "baseline" : "guided"; }

DecodeMode parse_decode_mode(std::string_view text) {
  if (text == "baseline") return DecodeMode::baseline;
  if (text == "guided") return DecodeMode::guided;
  throw InvalidArgument("unknown decode mode '" + std::string(text) + "'");
}

std::string TopK::to_string() const { return is_all() ? "all" : std::to_string(*value); }

TopK TopK::parse(std::string_view text) {
  if (text == "all") return all();
  std::size_t k = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), k);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidArgument("invalid top-k '" + std::string(text) + "'");
  }
  if (k == 0) throw InvalidArgument("top-k must be positive or 'all'");
  return of(k);
}

std::string format_number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  if (value == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general);
  return std::string(buf, ptr);
}

double parse_number(std::string_view text) {
  if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidArgument("invalid number '" + std::string(text) + "'");
  }
  return v;
}

void DecodeConfig::validate(std::size_t vocab_size) const {
  if (!(t0 >= 0.0) || !std::isfinite(t0)) throw InvalidArgument("config " + config_id + ": T0 must be finite and >= 0");
  if (!(top_p >= 0.0 && top_p <= 1.0)) throw InvalidArgument("config " + config_id + ": top_p must lie in [0, 1]");
  if (!top_k.is_all()) {
    if (*top_k.value == 0) throw InvalidArgument("config " + config_id + ": top_k must be >= 1");
    if (vocab_size != 0 && *top_k.value > vocab_size) {
      throw InvalidArgument("config " + config_id + ": top_k exceeds vocab size");
    }
  }
  if (mode == DecodeMode::baseline && sigma) throw InvalidArgument("config " + config_id + ": baseline mode takes no sigma");
  if (mode == DecodeMode::guided) {
    if (!sigma) throw InvalidArgument("config " + config_id + ": guided mode needs sigma");
    if (!(*sigma > 0.0)) throw InvalidArgument("config " + config_id + ": sigma must be > 0");
  }
}

DecodeConfig DecodeConfig::baseline(double t0, TopK top_k, double top_p) {
  DecodeConfig c;
  c.mode = DecodeMode::baseline;
  c.t0 = t0;
  c.top_k = top_k;
  c.top_p = top_p;
  c.config_id = canonical_config_id(c);
  c.validate();
  return c;
}

DecodeConfig DecodeConfig::guided(double t0, TopK top_k, double top_p, double sigma) {
  DecodeConfig c;
  c.mode = DecodeMode::guided;
  c.t0 = t0;
  c.top_k = top_k;
  c.top_p = top_p;
  c.sigma = sigma;
  c.config_id = canonical_config_id(c);
  c.validate();
  return c;
}

std::string canonical_config_id(const DecodeConfig& c) {
  std::string id(to_string(c.mode));
  id += c.mode == DecodeMode::baseline ? ":T=" : ":T0=";
  id += format_number(c.t0);
  id += ":k=" + c.top_k.to_string();
  id += ":p=" + format_number(c.top_p);
  if (c.sigma) id += ":sigma=" + format_number(*c.sigma);
  return id;
}

DecodeConfig parse_config_id(std::string_view id) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = id.find(':', start);
    parts.push_back(id.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  DecodeConfig c;
  c.mode = parse_decode_mode(parts.front());
  bool have_t = false;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    auto eq = parts[i].find('=');
    if (eq == std::string_view::npos) throw InvalidArgument("malformed config id '" + std::string(id) + "'");
    auto key = parts[i].substr(0, eq);
    auto val = parts[i].substr(eq + 1);
    if (key == "T" || key == "T0") {
      c.t0 = parse_number(val);
      have_t = true;
    } else if (key == "k") {
      c.top_k = TopK::parse(val);
    } else if (key == "p") {
      c.top_p = parse_number(val);
    } else if (key == "sigma") {
      c.sigma = parse_number(val);
    } else {
      throw InvalidArgument("malformed config id '" + std::string(id) + "'");
    }
  }
  if (!have_t) throw InvalidArgument("malformed config id '" + std::string(id) + "'");
  c.config_id = std::string(id);
  c.validate();
  return c;
}

Logits mask_top_k(const Logits& logits, TopK k) {
  if (!k.is_all() && *k.value == 0) throw InvalidArgument("empty support");
  if (k.is_all() || *k.value >= logits.size()) return logits;

  std::vector<std::size_t> order(logits.size());
  std::iota(order.begin(), order.end(), 0);
  auto before = [&](std::size_t a, std::size_t b) {
    return logits[a] > logits[b] || (logits[a] == logits[b] && a < b);
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(*k.value), order.end(), before);

  Logits out(std::vector<double>(logits.size(), kMaskedLogit));
  for (std::size_t i = 0; i < *k.value; ++i) out.values[order[i]] = logits[order[i]];
  return out;
}

Pmf mask_top_p(const Pmf& pmf, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("top_p must lie in [0, 1]");
  if (p >= 1.0) return pmf;

  std::vector<std::size_t> order(pmf.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pmf[a] > pmf[b]; });

  std::vector<double> kept(pmf.size(), 0.0);
  double cum = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    kept[order[i]] = pmf[order[i]];
    cum += pmf[order[i]];
    if (cum >= p) break;
  }
  for (double& v : kept) v /= cum;
  return Pmf(std::move(kept));
}

StepResult sample_step(const Logits& logits, double temperature, TopK top_k, double top_p, Rng& rng) {
  StepResult out;
  const Logits masked = mask_top_k(logits, top_k);
  const Pmf tempered = softmax(masked, temperature);
  const Pmf nucleus = mask_top_p(tempered, top_p);
  out.token = sample_categorical(nucleus, rng);
  out.rank = rank_of(logits, out.token);
  out.effective_t = temperature <= kGreedyTemperature ? 0.0 : temperature;
  return out;
}

StepResult baseline_step(const Logits& logits, const DecodeConfig& config, Rng& rng) {
  if (config.mode != DecodeMode::baseline) throw InvalidArgument("baseline_step: config is not baseline");
  return sample_step(logits, config.t0, config.top_k, config.top_p, rng);
}

}  // namespace klguide
