// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#include "klguide/guidance.hpp"

#include <algorithm>
#include <cmath>

#include "klguide/error.hpp"

namespace klguide {
namespace {

const double kLogFloor = std::log(kProbabilityFloor);

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw InvalidArgument("kl: distribution lengths differ");
}

double floored_log(double q) { return q > kProbabilityFloor ? std::log(q) : kLogFloor; }

}  // namespace

double kl_divergence(const Pmf& p, const Pmf& q) {
  check_lengths(p.size(), q.size());
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    kl += p[k] * (std::log(p[k]) - floored_log(q[k]));
  }
  return std::max(kl, 0.0);
}

double kl_divergence_from_logits(const Logits& with_source, const Logits& without_source) {
  check_lengths(with_source.size(), without_source.size());
  const auto lp = log_softmax(with_source);
  const auto lq = log_softmax(without_source);
  double kl = 0.0;
  for (std::size_t k = 0; k < lp.size(); ++k) {
    const double pk = std::exp(lp[k]);
    if (pk <= 0.0) continue;
    kl += pk * (lp[k] - std::max(lq[k], kLogFloor));
  }
  return std::max(kl, 0.0);
}

std::vector<double> pmi_profile(const Pmf& p, const Pmf& q) {
  check_lengths(p.size(), q.size());
  std::vector<double> pmi(p.size(), 0.0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    pmi[k] = std::log(p[k]) - floored_log(q[k]);
  }
  return pmi;
}

double convert_temperature(double kl_nats, double t0, double sigma) {
  if (!(kl_nats >= 0.0)) throw InvalidArgument("convert_temperature: kl must be >= 0");
  if (!(t0 >= 0.0)) throw InvalidArgument("convert_temperature: T0 must be >= 0");
  if (!(sigma > 0.0)) throw InvalidArgument("convert_temperature: sigma must be > 0");
  if (std::isinf(sigma)) return t0;
  return t0 * std::exp2(-kl_nats / sigma);
}

GuidedStepResult guided_step(const Logits& with_source, const Logits& without_source, const DecodeConfig& config,
                             Rng& rng) {
  if (config.mode != DecodeMode::guided || !config.sigma) throw InvalidArgument("guided_step: config is not guided");
  GuidedStepResult out;
  out.trace.kl_nats = kl_divergence_from_logits(with_source, without_source);
  out.trace.effective_t = convert_temperature(out.trace.kl_nats, config.t0, *config.sigma);
  const StepResult step = sample_step(with_source, out.trace.effective_t, config.top_k, config.top_p, rng);
  out.token = step.token;
  out.rank = step.rank;
  return out;
}

}  // namespace klguide
