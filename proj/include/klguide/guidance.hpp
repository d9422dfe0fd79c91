// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "klguide/distributions.hpp"
#include "klguide/samplers.hpp"

namespace klguide {

// Floor on q_k wherever p_k > 0; keeps KL finite when q underflows.
inline constexpr double kProbabilityFloor = 1e-12;

struct GuidanceTrace {
  double kl_nats = 0.0;
  double effective_t = 0.0;
};

/// KL(p || q) in nats with 0 ln(0/q) = 0 and q floored at kProbabilityFloor.
/// Clamped to >= 0.
double kl_divergence(const Pmf& p, const Pmf& q);

/// Same quantity computed from raw logits entirely in log space:
/// sum_k exp(lp_k) (lp_k - max(lq_k, ln floor)) with lp, lq the T = 1
/// log-softmax of each vector.
double kl_divergence_from_logits(const Logits& with_source, const Logits& without_source);

/// Per-token pointwise mutual information ln(p_k / q_k), same flooring. Zero
/// wherever p_k = 0.
std::vector<double> pmi_profile(const Pmf& p, const Pmf& q);

/// Exponential-decay converter T = T0 * 0.5^(kl / sigma). sigma = +inf
/// returns T0 exactly; the result always lies in [0, T0].
double convert_temperature(double kl_nats, double t0, double sigma);

struct GuidedStepResult {
  TokenId token = 0;
  std::size_t rank = 0;
  GuidanceTrace trace;
};

/// One guided decoding step. KL is measured between the full-vocabulary T = 1
/// distributions of both streams; the converted temperature then drives the
/// ordinary sampling pipeline over the with-source logits.
GuidedStepResult guided_step(const Logits& with_source, const Logits& without_source, const DecodeConfig& config,
                             Rng& rng);

}  // namespace klguide
