// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "klguide/backend.hpp"
#include "klguide/dual_decoder.hpp"

namespace klguide {

enum class TraceFormat { ansi, html };

TraceFormat parse_trace_format(std::string_view name);

struct RenderedToken {
  std::string text;
  int intensity = 0;  // 0..100

  friend bool operator==(const RenderedToken&, const RenderedToken&) = default;
};

// round(100 * t / t0) clamped to [0, 100]; t0 <= 0 gives 0.
int temperature_intensity(double t, double t0);

/// Per-token text and intensity. Throws if tokens and temps differ in length.
std::vector<RenderedToken> trace_tokens(const DecodeRecord& record, double t0, const Backend& backend);

/// Colours each token by effective temperature relative to t0. Tokens are
/// separated by single spaces outside the escape sequences, so removing the
/// ANSI codes leaves exactly backend.detokenize(record.tokens).
std::string render_trace(const DecodeRecord& record, double t0, TraceFormat format, const Backend& backend);

// Removes CSI escape sequences ("\x1b[...m").
std::string strip_ansi(std::string_view text);

}  // namespace klguide
