// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#include "klguide/trace_render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "klguide/error.hpp"

namespace klguide {
namespace {

// 256-colour background ramp from black to bright red.
constexpr std::array<int, 6> kAnsiRamp = {16, 52, 88, 124, 160, 196};

std::string html_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

TraceFormat parse_trace_format(std::string_view name) {
  if (name == "ansi") return TraceFormat::ansi;
  if (name == "html") return TraceFormat::html;
  throw InvalidArgument("unknown trace format '" + std::string(name) + "'");
}

int temperature_intensity(double t, double t0) {
  if (!(t0 > 0.0) || std::isnan(t)) return 0;
  return static_cast<int>(std::clamp(std::round(100.0 * t / t0), 0.0, 100.0));
}

std::vector<RenderedToken> trace_tokens(const DecodeRecord& record, double t0, const Backend& backend) {
  if (record.tokens.size() != record.temps.size()) {
    throw InvalidArgument("trace: " + std::to_string(record.tokens.size()) + " tokens but " +
                          std::to_string(record.temps.size()) + " temperatures");
  }
  std::vector<RenderedToken> out;
  out.reserve(record.tokens.size());
  for (std::size_t i = 0; i < record.tokens.size(); ++i) {
    out.push_back({backend.token_text(record.tokens[i]), temperature_intensity(record.temps[i], t0)});
  }
  return out;
}

std::string render_trace(const DecodeRecord& record, double t0, TraceFormat format, const Backend& backend) {
  const auto tokens = trace_tokens(record, t0, backend);
  std::string out;
  if (format == TraceFormat::html) out += "<div class=\"klguide-trace\">";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    const auto& tok = tokens[i];
    if (format == TraceFormat::ansi) {
      const int bucket = static_cast<int>(std::lround(tok.intensity / 20.0));
      out += "\x1b[48;5;" + std::to_string(kAnsiRamp[bucket]) + "m" + tok.text + "\x1b[0m";
    } else {
      char alpha[16];
      std::snprintf(alpha, sizeof alpha, "%.2f", tok.intensity / 100.0);
      out += "<span data-intensity=\"" + std::to_string(tok.intensity) +
             "\" style=\"background-color: rgba(220, 30, 30, " + alpha + ")\">" + html_escape(tok.text) + "</span>";
    }
  }
  if (format == TraceFormat::html) out += "</div>";
  return out;
}

std::string strip_ansi(std::string_view text) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\x1b' && i + 1 < text.size() && text[i + 1] == '[') {
      i += 2;
      while (i < text.size() && !(text[i] >= '@' && text[i] <= '~')) ++i;
      continue;
    }
    out += text[i];
  }
  return out;
}

}  // namespace klguide
