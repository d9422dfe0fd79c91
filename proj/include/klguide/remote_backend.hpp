// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>

#include "klguide/backend.hpp"
#include "klguide/synthetic_lm.hpp"

namespace klguide {

// Wire protocol, UTF-8 JSON bodies:
//   GET  {base}/v1/meta    -> {"vocab_size": int, "eos_id": int, "name": string}
//   POST {base}/v1/logits  {"context": [int, ...]} -> {"logits": [number x vocab_size]}

struct RemoteOptions {
  std::size_t max_retries = 3;
  std::chrono::milliseconds initial_backoff{20};  // doubles after each retry
  std::chrono::milliseconds connect_timeout{2000};
  std::chrono::milliseconds read_timeout{10000};
  std::size_t pool_size = 4;
};

/// GET /v1/meta with the same retry policy as logits requests.
BackendMeta remote_fetch_meta(const std::string& base_url, const RemoteOptions& options = {});

/// HTTP client backend. Connection failures and timeouts are retried up to
/// max_retries times with exponential backoff, then surface as RetryableError.
/// Non-2xx replies raise HttpStatusError; a logits vector of the wrong length
/// raises ProtocolError. Thread-safe: each call borrows one pooled connection.
class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(std::string base_url, RemoteOptions options = {});
  ~RemoteBackend() override;

  RemoteBackend(const RemoteBackend&) = delete;
  RemoteBackend& operator=(const RemoteBackend&) = delete;

  const BackendMeta& meta() const override { return meta_; }
  Logits next_logits(std::span<const TokenId> context) const override;

  const std::string& base_url() const { return base_url_; }
  std::uint64_t retry_count() const;

 private:
  struct Impl;
  std::string base_url_;
  std::unique_ptr<Impl> impl_;
  BackendMeta meta_;
};

// Fault injection for client tests.
struct StubFaults {
  std::size_t slow_first_n = 0;  // first n logits requests stall for slow_delay
  std::chrono::milliseconds slow_delay{0};
  std::size_t error_first_n = 0;  // first n logits requests answer error_status
  int error_status = 503;
  long logits_length_delta = 0;  // added to the returned logits length
};

/// Loopback conformance server speaking the wire protocol over a SyntheticLm.
class StubServer {
 public:
  explicit StubServer(SyntheticLmParams params, StubFaults faults = {});
  ~StubServer();

  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  // Binds (port 0 picks a free port), starts serving on a background thread
  // and returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();
  // Blocks until stop() is called from another thread.
  void wait();

  int port() const;
  std::string base_url() const;
  std::uint64_t logits_requests() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace klguide
