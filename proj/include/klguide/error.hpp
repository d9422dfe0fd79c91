// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace klguide {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, malformed inputs, contract violations by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Transport-level failure that may succeed on retry (connection refused, timeout).
class RetryableError : public Error {
 public:
  using Error::Error;
};

// Peer violated the wire contract; never retried.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class HttpStatusError : public Error {
 public:
  HttpStatusError(int status, std::string body)
      : Error("http status " + std::to_string(status) + ": " + body),
        status_(status),
        body_(std::move(body)) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

}  // namespace klguide
