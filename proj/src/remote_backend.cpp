// Copyright (C) 2026 The klguide Authors
// SPDX-License-Identifier: Apache-2.0

#include "klguide/remote_backend.hpp"

#include <cmath>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "klguide/error.hpp"

namespace klguide {
namespace {

using json = nlohmann::json;

struct ParsedUrl {
  std::string origin;  // scheme://host:port
  std::string prefix;  // path prefix without trailing slash
};

ParsedUrl parse_base_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos || url.compare(0, scheme, "http") != 0) {
    throw InvalidArgument("remote: base url must start with http:// (got '" + url + "')");
  }
  const auto path = url.find('/', scheme + 3);
  ParsedUrl out;
  out.origin = url.substr(0, path);
  if (path != std::string::npos) out.prefix = url.substr(path);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

bool is_success(int status) { return status >= 200 && status < 300; }

}  // namespace

// Pool of keep-alive-free clients; httplib::Client is not safe for concurrent
// requests, so each call checks one out.
class ClientPool {
 public:
  ClientPool(std::string base_url, RemoteOptions options)
      : url_(parse_base_url(base_url)), options_(options) {
    if (options_.pool_size == 0) options_.pool_size = 1;
  }

  std::string request(const std::string& method, const std::string& path, const std::string& body) {
    const std::string full_path = url_.prefix + path;
    auto backoff = options_.initial_backoff;
    for (std::size_t attempt = 0;; ++attempt) {
      auto client = acquire();
      httplib::Result result = method == "GET"
                                   ? client->Get(full_path)
                                   : client->Post(full_path, body, "application/json");
      release(std::move(client));

      if (result) {
        if (!is_success(result->status)) throw HttpStatusError(result->status, result->body);
        return result->body;
      }
      const std::string why = httplib::to_string(result.error());
      if (attempt >= options_.max_retries) {
        throw RetryableError("remote " + method + " " + url_.origin + full_path + " failed after " +
                             std::to_string(attempt) + " retries: " + why);
      }
      retries_.fetch_add(1);
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }

  std::uint64_t retries() const { return retries_.load(); }

 private:
  std::unique_ptr<httplib::Client> acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !idle_.empty() || created_ < options_.pool_size; });
    if (!idle_.empty()) {
      auto c = std::move(idle_.back());
      idle_.pop_back();
      return c;
    }
    ++created_;
    auto c = std::make_unique<httplib::Client>(url_.origin);
    c->set_connection_timeout(options_.connect_timeout);
    c->set_read_timeout(options_.read_timeout);
    c->set_keep_alive(false);
    return c;
  }

  void release(std::unique_ptr<httplib::Client> c) {
    {
      std::lock_guard lock(mu_);
      idle_.push_back(std::move(c));
    }
    cv_.notify_one();
  }

  ParsedUrl url_;
  RemoteOptions options_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::unique_ptr<httplib::Client>> idle_;
  std::size_t created_ = 0;
  std::atomic<std::uint64_t> retries_{0};
};

namespace {

BackendMeta parse_meta(const std::string& body) {
  try {
    auto j = json::parse(body);
    BackendMeta meta;
    meta.vocab_size = j.at("vocab_size").get<std::size_t>();
    meta.eos_id = j.at("eos_id").get<TokenId>();
    meta.name = j.value("name", std::string("remote"));
    meta.concurrent_sessions_safe = true;
    meta.validate();
    return meta;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("remote meta: malformed reply: ") + e.what());
  }
}

}  // namespace

BackendMeta remote_fetch_meta(const std::string& base_url, const RemoteOptions& options) {
  ClientPool pool(base_url, options);
  return parse_meta(pool.request("GET", "/v1/meta", {}));
}

struct RemoteBackend::Impl {
  Impl(const std::string& url, const RemoteOptions& options) : pool(url, options) {}
  ClientPool pool;
};

RemoteBackend::RemoteBackend(std::string base_url, RemoteOptions options)
    : base_url_(std::move(base_url)), impl_(std::make_unique<Impl>(base_url_, options)) {
  meta_ = parse_meta(impl_->pool.request("GET", "/v1/meta", {}));
}

RemoteBackend::~RemoteBackend() = default;

std::uint64_t RemoteBackend::retry_count() const { return impl_->pool.retries(); }

Logits RemoteBackend::next_logits(std::span<const TokenId> context) const {
  json request{{"context", std::vector<TokenId>(context.begin(), context.end())}};
  const std::string body = impl_->pool.request("POST", "/v1/logits", request.dump());
  std::vector<double> values;
  try {
    auto j = json::parse(body);
    const auto& arr = j.at("logits");
    if (!arr.is_array()) throw ProtocolError("remote logits: 'logits' is not an array");
    values.reserve(arr.size());
    for (const auto& v : arr) {
      if (!v.is_number()) throw ProtocolError("remote logits: non-numeric entry");
      values.push_back(v.get<double>());
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("remote logits: malformed reply: ") + e.what());
  }
  if (values.size() != meta_.vocab_size) {
    throw ProtocolError("remote logits: expected " + std::to_string(meta_.vocab_size) + " values, got " +
                        std::to_string(values.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ProtocolError("remote logits: non-finite value");
  }
  return Logits(std::move(values));
}

struct StubServer::Impl {
  SyntheticLm lm;
  StubFaults faults;
  httplib::Server server;
  std::thread thread;
  int port = -1;
  std::string host;
  std::atomic<std::uint64_t> logits_requests{0};
  std::mutex stop_mu;
  std::condition_variable stop_cv;
  bool stopped = false;

  Impl(SyntheticLmParams params, StubFaults f) : lm(params), faults(f) {}

  void install_routes() {
    server.Get("/v1/meta", [this](const httplib::Request&, httplib::Response& res) {
      json body{{"vocab_size", lm.meta().vocab_size}, {"eos_id", lm.meta().eos_id}, {"name", "synthetic-stub"}};
      res.set_content(body.dump(), "application/json");
    });
    server.Post("/v1/logits", [this](const httplib::Request& req, httplib::Response& res) {
      const std::uint64_t n = logits_requests.fetch_add(1);
      if (n < faults.slow_first_n) std::this_thread::sleep_for(faults.slow_delay);
      if (n < faults.error_first_n) {
        res.status = faults.error_status;
        res.set_content(R"({"error":"injected failure"})", "application/json");
        return;
      }
      TokenSeq context;
      try {
        context = json::parse(req.body).at("context").get<TokenSeq>();
        auto logits = lm.next_logits(context).values;
        const long target = static_cast<long>(logits.size()) + faults.logits_length_delta;
        logits.resize(static_cast<std::size_t>(std::max(0L, target)), 0.0);
        res.set_content(json{{"logits", logits}}.dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      }
    });
  }
};

StubServer::StubServer(SyntheticLmParams params, StubFaults faults)
    : impl_(std::make_unique<Impl>(params, faults)) {
  impl_->install_routes();
}

StubServer::~StubServer() { stop(); }

int StubServer::start(const std::string& host, int port) {
  if (impl_->thread.joinable()) throw InvalidArgument("stub server already started");
  impl_->host = host;
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
  } else {
    impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (impl_->port < 0) throw Error("stub server: cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void StubServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  {
    std::lock_guard lock(impl_->stop_mu);
    impl_->stopped = true;
  }
  impl_->stop_cv.notify_all();
}

void StubServer::wait() {
  std::unique_lock lock(impl_->stop_mu);
  impl_->stop_cv.wait(lock, [&] { return impl_->stopped; });
}

int StubServer::port() const { return impl_->port; }

std::string StubServer::base_url() const { return "http://" + impl_->host + ":" + std::to_string(impl_->port); }

std::uint64_t StubServer::logits_requests() const { return impl_->logits_requests.load(); }

}  // namespace klguide
