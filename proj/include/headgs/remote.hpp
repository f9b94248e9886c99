#pragma once

#include "headgs/guidance.hpp"

#include <atomic>
#include <memory>
#include <string>
#include <thread>

namespace headgs {

struct RemoteConfig {
  std::string url = "http://127.0.0.1:8765";
  int max_attempts = 3;
  int backoff_ms = 200;  // doubled after every failed attempt
  int timeout_s = 120;
  int max_concurrency = 8;
};

/// Client for a guidance service speaking the JSON wire protocol.
class RemoteProvider final : public GuidanceProvider {
 public:
  explicit RemoteProvider(RemoteConfig cfg) : cfg_(std::move(cfg)) {}
  std::string id() const override { return "remote"; }
  bool wants_condition() const override { return true; }
  GuidanceResponse gradient(const GuidanceRequest& request) override;
  /// Up to max_concurrency requests in flight at once.
  std::vector<GuidanceResponse> gradient_batch(std::span<const GuidanceRequest> requests) override;
  /// Throws TransportError or ProtocolError when the service is not usable.
  void check_health() const;

 private:
  RemoteConfig cfg_;
};

enum class StubBehavior { Zero, Malformed, WrongVersion, NonFinite, Unavailable };

/// In-process HTTP guidance server answering every request with a zero
/// gradient (or a deliberately broken reply, for tests).
class EchoStubServer {
 public:
  explicit EchoStubServer(StubBehavior behavior = StubBehavior::Zero);
  ~EchoStubServer();
  EchoStubServer(const EchoStubServer&) = delete;
  EchoStubServer& operator=(const EchoStubServer&) = delete;

  /// Binds to an ephemeral port on the loopback interface.
  void start();
  void stop();
  int port() const { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests_served() const { return served_.load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  StubBehavior behavior_;
  int port_ = -1;
  std::atomic<int> served_{0};
};

}  // namespace headgs
