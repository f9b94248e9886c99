#include "headgs/remote.hpp"

#include "headgs/errors.hpp"
#include "headgs/wire.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <future>
#include <limits>

namespace headgs {

namespace {

httplib::Client make_client(const RemoteConfig& cfg) {
  httplib::Client cli(cfg.url);
  cli.set_connection_timeout(cfg.timeout_s, 0);
  cli.set_read_timeout(cfg.timeout_s, 0);
  cli.set_write_timeout(cfg.timeout_s, 0);
  return cli;
}

}  // namespace

GuidanceResponse RemoteProvider::gradient(const GuidanceRequest& request) {
  request.validate();
  const std::string body = wire::encode_request(request);
  auto cli = make_client(cfg_);
  std::string last_error = "no attempt made";
  int delay = cfg_.backoff_ms;
  for (int attempt = 0; attempt < cfg_.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      delay *= 2;
    }
    auto res = cli.Post("/v1/gradient", body, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
    } else if (res->status == 200) {
      auto out = wire::decode_response(res->body);
      if (out.gradient.width != request.image.width || out.gradient.height != request.image.height)
        throw ProtocolError("gradient size differs from the request");
      return out;
    } else if (res->status >= 500) {
      last_error = "service returned HTTP " + std::to_string(res->status);
    } else {
      throw ProtocolError("service rejected the request with HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    spdlog::debug("guidance request attempt {} failed: {}", attempt + 1, last_error);
  }
  throw TransportError(last_error + " after " + std::to_string(cfg_.max_attempts) + " attempts");
}

std::vector<GuidanceResponse> RemoteProvider::gradient_batch(std::span<const GuidanceRequest> requests) {
  std::vector<GuidanceResponse> out(requests.size());
  const std::size_t window = static_cast<std::size_t>(std::max(1, cfg_.max_concurrency));
  for (std::size_t begin = 0; begin < requests.size(); begin += window) {
    const std::size_t end = std::min(requests.size(), begin + window);
    std::vector<std::future<GuidanceResponse>> pending;
    for (std::size_t i = begin; i < end; ++i)
      pending.push_back(std::async(std::launch::async, [this, &requests, i] { return gradient(requests[i]); }));
    for (std::size_t i = begin; i < end; ++i) out[i] = pending[i - begin].get();
  }
  return out;
}

void RemoteProvider::check_health() const {
  auto cli = make_client(cfg_);
  auto res = cli.Get("/v1/health");
  if (!res) throw TransportError("health check failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw TransportError("health check returned HTTP " + std::to_string(res->status));
  const auto j = nlohmann::json::parse(res->body, nullptr, false);
  if (j.is_discarded() || j.value("status", "") != "ok") throw ProtocolError("unexpected health payload");
  if (j.value("version", -1) != wire::kProtocolVersion) throw ProtocolError("protocol version mismatch");
}

struct EchoStubServer::Impl {
  httplib::Server server;
};

EchoStubServer::EchoStubServer(StubBehavior behavior) : impl_(std::make_unique<Impl>()), behavior_(behavior) {
  auto& srv = impl_->server;
  srv.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(wire::encode_health(), "application/json");
  });
  srv.Post("/v1/gradient", [this](const httplib::Request& req, httplib::Response& res) {
    ++served_;
    GuidanceRequest parsed;
    try {
      parsed = wire::decode_request(req.body);
    } catch (const Error& e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
      return;
    }
    GuidanceResponse out = EchoStubProvider().gradient(parsed);
    switch (behavior_) {
      case StubBehavior::Zero:
        res.set_content(wire::encode_response(out), "application/json");
        break;
      case StubBehavior::Malformed:
        res.set_content(R"({"version": 1, "timestep": 5, "gradient": {"data": "%%%"}})", "application/json");
        break;
      case StubBehavior::WrongVersion: {
        auto j = nlohmann::json::parse(wire::encode_response(out));
        j["version"] = wire::kProtocolVersion + 1;
        res.set_content(j.dump(), "application/json");
        break;
      }
      case StubBehavior::NonFinite:
        out.gradient.data[0] = std::numeric_limits<double>::quiet_NaN();
        res.set_content(wire::encode_response(out), "application/json");
        break;
      case StubBehavior::Unavailable:
        res.status = 503;
        res.set_header("Retry-After", "1");
        break;
    }
  });
}

EchoStubServer::~EchoStubServer() { stop(); }

void EchoStubServer::start() {
  if (thread_.joinable()) return;
  port_ = impl_->server.bind_to_any_port("127.0.0.1");
  if (port_ < 0) throw TransportError("echo stub could not bind a port");
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void EchoStubServer::stop() {
  if (!thread_.joinable()) return;
  impl_->server.stop();
  thread_.join();
}

}  // namespace headgs
