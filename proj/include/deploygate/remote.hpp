#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "deploygate/error.hpp"
#include "deploygate/oracle.hpp"

namespace deploygate {

enum class RemoteErrorKind { Connection, Timeout, Malformed, Invariant, Server };
std::string_view to_string(RemoteErrorKind k);

class RemoteError : public Error {
 public:
  RemoteError(RemoteErrorKind kind, const std::string& what, std::string line = {})
      : Error(what), kind_(kind), line_(std::move(line)) {}
  RemoteErrorKind kind() const noexcept { return kind_; }
  /// Offending reply line for Malformed, Invariant and Server errors.
  const std::string& line() const noexcept { return line_; }

 private:
  RemoteErrorKind kind_;
  std::string line_;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// "tcp:host:port" or "host:port".
Endpoint parse_endpoint(std::string_view text);
std::string format_endpoint(const Endpoint& e);

using Millis = std::chrono::milliseconds;
inline constexpr Millis kDefaultRemoteTimeout{30000};

std::string encode_episode_request(const ScenarioConfig& cfg);
/// Decodes and validates a reply. fail_prob comes from the reply when present,
/// else `fallback_fail_prob` (error when neither is available).
EpisodeOutcome decode_episode_reply(const std::string& line, std::optional<double> fallback_fail_prob);

/// One connection serving sequential requests; not shared between threads.
class RemoteOracleClient final : public EpisodeRunner {
 public:
  RemoteOracleClient(Endpoint endpoint, std::string space, Millis timeout = kDefaultRemoteTimeout);
  ~RemoteOracleClient() override;
  RemoteOracleClient(const RemoteOracleClient&) = delete;
  RemoteOracleClient& operator=(const RemoteOracleClient&) = delete;

  EpisodeOutcome run(const ScenarioConfig& cfg) override;
  void ping();
  /// Sends one raw line and returns the raw reply line.
  std::string exchange(const std::string& line);

 private:
  void connect();
  void close() noexcept;

  Endpoint endpoint_;
  std::string space_;
  Millis timeout_;
  std::optional<BuiltinOracle> analytic_;
  int fd_ = -1;
  std::string buffer_;
};

/// One-shot request over a fresh connection.
EpisodeOutcome remote_episode(const Endpoint& endpoint, const ScenarioConfig& cfg, Millis timeout = kDefaultRemoteTimeout);

struct ServerConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  std::string space = "franka-8d";
  std::uint64_t seed = 2026;
  std::size_t max_connections = 16;
};

/// Reply line for one request line; never throws.
std::string handle_oracle_request(const BuiltinOracle& oracle, const ParamSpace& space, const std::string& line);

/// Reference server for the built-in oracle. Requests are answered with the
/// episode for (server seed, sample_idx), so replies do not depend on order.
class OracleServer {
 public:
  explicit OracleServer(ServerConfig cfg);
  ~OracleServer();
  OracleServer(const OracleServer&) = delete;
  OracleServer& operator=(const OracleServer&) = delete;

  /// Binds and listens; throws Error when the address cannot be bound.
  void bind();
  /// Accept loop; returns after request_stop(). Calls bind() if needed.
  void serve();
  /// bind() then serve() on a background thread.
  void start();
  /// Safe from a signal handler.
  void request_stop() noexcept { stop_.store(true); }
  /// request_stop() and join every thread.
  void stop();

  std::uint16_t port() const noexcept { return port_; }
  std::uint64_t requests() const noexcept { return requests_.load(); }
  std::size_t refused() const noexcept { return refused_.load(); }

 private:
  void handle(int fd);

  ServerConfig cfg_;
  ParamSpace space_;
  BuiltinOracle oracle_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stop_{false};
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::size_t> refused_{0};
  std::atomic<std::size_t> active_{0};
  std::thread accept_thread_;
  struct Worker {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  void reap(bool all);
  std::vector<Worker> workers_;
};

}  // namespace deploygate
