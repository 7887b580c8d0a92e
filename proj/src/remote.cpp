#include "deploygate/remote.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include <json.hpp>

namespace deploygate {

using ojson = nlohmann::ordered_json;

std::string_view to_string(RemoteErrorKind k) {
  switch (k) {
    case RemoteErrorKind::Connection: return "connection";
    case RemoteErrorKind::Timeout: return "timeout";
    case RemoteErrorKind::Malformed: return "malformed";
    case RemoteErrorKind::Invariant: return "invariant";
    case RemoteErrorKind::Server: return "server";
  }
  return "?";
}

Endpoint parse_endpoint(std::string_view text) {
  if (text.rfind("tcp:", 0) == 0) text.remove_prefix(4);
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) throw DomainError("endpoint must be host:port");
  Endpoint e;
  e.host = std::string(text.substr(0, colon));
  const auto port = text.substr(colon + 1);
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || ptr != port.data() + port.size() || value == 0 || value > 65535)
    throw DomainError("invalid port '" + std::string(port) + "'");
  e.port = static_cast<std::uint16_t>(value);
  return e;
}

std::string format_endpoint(const Endpoint& e) { return "tcp:" + e.host + ":" + std::to_string(e.port); }

std::string encode_episode_request(const ScenarioConfig& cfg) {
  ojson j;
  j["cmd"] = "episode";
  j["space"] = cfg.space;
  ojson c = ojson::object();
  for (const auto& [k, v] : cfg.values) std::visit([&c, &k = k](const auto& x) { c[k] = x; }, v);
  j["config"] = std::move(c);
  j["sample_idx"] = cfg.sample_idx;
  return j.dump();
}

namespace {

[[noreturn]] void malformed(const std::string& what, const std::string& line) {
  throw RemoteError(RemoteErrorKind::Malformed, "malformed reply (" + what + "): " + line, line);
}

bool reply_bool(const nlohmann::json& j, const char* key, const std::string& line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_boolean()) malformed(std::string("field ") + key, line);
  return it->get<bool>();
}

}  // namespace

EpisodeOutcome decode_episode_reply(const std::string& line, std::optional<double> fallback_fail_prob) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    malformed("not JSON", line);
  }
  if (!j.is_object()) malformed("not an object", line);
  if (auto it = j.find("error"); it != j.end())
    throw RemoteError(RemoteErrorKind::Server, "server error: " + (it->is_string() ? it->get<std::string>() : it->dump()),
                      line);
  EpisodeOutcome o;
  o.success = reply_bool(j, "success", line);
  auto ft = j.find("failure_type");
  if (ft == j.end() || !ft->is_string()) malformed("field failure_type", line);
  try {
    o.failure_type = parse_failure_type(ft->get<std::string>());
  } catch (const SchemaError&) {
    malformed("field failure_type", line);
  }
  auto ct = j.find("cycle_time");
  if (ct == j.end() || !ct->is_number()) malformed("field cycle_time", line);
  o.cycle_time = ct->get<double>();
  o.collision = reply_bool(j, "collision", line);
  o.drop = reply_bool(j, "drop", line);
  o.grasp_miss = reply_bool(j, "grasp_miss", line);
  if (auto fp = j.find("fail_prob"); fp != j.end()) {
    if (!fp->is_number()) malformed("field fail_prob", line);
    o.fail_prob = fp->get<double>();
  } else if (fallback_fail_prob) {
    o.fail_prob = *fallback_fail_prob;
  } else {
    malformed("no fail_prob and no analytic fallback", line);
  }
  if (auto v = outcome_violations(o); !v.empty())
    throw RemoteError(RemoteErrorKind::Invariant, "reply violates outcome contract: " + v.front(), line);
  return o;
}

RemoteOracleClient::RemoteOracleClient(Endpoint endpoint, std::string space, Millis timeout)
    : endpoint_(std::move(endpoint)), space_(std::move(space)), timeout_(timeout) {
  try {
    analytic_.emplace(space_, 0);
  } catch (const Error&) {
    // Not a built-in space: replies must carry fail_prob themselves.
  }
}

RemoteOracleClient::~RemoteOracleClient() { close(); }

void RemoteOracleClient::close() noexcept {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  buffer_.clear();
}

void RemoteOracleClient::connect() {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(endpoint_.port);
  if (int rc = ::getaddrinfo(endpoint_.host.c_str(), port.c_str(), &hints, &res); rc != 0)
    throw RemoteError(RemoteErrorKind::Connection,
                      "cannot resolve " + endpoint_.host + ": " + ::gai_strerror(rc));
  std::string last = "no address";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc < 0 && errno == EINPROGRESS) {
      pollfd p{fd, POLLOUT, 0};
      rc = ::poll(&p, 1, static_cast<int>(timeout_.count()));
      if (rc == 0) {
        ::close(fd);
        ::freeaddrinfo(res);
        throw RemoteError(RemoteErrorKind::Timeout, "connect to " + format_endpoint(endpoint_) + " timed out");
      }
      int err = 0;
      socklen_t len = sizeof err;
      ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
      rc = (rc > 0 && err == 0) ? 0 : -1;
      if (err != 0) errno = err;
    }
    if (rc == 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      fd_ = fd;
      ::freeaddrinfo(res);
      return;
    }
    last = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  throw RemoteError(RemoteErrorKind::Connection, "cannot connect to " + format_endpoint(endpoint_) + ": " + last);
}

std::string RemoteOracleClient::exchange(const std::string& request) {
  if (fd_ < 0) connect();
  const std::string out = request + "\n";
  std::size_t sent = 0;
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  auto remaining_ms = [&]() {
    auto left = std::chrono::duration_cast<Millis>(deadline - std::chrono::steady_clock::now()).count();
    return static_cast<int>(std::max<long long>(0, left));
  };
  while (sent < out.size()) {
    pollfd p{fd_, POLLOUT, 0};
    if (::poll(&p, 1, remaining_ms()) <= 0) {
      close();
      throw RemoteError(RemoteErrorKind::Timeout, "send to " + format_endpoint(endpoint_) + " timed out");
    }
    const ssize_t n = ::send(fd_, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      const std::string why = std::strerror(errno);
      close();
      throw RemoteError(RemoteErrorKind::Connection, "send failed: " + why);
    }
    sent += static_cast<std::size_t>(n);
  }
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    pollfd p{fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, remaining_ms());
    if (rc == 0) {
      close();
      throw RemoteError(RemoteErrorKind::Timeout,
                        "no reply from " + format_endpoint(endpoint_) + " within " + std::to_string(timeout_.count()) + " ms");
    }
    char buf[4096];
    const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n == 0) {
      close();
      throw RemoteError(RemoteErrorKind::Connection, "connection closed by " + format_endpoint(endpoint_));
    }
    if (n < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      const std::string why = std::strerror(errno);
      close();
      throw RemoteError(RemoteErrorKind::Connection, "recv failed: " + why);
    }
    buffer_.append(buf, static_cast<std::size_t>(n));
  }
}

EpisodeOutcome RemoteOracleClient::run(const ScenarioConfig& cfg) {
  std::optional<double> fallback;
  if (analytic_) fallback = analytic_->fail_prob(cfg);
  return decode_episode_reply(exchange(encode_episode_request(cfg)), fallback);
}

void RemoteOracleClient::ping() {
  const std::string line = exchange(R"({"cmd":"ping"})");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    malformed("not JSON", line);
  }
  if (!j.is_object() || j.value("ok", false) != true) malformed("ping", line);
}

EpisodeOutcome remote_episode(const Endpoint& endpoint, const ScenarioConfig& cfg, Millis timeout) {
  RemoteOracleClient client(endpoint, cfg.space, timeout);
  return client.run(cfg);
}

namespace {

std::string error_reply(const std::string& msg) {
  ojson j;
  j["error"] = msg;
  return j.dump();
}

ScenarioConfig config_from_request(const ParamSpace& space, const nlohmann::json& c, std::uint64_t sample_idx) {
  if (!c.is_object()) throw SchemaError("config is not an object");
  ScenarioConfig cfg;
  cfg.space = space.name();
  cfg.sample_idx = sample_idx;
  for (const auto& [k, v] : c.items()) {
    const ParamDef* d = space.find(k);
    if (d == nullptr) throw SchemaError(k + ": unknown dimension");
    if (d->kind() == ParamKind::Categorical) {
      if (!v.is_string()) throw SchemaError(k + ": expected string");
      cfg.values[k] = v.get<std::string>();
    } else if (d->kind() == ParamKind::Integer) {
      if (!v.is_number_integer()) throw SchemaError(k + ": expected integer");
      cfg.values[k] = v.get<std::int64_t>();
    } else {
      if (!v.is_number()) throw SchemaError(k + ": expected number");
      cfg.values[k] = v.get<double>();
    }
  }
  if (auto problems = validate_config(space, cfg); !problems.empty()) throw SchemaError(problems.front());
  return cfg;
}

}  // namespace

std::string handle_oracle_request(const BuiltinOracle& oracle, const ParamSpace& space, const std::string& line) {
  try {
    const nlohmann::json j = nlohmann::json::parse(line);
    if (!j.is_object() || !j.contains("cmd") || !j["cmd"].is_string()) return error_reply("request needs a cmd");
    const std::string cmd = j["cmd"].get<std::string>();
    if (cmd == "ping") return R"({"ok":true})";
    if (cmd != "episode") return error_reply("unknown cmd '" + cmd + "'");
    if (!j.contains("space") || !j["space"].is_string()) return error_reply("request needs a space");
    if (j["space"].get<std::string>() != space.name())
      return error_reply("server serves '" + space.name() + "', not '" + j["space"].get<std::string>() + "'");
    if (!j.contains("sample_idx") || !j["sample_idx"].is_number_unsigned())
      return error_reply("request needs a non-negative integer sample_idx");
    if (!j.contains("config")) return error_reply("request needs a config");
    const ScenarioConfig cfg = config_from_request(space, j["config"], j["sample_idx"].get<std::uint64_t>());
    const EpisodeOutcome o = oracle.evaluate(cfg);
    ojson r;
    r["success"] = o.success;
    r["failure_type"] = std::string(to_string(o.failure_type));
    r["cycle_time"] = o.cycle_time;
    r["collision"] = o.collision;
    r["drop"] = o.drop;
    r["grasp_miss"] = o.grasp_miss;
    r["fail_prob"] = o.fail_prob;
    return r.dump();
  } catch (const nlohmann::json::exception&) {
    return error_reply("malformed request");
  } catch (const std::exception& e) {
    return error_reply(e.what());
  }
}

OracleServer::OracleServer(ServerConfig cfg)
    : cfg_(std::move(cfg)), space_(builtin_space(cfg_.space)), oracle_(space_.name(), cfg_.seed) {
  if (cfg_.max_connections == 0) throw DomainError("max_connections must be >= 1");
}

OracleServer::~OracleServer() { stop(); }

void OracleServer::bind() {
  if (listen_fd_ >= 0) return;
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(cfg_.port);
  if (int rc = ::getaddrinfo(cfg_.host.c_str(), port.c_str(), &hints, &res); rc != 0)
    throw Error("cannot resolve " + cfg_.host + ": " + ::gai_strerror(rc));
  std::string last = "no address";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
      sockaddr_storage addr{};
      socklen_t len = sizeof addr;
      ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
      port_ = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                               : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
      listen_fd_ = fd;
      break;
    }
    last = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (listen_fd_ < 0) throw Error("cannot bind " + cfg_.host + ":" + port + ": " + last);
}

void OracleServer::reap(bool all) {
  for (auto it = workers_.begin(); it != workers_.end();) {
    if (all || it->done->load()) {
      it->thread.join();
      it = workers_.erase(it);
    } else {
      ++it;
    }
  }
}

void OracleServer::serve() {
  bind();
  while (!stop_.load()) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, 100);
    reap(false);
    if (rc <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    if (active_.load() >= cfg_.max_connections) {
      refused_.fetch_add(1);
      ::close(fd);
      continue;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    active_.fetch_add(1);
    auto done = std::make_shared<std::atomic<bool>>(false);
    workers_.push_back({std::thread([this, fd, done] {
                          handle(fd);
                          active_.fetch_sub(1);
                          done->store(true);
                        }),
                        done});
  }
  reap(true);
}

void OracleServer::handle(int fd) {
  std::string buffer;
  char buf[4096];
  while (!stop_.load()) {
    pollfd p{fd, POLLIN, 0};
    const int rc = ::poll(&p, 1, 100);
    if (rc < 0 && errno != EINTR) break;
    if (rc <= 0) continue;
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n <= 0) break;
    buffer.append(buf, static_cast<std::size_t>(n));
    std::size_t nl;
    bool ok = true;
    while (ok && (nl = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      requests_.fetch_add(1);
      const std::string reply = handle_oracle_request(oracle_, space_, line) + "\n";
      std::size_t sent = 0;
      while (sent < reply.size()) {
        const ssize_t s = ::send(fd, reply.data() + sent, reply.size() - sent, MSG_NOSIGNAL);
        if (s < 0 && errno == EINTR) continue;
        if (s <= 0) {
          ok = false;
          break;
        }
        sent += static_cast<std::size_t>(s);
      }
    }
    if (!ok) break;
    if (buffer.size() > (1u << 20)) {
      const std::string reply = error_reply("request line too long") + "\n";
      ::send(fd, reply.data(), reply.size(), MSG_NOSIGNAL);
      break;
    }
  }
  ::close(fd);
}

void OracleServer::start() {
  bind();
  accept_thread_ = std::thread([this] { serve(); });
}

void OracleServer::stop() {
  request_stop();
  if (accept_thread_.joinable()) accept_thread_.join();
  reap(true);
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
}

}  // namespace deploygate
