#include "pqos/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

#include "json.hpp"
#include "pqos/error.hpp"

namespace pqos {

namespace {

using nlohmann::ordered_json;

constexpr std::size_t kMaxLine = 1 << 16;

std::string error_line(const std::string& reason) {
  ordered_json j;
  j["type"] = "error";
  j["reason"] = reason;
  return j.dump();
}

// Non-negative integer field, or nullopt.
std::optional<long> count_field(const nlohmann::json& msg, const char* key) {
  const auto it = msg.find(key);
  if (it == msg.end() || !it->is_number_integer()) return std::nullopt;
  const long v = it->get<long>();
  if (v < 0) return std::nullopt;
  return v;
}

bool send_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

std::vector<std::string> handle_message(const EndpointConfig& config, const std::string& line,
                                        const std::function<void(const std::string&)>& emit) {
  nlohmann::json msg;
  try {
    msg = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    return {error_line("malformed")};
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) return {error_line("malformed")};
  const std::string type = msg["type"];
  if (type != "request" && type != "subscribe") return {error_line("unknown_type")};

  if (!msg.contains("profile") || !msg["profile"].is_string()) return {error_line("malformed")};
  const auto profile = find_profile(msg["profile"].get<std::string>());
  if (!profile) return {error_line("unknown_profile")};

  try {
    if (type == "request") {
      const auto horizon = count_field(msg, "horizon");
      if (!horizon) return {error_line("bad_horizon")};
      const RouteState state{RouteTrack::for_samples(config.route, config.intervals), 0};
      const Eigen::VectorXd f = request_prediction(config.model, config.scenario, state, static_cast<int>(*horizon));
      ordered_json j;
      j["type"] = "forecast";
      j["values_mbps"] = std::vector<double>(f.data(), f.data() + f.size());
      return {j.dump()};
    }

    const auto lead = count_field(msg, "lead");
    if (!lead || *lead < 1) return {error_line("bad_lead")};
    const auto sub = Subscription::for_profile(*profile, static_cast<int>(*lead), config.route.sample_period,
                                               config.requirement_mbps);
    const auto result = run_closed_loop(config.scenario, config.route, config.model, sub, config.app, config.seed,
                                        config.intervals,
                                        [&](const QosNotification& n) { emit(n.to_wire()); });
    ordered_json end;
    end["type"] = "end";
    end["notifications"] = result.notifications.size();
    end["undeliverable"] = result.undeliverable.size();
    return {end.dump()};
  } catch (const std::exception& e) {
    return {error_line(std::string("failed: ") + e.what())};
  }
}

Server::Server(EndpointConfig config) : config_(std::move(config)) {
  config_.scenario.validate();
  config_.route.validate();
  if (config_.port < 0 || config_.port > 65535) throw std::runtime_error("port out of range");

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(config_.port));
  if (::inet_pton(AF_INET, config_.host.c_str(), &addr.sin_addr) != 1)
    throw std::runtime_error("invalid listen address '" + config_.host + "'");

  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    throw std::runtime_error("cannot listen on " + config_.host + ":" + std::to_string(config_.port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Server::~Server() {
  stop();
  for (auto& w : workers_)
    if (w.joinable()) w.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void Server::stop() {
  stopping_ = true;
  std::lock_guard lock(clients_mutex_);
  for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
}

void Server::run() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, 100);
    if (ready <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    std::lock_guard lock(clients_mutex_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve_client(fd); });
  }
}

void Server::serve_client(int fd) {
  std::string buffer;
  char chunk[4096];
  bool open = true;
  while (open && !stopping_) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while (open && (nl = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;

      std::lock_guard sim(sim_mutex_);
      const auto replies = handle_message(config_, line, [&](const std::string& s) {
        if (open) open = send_all(fd, s + "\n");
      });
      for (const auto& r : replies)
        if (open) open = send_all(fd, r + "\n");
    }
    if (buffer.size() > kMaxLine) {
      buffer.clear();
      open = send_all(fd, error_line("line_too_long") + "\n");
    }
  }
  std::lock_guard lock(clients_mutex_);
  std::erase(client_fds_, fd);
  ::close(fd);
}

void serve(const EndpointConfig& config) {
  Server server(config);
  server.run();
}

}  // namespace pqos
