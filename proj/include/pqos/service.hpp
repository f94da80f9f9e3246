#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "pqos/analytics.hpp"

namespace pqos {

/// What one server instance simulates and where it listens.
struct EndpointConfig {
  std::string host = "127.0.0.1";
  int port = 7878;  // 0 picks a free port
  RadioScenario scenario = default_scenario();
  Route route = default_route();
  ForecastModel model = MapOracle{};
  AppConfig app{};
  std::uint64_t seed = 1;
  std::size_t intervals = 3100;
  double requirement_mbps = 20.0;
};

/// Handles one protocol line and returns the reply lines (each without '\n').
/// `emit` receives streamed notify lines as the closed loop issues them.
/// Exposed for testing without sockets.
std::vector<std::string> handle_message(const EndpointConfig& config, const std::string& line,
                                        const std::function<void(const std::string&)>& emit);

/// Newline-delimited JSON endpoint. The constructor binds and listens, so a
/// busy port fails at startup with std::runtime_error.
class Server {
 public:
  explicit Server(EndpointConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  int port() const { return port_; }
  /// Accepts clients until stop(); one thread per client.
  void run();
  void stop();

 private:
  void serve_client(int fd);

  EndpointConfig config_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex sim_mutex_;  // one simulation per server
  std::mutex clients_mutex_;
  std::vector<int> client_fds_;
  std::vector<std::thread> workers_;
};

/// Blocking convenience wrapper.
void serve(const EndpointConfig& config);

}  // namespace pqos
