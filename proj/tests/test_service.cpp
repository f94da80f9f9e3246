#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "pqos/service.hpp"

using namespace pqos;

namespace {

EndpointConfig demo_endpoint() {
  const OutageDemo d = outage_demo();
  EndpointConfig c;
  c.port = 0;
  c.scenario = d.scenario;
  c.route = d.route;
  c.intervals = d.intervals;
  c.requirement_mbps = d.requirement_mbps;
  c.app = AppConfig{2};
  c.seed = 1;
  return c;
}

class LineClient {
 public:
  explicit LineClient(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_port = htons(static_cast<std::uint16_t>(port));
    ::inet_pton(AF_INET, "127.0.0.1", &a.sin_addr);
    timeval tv{20, 0};
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    REQUIRE(::connect(fd_, reinterpret_cast<sockaddr*>(&a), sizeof a) == 0);
  }
  ~LineClient() { ::close(fd_); }

  void send(const std::string& line) {
    const std::string s = line + "\n";
    REQUIRE(::send(fd_, s.data(), s.size(), MSG_NOSIGNAL) == static_cast<ssize_t>(s.size()));
  }

  std::string read_line() {
    for (;;) {
      const auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string l = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return l;
      }
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n <= 0) return {};
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  // Reads notify lines up to and including the end marker.
  std::pair<std::string, std::string> read_stream() {
    std::string notes;
    for (;;) {
      const std::string l = read_line();
      if (l.empty() || nlohmann::json::parse(l)["type"] != "notify") return {notes, l};
      notes += l + "\n";
    }
  }

 private:
  int fd_;
  std::string buf_;
};

struct Running {
  explicit Running(EndpointConfig c) : server(std::move(c)), thread([this] { server.run(); }) {}
  ~Running() {
    server.stop();
    thread.join();
  }
  Server server;
  std::thread thread;
};

std::string offline_log(const EndpointConfig& c, const std::string& profile, int lead) {
  const auto sub = Subscription::for_profile(*find_profile(profile), lead, c.route.sample_period, c.requirement_mbps);
  return run_closed_loop(c.scenario, c.route, c.model, sub, c.app, c.seed, c.intervals).notification_log();
}

}  // namespace

TEST_CASE("handle_message without sockets") {
  const EndpointConfig c = demo_endpoint();
  const auto none = [](const std::string&) {};
  CHECK(handle_message(c, "{\"type\":\"hello\"}", none) ==
        std::vector<std::string>{R"({"type":"error","reason":"unknown_type"})"});
  CHECK(handle_message(c, "{not json", none) == std::vector<std::string>{R"({"type":"error","reason":"malformed"})"});
  CHECK(handle_message(c, "[1,2]", none) == std::vector<std::string>{R"({"type":"error","reason":"malformed"})"});
  CHECK(handle_message(c, R"({"type":"request","profile":"drone","horizon":3})", none) ==
        std::vector<std::string>{R"({"type":"error","reason":"unknown_profile"})"});
  CHECK(handle_message(c, R"({"type":"request","profile":"hd_map","horizon":-3})", none) ==
        std::vector<std::string>{R"({"type":"error","reason":"bad_horizon"})"});
  CHECK(handle_message(c, R"({"type":"subscribe","profile":"hd_map","lead":0})", none) ==
        std::vector<std::string>{R"({"type":"error","reason":"bad_lead"})"});

  const auto f = handle_message(c, R"({"type":"request","profile":"hd_map","horizon":10})", none);
  REQUIRE(f.size() == 1);
  const auto j = nlohmann::json::parse(f[0]);
  CHECK(j["type"] == "forecast");
  CHECK(j["values_mbps"].size() == 10);
}

TEST_CASE("TCP: request, errors keep the connection open, subscribe matches offline") {
  const EndpointConfig c = demo_endpoint();
  Running srv(c);
  LineClient client(srv.server.port());

  client.send(R"({"type":"request","profile":"teleoperated_driving","horizon":10})");
  const auto forecast = nlohmann::json::parse(client.read_line());
  CHECK(forecast["type"] == "forecast");
  CHECK(forecast["values_mbps"].size() == 10);

  client.send(R"({"type":"bogus"})");
  CHECK(client.read_line() == R"({"type":"error","reason":"unknown_type"})");
  client.send("}}}");
  CHECK(client.read_line() == R"({"type":"error","reason":"malformed"})");

  client.send(R"({"type":"subscribe","profile":"teleoperated_driving","lead":2})");
  const auto [notes, end] = client.read_stream();
  const std::string offline = offline_log(c, "teleoperated_driving", 2);
  CHECK(notes == offline);
  CHECK(std::count(notes.begin(), notes.end(), '\n') == 1);
  const auto n = nlohmann::json::parse(notes.substr(0, notes.find('\n')));
  CHECK(n["effective_at"] == 6);
  CHECK(n["requirement_mbps"] == 20.0);
  const auto e = nlohmann::json::parse(end);
  CHECK(e["type"] == "end");
  CHECK(e["notifications"] == 1);
}

TEST_CASE("TCP: concurrent subscribers receive identical streams") {
  const EndpointConfig c = demo_endpoint();
  Running srv(c);
  std::string got[3];
  std::vector<std::thread> clients;
  for (int i = 0; i < 3; ++i) {
    clients.emplace_back([&, i] {
      LineClient client(srv.server.port());
      client.send(R"({"type":"subscribe","profile":"platooning","lead":3})");
      got[i] = client.read_stream().first;
    });
  }
  for (auto& t : clients) t.join();
  const std::string offline = offline_log(c, "platooning", 3);
  CHECK_FALSE(offline.empty());
  for (const auto& g : got) CHECK(g == offline);
}

TEST_CASE("port in use is a startup error") {
  EndpointConfig c = demo_endpoint();
  Server first(c);
  c.port = first.port();
  CHECK_THROWS_AS(Server{c}, std::runtime_error);
  c.host = "not-an-address";
  c.port = 0;
  CHECK_THROWS_AS(Server{c}, std::runtime_error);
}
