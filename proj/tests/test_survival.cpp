#include "doctest.h"
#include "pqos/error.hpp"
#include "pqos/rng.hpp"
#include "pqos/survival.hpp"

using namespace pqos;

namespace {

NsTrace random_trace(Rng& rng, std::size_t n, double p_fail, bool start_ok) {
  NsTrace ns;
  bool state = true;
  for (std::size_t t = 0; t < n; ++t) {
    // Sticky chain so that long failure runs occur.
    if (rng.uniform() < (state ? p_fail : 0.35)) state = !state;
    ns.outcomes.push_back(t == 0 && start_ok ? true : state);
  }
  return ns;
}

// Independent reference: counts the run ending at each t.
std::string reference_as(const NsTrace& ns, int s) {
  std::string out;
  int run = 0;
  for (bool ok : ns.outcomes) {
    run = ok ? 0 : run + 1;
    out.push_back(run > s ? 'F' : 'K');
  }
  return out;
}

}  // namespace

TEST_CASE("ns trace text format") {
  const NsTrace ns = NsTrace::parse("1 0 0\n1");
  CHECK(ns.to_string() == "1001");
  CHECK(ns.size() == 4);
  CHECK_THROWS_AS(NsTrace::parse("10x1"), ParseError);
  CHECK_THROWS_AS(NsTrace::parse("101", 0.0), DomainError);
}

TEST_CASE("reference case 1001: two failures survive") {
  const AsTrace as = eval_as(NsTrace::parse("1001"), AppConfig{2});
  CHECK(as.to_string() == "KKKK");
  CHECK(as.failure_count == 0);
  CHECK(as.adapted_interval_count == 0);
}

TEST_CASE("reference case 10001: third consecutive failure fails") {
  const AsTrace as = eval_as(NsTrace::parse("10001"), AppConfig{2});
  CHECK(as.to_string() == "KKKFK");
  CHECK(as.states[3] == AsState::Failed);
  CHECK(as.failure_count == 1);
  CHECK(as.failure_runs() == 1);
}

TEST_CASE("reference case 10001 with a notification") {
  const NsTrace ns = NsTrace::parse("10001");
  const auto plan = plan_notifications(ns, AppConfig{2}, 1);
  REQUIRE(plan.notifications.size() == 1);
  const Notification& n = plan.notifications[0];
  CHECK(n.run_start() == 1);
  CHECK(n.run_length() == 3);
  CHECK(n.required_survival() == 3);
  const AsTrace as = eval_as_with_pqos(ns, AppConfig{2}, plan.notifications);
  CHECK(as.to_string() == "KAAAK");
  CHECK(as.failure_count == 0);
  CHECK(as.adapted_interval_count == 3);
}

TEST_CASE("all-success trace is always OK") {
  for (int s = 0; s < 4; ++s) CHECK(eval_as(NsTrace::parse("111111"), AppConfig{s}).to_string() == "KKKKKK");
}

TEST_CASE("plan_notifications edge cases") {
  CHECK(plan_notifications(NsTrace::parse("1001"), AppConfig{2}, 1).notifications.empty());
  const auto early = plan_notifications(NsTrace::parse("0001111"), AppConfig{2}, 2);
  CHECK(early.notifications.empty());
  REQUIRE(early.undeliverable.size() == 1);
  CHECK(early.undeliverable[0].run_start() == 0);
  CHECK_FALSE(early.undeliverable[0].deliverable());
  CHECK_THROWS_AS(plan_notifications(NsTrace::parse("1"), AppConfig{2}, 0), DomainError);
}

TEST_CASE("notification invariants") {
  CHECK_THROWS_AS(Notification(3, 3, 0, 3), DomainError);
  CHECK_THROWS_AS(Notification(3, 3, 1, 2), DomainError);
  const Notification n(5, 2, 3, 4);
  CHECK(n.delivered_at() == 2);
  CHECK(n.deliverable());
  CHECK_FALSE(Notification(1, 2, 2, 2).deliverable());
}

TEST_CASE("notifications beyond the trace are rejected") {
  CHECK_THROWS_AS(eval_as_with_pqos(NsTrace::parse("101"), AppConfig{0}, {Notification(3, 1, 1, 1)}), DomainError);
  CHECK_THROWS_AS(eval_as(NsTrace::parse("101"), AppConfig{-1}), DomainError);
}

TEST_CASE("property: eval_as matches the run-length reference") {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const NsTrace ns = random_trace(rng, 1 + rng.below(60), 0.2, false);
    const int s = static_cast<int>(rng.below(5));
    const AsTrace as = eval_as(ns, AppConfig{s});
    CHECK(as.to_string() == reference_as(ns, s));
    CHECK(as.states.size() == ns.size());
    CHECK(as.adapted_interval_count == 0);
  }
}

TEST_CASE("property: failure count is nonincreasing in S") {
  Rng rng(102);
  for (int trial = 0; trial < 200; ++trial) {
    const NsTrace ns = random_trace(rng, 80, 0.25, false);
    std::size_t prev = ns.size() + 1;
    for (int s = 0; s < 8; ++s) {
      const std::size_t f = eval_as(ns, AppConfig{s}).failure_count;
      CHECK(f <= prev);
      prev = f;
    }
  }
}

TEST_CASE("property: full notifications remove every failure") {
  Rng rng(103);
  for (int trial = 0; trial < 200; ++trial) {
    const NsTrace ns = random_trace(rng, 100, 0.2, true);
    const int s = static_cast<int>(rng.below(4));
    const auto plan = plan_notifications(ns, AppConfig{s}, 1);
    CHECK(plan.undeliverable.empty());
    std::size_t long_runs = 0;
    for (const auto& r : failure_runs(ns))
      if (r.length > static_cast<std::size_t>(s)) long_runs += r.length;
    const AsTrace as = eval_as_with_pqos(ns, AppConfig{s}, plan.notifications);
    CHECK(as.failure_count == 0);
    CHECK(as.adapted_interval_count == long_runs);
  }
}

TEST_CASE("property: no notifications reduces to eval_as") {
  Rng rng(104);
  for (int trial = 0; trial < 200; ++trial) {
    const NsTrace ns = random_trace(rng, 50, 0.3, false);
    const int s = static_cast<int>(rng.below(4));
    CHECK(eval_as_with_pqos(ns, AppConfig{s}, {}).states == eval_as(ns, AppConfig{s}).states);
  }
}

TEST_CASE("property: causality") {
  Rng rng(105);
  for (int trial = 0; trial < 200; ++trial) {
    const NsTrace ns = random_trace(rng, 60, 0.25, true);
    const int s = static_cast<int>(rng.below(3));
    const auto notes = plan_notifications(ns, AppConfig{s}, 1 + static_cast<int>(rng.below(3))).notifications;
    const AsTrace full = eval_as_with_pqos(ns, AppConfig{s}, notes);
    const std::size_t cut = rng.below(ns.size());

    // Changing the future does not change the past.
    NsTrace altered = ns;
    for (std::size_t t = cut + 1; t < ns.size(); ++t) altered.outcomes[t] = rng.uniform() < 0.5;
    const AsTrace alt = eval_as_with_pqos(altered, AppConfig{s}, notes);
    // Notifications not yet delivered at `cut` do not change the past either.
    std::vector<Notification> delivered;
    for (const auto& n : notes)
      if (n.delivered_at() <= static_cast<long>(cut)) delivered.push_back(n);
    const AsTrace early = eval_as_with_pqos(ns, AppConfig{s}, delivered);
    for (std::size_t t = 0; t <= cut; ++t) {
      CHECK(alt.states[t] == full.states[t]);
      CHECK(early.states[t] == full.states[t]);
    }
  }
}
