#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pqos {

/// Network-service outcome per transfer interval: true = success ("1"), false = failure ("0").
struct NsTrace {
  std::vector<bool> outcomes;
  double transfer_interval = 1.0;  // s

  std::size_t size() const { return outcomes.size(); }
  void validate() const;

  /// Parses a line of '0'/'1' characters; whitespace is ignored.
  static NsTrace parse(std::string_view text, double transfer_interval = 1.0);
  std::string to_string() const;
};

struct AppConfig {
  int survival_time = 0;  // consecutive failed intervals tolerated
};

/// Advance warning of a failure run. Construction enforces lead >= 1 and
/// required_survival >= run_length.
class Notification {
 public:
  Notification(std::size_t run_start, std::size_t run_length, int lead, std::size_t required_survival);

  std::size_t run_start() const { return run_start_; }
  std::size_t run_length() const { return run_length_; }
  int lead() const { return lead_; }
  std::size_t required_survival() const { return required_survival_; }
  /// Interval at which the application receives the notification.
  long delivered_at() const { return static_cast<long>(run_start_) - lead_; }
  bool deliverable() const { return delivered_at() >= 0; }

  bool operator==(const Notification&) const = default;

 private:
  std::size_t run_start_;
  std::size_t run_length_;
  int lead_;
  std::size_t required_survival_;
};

enum class AsState { Ok, Adapted, Failed };

struct AsTrace {
  std::vector<AsState> states;
  std::size_t failure_count = 0;
  std::size_t adapted_interval_count = 0;

  /// 'K' = OK, 'A' = ADAPTED, 'F' = FAILED.
  std::string to_string() const;
  /// Number of maximal runs of FAILED intervals.
  std::size_t failure_runs() const;
};

/// Maximal run of consecutive NS failures.
struct FailureRun {
  std::size_t start = 0;
  std::size_t length = 0;
};
std::vector<FailureRun> failure_runs(const NsTrace& ns);

/// Interval t is FAILED iff the failure run ending at t is longer than S.
AsTrace eval_as(const NsTrace& ns, const AppConfig& config);

struct NotificationPlan {
  std::vector<Notification> notifications;  // deliverable, in run order
  std::vector<Notification> undeliverable;  // run_start < lead
};

/// One notification per failure run longer than S, required_survival = run length.
NotificationPlan plan_notifications(const NsTrace& ns_future, const AppConfig& config, int lead);

/// Like eval_as, but failure intervals of a run covered by a delivered
/// notification use survival max(S, required_survival) and are labelled
/// ADAPTED. A notification covers the failure run it overlaps, and acts from
/// the first overlapping interval onwards.
AsTrace eval_as_with_pqos(const NsTrace& ns, const AppConfig& config, const std::vector<Notification>& notifications);

}  // namespace pqos
