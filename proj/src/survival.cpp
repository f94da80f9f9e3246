#include "pqos/survival.hpp"

#include <algorithm>
#include <cctype>

#include "pqos/error.hpp"

namespace pqos {

void NsTrace::validate() const {
  if (!(transfer_interval > 0.0)) throw DomainError("transfer_interval must be positive");
}

NsTrace NsTrace::parse(std::string_view text, double transfer_interval) {
  NsTrace ns;
  ns.transfer_interval = transfer_interval;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '0' || c == '1')
      ns.outcomes.push_back(c == '1');
    else if (!std::isspace(static_cast<unsigned char>(c)))
      throw ParseError("NS trace may only contain '0' and '1' (offending character at offset " + std::to_string(i) + ")");
  }
  ns.validate();
  return ns;
}

std::string NsTrace::to_string() const {
  std::string s;
  s.reserve(outcomes.size());
  for (bool ok : outcomes) s.push_back(ok ? '1' : '0');
  return s;
}

Notification::Notification(std::size_t run_start, std::size_t run_length, int lead, std::size_t required_survival)
    : run_start_(run_start), run_length_(run_length), lead_(lead), required_survival_(required_survival) {
  if (lead < 1) throw DomainError("notification lead must be at least 1");
  if (required_survival < run_length) throw DomainError("required_survival must cover the run length");
}

std::string AsTrace::to_string() const {
  std::string s;
  s.reserve(states.size());
  for (auto st : states) s.push_back(st == AsState::Ok ? 'K' : st == AsState::Adapted ? 'A' : 'F');
  return s;
}

std::size_t AsTrace::failure_runs() const {
  std::size_t runs = 0;
  for (std::size_t t = 0; t < states.size(); ++t)
    if (states[t] == AsState::Failed && (t == 0 || states[t - 1] != AsState::Failed)) ++runs;
  return runs;
}

std::vector<FailureRun> failure_runs(const NsTrace& ns) {
  std::vector<FailureRun> runs;
  for (std::size_t t = 0; t < ns.size(); ++t) {
    if (ns.outcomes[t]) continue;
    if (t == 0 || ns.outcomes[t - 1])
      runs.push_back({t, 1});
    else
      ++runs.back().length;
  }
  return runs;
}

AsTrace eval_as(const NsTrace& ns, const AppConfig& config) { return eval_as_with_pqos(ns, config, {}); }

NotificationPlan plan_notifications(const NsTrace& ns_future, const AppConfig& config, int lead) {
  if (lead < 1) throw DomainError("lead must be at least 1");
  NotificationPlan plan;
  for (const auto& run : failure_runs(ns_future)) {
    if (run.length <= static_cast<std::size_t>(std::max(config.survival_time, 0))) continue;
    Notification n(run.start, run.length, lead, run.length);
    (n.deliverable() ? plan.notifications : plan.undeliverable).push_back(n);
  }
  return plan;
}

AsTrace eval_as_with_pqos(const NsTrace& ns, const AppConfig& config, const std::vector<Notification>& notifications) {
  ns.validate();
  if (config.survival_time < 0) throw DomainError("survival_time must be non-negative");
  for (const auto& n : notifications) {
    if (n.run_start() >= ns.size()) throw DomainError("notification refers to an interval beyond the trace");
  }
  const auto base = static_cast<std::size_t>(config.survival_time);

  AsTrace as;
  as.states.assign(ns.size(), AsState::Ok);
  std::size_t run_start = 0;
  for (std::size_t t = 0; t < ns.size(); ++t) {
    if (ns.outcomes[t]) continue;
    if (t == 0 || ns.outcomes[t - 1]) run_start = t;
    const std::size_t run_so_far = t - run_start + 1;

    // Notifications already delivered whose predicted run overlaps [run_start, t].
    bool covered = false;
    std::size_t survival = base;
    for (const auto& n : notifications) {
      if (!n.deliverable() || n.delivered_at() > static_cast<long>(t)) continue;
      const std::size_t n_end = n.run_start() + n.run_length();
      if (n.run_start() <= t && n_end > run_start) {
        covered = true;
        survival = std::max(survival, n.required_survival());
      }
    }

    if (run_so_far > survival)
      as.states[t] = AsState::Failed;
    else if (covered)
      as.states[t] = AsState::Adapted;
  }
  for (auto st : as.states) {
    as.failure_count += st == AsState::Failed;
    as.adapted_interval_count += st == AsState::Adapted;
  }
  return as;
}

}  // namespace pqos
