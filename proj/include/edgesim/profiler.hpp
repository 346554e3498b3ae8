#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <string>

#include "edgesim/error.hpp"
#include "edgesim/health.hpp"

namespace edgesim {

inline constexpr std::size_t kDefaultProfilerWindow = 20;

/// Per-node performance profiler.
///
/// Keeps a bounded ring of end-to-end latencies for every hosted task and the
/// node-level average over the latest sample of each task that has one.
class ProfilerState {
 public:
  struct Track {
    std::deque<double> ring;
    double qos_ms = 0.0;
    double last_at = 0.0;

    std::optional<double> latest() const {
      if (ring.empty()) return std::nullopt;
      return ring.back();
    }
  };

  explicit ProfilerState(std::size_t window = kDefaultProfilerWindow) : window_(window) {
    if (window_ == 0) throw ConfigError("profiler window must be >= 1");
  }

  void register_task(const std::string& task_id, double qos_ms) {
    if (!(qos_ms > 0.0)) throw ConfigError("task '" + task_id + "' has non-positive QoS");
    tracks_[task_id] = Track{{}, qos_ms, 0.0};
    recompute();
  }

  void unregister_task(const std::string& task_id) {
    tracks_.erase(task_id);
    recompute();
  }

  bool has_task(const std::string& task_id) const { return tracks_.contains(task_id); }

  void record_inference(const std::string& task_id, double latency_ms, double now_s) {
    auto it = tracks_.find(task_id);
    if (it == tracks_.end()) {
      throw RegistrationError("latency recorded for unregistered task '" + task_id + "'");
    }
    Track& t = it->second;
    t.ring.push_back(latency_ms);
    while (t.ring.size() > window_) t.ring.pop_front();
    t.last_at = now_s;
    recompute();
  }

  // Mean of the latest latency of every task that has reported one.
  std::optional<double> avg_inf_lat() const noexcept { return avg_; }

  // Strictest budget among hosted tasks.
  std::optional<double> qos_reference() const {
    if (tracks_.empty()) return std::nullopt;
    double q = std::numeric_limits<double>::infinity();
    for (const auto& [_, t] : tracks_) q = std::min(q, t.qos_ms);
    return q;
  }

  const std::map<std::string, Track>& tracks() const noexcept { return tracks_; }
  std::size_t window() const noexcept { return window_; }

 private:
  void recompute() {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [_, t] : tracks_) {
      if (!t.ring.empty()) {
        sum += t.ring.back();
        ++n;
      }
    }
    avg_ = n == 0 ? std::nullopt : std::optional<double>(sum / static_cast<double>(n));
  }

  std::size_t window_;
  std::map<std::string, Track> tracks_;
  std::optional<double> avg_;
};

struct HealthState {
  std::map<std::string, Health> app_states;
  Health system_state = Health::pass;
  std::map<std::string, double> since;  // task id -> time of last state change
  double system_since = 0.0;

  friend bool operator==(const HealthState&, const HealthState&) = default;
};

/// Pure classification of a profiler snapshot.
///
/// Tasks without samples get no app state; a node with no reported latency
/// is idle and therefore passes.
inline HealthState evaluate_health(const ProfilerState& p, const Thresholds& th = {}) {
  HealthState h;
  for (const auto& [id, t] : p.tracks()) {
    if (auto l = t.latest()) h.app_states[id] = classify(*l, t.qos_ms, th);
  }
  const auto avg = p.avg_inf_lat();
  const auto ref = p.qos_reference();
  h.system_state = (avg && ref) ? classify(*avg, *ref, th) : Health::pass;
  return h;
}

/// Carries `since` stamps forward from `prev`, restamping changed entries.
inline HealthState carry_since(const HealthState& prev, HealthState next, double now_s) {
  next.system_since = next.system_state == prev.system_state ? prev.system_since : now_s;
  for (const auto& [id, st] : next.app_states) {
    auto old = prev.app_states.find(id);
    auto when = prev.since.find(id);
    next.since[id] = (old != prev.app_states.end() && old->second == st && when != prev.since.end())
                         ? when->second
                         : now_s;
  }
  return next;
}

}  // namespace edgesim
