#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgesim/error.hpp"
#include "edgesim/health.hpp"
#include "edgesim/net_model.hpp"
#include "edgesim/profiler.hpp"
#include "edgesim/rng.hpp"

namespace edgesim {

enum class Policy { min_latency, weighted };

inline constexpr std::string_view to_string(Policy p) noexcept {
  return p == Policy::min_latency ? "min-latency" : "weighted";
}

inline Policy policy_from_string(std::string_view s) {
  if (s == "min-latency") return Policy::min_latency;
  if (s == "weighted") return Policy::weighted;
  throw ConfigError("unknown policy '" + std::string(s) + "' (expected min-latency or weighted)");
}

struct AllocationWeights {
  double alpha = 0.3;  // cpu
  double beta = 0.4;   // accelerator
  double gamma = 0.3;  // network

  friend bool operator==(const AllocationWeights&, const AllocationWeights&) = default;
};

inline std::string check_weights(const AllocationWeights& w) {
  if (w.alpha < 0.0 || w.beta < 0.0 || w.gamma < 0.0) return "factors must be >= 0";
  if (std::abs(w.alpha + w.beta + w.gamma - 1.0) > 1e-9) return "factors must sum to 1";
  return {};
}

/// Everything a placement decision looks at for one node.
struct NodeCandidate {
  std::string id;
  bool healthy = true;    // system state is not critical
  bool reachable = true;  // not quarantined and not faulted
  double score_ms = 0.0;  // composite link score to the requesting end-device
  double cpu_ms = 0.0;    // predicted for the request at one more instance
  double accel_ms = 0.0;

  bool eligible() const noexcept { return healthy && reachable; }
};

/// Min-latency selection: the eligible node with the lowest composite score
/// to the end-device, ties broken by node id.
inline std::optional<std::string> try_assign_node(std::span<const NodeCandidate> nodes) {
  double min_latency = std::numeric_limits<double>::infinity();
  const NodeCandidate* selected = nullptr;
  for (const auto& n : nodes) {
    if (!n.eligible()) continue;
    if (n.score_ms < min_latency || (n.score_ms == min_latency && selected && n.id < selected->id)) {
      min_latency = n.score_ms;
      selected = &n;
    }
  }
  if (!selected) return std::nullopt;
  return selected->id;
}

inline std::string assign_node(std::span<const NodeCandidate> nodes) {
  if (auto id = try_assign_node(nodes)) return *id;
  throw AssignmentUnavailable("no healthy reachable node among " + std::to_string(nodes.size()));
}

struct NodeWeight {
  std::string id;
  double w_cpu = 0.0;
  double w_ai = 0.0;
  double w_nl = 0.0;
  double w_combined = 0.0;
};

/// Max-normalised inverse latencies over the eligible candidates, combined
/// with the allocation factors.
inline std::vector<NodeWeight> node_weights(std::span<const NodeCandidate> nodes,
                                            const AllocationWeights& k) {
  if (auto why = check_weights(k); !why.empty()) throw ConfigError(why);
  double best_cpu = std::numeric_limits<double>::infinity();
  double best_ai = best_cpu;
  double best_nl = best_cpu;
  for (const auto& n : nodes) {
    if (!n.eligible()) continue;
    if (!(n.cpu_ms > 0.0 && n.accel_ms > 0.0 && n.score_ms > 0.0)) {
      throw ConfigError("node '" + n.id + "' has a non-positive weighting input");
    }
    best_cpu = std::min(best_cpu, n.cpu_ms);
    best_ai = std::min(best_ai, n.accel_ms);
    best_nl = std::min(best_nl, n.score_ms);
  }
  std::vector<NodeWeight> out;
  for (const auto& n : nodes) {
    if (!n.eligible()) continue;
    NodeWeight w{n.id, best_cpu / n.cpu_ms, best_ai / n.accel_ms, best_nl / n.score_ms, 0.0};
    w.w_combined = k.alpha * w.w_cpu + k.beta * w.w_ai + k.gamma * w.w_nl;
    out.push_back(std::move(w));
  }
  if (out.empty()) throw EmptyCandidates("no eligible candidates to weight");
  return out;
}

inline std::optional<std::string> try_assign_weighted(std::span<const NodeCandidate> nodes,
                                                      const AllocationWeights& k) {
  if (std::none_of(nodes.begin(), nodes.end(), [](const auto& n) { return n.eligible(); })) {
    return std::nullopt;
  }
  const auto weights = node_weights(nodes, k);
  const NodeWeight* best = &weights.front();
  for (const auto& w : weights) {
    if (w.w_combined > best->w_combined || (w.w_combined == best->w_combined && w.id < best->id)) {
      best = &w;
    }
  }
  return best->id;
}

inline std::string assign_weighted(std::span<const NodeCandidate> nodes,
                                   const AllocationWeights& k) {
  if (auto id = try_assign_weighted(nodes, k)) return *id;
  throw AssignmentUnavailable("no healthy reachable node among " + std::to_string(nodes.size()));
}

inline std::optional<std::string> try_assign(Policy p, std::span<const NodeCandidate> nodes,
                                             const AllocationWeights& k) {
  return p == Policy::min_latency ? try_assign_node(nodes) : try_assign_weighted(nodes, k);
}

// ---------------------------------------------------------------------------
// Offloading

enum class MigrationTrigger { system_critical, app_critical };

inline constexpr std::string_view to_string(MigrationTrigger t) noexcept {
  return t == MigrationTrigger::system_critical ? "system-critical" : "app-critical";
}

struct MigrationRecord {
  std::string task_id;
  std::string from_node;
  std::string to_node;
  MigrationTrigger trigger = MigrationTrigger::system_critical;
  double metadata_transfer_ms = 0.0;
  double started_at = 0.0;
  double completed_at = 0.0;
  int attempt = 1;
};

struct TaskView {
  std::string task_id;
  std::string end_device_id;
  int frame_size_px = 0;
  double qos_ms = 0.0;
  std::optional<double> latest_inflat;
};

struct NodeView {
  std::string id;
  HealthState health;
  bool quarantined = false;
  bool faulted = false;
  std::optional<double> ok_since;  // first epoch at <= warning while quarantined
  std::vector<TaskView> tasks;

  bool critical() const noexcept { return faulted || health.system_state == Health::critical; }
};

struct ClusterView {
  std::vector<NodeView> nodes;  // ordered by id
};

struct OffloadConfig {
  double cool_down_s = 5.0;
};

struct UnplacedTask {
  std::string task_id;
  std::string node;
  MigrationTrigger trigger;
};

struct QuarantineUpdate {
  std::string node;
  std::optional<double> ok_since;
};

struct OffloadPlan {
  std::vector<std::string> quarantine;
  std::vector<std::string> release;
  std::vector<QuarantineUpdate> quarantine_clock;
  std::vector<MigrationRecord> migrations;
  std::vector<UnplacedTask> unplaced;
};

/// Chooses a target for `task` leaving `source`, never one in `excluded`.
using TargetPicker = std::function<std::optional<std::string>(
    const TaskView& task, const std::string& source, const std::set<std::string>& excluded)>;

/// The offload victim of a critical node: highest latest InfLat, ties by id.
/// Tasks that have not reported yet rank last.
inline const TaskView* pick_victim(const NodeView& node) {
  const TaskView* victim = nullptr;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& t : node.tasks) {
    const double l = t.latest_inflat.value_or(-std::numeric_limits<double>::infinity());
    if (!victim || l > worst || (l == worst && t.task_id < victim->task_id)) {
      victim = &t;
      worst = l;
    }
  }
  return victim;
}

/// One health epoch of the offload loop.
///
/// Critical nodes are quarantined and lose their single worst instance.
/// Instances that are themselves critical on a non-critical node are moved
/// individually. Quarantined nodes come back once they have stayed at or
/// below warning for the cool-down.
inline OffloadPlan monitor_and_offload(const ClusterView& cluster, double now_s,
                                       const OffloadConfig& cfg, const TargetPicker& pick) {
  OffloadPlan plan;
  std::set<std::string> excluded;

  for (const auto& n : cluster.nodes) {
    if (n.critical()) {
      excluded.insert(n.id);
      if (!n.quarantined) plan.quarantine.push_back(n.id);
      if (n.ok_since) plan.quarantine_clock.push_back({n.id, std::nullopt});
    } else if (n.quarantined) {
      const double since = n.ok_since.value_or(now_s);
      if (now_s - since >= cfg.cool_down_s) {
        plan.release.push_back(n.id);
        plan.quarantine_clock.push_back({n.id, std::nullopt});
      } else {
        excluded.insert(n.id);
        if (!n.ok_since) plan.quarantine_clock.push_back({n.id, now_s});
      }
    }
  }

  auto place = [&](const TaskView& t, const std::string& source, MigrationTrigger trigger) {
    auto target = pick(t, source, excluded);
    if (target && *target != source && !excluded.contains(*target)) {
      MigrationRecord r;
      r.task_id = t.task_id;
      r.from_node = source;
      r.to_node = *target;
      r.trigger = trigger;
      r.started_at = now_s;
      plan.migrations.push_back(std::move(r));
    } else {
      plan.unplaced.push_back({t.task_id, source, trigger});
    }
  };

  for (const auto& n : cluster.nodes) {
    if (!n.critical()) continue;
    if (const TaskView* victim = pick_victim(n)) {
      place(*victim, n.id, MigrationTrigger::system_critical);
    }
  }
  for (const auto& n : cluster.nodes) {
    if (n.critical()) continue;
    for (const auto& t : n.tasks) {
      auto st = n.health.app_states.find(t.task_id);
      if (st != n.health.app_states.end() && st->second == Health::critical) {
        place(t, n.id, MigrationTrigger::app_critical);
      }
    }
  }
  return plan;
}

/// Costs a migration whose inter-edge link sample is already known.
inline double schedule_migration(MigrationRecord& rec, double link_sample_ms,
                                 double handover_overhead_ms, double now_s) {
  rec.metadata_transfer_ms = link_sample_ms + handover_overhead_ms;
  rec.started_at = now_s;
  rec.completed_at = now_s + rec.metadata_transfer_ms / 1000.0;
  return rec.completed_at;
}

/// Samples the source-to-target link, folds it into the matrix and returns
/// the time the task becomes active on the target.
inline double execute_migration(MigrationRecord& rec, Nlm& nlm, RngStream& rng,
                                double handover_overhead_ms, double now_s,
                                double floor_ms = kDefaultLatencyFloorMs) {
  if (rec.from_node == rec.to_node) throw AssignmentError("migration onto its own source");
  const double sample = sample_stable(nlm.at(rec.from_node, rec.to_node).params, rng, floor_ms);
  nlm.observe(rec.from_node, rec.to_node, sample, now_s);
  return schedule_migration(rec, sample, handover_overhead_ms, now_s);
}

}  // namespace edgesim
