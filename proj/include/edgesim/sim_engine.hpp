#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "edgesim/device_model.hpp"
#include "edgesim/discovery.hpp"
#include "edgesim/error.hpp"
#include "edgesim/health.hpp"
#include "edgesim/net_model.hpp"
#include "edgesim/orchestrator.hpp"
#include "edgesim/profiler.hpp"
#include "edgesim/rng.hpp"
#include "edgesim/scenario.hpp"

namespace edgesim {

// ---------------------------------------------------------------------------
// Events

enum class EventKind {
  stream_start,
  stream_stop,
  frame_emit,
  frame_arrival,
  processing_complete,
  health_epoch,
  migration_complete,
  node_fault,
  node_recover,
};

struct Event {
  double time = 0.0;
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::frame_emit;
  std::string subject;  // end-device, node or task id depending on kind
  std::uint64_t ref = 0;

  // Min-heap order on (time, sequence).
  friend bool operator>(const Event& a, const Event& b) {
    return std::tie(a.time, a.sequence) > std::tie(b.time, b.sequence);
  }
};

class EventQueue {
 public:
  void push(double time, EventKind kind, std::string subject = {}, std::uint64_t ref = 0) {
    heap_.push(Event{time, next_seq_++, kind, std::move(subject), ref});
  }

  bool empty() const noexcept { return heap_.empty(); }
  const Event& top() const { return heap_.top(); }

  Event pop() {
    Event e = heap_.top();
    heap_.pop();
    return e;
  }

  std::size_t size() const noexcept { return heap_.size(); }

 private:
  std::priority_queue<Event, std::vector<Event>, std::greater<>> heap_;
  std::uint64_t next_seq_ = 0;
};

/// Health epoch times k*interval for k >= 1 up to and including `until`.
inline std::vector<double> health_epoch_times(double interval_s, double until_s) {
  if (!(interval_s > 0.0)) throw ConfigError("health epoch interval must be > 0");
  std::vector<double> out;
  for (std::uint64_t k = 1;; ++k) {
    const double t = static_cast<double>(k) * interval_s;
    if (t > until_s + 1e-12) break;
    out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report

struct FrameRecord {
  std::uint64_t frame_id = 0;
  std::string task_id;
  std::string end_device;
  std::string node;
  int frame_size_px = 0;
  int n_instances = 0;
  double emitted_at = 0.0;
  double completed_at = 0.0;  // result back at the end-device
  double network_out_ms = 0.0;
  double queueing_ms = 0.0;
  double model_load_ms = 0.0;
  double cpu_ms = 0.0;
  double accel_ms = 0.0;
  double processing_ms = 0.0;
  double network_back_ms = 0.0;
  double e2e_ms = 0.0;
  double qos_ms = 0.0;
  Health state = Health::pass;
  bool dispatched_to_available = true;

  double network_ms() const noexcept { return network_out_ms + network_back_ms; }
  bool qos_violated() const noexcept { return e2e_ms > qos_ms; }
};

struct FailedFrame {
  std::uint64_t frame_id = 0;
  double time = 0.0;
  std::string end_device;
  std::string reason;
};

struct NodeSample {
  double t = 0.0;
  std::string node;
  int n_active = 0;
  std::size_t queue_len = 0;
  int busy = 0;
  double utilization = 0.0;
  Health system_state = Health::pass;
  bool reachable = true;
  bool faulted = false;
  std::optional<double> avg_inf_lat;
};

struct BreakdownKey {
  std::string device;
  int frame_size_px = 0;
  int n_instances = 0;

  friend auto operator<=>(const BreakdownKey&, const BreakdownKey&) = default;
};

struct BreakdownCell {
  std::uint64_t count = 0;
  double cpu_ms_sum = 0.0;
  double accel_ms_sum = 0.0;
  double e2e_ms_sum = 0.0;

  double mean_cpu() const { return count ? cpu_ms_sum / static_cast<double>(count) : 0.0; }
  double mean_accel() const { return count ? accel_ms_sum / static_cast<double>(count) : 0.0; }
  double mean_e2e() const { return count ? e2e_ms_sum / static_cast<double>(count) : 0.0; }
};

struct Counters {
  std::uint64_t frames_generated = 0;
  std::uint64_t frames_completed = 0;
  std::uint64_t frames_in_flight = 0;
  std::uint64_t assignment_failures = 0;
  std::uint64_t qos_violations = 0;
  std::uint64_t frames_to_unavailable = 0;
  std::uint64_t health_epochs = 0;
  std::uint64_t migrations = 0;  // completed
  std::uint64_t migrations_started = 0;
  std::uint64_t migrations_retried = 0;
  std::uint64_t migrations_abandoned = 0;
  std::uint64_t offload_unplaced = 0;
  std::uint64_t failovers = 0;
};

struct MetricsReport {
  std::string scenario;
  std::uint64_t seed = 0;
  Policy policy = Policy::min_latency;
  bool offloading = true;
  double duration_s = 0.0;
  double gossip_kbps = 0.0;
  Counters counters;
  std::vector<FrameRecord> frames;  // sorted by completion time, then frame id
  std::vector<FailedFrame> failed;
  std::vector<NodeSample> node_series;
  std::map<BreakdownKey, BreakdownCell> breakdown;
  std::vector<MigrationRecord> migrations;
  std::vector<ServiceRecord> registry;
  std::vector<nlohmann::json> decisions;
};

// ---------------------------------------------------------------------------
// Engine

/// One deterministic run of a scenario.
///
/// Sessions: every end-device opens one stream, resolved once through the
/// registry and re-resolved only after a migration or when its host stops
/// accepting frames. Each node serves up to one frame per hosted instance at
/// a time from a FIFO admission queue.
class Simulation {
 public:
  Simulation(Scenario scenario, std::uint64_t seed) : sc_(std::move(scenario)), seed_(seed) {
    if (auto issues = validate(sc_); !issues.empty()) {
      std::string msg = "invalid scenario:";
      for (const auto& i : issues) msg += "\n  " + i.str();
      throw ConfigError(msg);
    }
    nlm_ = Nlm(sc_.network.ema_weights, sc_.network.link_budget_ms, sc_.orchestrator.thresholds);
    build();
  }

  MetricsReport run() {
    if (ran_) throw Error("a Simulation runs once");
    ran_ = true;
    schedule_initial();
    while (!queue_.empty() && queue_.top().time <= sc_.sim.duration_s) {
      Event e = queue_.pop();
      if (e.time < now_) throw Error("event scheduled in the past");
      now_ = e.time;
      dispatch(e);
    }
    return finish();
  }

 private:
  struct Frame {
    std::uint64_t id = 0;
    std::string task_id;
    std::string end_device;
    std::string node;
    double emitted_at = 0.0;
    double sent_at = 0.0;
    double out_ms = 0.0;
    double service_start = 0.0;
    ProcessingOutcome outcome;
    bool dispatched_to_available = true;
  };

  enum class SessionState { pending, hosted, migrating, stopped };

  struct Session {
    InferenceTask task;
    std::string lookup_service;
    SessionState state = SessionState::pending;
    std::optional<MigrationRecord> migration;
    std::vector<std::uint64_t> held;  // frames emitted during a migration
  };

  struct Node {
    NodeRuntime rt;
    ProfilerState profiler;
    HealthState health;
    bool quarantined = false;
    std::optional<double> ok_since;
    ServiceStatus published = ServiceStatus::healthy;
    std::deque<std::uint64_t> fifo;
    int busy = 0;
  };

  struct EndDeviceState {
    EndDevice spec;
    std::uint64_t emitted = 0;
  };

  // --- setup --------------------------------------------------------------

  void build() {
    for (const auto& d : sc_.devices) {
      Node n{NodeRuntime{d, {}, {}, true, false},
             ProfilerState(static_cast<std::size_t>(sc_.orchestrator.profiler_window)),
             {},
             false,
             std::nullopt,
             ServiceStatus::healthy,
             {},
             0};
      nodes_.emplace(d.name, std::move(n));
      for (const auto& svc : sc_.discovery.services) registry_.register_service(svc, d.name);
    }
    for (const auto& e : sc_.end_devices) {
      eds_.emplace(e.id, EndDeviceState{e, 0});
      Session s;
      s.task.task_id = "task-" + e.id;
      s.task.end_device_id = e.id;
      s.task.frame_size_px = e.frame_size_px;
      s.task.qos_ms = e.qos_ms;
      s.task.created_at = e.start_s;
      s.lookup_service = parse_lookup(e.service).service;
      s.state = SessionState::stopped;
      task_owner_[s.task.task_id] = e.id;
      sessions_.emplace(e.id, std::move(s));
    }

    std::map<std::pair<std::string, std::string>, StableParams> overrides;
    for (const auto& l : sc_.network.links) {
      overrides[{l.a, l.b}] = l.params;
      overrides[{l.b, l.a}] = l.params;
    }
    auto params_for = [&](const std::string& a, const std::string& b, const StableParams& dflt) {
      auto it = overrides.find({a, b});
      return it == overrides.end() ? dflt : it->second;
    };
    for (auto a = nodes_.begin(); a != nodes_.end(); ++a) {
      for (auto b = std::next(a); b != nodes_.end(); ++b) {
        nlm_.add_link(a->first, b->first, params_for(a->first, b->first, sc_.network.edge_edge));
      }
      for (const auto& [ed, _] : eds_) {
        nlm_.add_link(ed, a->first, params_for(ed, a->first, sc_.network.edge_end));
      }
    }
  }

  void schedule_initial() {
    if (sc_.sim.preload_models) {
      for (auto& [_, n] : nodes_) n.rt.loaded_models.insert(InferenceTask{}.model);
    }
    probe_links();
    for (const auto& [id, e] : eds_) {
      if (e.spec.start_s < sc_.sim.duration_s) {
        queue_.push(e.spec.start_s, EventKind::stream_start, id);
        if (e.spec.stop_s) queue_.push(*e.spec.stop_s, EventKind::stream_stop, id);
      }
    }
    for (const auto& f : sc_.faults) {
      if (f.duration_s <= 0.0) continue;
      queue_.push(f.at_s, EventKind::node_fault, f.node);
      queue_.push(f.at_s + f.duration_s, EventKind::node_recover, f.node);
    }
    queue_.push(sc_.sim.health_epoch_s, EventKind::health_epoch, {}, 1);
  }

  // --- helpers ------------------------------------------------------------

  RngStream& link_rng(const std::string& a, const std::string& b) {
    auto key = std::make_pair(a, b);
    auto it = link_rngs_.find(key);
    if (it == link_rngs_.end()) {
      it = link_rngs_.emplace(key, RngStream::derive(seed_, "link:" + a + ">" + b)).first;
    }
    return it->second;
  }

  double sample_link(const std::string& a, const std::string& b) {
    const double s = sample_stable(nlm_.at(a, b).params, link_rng(a, b), sc_.network.floor_ms);
    nlm_.observe(a, b, s, now_);
    return s;
  }

  void probe_links() {
    for (const auto& [key, _] : nlm_.links()) {
      const double s =
          sample_stable(nlm_.at(key.first, key.second).params, link_rng(key.first, key.second),
                        sc_.network.floor_ms);
      nlm_.observe(key.first, key.second, s, now_);
    }
  }

  bool offloading() const noexcept { return sc_.orchestrator.offloading; }

  // Whether the node takes new frames right now.
  bool accepts_frames(const Node& n) const {
    if (n.rt.faulted) return false;
    if (!offloading()) return true;
    return n.rt.reachable && n.health.system_state != Health::critical;
  }

  static bool available(const Node& n) {
    return n.rt.reachable && !n.rt.faulted && n.health.system_state != Health::critical;
  }

  std::vector<NodeCandidate> candidates_for(const Session& s,
                                            const std::set<std::string>& exclude) const {
    std::map<std::string, ResolveInput> inputs;
    for (const auto& [id, n] : nodes_) {
      if (exclude.contains(id)) continue;
      inputs[id] = ResolveInput{n.rt.reachable && !n.rt.faulted,
                                nlm_.score(s.task.end_device_id, id)};
    }
    std::vector<NodeCandidate> out;
    for (const auto& id : resolve(registry_, s.lookup_service, inputs)) {
      const Node& n = nodes_.at(id);
      const Components c =
          predict_components(n.rt.profile, s.task.frame_size_px, n.rt.instance_count() + 1);
      out.push_back(NodeCandidate{id, n.health.system_state != Health::critical,
                                  n.rt.reachable && !n.rt.faulted, inputs[id].score_ms, c.cpu_ms,
                                  c.accel_ms});
    }
    return out;
  }

  std::optional<std::string> pick(const Session& s, const std::set<std::string>& exclude,
                                  nlohmann::json* why) const {
    const auto cands = candidates_for(s, exclude);
    if (why) {
      nlohmann::json c = nlohmann::json::array();
      for (const auto& n : cands) {
        c.push_back({{"node", n.id},
                     {"score_ms", n.score_ms},
                     {"cpu_ms", n.cpu_ms},
                     {"accel_ms", n.accel_ms},
                     {"healthy", n.healthy},
                     {"reachable", n.reachable}});
      }
      (*why)["candidates"] = std::move(c);
    }
    return try_assign(sc_.orchestrator.policy, cands, sc_.orchestrator.weights);
  }

  void log(const std::string& kind, nlohmann::json inputs, nlohmann::json decision,
           const std::string& reason) {
    const std::string dumped = inputs.dump();
    char digest[17];
    std::snprintf(digest, sizeof digest, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(dumped)));
    report_.decisions.push_back({{"t", now_},
                                 {"epoch", epoch_},
                                 {"kind", kind},
                                 {"inputs", std::move(inputs)},
                                 {"inputs_digest", digest},
                                 {"decision", std::move(decision)},
                                 {"reason", reason}});
  }

  void admit(Session& s, const std::string& node_id) {
    Node& n = nodes_.at(node_id);
    s.task.host_node = node_id;
    s.state = SessionState::hosted;
    n.rt.active_tasks[s.task.task_id] = s.task;
    n.profiler.register_task(s.task.task_id, s.task.qos_ms);
  }

  void evict(Session& s) {
    if (s.task.host_node.empty()) return;
    Node& n = nodes_.at(s.task.host_node);
    n.rt.active_tasks.erase(s.task.task_id);
    n.profiler.unregister_task(s.task.task_id);
    s.task.host_node.clear();
  }

  bool place(Session& s, const char* kind, std::set<std::string> exclude = {}) {
    nlohmann::json why{{"task", s.task.task_id}, {"end_device", s.task.end_device_id},
                       {"policy", std::string(to_string(sc_.orchestrator.policy))}};
    const std::string from = s.task.host_node;
    if (auto id = pick(s, exclude, &why)) {
      evict(s);
      admit(s, *id);
      log(kind, std::move(why), {{"node", *id}, {"from", from}}, "best eligible candidate");
      return true;
    }
    evict(s);
    s.state = SessionState::pending;
    log(std::string(kind) + "-unavailable", std::move(why), {{"node", nullptr}, {"from", from}},
        "no healthy reachable node; retry next health epoch");
    return false;
  }

  void fail_frame(std::uint64_t id, const std::string& ed, const std::string& reason) {
    ++report_.counters.assignment_failures;
    report_.failed.push_back({id, now_, ed, reason});
  }

  void try_start(const std::string& node_id) {
    Node& n = nodes_.at(node_id);
    const int slots = std::max(1, n.rt.instance_count());
    while (n.busy < slots && !n.fifo.empty()) {
      const std::uint64_t fid = n.fifo.front();
      n.fifo.pop_front();
      Frame& f = frames_.at(fid);
      const Session& s = sessions_.at(f.end_device);
      f.service_start = now_;
      f.outcome = service_request(n.rt, s.task, now_, true);
      ++n.busy;
      queue_.push(now_ + f.outcome.total_processing_ms / 1000.0, EventKind::processing_complete,
                  node_id, fid);
    }
  }

  void send(std::uint64_t fid, const std::string& node_id) {
    Frame& f = frames_.at(fid);
    const Node& n = nodes_.at(node_id);
    f.node = node_id;
    f.sent_at = now_;
    f.dispatched_to_available = available(n);
    if (!f.dispatched_to_available) ++report_.counters.frames_to_unavailable;
    f.out_ms = sample_link(f.end_device, node_id);
    queue_.push(now_ + f.out_ms / 1000.0, EventKind::frame_arrival, node_id, fid);
  }

  // --- event handlers -----------------------------------------------------

  void dispatch(const Event& e) {
    switch (e.kind) {
      case EventKind::stream_start:
        on_stream_start(e.subject);
        break;
      case EventKind::stream_stop:
        on_stream_stop(e.subject);
        break;
      case EventKind::frame_emit:
        on_frame_emit(e.subject);
        break;
      case EventKind::frame_arrival:
        nodes_.at(e.subject).fifo.push_back(e.ref);
        try_start(e.subject);
        break;
      case EventKind::processing_complete:
        on_processing_complete(e.subject, e.ref);
        break;
      case EventKind::health_epoch:
        on_health_epoch(e.ref);
        break;
      case EventKind::migration_complete:
        on_migration_complete(e.subject, static_cast<int>(e.ref));
        break;
      case EventKind::node_fault:
      case EventKind::node_recover: {
        Node& n = nodes_.at(e.subject);
        n.rt.faulted = e.kind == EventKind::node_fault;
        n.rt.reachable = !n.rt.faulted && !n.quarantined;
        log(n.rt.faulted ? "fault" : "recover", {{"node", e.subject}},
            {{"reachable", n.rt.reachable}}, n.rt.faulted ? "injected fault" : "fault window over");
        break;
      }
    }
  }

  void on_stream_start(const std::string& ed) {
    Session& s = sessions_.at(ed);
    s.state = SessionState::pending;
    place(s, "assign");
    queue_.push(now_, EventKind::frame_emit, ed);
  }

  void on_stream_stop(const std::string& ed) {
    Session& s = sessions_.at(ed);
    if (s.state == SessionState::migrating) {
      for (auto fid : s.held) {
        fail_frame(fid, ed, "stream stopped during migration");
        frames_.erase(fid);
      }
      s.held.clear();
      s.migration.reset();
    }
    evict(s);
    s.state = SessionState::stopped;
    log("stop", {{"task", s.task.task_id}}, {}, "stream ended");
  }

  void on_frame_emit(const std::string& ed) {
    EndDeviceState& eds = eds_.at(ed);
    Session& s = sessions_.at(ed);
    if (s.state == SessionState::stopped) return;

    const std::uint64_t fid = next_frame_id_++;
    ++report_.counters.frames_generated;
    ++eds.emitted;
    const double next = eds.spec.start_s + static_cast<double>(eds.emitted) / eds.spec.fps;
    if (next < sc_.sim.duration_s && (!eds.spec.stop_s || next < *eds.spec.stop_s)) {
      queue_.push(next, EventKind::frame_emit, ed);
    }

    Frame f;
    f.id = fid;
    f.task_id = s.task.task_id;
    f.end_device = ed;
    f.emitted_at = now_;

    if (s.state == SessionState::pending) {
      fail_frame(fid, ed, "session unassigned");
      return;
    }
    if (s.state == SessionState::migrating) {
      frames_.emplace(fid, std::move(f));
      s.held.push_back(fid);
      return;
    }
    if (!accepts_frames(nodes_.at(s.task.host_node))) {
      ++report_.counters.failovers;
      if (!place(s, "failover")) {
        fail_frame(fid, ed, "no node accepts frames");
        return;
      }
    }
    frames_.emplace(fid, std::move(f));
    send(fid, s.task.host_node);
  }

  void on_processing_complete(const std::string& node_id, std::uint64_t fid) {
    Node& n = nodes_.at(node_id);
    --n.busy;
    Frame f = std::move(frames_.at(fid));
    frames_.erase(fid);

    const double back_ms = sample_link(node_id, f.end_device);
    FrameRecord r;
    r.frame_id = f.id;
    r.task_id = f.task_id;
    r.end_device = f.end_device;
    r.node = node_id;
    r.frame_size_px = sessions_.at(f.end_device).task.frame_size_px;
    r.n_instances = f.outcome.n_instances;
    r.emitted_at = f.emitted_at;
    r.network_out_ms = f.out_ms;
    r.queueing_ms = (f.service_start - f.emitted_at) * 1000.0 - f.out_ms;
    r.model_load_ms = f.outcome.model_load_ms;
    r.cpu_ms = f.outcome.cpu_ms();
    r.accel_ms = f.outcome.accel_ms;
    r.processing_ms = f.outcome.total_processing_ms;
    r.network_back_ms = back_ms;
    r.e2e_ms = r.network_out_ms + r.queueing_ms + r.processing_ms + r.network_back_ms;
    r.completed_at = f.emitted_at + r.e2e_ms / 1000.0;
    r.qos_ms = sessions_.at(f.end_device).task.qos_ms;
    r.state = classify(r.e2e_ms, r.qos_ms, sc_.orchestrator.thresholds);
    r.dispatched_to_available = f.dispatched_to_available;

    if (n.profiler.has_task(f.task_id)) n.profiler.record_inference(f.task_id, r.e2e_ms, now_);

    if (r.completed_at <= sc_.sim.duration_s) {
      ++report_.counters.frames_completed;
      if (r.qos_violated()) ++report_.counters.qos_violations;
      auto& cell = report_.breakdown[{node_id, r.frame_size_px, r.n_instances}];
      ++cell.count;
      cell.cpu_ms_sum += r.cpu_ms;
      cell.accel_ms_sum += r.accel_ms;
      cell.e2e_ms_sum += r.e2e_ms;
      report_.frames.push_back(std::move(r));
    } else {
      ++late_frames_;
    }
    try_start(node_id);
  }

  void start_migration(MigrationRecord rec) {
    Session& s = sessions_.at(task_owner_.at(rec.task_id));
    evict(s);
    s.state = SessionState::migrating;
    execute_migration(rec, nlm_, link_rng(rec.from_node, rec.to_node),
                      sc_.orchestrator.handover_overhead_ms, now_, sc_.network.floor_ms);
    ++report_.counters.migrations_started;
    queue_.push(rec.completed_at, EventKind::migration_complete, s.task.end_device_id,
                static_cast<std::uint64_t>(rec.attempt));
    s.migration = std::move(rec);
  }

  void on_migration_complete(const std::string& ed, int attempt) {
    Session& s = sessions_.at(ed);
    if (s.state != SessionState::migrating || !s.migration || s.migration->attempt != attempt) {
      return;
    }
    MigrationRecord rec = *s.migration;
    const Node& target = nodes_.at(rec.to_node);
    if (available(target)) {
      admit(s, rec.to_node);
      s.migration.reset();
      ++report_.counters.migrations;
      report_.migrations.push_back(rec);
      log("migration-complete", {{"task", rec.task_id}},
          {{"from", rec.from_node}, {"to", rec.to_node},
           {"metadata_transfer_ms", rec.metadata_transfer_ms}},
          "target healthy at completion");
      const auto held = std::move(s.held);
      s.held.clear();
      for (auto fid : held) send(fid, rec.to_node);
      return;
    }

    nlohmann::json why{{"task", rec.task_id}, {"failed_target", rec.to_node}};
    std::optional<std::string> next;
    if (rec.attempt == 1) next = pick(s, {rec.to_node, rec.from_node}, &why);
    if (next) {
      ++report_.counters.migrations_retried;
      MigrationRecord retry = rec;
      retry.to_node = *next;
      retry.attempt = 2;
      log("migration-retry", std::move(why), {{"to", *next}}, "target became unavailable");
      start_migration(std::move(retry));
      return;
    }
    ++report_.counters.migrations_abandoned;
    log("migration-abandoned", std::move(why), {}, "no alternative target");
    for (auto fid : s.held) {
      fail_frame(fid, ed, "migration abandoned");
      frames_.erase(fid);
    }
    s.held.clear();
    s.migration.reset();
    s.state = SessionState::pending;
  }

  nlohmann::json snapshot(const Node& n) const {
    nlohmann::json tasks = nlohmann::json::object();
    for (const auto& [id, t] : n.profiler.tracks()) {
      tasks[id] = t.latest() ? nlohmann::json(*t.latest()) : nlohmann::json(nullptr);
    }
    nlohmann::json qos = nlohmann::json::object();
    for (const auto& [id, t] : n.profiler.tracks()) qos[id] = t.qos_ms;
    const auto avg = n.profiler.avg_inf_lat();
    const auto ref = n.profiler.qos_reference();
    return {{"node", n.rt.id()},
            {"faulted", n.rt.faulted},
            {"avg_inf_lat", avg ? nlohmann::json(*avg) : nlohmann::json(nullptr)},
            {"qos_ref", ref ? nlohmann::json(*ref) : nlohmann::json(nullptr)},
            {"latest_inf_lat", std::move(tasks)},
            {"qos_ms", std::move(qos)},
            {"warning_from", sc_.orchestrator.thresholds.warning_from},
            {"critical_above", sc_.orchestrator.thresholds.critical_above}};
  }

  void on_health_epoch(std::uint64_t k) {
    epoch_ = k;
    ++report_.counters.health_epochs;
    probe_links();

    for (auto& [id, n] : nodes_) {
      HealthState h = evaluate_health(n.profiler, sc_.orchestrator.thresholds);
      if (n.rt.faulted) h.system_state = Health::critical;
      h = carry_since(n.health, std::move(h), now_);
      if (h.system_state != n.health.system_state) {
        log("health", snapshot(n),
            {{"node", id},
             {"from", std::string(to_string(n.health.system_state))},
             {"to", std::string(to_string(h.system_state))}},
            n.rt.faulted ? "node faulted" : "system state changed");
      }
      n.health = std::move(h);
      const ServiceStatus st = n.health.system_state == Health::critical ? ServiceStatus::unhealthy
                                                                         : ServiceStatus::healthy;
      if (st != n.published) {
        registry_.schedule_node_status(id, st, now_ + sc_.discovery.propagation_delay_s);
        n.published = st;
      }
    }
    registry_.advance(now_);

    if (offloading()) run_offload();

    for (auto& [ed, s] : sessions_) {
      if (s.state == SessionState::pending) place(s, "assign-retry");
    }

    for (const auto& [id, n] : nodes_) {
      const int slots = std::max(1, n.rt.instance_count());
      report_.node_series.push_back(NodeSample{now_, id, n.rt.instance_count(), n.fifo.size(),
                                               n.busy,
                                               static_cast<double>(n.busy) / slots,
                                               n.health.system_state, n.rt.reachable,
                                               n.rt.faulted, n.profiler.avg_inf_lat()});
    }

    const double next = static_cast<double>(k + 1) * sc_.sim.health_epoch_s;
    if (next <= sc_.sim.duration_s + 1e-12) {
      queue_.push(next, EventKind::health_epoch, {}, k + 1);
    }
  }

  void run_offload() {
    ClusterView view;
    for (const auto& [id, n] : nodes_) {
      NodeView nv{id, n.health, n.quarantined, n.rt.faulted, n.ok_since, {}};
      for (const auto& [tid, t] : n.rt.active_tasks) {
        const auto& tracks = n.profiler.tracks();
        auto tr = tracks.find(tid);
        nv.tasks.push_back(TaskView{tid, t.end_device_id, t.frame_size_px, t.qos_ms,
                                    tr == tracks.end() ? std::nullopt : tr->second.latest()});
      }
      view.nodes.push_back(std::move(nv));
    }

    std::map<std::string, nlohmann::json> pick_inputs;
    TargetPicker picker = [&](const TaskView& t, const std::string& source,
                              const std::set<std::string>& excluded) {
      std::set<std::string> ex = excluded;
      ex.insert(source);
      // Inter-edge links graded critical are not used for a handover.
      for (const auto& [id, _] : nodes_) {
        if (id != source && nlm_.at(source, id).state == Health::critical) ex.insert(id);
      }
      nlohmann::json why;
      auto target = pick(sessions_.at(t.end_device_id), ex, &why);
      pick_inputs[t.task_id] = std::move(why);
      return target;
    };

    const OffloadPlan plan =
        monitor_and_offload(view, now_, OffloadConfig{sc_.orchestrator.cool_down_s}, picker);

    for (const auto& id : plan.quarantine) {
      Node& n = nodes_.at(id);
      n.quarantined = true;
      n.rt.reachable = false;
      log("quarantine", snapshot(n), {{"node", id}}, "system state critical");
    }
    for (const auto& u : plan.quarantine_clock) nodes_.at(u.node).ok_since = u.ok_since;
    for (const auto& id : plan.release) {
      Node& n = nodes_.at(id);
      n.quarantined = false;
      n.rt.reachable = !n.rt.faulted;
      log("release", snapshot(n), {{"node", id}}, "stayed at or below warning for cool-down");
    }
    for (const auto& m : plan.migrations) {
      nlohmann::json in = snapshot(nodes_.at(m.from_node));
      in["task"] = m.task_id;
      in["trigger"] = std::string(to_string(m.trigger));
      in["target_selection"] = pick_inputs[m.task_id];
      log("migrate", std::move(in), {{"task", m.task_id}, {"from", m.from_node}, {"to", m.to_node}},
          m.trigger == MigrationTrigger::system_critical ? "highest InfLat on critical node"
                                                         : "application critical");
      start_migration(m);
    }
    for (const auto& u : plan.unplaced) {
      ++report_.counters.offload_unplaced;
      nlohmann::json in = snapshot(nodes_.at(u.node));
      in["task"] = u.task_id;
      in["trigger"] = std::string(to_string(u.trigger));
      log("offload-unplaced", std::move(in), {{"task", u.task_id}, {"node", u.node}},
          "no healthy target; violation counted");
    }
  }

  MetricsReport finish() {
    std::uint64_t live = late_frames_ + frames_.size();
    report_.counters.frames_in_flight = live;
    report_.scenario = sc_.name;
    report_.seed = seed_;
    report_.policy = sc_.orchestrator.policy;
    report_.offloading = sc_.orchestrator.offloading;
    report_.duration_s = sc_.sim.duration_s;
    report_.gossip_kbps =
        gossip_bandwidth(sc_.network.gossip.message_bytes, sc_.network.gossip.interval_s);
    report_.registry = registry_.records();
    std::sort(report_.frames.begin(), report_.frames.end(),
              [](const FrameRecord& a, const FrameRecord& b) {
                return std::tie(a.completed_at, a.frame_id) < std::tie(b.completed_at, b.frame_id);
              });
    return std::move(report_);
  }

  Scenario sc_;
  std::uint64_t seed_;
  bool ran_ = false;
  double now_ = 0.0;
  std::uint64_t epoch_ = 0;
  std::uint64_t next_frame_id_ = 0;
  std::uint64_t late_frames_ = 0;

  Nlm nlm_;
  Registry registry_;
  EventQueue queue_;
  std::map<std::string, Node> nodes_;
  std::map<std::string, EndDeviceState> eds_;
  std::map<std::string, Session> sessions_;
  std::map<std::string, std::string> task_owner_;  // task id -> end-device id
  std::unordered_map<std::uint64_t, Frame> frames_;
  std::map<std::pair<std::string, std::string>, RngStream> link_rngs_;
  MetricsReport report_;
};

/// Runs `scenario` with `seed` (the scenario's own seed field is ignored).
inline MetricsReport run(const Scenario& scenario, std::uint64_t seed) {
  return Simulation(scenario, seed).run();
}

inline MetricsReport run(const Scenario& scenario) { return run(scenario, scenario.sim.seed); }

}  // namespace edgesim
