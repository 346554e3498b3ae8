#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "edgesim/device_model.hpp"
#include "edgesim/discovery.hpp"
#include "edgesim/error.hpp"
#include "edgesim/health.hpp"
#include "edgesim/net_model.hpp"
#include "edgesim/orchestrator.hpp"

namespace edgesim {

struct EndDevice {
  std::string id;
  double fps = 5.0;
  int frame_size_px = 600;
  double qos_ms = 150.0;
  std::string service = "objd.inference.service.consul";
  double start_s = 0.0;
  std::optional<double> stop_s;

  friend bool operator==(const EndDevice&, const EndDevice&) = default;
};

struct LinkOverride {
  std::string a;
  std::string b;
  StableParams params;

  friend bool operator==(const LinkOverride&, const LinkOverride&) = default;
};

struct GossipConfig {
  double message_bytes = 13.672;
  double interval_s = 1.5e-5;

  friend bool operator==(const GossipConfig&, const GossipConfig&) = default;
};

struct NetworkConfig {
  StableParams edge_edge{};
  StableParams edge_end{};
  std::vector<LinkOverride> links;
  EmaWeights ema_weights{};
  double link_budget_ms = 50.0;
  double floor_ms = kDefaultLatencyFloorMs;
  GossipConfig gossip{};

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct OrchestratorConfig {
  Policy policy = Policy::min_latency;
  AllocationWeights weights{};
  Thresholds thresholds{};
  double cool_down_s = 5.0;
  double handover_overhead_ms = 50.0;
  bool offloading = true;
  int profiler_window = 20;

  friend bool operator==(const OrchestratorConfig& a, const OrchestratorConfig& b) {
    return a.policy == b.policy && a.weights == b.weights &&
           a.thresholds.warning_from == b.thresholds.warning_from &&
           a.thresholds.critical_above == b.thresholds.critical_above &&
           a.cool_down_s == b.cool_down_s && a.handover_overhead_ms == b.handover_overhead_ms &&
           a.offloading == b.offloading && a.profiler_window == b.profiler_window;
  }
};

struct DiscoveryConfig {
  std::vector<std::string> services{"objd"};
  double propagation_delay_s = 0.0;

  friend bool operator==(const DiscoveryConfig&, const DiscoveryConfig&) = default;
};

struct SimConfig {
  double duration_s = 60.0;
  std::uint64_t seed = 42;
  double health_epoch_s = 1.0;
  bool preload_models = true;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct FaultSpec {
  std::string node;
  double at_s = 0.0;
  double duration_s = 0.0;

  friend bool operator==(const FaultSpec&, const FaultSpec&) = default;
};

struct Scenario {
  std::string name = "unnamed";
  std::vector<DeviceProfile> devices;
  std::vector<EndDevice> end_devices;
  NetworkConfig network{};
  OrchestratorConfig orchestrator{};
  DiscoveryConfig discovery{};
  SimConfig sim{};
  std::vector<FaultSpec> faults;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// One problem with a scenario: where it is and what is wrong.
struct Issue {
  std::string path;
  std::string reason;

  std::string str() const { return path.empty() ? reason : path + ": " + reason; }
  friend bool operator==(const Issue&, const Issue&) = default;
};

// ---------------------------------------------------------------------------
// Validation

inline std::vector<Issue> validate(const Scenario& s) {
  std::vector<Issue> out;
  auto bad = [&](std::string path, std::string reason) {
    out.push_back({std::move(path), std::move(reason)});
  };

  std::set<std::string> node_ids;
  if (s.devices.empty()) bad("devices", "at least one edge device is required");
  for (std::size_t i = 0; i < s.devices.size(); ++i) {
    const auto& d = s.devices[i];
    const std::string p = "devices[" + std::to_string(i) + "]";
    if (!is_label(d.name)) bad(p + ".name", "must be a nonempty lowercase label");
    if (!node_ids.insert(d.name).second) bad(p + ".name", "duplicate device '" + d.name + "'");
    for (const auto& why : check_table(d.calibration)) bad(p + ".calibration", why);
    if (!(d.model_load_ms >= 0.0)) bad(p + ".model_load_ms", "must be >= 0");
    if (d.max_instances < 1) bad(p + ".max_instances", "must be >= 1");
    if (!(d.cpu_pre_fraction >= 0.0 && d.cpu_pre_fraction <= 1.0)) {
      bad(p + ".cpu_pre_fraction", "must be in [0, 1]");
    }
  }

  std::set<std::string> services(s.discovery.services.begin(), s.discovery.services.end());
  for (std::size_t i = 0; i < s.discovery.services.size(); ++i) {
    if (!is_label(s.discovery.services[i])) {
      bad("discovery.services[" + std::to_string(i) + "]", "not a valid service label");
    }
  }
  if (!(s.discovery.propagation_delay_s >= 0.0)) {
    bad("discovery.propagation_delay_s", "must be >= 0");
  }

  std::set<std::string> ed_ids;
  for (std::size_t i = 0; i < s.end_devices.size(); ++i) {
    const auto& e = s.end_devices[i];
    const std::string p = "end_devices[" + std::to_string(i) + "] (" + e.id + ")";
    if (!is_label(e.id)) bad(p + ".id", "must be a nonempty lowercase label");
    if (node_ids.contains(e.id)) bad(p + ".id", "clashes with an edge device name");
    if (!ed_ids.insert(e.id).second) bad(p + ".id", "duplicate end-device");
    if (!(e.fps > 0.0)) bad(p + ".fps", "must be > 0");
    if (e.frame_size_px < kTrainedFrameSize) {
      bad(p + ".frame_size_px", "must be >= " + std::to_string(kTrainedFrameSize));
    }
    if (!(e.qos_ms > 0.0)) bad(p + ".qos_ms", "must be > 0");
    if (!(e.start_s >= 0.0)) bad(p + ".start_s", "must be >= 0");
    if (e.stop_s && !(*e.stop_s > e.start_s)) bad(p + ".stop_s", "must be after start_s");
    try {
      const auto l = parse_lookup(e.service);
      if (!services.contains(l.service)) {
        bad(p + ".service", "no edge device offers service '" + l.service + "'");
      }
    } catch (const ParseError& err) {
      bad(p + ".service", err.what());
    }
  }

  const auto& n = s.network;
  if (!n.edge_edge.valid()) bad("network.edge_edge", "invalid stable parameters");
  if (!n.edge_end.valid()) bad("network.edge_end", "invalid stable parameters");
  for (std::size_t i = 0; i < n.links.size(); ++i) {
    const auto& l = n.links[i];
    const std::string p = "network.links[" + std::to_string(i) + "]";
    const bool a_node = node_ids.contains(l.a);
    const bool b_node = node_ids.contains(l.b);
    if (!a_node && !ed_ids.contains(l.a)) bad(p + ".a", "unknown endpoint '" + l.a + "'");
    if (!b_node && !ed_ids.contains(l.b)) bad(p + ".b", "unknown endpoint '" + l.b + "'");
    if (!a_node && !b_node) bad(p, "links must touch at least one edge device");
    if (l.a == l.b) bad(p, "self link");
    if (!l.params.valid()) bad(p + ".params", "invalid stable parameters");
  }
  if (auto why = check_weights(n.ema_weights); !why.empty()) bad("network.ema_weights", why);
  if (!(n.link_budget_ms > 0.0)) bad("network.link_budget_ms", "must be > 0");
  if (!(n.floor_ms >= 0.0)) bad("network.floor_ms", "must be >= 0");
  if (!(n.gossip.message_bytes >= 0.0)) bad("network.gossip.message_bytes", "must be >= 0");
  if (!(n.gossip.interval_s > 0.0)) bad("network.gossip.interval_s", "must be > 0");

  const auto& o = s.orchestrator;
  if (auto why = check_weights(o.weights); !why.empty()) bad("orchestrator.weights", why);
  if (!(o.thresholds.warning_from > 0.0 && o.thresholds.warning_from <= o.thresholds.critical_above)) {
    bad("orchestrator.thresholds", "need 0 < warning_from <= critical_above");
  }
  if (!(o.cool_down_s >= 0.0)) bad("orchestrator.cool_down_s", "must be >= 0");
  if (!(o.handover_overhead_ms >= 0.0)) bad("orchestrator.handover_overhead_ms", "must be >= 0");
  if (o.profiler_window < 1) bad("orchestrator.profiler_window", "must be >= 1");

  if (!(s.sim.duration_s > 0.0)) bad("sim.duration_s", "must be > 0");
  if (!(s.sim.health_epoch_s > 0.0)) bad("sim.health_epoch_s", "must be > 0");

  for (std::size_t i = 0; i < s.faults.size(); ++i) {
    const auto& f = s.faults[i];
    const std::string p = "faults[" + std::to_string(i) + "]";
    if (!node_ids.contains(f.node)) bad(p + ".node", "unknown edge device '" + f.node + "'");
    if (!(f.at_s >= 0.0)) bad(p + ".at_s", "must be >= 0");
    if (!(f.duration_s >= 0.0)) bad(p + ".duration_s", "must be >= 0");
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

using nlohmann::json;

inline json to_json(const StableParams& p) {
  return {{"alpha", p.alpha}, {"beta", p.beta}, {"scale", p.scale}, {"location", p.location}};
}

inline json to_json(const DeviceProfile& d) {
  return {{"name", d.name},
          {"accelerator", std::string(to_string(d.accelerator))},
          {"frame_sizes", d.calibration.frame_sizes},
          {"instance_counts", d.calibration.instance_counts},
          {"cpu_ms", d.calibration.cpu_ms},
          {"accel_ms", d.calibration.accel_ms},
          {"model_load_ms", d.model_load_ms},
          {"max_instances", d.max_instances},
          {"cpu_pre_fraction", d.cpu_pre_fraction}};
}

inline json to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["devices"] = json::array();
  for (const auto& d : s.devices) j["devices"].push_back(to_json(d));
  j["end_devices"] = json::array();
  for (const auto& e : s.end_devices) {
    json je{{"id", e.id},
            {"fps", e.fps},
            {"frame_size_px", e.frame_size_px},
            {"qos_ms", e.qos_ms},
            {"service", e.service},
            {"start_s", e.start_s}};
    if (e.stop_s) je["stop_s"] = *e.stop_s;
    j["end_devices"].push_back(std::move(je));
  }
  const auto& n = s.network;
  json links = json::array();
  for (const auto& l : n.links) links.push_back({{"a", l.a}, {"b", l.b}, {"params", to_json(l.params)}});
  j["network"] = {{"edge_edge", to_json(n.edge_edge)},
                  {"edge_end", to_json(n.edge_end)},
                  {"links", links},
                  {"ema_weights",
                   {{"w_1m", n.ema_weights.w_1m},
                    {"w_5m", n.ema_weights.w_5m},
                    {"w_15m", n.ema_weights.w_15m}}},
                  {"link_budget_ms", n.link_budget_ms},
                  {"floor_ms", n.floor_ms},
                  {"gossip",
                   {{"message_bytes", n.gossip.message_bytes}, {"interval_s", n.gossip.interval_s}}}};
  const auto& o = s.orchestrator;
  j["orchestrator"] = {
      {"policy", std::string(to_string(o.policy))},
      {"weights", {{"alpha", o.weights.alpha}, {"beta", o.weights.beta}, {"gamma", o.weights.gamma}}},
      {"thresholds",
       {{"warning_from", o.thresholds.warning_from},
        {"critical_above", o.thresholds.critical_above}}},
      {"cool_down_s", o.cool_down_s},
      {"handover_overhead_ms", o.handover_overhead_ms},
      {"offloading", o.offloading},
      {"profiler_window", o.profiler_window}};
  j["discovery"] = {{"services", s.discovery.services},
                    {"propagation_delay_s", s.discovery.propagation_delay_s}};
  j["sim"] = {{"duration_s", s.sim.duration_s},
              {"seed", s.sim.seed},
              {"health_epoch_s", s.sim.health_epoch_s},
              {"preload_models", s.sim.preload_models}};
  j["faults"] = json::array();
  for (const auto& f : s.faults) {
    j["faults"].push_back({{"node", f.node}, {"at_s", f.at_s}, {"duration_s", f.duration_s}});
  }
  return j;
}

namespace detail {

// Reads typed fields out of JSON objects, collecting every problem with its
// path instead of stopping at the first one. Unknown keys are problems too.
class Reader {
 public:
  explicit Reader(std::vector<Issue>& issues) : issues_(issues) {}

  bool object(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    std::set<std::string_view> allowed(keys.begin(), keys.end());
    for (const auto& [k, _] : j.items()) {
      if (!allowed.contains(k)) fail(join(path, k), "unknown key");
    }
    return true;
  }

  template <typename T>
  void field(const json& j, const std::string& path, const char* key, T& out,
             bool required = false) {
    auto it = j.find(key);
    if (it == j.end()) {
      if (required) fail(join(path, key), "missing required key");
      return;
    }
    read(*it, join(path, key), out);
  }

  void read(const json& j, const std::string& path, double& out) {
    if (!j.is_number()) return fail(path, "expected a number");
    out = j.get<double>();
  }
  void read(const json& j, const std::string& path, int& out) {
    if (!j.is_number_integer()) return fail(path, "expected an integer");
    out = j.get<int>();
  }
  void read(const json& j, const std::string& path, std::uint64_t& out) {
    if (!j.is_number_unsigned()) return fail(path, "expected a non-negative integer");
    out = j.get<std::uint64_t>();
  }
  void read(const json& j, const std::string& path, bool& out) {
    if (!j.is_boolean()) return fail(path, "expected true or false");
    out = j.get<bool>();
  }
  void read(const json& j, const std::string& path, std::string& out) {
    if (!j.is_string()) return fail(path, "expected a string");
    out = j.get<std::string>();
  }
  void read(const json& j, const std::string& path, std::optional<double>& out) {
    double v = 0.0;
    const auto before = issues_.size();
    read(j, path, v);
    if (issues_.size() == before) out = v;
  }
  template <typename T>
  void read(const json& j, const std::string& path, std::vector<T>& out) {
    if (!j.is_array()) return fail(path, "expected an array");
    out.clear();
    for (std::size_t i = 0; i < j.size(); ++i) {
      T v{};
      read(j[i], path + "[" + std::to_string(i) + "]", v);
      out.push_back(std::move(v));
    }
  }

  void read(const json& j, const std::string& path, StableParams& p) {
    if (!object(j, path, {"alpha", "beta", "scale", "location"})) return;
    field(j, path, "alpha", p.alpha);
    field(j, path, "beta", p.beta);
    field(j, path, "scale", p.scale);
    field(j, path, "location", p.location);
  }

  void fail(const std::string& path, std::string reason) {
    issues_.push_back({path, std::move(reason)});
  }

  static std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
  }

 private:
  std::vector<Issue>& issues_;
};

}  // namespace detail

struct LoadResult {
  std::optional<Scenario> scenario;
  std::vector<Issue> issues;

  bool ok() const noexcept { return scenario.has_value() && issues.empty(); }
};

/// Builds a scenario from JSON. Structural problems (unknown keys, wrong
/// types) and invariant violations are reported together.
inline LoadResult scenario_from_json(const json& j) {
  LoadResult res;
  detail::Reader r(res.issues);
  Scenario s;
  if (!r.object(j, "", {"name", "devices", "end_devices", "network", "orchestrator", "discovery",
                        "sim", "faults"})) {
    return res;
  }
  r.field(j, "", "name", s.name);

  if (auto it = j.find("devices"); it != j.end()) {
    if (!it->is_array()) {
      r.fail("devices", "expected an array");
    } else {
      for (std::size_t i = 0; i < it->size(); ++i) {
        const json& jd = (*it)[i];
        const std::string p = "devices[" + std::to_string(i) + "]";
        DeviceProfile d;
        if (!r.object(jd, p, {"name", "accelerator", "frame_sizes", "instance_counts", "cpu_ms",
                              "accel_ms", "model_load_ms", "max_instances", "cpu_pre_fraction"})) {
          continue;
        }
        r.field(jd, p, "name", d.name, true);
        std::string kind = "VPU";
        r.field(jd, p, "accelerator", kind, true);
        try {
          d.accelerator = accelerator_from_string(kind);
        } catch (const ConfigError& e) {
          r.fail(p + ".accelerator", e.what());
        }
        r.field(jd, p, "frame_sizes", d.calibration.frame_sizes, true);
        r.field(jd, p, "instance_counts", d.calibration.instance_counts, true);
        r.field(jd, p, "cpu_ms", d.calibration.cpu_ms, true);
        r.field(jd, p, "accel_ms", d.calibration.accel_ms, true);
        r.field(jd, p, "model_load_ms", d.model_load_ms);
        r.field(jd, p, "max_instances", d.max_instances);
        r.field(jd, p, "cpu_pre_fraction", d.cpu_pre_fraction);
        s.devices.push_back(std::move(d));
      }
    }
  }

  if (auto it = j.find("end_devices"); it != j.end()) {
    if (!it->is_array()) {
      r.fail("end_devices", "expected an array");
    } else {
      for (std::size_t i = 0; i < it->size(); ++i) {
        const json& je = (*it)[i];
        const std::string p = "end_devices[" + std::to_string(i) + "]";
        EndDevice e;
        if (!r.object(je, p,
                      {"id", "fps", "frame_size_px", "qos_ms", "service", "start_s", "stop_s"})) {
          continue;
        }
        r.field(je, p, "id", e.id, true);
        r.field(je, p, "fps", e.fps);
        r.field(je, p, "frame_size_px", e.frame_size_px);
        r.field(je, p, "qos_ms", e.qos_ms);
        r.field(je, p, "service", e.service);
        r.field(je, p, "start_s", e.start_s);
        r.field(je, p, "stop_s", e.stop_s);
        s.end_devices.push_back(std::move(e));
      }
    }
  }

  if (auto it = j.find("network"); it != j.end()) {
    const json& jn = *it;
    auto& n = s.network;
    if (r.object(jn, "network", {"edge_edge", "edge_end", "links", "ema_weights", "link_budget_ms",
                                 "floor_ms", "gossip"})) {
      r.field(jn, "network", "edge_edge", n.edge_edge);
      r.field(jn, "network", "edge_end", n.edge_end);
      if (auto li = jn.find("links"); li != jn.end()) {
        if (!li->is_array()) {
          r.fail("network.links", "expected an array");
        } else {
          for (std::size_t i = 0; i < li->size(); ++i) {
            const std::string p = "network.links[" + std::to_string(i) + "]";
            LinkOverride l;
            if (!r.object((*li)[i], p, {"a", "b", "params"})) continue;
            r.field((*li)[i], p, "a", l.a, true);
            r.field((*li)[i], p, "b", l.b, true);
            r.field((*li)[i], p, "params", l.params, true);
            n.links.push_back(std::move(l));
          }
        }
      }
      if (auto w = jn.find("ema_weights"); w != jn.end()) {
        if (r.object(*w, "network.ema_weights", {"w_1m", "w_5m", "w_15m"})) {
          r.field(*w, "network.ema_weights", "w_1m", n.ema_weights.w_1m);
          r.field(*w, "network.ema_weights", "w_5m", n.ema_weights.w_5m);
          r.field(*w, "network.ema_weights", "w_15m", n.ema_weights.w_15m);
        }
      }
      r.field(jn, "network", "link_budget_ms", n.link_budget_ms);
      r.field(jn, "network", "floor_ms", n.floor_ms);
      if (auto g = jn.find("gossip"); g != jn.end()) {
        if (r.object(*g, "network.gossip", {"message_bytes", "interval_s"})) {
          r.field(*g, "network.gossip", "message_bytes", n.gossip.message_bytes);
          r.field(*g, "network.gossip", "interval_s", n.gossip.interval_s);
        }
      }
    }
  }

  if (auto it = j.find("orchestrator"); it != j.end()) {
    const json& jo = *it;
    auto& o = s.orchestrator;
    if (r.object(jo, "orchestrator", {"policy", "weights", "thresholds", "cool_down_s",
                                      "handover_overhead_ms", "offloading", "profiler_window"})) {
      std::string policy(to_string(o.policy));
      r.field(jo, "orchestrator", "policy", policy);
      try {
        o.policy = policy_from_string(policy);
      } catch (const ConfigError& e) {
        r.fail("orchestrator.policy", e.what());
      }
      if (auto w = jo.find("weights"); w != jo.end()) {
        if (r.object(*w, "orchestrator.weights", {"alpha", "beta", "gamma"})) {
          r.field(*w, "orchestrator.weights", "alpha", o.weights.alpha);
          r.field(*w, "orchestrator.weights", "beta", o.weights.beta);
          r.field(*w, "orchestrator.weights", "gamma", o.weights.gamma);
        }
      }
      if (auto t = jo.find("thresholds"); t != jo.end()) {
        if (r.object(*t, "orchestrator.thresholds", {"warning_from", "critical_above"})) {
          r.field(*t, "orchestrator.thresholds", "warning_from", o.thresholds.warning_from);
          r.field(*t, "orchestrator.thresholds", "critical_above", o.thresholds.critical_above);
        }
      }
      r.field(jo, "orchestrator", "cool_down_s", o.cool_down_s);
      r.field(jo, "orchestrator", "handover_overhead_ms", o.handover_overhead_ms);
      r.field(jo, "orchestrator", "offloading", o.offloading);
      r.field(jo, "orchestrator", "profiler_window", o.profiler_window);
    }
  }

  if (auto it = j.find("discovery"); it != j.end()) {
    if (r.object(*it, "discovery", {"services", "propagation_delay_s"})) {
      r.field(*it, "discovery", "services", s.discovery.services);
      r.field(*it, "discovery", "propagation_delay_s", s.discovery.propagation_delay_s);
    }
  }

  if (auto it = j.find("sim"); it != j.end()) {
    if (r.object(*it, "sim", {"duration_s", "seed", "health_epoch_s", "preload_models"})) {
      r.field(*it, "sim", "duration_s", s.sim.duration_s);
      r.field(*it, "sim", "seed", s.sim.seed);
      r.field(*it, "sim", "health_epoch_s", s.sim.health_epoch_s);
      r.field(*it, "sim", "preload_models", s.sim.preload_models);
    }
  }

  if (auto it = j.find("faults"); it != j.end()) {
    if (!it->is_array()) {
      r.fail("faults", "expected an array");
    } else {
      for (std::size_t i = 0; i < it->size(); ++i) {
        const std::string p = "faults[" + std::to_string(i) + "]";
        FaultSpec f;
        if (!r.object((*it)[i], p, {"node", "at_s", "duration_s"})) continue;
        r.field((*it)[i], p, "node", f.node, true);
        r.field((*it)[i], p, "at_s", f.at_s, true);
        r.field((*it)[i], p, "duration_s", f.duration_s, true);
        s.faults.push_back(std::move(f));
      }
    }
  }

  if (res.issues.empty()) res.issues = validate(s);
  res.scenario = std::move(s);
  return res;
}

inline LoadResult scenario_from_text(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    LoadResult res;
    res.issues.push_back({"", "malformed JSON"});
    return res;
  }
  return scenario_from_json(j);
}

inline LoadResult load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    LoadResult res;
    res.issues.push_back({path, "cannot read scenario file"});
    return res;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return scenario_from_text(buf.str());
}

}  // namespace edgesim
