#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "edgesim/error.hpp"

namespace edgesim {

// ---------------------------------------------------------------------------
// Lookup names: <service>.inference.service.consul

inline constexpr std::string_view kLookupSuffix = "inference.service.consul";

struct LookupName {
  std::string service;
  std::vector<std::string> domain{"inference", "service", "consul"};

  friend bool operator==(const LookupName&, const LookupName&) = default;
};

inline bool is_label(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
  });
}

inline std::string format_lookup(const LookupName& l) {
  std::string out = l.service;
  for (const auto& d : l.domain) {
    out += '.';
    out += d;
  }
  return out;
}

inline LookupName parse_lookup(std::string_view name) {
  std::vector<std::string> labels;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = name.find('.', start);
    labels.emplace_back(name.substr(start, dot == std::string_view::npos ? dot : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  const std::vector<std::string> suffix{"inference", "service", "consul"};
  if (labels.size() < suffix.size() + 1) {
    std::size_t i = 0;
    while (i < suffix.size() && i + 1 < labels.size() && labels[i + 1] == suffix[i]) ++i;
    throw ParseError("'" + std::string(name) + "' is missing label '" + suffix[i] + "'",
                     suffix[i]);
  }
  if (labels.size() > suffix.size() + 1) {
    const std::string extra = labels[1];
    throw ParseError("'" + std::string(name) + "' has unexpected label '" + extra +
                         "' (form is <service>." + std::string(kLookupSuffix) + ")",
                     extra);
  }
  for (std::size_t i = 0; i < suffix.size(); ++i) {
    if (labels[i + 1] != suffix[i]) {
      throw ParseError("expected label '" + suffix[i] + "' but found '" + labels[i + 1] + "'",
                       labels[i + 1]);
    }
  }
  if (labels[0].empty()) throw ParseError("empty service label", labels[0]);
  if (!is_label(labels[0])) {
    throw ParseError("service label '" + labels[0] +
                         "' may only contain lowercase letters, digits and '-'",
                     labels[0]);
  }
  return LookupName{labels[0], suffix};
}

// ---------------------------------------------------------------------------
// Registry

enum class ServiceStatus { healthy, unhealthy };

inline constexpr std::string_view to_string(ServiceStatus s) noexcept {
  return s == ServiceStatus::healthy ? "healthy" : "unhealthy";
}

struct ServiceRecord {
  std::string service_name;
  std::string node_id;
  ServiceStatus status = ServiceStatus::healthy;

  friend bool operator==(const ServiceRecord&, const ServiceRecord&) = default;
};

/// Authoritative service map. Status changes may be scheduled to become
/// visible after a propagation delay; `advance` applies the due ones.
class Registry {
 public:
  void register_service(const std::string& service, const std::string& node,
                        ServiceStatus status = ServiceStatus::healthy) {
    records_[{service, node}] = ServiceRecord{service, node, status};
  }

  void set_node_status(const std::string& node, ServiceStatus status) {
    for (auto& [key, rec] : records_) {
      if (key.second == node) rec.status = status;
    }
  }

  void schedule_node_status(const std::string& node, ServiceStatus status, double effective_at) {
    pending_.push_back({effective_at, seq_++, node, status});
  }

  void advance(double now_s) {
    std::stable_sort(pending_.begin(), pending_.end(), [](const Pending& a, const Pending& b) {
      return std::tie(a.at, a.seq) < std::tie(b.at, b.seq);
    });
    auto due = std::find_if(pending_.begin(), pending_.end(),
                            [&](const Pending& p) { return p.at > now_s; });
    for (auto it = pending_.begin(); it != due; ++it) set_node_status(it->node, it->status);
    pending_.erase(pending_.begin(), due);
  }

  std::vector<ServiceRecord> records() const {
    std::vector<ServiceRecord> out;
    for (const auto& [_, r] : records_) out.push_back(r);
    return out;
  }

  std::vector<ServiceRecord> records_for(std::string_view service) const {
    std::vector<ServiceRecord> out;
    for (const auto& [key, r] : records_) {
      if (key.first == service) out.push_back(r);
    }
    return out;
  }

 private:
  struct Pending {
    double at;
    unsigned long long seq;
    std::string node;
    ServiceStatus status;
  };

  std::map<std::pair<std::string, std::string>, ServiceRecord> records_;
  std::vector<Pending> pending_;
  unsigned long long seq_ = 0;
};

/// What the resolver needs to know about a node from the querying device.
struct ResolveInput {
  bool reachable = true;
  double score_ms = 0.0;  // composite link score to the querying device
};

/// Healthy, reachable nodes offering `service`, best composite score first.
/// Nodes without an entry in `inputs` are not considered.
inline std::vector<std::string> resolve(const Registry& registry, std::string_view service,
                                        const std::map<std::string, ResolveInput>& inputs) {
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& rec : registry.records_for(service)) {
    if (rec.status != ServiceStatus::healthy) continue;
    auto it = inputs.find(rec.node_id);
    if (it == inputs.end() || !it->second.reachable) continue;
    ranked.emplace_back(it->second.score_ms, rec.node_id);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (auto& [_, id] : ranked) out.push_back(std::move(id));
  return out;
}

/// Control-plane bandwidth for one gossip message per interval, in kbps.
inline double gossip_bandwidth(double message_bytes, double interval_s) {
  if (!(interval_s > 0.0)) throw ConfigError("gossip interval must be > 0");
  return message_bytes * 8.0 / interval_s / 1000.0;
}

}  // namespace edgesim
