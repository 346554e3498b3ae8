#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "edgesim/error.hpp"
#include "edgesim/sim_engine.hpp"

namespace edgesim {

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline nlohmann::json counters_json(const Counters& c) {
  return {{"frames_generated", c.frames_generated},
          {"frames_completed", c.frames_completed},
          {"frames_in_flight", c.frames_in_flight},
          {"assignment_failures", c.assignment_failures},
          {"qos_violations", c.qos_violations},
          {"frames_to_unavailable", c.frames_to_unavailable},
          {"health_epochs", c.health_epochs},
          {"migrations", c.migrations},
          {"migrations_started", c.migrations_started},
          {"migrations_retried", c.migrations_retried},
          {"migrations_abandoned", c.migrations_abandoned},
          {"offload_unplaced", c.offload_unplaced},
          {"failovers", c.failovers}};
}

inline nlohmann::json frame_json(const FrameRecord& f) {
  return {{"frame_id", f.frame_id},
          {"task", f.task_id},
          {"end_device", f.end_device},
          {"node", f.node},
          {"frame_size", f.frame_size_px},
          {"n_instances_at_service", f.n_instances},
          {"emitted_at", f.emitted_at},
          {"completed_at", f.completed_at},
          {"network_out_ms", f.network_out_ms},
          {"queueing_ms", f.queueing_ms},
          {"model_load_ms", f.model_load_ms},
          {"cpu_ms", f.cpu_ms},
          {"accel_ms", f.accel_ms},
          {"processing_ms", f.processing_ms},
          {"network_back_ms", f.network_back_ms},
          {"network_ms", f.network_ms()},
          {"e2e_ms", f.e2e_ms},
          {"qos_ms", f.qos_ms},
          {"state", std::string(to_string(f.state))},
          {"dispatched_to_available", f.dispatched_to_available}};
}

inline nlohmann::json report_json(const MetricsReport& r) {
  using nlohmann::json;
  json j;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["policy"] = std::string(to_string(r.policy));
  j["offloading"] = r.offloading;
  j["duration_s"] = r.duration_s;
  j["gossip_kbps_per_node"] = r.gossip_kbps;
  j["counters"] = counters_json(r.counters);
  j["frames"] = json::array();
  for (const auto& f : r.frames) j["frames"].push_back(frame_json(f));
  j["failed_frames"] = json::array();
  for (const auto& f : r.failed) {
    j["failed_frames"].push_back(
        {{"frame_id", f.frame_id}, {"time", f.time}, {"end_device", f.end_device}, {"reason", f.reason}});
  }
  j["node_series"] = json::array();
  for (const auto& s : r.node_series) {
    j["node_series"].push_back(
        {{"t", s.t},
         {"node", s.node},
         {"n_active", s.n_active},
         {"queue_len", s.queue_len},
         {"busy", s.busy},
         {"utilization", s.utilization},
         {"system_state", std::string(to_string(s.system_state))},
         {"reachable", s.reachable},
         {"faulted", s.faulted},
         {"avg_inf_lat", s.avg_inf_lat ? json(*s.avg_inf_lat) : json(nullptr)}});
  }
  j["breakdown"] = json::array();
  for (const auto& [k, c] : r.breakdown) {
    j["breakdown"].push_back({{"device", k.device},
                              {"frame_size", k.frame_size_px},
                              {"n_instances", k.n_instances},
                              {"count", c.count},
                              {"mean_cpu_ms", c.mean_cpu()},
                              {"mean_accel_ms", c.mean_accel()},
                              {"mean_e2e_ms", c.mean_e2e()}});
  }
  j["migrations"] = json::array();
  for (const auto& m : r.migrations) {
    j["migrations"].push_back({{"task", m.task_id},
                               {"from", m.from_node},
                               {"to", m.to_node},
                               {"trigger", std::string(to_string(m.trigger))},
                               {"metadata_transfer_ms", m.metadata_transfer_ms},
                               {"started_at", m.started_at},
                               {"completed_at", m.completed_at},
                               {"attempt", m.attempt}});
  }
  j["registry"] = json::array();
  for (const auto& rec : r.registry) {
    j["registry"].push_back({{"service", rec.service_name},
                             {"node", rec.node_id},
                             {"status", std::string(to_string(rec.status))}});
  }
  return j;
}

inline constexpr const char* kFramesCsvHeader =
    "time,end_device,node,frame_size,n_instances_at_service,cpu_ms,accel_ms,network_ms,e2e_ms,"
    "state";

inline std::string frames_csv(const MetricsReport& r) {
  std::string out = kFramesCsvHeader;
  out += '\n';
  for (const auto& f : r.frames) {
    out += fixed6(f.completed_at) + ',' + f.end_device + ',' + f.node + ',' +
           std::to_string(f.frame_size_px) + ',' + std::to_string(f.n_instances) + ',' +
           fixed6(f.cpu_ms) + ',' + fixed6(f.accel_ms) + ',' + fixed6(f.network_ms()) + ',' +
           fixed6(f.e2e_ms) + ',' + std::string(to_string(f.state)) + '\n';
  }
  return out;
}

inline std::string frames_json(const MetricsReport& r) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& f : r.frames) a.push_back(frame_json(f));
  return a.dump(1) + "\n";
}

// One JSON object per line.
inline std::string decisions_log(const MetricsReport& r) {
  std::string out;
  for (const auto& d : r.decisions) {
    out += d.dump();
    out += '\n';
  }
  return out;
}

inline std::string summary_text(const MetricsReport& r) {
  const auto& c = r.counters;
  std::ostringstream s;
  s << "scenario            " << r.scenario << "\n"
    << "seed                " << r.seed << "\n"
    << "policy              " << to_string(r.policy) << "\n"
    << "offloading          " << (r.offloading ? "on" : "off") << "\n"
    << "duration_s          " << fixed6(r.duration_s) << "\n"
    << "frames generated    " << c.frames_generated << "\n"
    << "frames completed    " << c.frames_completed << "\n"
    << "frames in flight    " << c.frames_in_flight << "\n"
    << "assignment failures " << c.assignment_failures << "\n"
    << "qos violations      " << c.qos_violations << "\n"
    << "migrations          " << c.migrations << " (started " << c.migrations_started
    << ", retried " << c.migrations_retried << ", abandoned " << c.migrations_abandoned << ")\n"
    << "failovers           " << c.failovers << "\n"
    << "offload unplaced    " << c.offload_unplaced << "\n"
    << "gossip kbps/node    " << fixed6(r.gossip_kbps) << "\n";
  s << "\nbreakdown (device, frame, n): count mean_cpu_ms mean_accel_ms mean_e2e_ms\n";
  for (const auto& [k, cell] : r.breakdown) {
    s << "  " << k.device << " " << k.frame_size_px << " " << k.n_instances << ": " << cell.count
      << " " << fixed6(cell.mean_cpu()) << " " << fixed6(cell.mean_accel()) << " "
      << fixed6(cell.mean_e2e()) << "\n";
  }
  return s.str();
}

// Writes through a temporary sibling and renames it into place.
inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

enum class FrameFormat { csv, json };

inline void write_report_set(const MetricsReport& r, const std::filesystem::path& dir,
                             FrameFormat format = FrameFormat::csv) {
  std::filesystem::create_directories(dir);
  write_atomically(dir / "report.json", report_json(r).dump(1) + "\n");
  if (format == FrameFormat::csv) {
    write_atomically(dir / "frames.csv", frames_csv(r));
  } else {
    write_atomically(dir / "frames.json", frames_json(r));
  }
  write_atomically(dir / "decisions.log", decisions_log(r));
  write_atomically(dir / "summary.txt", summary_text(r));
}

}  // namespace edgesim
