#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgesim/error.hpp"

namespace edgesim {

enum class AcceleratorKind { vpu, tpu, gpu };

inline constexpr std::string_view to_string(AcceleratorKind k) noexcept {
  switch (k) {
    case AcceleratorKind::vpu:
      return "VPU";
    case AcceleratorKind::tpu:
      return "TPU";
    case AcceleratorKind::gpu:
      return "GPU";
  }
  return "?";
}

inline AcceleratorKind accelerator_from_string(std::string_view s) {
  if (s == "VPU") return AcceleratorKind::vpu;
  if (s == "TPU") return AcceleratorKind::tpu;
  if (s == "GPU") return AcceleratorKind::gpu;
  throw ConfigError("unknown accelerator kind '" + std::string(s) + "'");
}

/// Latency surfaces over a rectangular (frame size x instance count) grid.
///
/// `cpu_ms[i][j]` and `accel_ms[i][j]` are the two lifecycle components for
/// `frame_sizes[i]` and `instance_counts[j]`. The CPU component covers
/// pre-processing and post-processing, the accelerator component covers the
/// inference steps.
struct CalibrationTable {
  std::vector<int> frame_sizes;      // square side in px, ascending
  std::vector<int> instance_counts;  // ascending
  std::vector<std::vector<double>> cpu_ms;
  std::vector<std::vector<double>> accel_ms;

  bool empty() const noexcept { return frame_sizes.empty() || instance_counts.empty(); }

  friend bool operator==(const CalibrationTable&, const CalibrationTable&) = default;
};

struct DeviceProfile {
  std::string name;
  AcceleratorKind accelerator = AcceleratorKind::vpu;
  CalibrationTable calibration;
  double model_load_ms = 2000.0;
  int max_instances = 4;
  double cpu_pre_fraction = 0.7;  // share of cpu_ms spent before inference

  friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

// Returns the list of table problems; empty means the table is usable.
inline std::vector<std::string> check_table(const CalibrationTable& t) {
  std::vector<std::string> issues;
  if (t.empty()) {
    issues.emplace_back("calibration table is empty");
    return issues;
  }
  auto ascending = [](const std::vector<int>& v) {
    return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
  };
  if (!ascending(t.frame_sizes)) issues.emplace_back("frame_sizes must be strictly ascending");
  if (!ascending(t.instance_counts))
    issues.emplace_back("instance_counts must be strictly ascending");
  if (t.frame_sizes.front() <= 0) issues.emplace_back("frame_sizes must be > 0");
  if (t.instance_counts.front() < 1) issues.emplace_back("instance_counts must be >= 1");

  const std::size_t rows = t.frame_sizes.size();
  const std::size_t cols = t.instance_counts.size();
  auto check_grid = [&](const std::vector<std::vector<double>>& g, const char* name) {
    if (g.size() != rows) {
      issues.push_back(std::string(name) + " must have one row per frame size");
      return;
    }
    for (std::size_t i = 0; i < rows; ++i) {
      if (g[i].size() != cols) {
        issues.push_back(std::string(name) + " row " + std::to_string(i) +
                         " must have one entry per instance count");
        return;
      }
      for (std::size_t j = 0; j < cols; ++j) {
        if (!(g[i][j] > 0.0)) {
          issues.push_back(std::string(name) + " entries must be > 0");
          return;
        }
        if (j > 0 && g[i][j] < g[i][j - 1]) {
          issues.push_back(std::string(name) + " must be non-decreasing in instance count");
          return;
        }
        if (i > 0 && g[i][j] < g[i - 1][j]) {
          issues.push_back(std::string(name) + " must be non-decreasing in frame size");
          return;
        }
      }
    }
  };
  check_grid(t.cpu_ms, "cpu_ms");
  check_grid(t.accel_ms, "accel_ms");
  return issues;
}

namespace detail {

// Linear inside [xs.front(), xs.back()], geometric outside using the ratio of
// the two samples nearest the edge. Exact at every knot.
inline double interp_axis(std::span<const double> xs, std::span<const double> ys, double x) {
  const std::size_t n = xs.size();
  if (n == 1) return ys[0];
  if (x <= xs[0]) {
    if (x == xs[0]) return ys[0];
    const double steps = (xs[0] - x) / (xs[1] - xs[0]);
    return ys[0] * std::pow(ys[0] / ys[1], steps);
  }
  if (x >= xs[n - 1]) {
    if (x == xs[n - 1]) return ys[n - 1];
    const double steps = (x - xs[n - 1]) / (xs[n - 1] - xs[n - 2]);
    return ys[n - 1] * std::pow(ys[n - 1] / ys[n - 2], steps);
  }
  const auto hi = static_cast<std::size_t>(
      std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
  const std::size_t lo = hi - 1;
  if (x == xs[lo]) return ys[lo];
  const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

inline double interp_grid(const CalibrationTable& t, const std::vector<std::vector<double>>& g,
                          double frame_size, double n) {
  std::vector<double> counts(t.instance_counts.begin(), t.instance_counts.end());
  std::vector<double> log_frames;
  log_frames.reserve(t.frame_sizes.size());
  for (int f : t.frame_sizes) log_frames.push_back(std::log2(static_cast<double>(f)));

  std::vector<double> column;
  column.reserve(g.size());
  for (const auto& row : g) column.push_back(interp_axis(counts, row, n));
  return interp_axis(log_frames, column, std::log2(frame_size));
}

}  // namespace detail

struct Components {
  double cpu_ms = 0.0;
  double accel_ms = 0.0;

  double total() const noexcept { return cpu_ms + accel_ms; }
};

/// Component latencies for `n` concurrent instances at `frame_size` px.
///
/// Bilinear in (log2 frame size, instance count) inside the table and
/// multiplicative beyond its edges.
inline Components predict_components(const DeviceProfile& profile, double frame_size, int n) {
  const auto& t = profile.calibration;
  if (t.empty()) throw ConfigError("device '" + profile.name + "' has an empty calibration table");
  if (!(frame_size > 0.0)) throw ConfigError("frame size must be > 0");
  if (n < 1) throw ConfigError("instance count must be >= 1");
  const double nn = static_cast<double>(n);
  return {detail::interp_grid(t, t.cpu_ms, frame_size, nn),
          detail::interp_grid(t, t.accel_ms, frame_size, nn)};
}

// ---------------------------------------------------------------------------
// Runtime

inline constexpr int kTrainedFrameSize = 300;

struct InferenceTask {
  std::string task_id;
  std::string end_device_id;
  int frame_size_px = 600;
  double qos_ms = 150.0;
  std::string model = "mobilenet-v1-ssd";
  std::string host_node;
  double created_at = 0.0;
};

struct NodeRuntime {
  DeviceProfile profile;
  std::set<std::string> loaded_models;
  std::map<std::string, InferenceTask> active_tasks;
  bool reachable = true;  // false while quarantined or faulted
  bool faulted = false;

  const std::string& id() const noexcept { return profile.name; }
  int instance_count() const noexcept { return static_cast<int>(active_tasks.size()); }
};

/// Per-step durations of one frame, in lifecycle order.
struct ProcessingOutcome {
  double model_load_ms = 0.0;  // step 0, once per (node, model)
  double cpu_pre_ms = 0.0;     // step 1
  double accel_ms = 0.0;       // steps 2-4
  double cpu_post_ms = 0.0;    // step 5
  double total_processing_ms = 0.0;
  int n_instances = 0;

  double cpu_ms() const noexcept { return cpu_pre_ms + cpu_post_ms; }
};

/// Services one frame of `task` on `node`.
///
/// Components are read at the current instance count (the task's own
/// admission included). Frames already admitted before the node became
/// unreachable pass `admitted = true` and are served to completion.
inline ProcessingOutcome service_request(NodeRuntime& node, const InferenceTask& task,
                                         [[maybe_unused]] double now_s, bool admitted = false) {
  if (!node.reachable && !admitted) {
    throw AssignmentError("frame of task '" + task.task_id + "' sent to unreachable node '" +
                          node.id() + "'");
  }
  ProcessingOutcome out;
  out.n_instances = std::max(1, node.instance_count());
  if (!node.loaded_models.contains(task.model)) {
    out.model_load_ms = node.profile.model_load_ms;
    node.loaded_models.insert(task.model);
  }
  const Components c = predict_components(node.profile, task.frame_size_px, out.n_instances);
  out.cpu_pre_ms = c.cpu_ms * node.profile.cpu_pre_fraction;
  out.cpu_post_ms = c.cpu_ms - out.cpu_pre_ms;
  out.accel_ms = c.accel_ms;
  out.total_processing_ms = out.model_load_ms + out.cpu_pre_ms + out.accel_ms + out.cpu_post_ms;
  return out;
}

}  // namespace edgesim
