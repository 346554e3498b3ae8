// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edgesim/edgesim.hpp"
#include "oracles/stable_cdf.hpp"

using namespace edgesim;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double time_limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = time_limit_s <= 0 || secs < time_limit_s;
  const bool ok = o.ok && in_time;
  failures += !ok;
  char timing[96];
  if (time_limit_s > 0) {
    std::snprintf(timing, sizeof timing, "%.3f s (limit %.0f s)", secs, time_limit_s);
  } else {
    std::snprintf(timing, sizeof timing, "%.3f s", secs);
  }
  std::printf("%s %d %s: %s; %s\n", ok ? "PASS" : "FAIL", id, title, o.detail.c_str(), timing);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// pass iff L < 3q/4, critical iff L > 9q/10, evaluated exactly: the scaled
// products need at most 57 significand bits, which long double holds.
Health exact_state(double l, double q) {
  const long double L = l, Q = q;
  if (4.0L * L < 3.0L * Q) return Health::pass;
  if (10.0L * L > 9.0L * Q) return Health::critical;
  return Health::warning;
}

Outcome state_machine() {
  RngStream rng(1001);
  int mismatches = 0, boundary = 0;
  const int total = 100'000;
  for (int i = 0; i < total; ++i) {
    double q, l;
    if (i % 10 == 0) {
      // Budgets whose boundaries are exact, probed on and next to them.
      q = 20.0 * std::floor(rng.uniform(1, 50));
      const double edge = (i / 10) % 2 ? 0.75 * q : 0.9 * q;
      const int side = static_cast<int>(rng.uniform(0, 3));
      l = side == 0 ? edge : std::nextafter(edge, side == 1 ? 0.0 : 1e9);
      ++boundary;
    } else {
      q = rng.uniform(1, 1000);
      l = rng.uniform(0, 1.5 * q);
    }
    mismatches += classify(l, q) != exact_state(l, q);
  }
  return {mismatches == 0,
          fmt("%d pairs (%d at or next to a boundary), %d mismatches", total, boundary, mismatches)};
}

Outcome avg_inf_lat() {
  RngStream rng(1002);
  int mismatches = 0;
  const int cases = 10'000;
  for (int k = 0; k < cases; ++k) {
    ProfilerState p(static_cast<std::size_t>(1 + rng.uniform(0, 6)));
    std::map<std::string, double> latest;  // brute-force bookkeeping
    std::set<std::string> live;
    const int tasks = static_cast<int>(rng.uniform(0, 9));
    for (int i = 0; i < tasks; ++i) {
      const std::string id = "t" + std::to_string(i);
      p.register_task(id, rng.uniform(50, 300));
      live.insert(id);
      const int samples = static_cast<int>(rng.uniform(0, 5));
      for (int s = 0; s < samples; ++s) {
        const double l = rng.uniform(0, 400);
        p.record_inference(id, l, s);
        latest[id] = l;
      }
    }
    for (const auto& id : std::set<std::string>(live)) {
      if (rng.uniform_open() < 0.2) {
        p.unregister_task(id);
        live.erase(id);
        latest.erase(id);
      }
    }
    double sum = 0.0;
    for (const auto& [_, l] : latest) sum += l;
    const std::optional<double> expect =
        latest.empty() ? std::nullopt : std::optional<double>(sum / static_cast<double>(latest.size()));
    mismatches += p.avg_inf_lat() != expect;
  }
  return {mismatches == 0, fmt("%d random profiler states, %d not bit-identical", cases, mismatches)};
}

Outcome stable_sampler() {
  constexpr std::size_t n = 1'000'000;
  const double sigma = 1.3;
  RngStream g(1003);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sample_stable_unclamped({2.0, 0.0, sigma, 4.0}, g);
    const double d = x - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (x - mean);
  }
  const double rel = m2 / static_cast<double>(n - 1) / (2.0 * sigma * sigma);

  const StableParams p{};
  RngStream r(1004);
  std::vector<double> xs(n);
  for (auto& x : xs) x = (sample_stable_unclamped(p, r) - p.location) / p.scale;
  std::sort(xs.begin(), xs.end());
  const oracle::SymmetricStableCdf cdf(p.alpha);
  const auto grid = oracle::ks_grid();
  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) f[i] = cdf(grid[i]);
  const double ks = oracle::ks_upper_bound(xs, grid, f);

  return {std::abs(rel - 1.0) < 0.02 && ks < 0.005,
          fmt("alpha=2 variance ratio %.4f (within 0.02), KS bound %.5f at alpha=%.4f scale=%.4f "
              "(limit 0.005)",
              rel, ks, p.alpha, p.scale)};
}

Outcome gossip() {
  const double kbps = gossip_bandwidth(13.672, 0.015e-3);
  const double rel = kbps / 7291.7 - 1.0;
  return {std::abs(rel) <= 1e-3, fmt("%.3f kbps, relative error %.2e (limit 1e-3)", kbps, rel)};
}

Outcome calibration() {
  const auto up = defaults::up_squared(), jn = defaults::jetson_nano(), cd = defaults::coral_dev();
  const double a_up = predict_components(up, 600, 1).accel_ms;
  const double a_jn = predict_components(jn, 600, 1).accel_ms;
  const double a_cd = predict_components(cd, 600, 1).accel_ms;
  bool ok = a_up == 62.65 && a_jn == 79.59 && a_cd == 71.81;

  auto growth = [](const DeviceProfile& d, int n) {
    return predict_components(d, 1200, n).total() / predict_components(d, 600, n).total() - 1.0;
  };
  const std::vector<std::tuple<DeviceProfile, double, double>> ranges{
      {up, 0.40, 0.50}, {jn, 0.35, 0.65}, {cd, 0.50, 0.70}};
  std::string worst;
  double avg_lo = 1e9, avg_hi = -1e9;
  for (int n = 1; n <= 4; ++n) {
    double sum = 0.0;
    for (const auto& [d, lo, hi] : ranges) {
      const double g = growth(d, n);
      if (g < lo || g > hi) {
        ok = false;
        worst += fmt(" %s@n=%d:%.3f", d.name.c_str(), n, g);
      }
      sum += g;
    }
    avg_lo = std::min(avg_lo, sum / 3.0);
    avg_hi = std::max(avg_hi, sum / 3.0);
  }
  ok = ok && avg_lo >= 0.45 && avg_hi <= 0.60;
  int jetson_peak = 1;
  for (int n = 2; n <= 4; ++n) {
    if (growth(jn, n) > growth(jn, jetson_peak)) jetson_peak = n;
  }
  ok = ok && jetson_peak == 3;
  return {ok, fmt("accelerator 600px n=1 %.2f/%.2f/%.2f ms, cluster growth %.3f..%.3f, Jetson peak "
                  "at n=%d%s%s",
                  a_up, a_jn, a_cd, avg_lo, avg_hi, jetson_peak, worst.empty() ? "" : ", out of range:",
                  worst.c_str())};
}

Outcome algorithm_one() {
  RngStream rng(1006);
  int assign_mismatch = 0, victim_mismatch = 0, victims = 0;
  const int clusters = 1000;
  for (int k = 0; k < clusters; ++k) {
    const int n = 1 + static_cast<int>(rng.uniform(0, 10));
    std::vector<NodeCandidate> cands;
    ClusterView view;
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) {
      const std::string id = "n" + std::to_string(i);
      ids.push_back(id);
      cands.push_back({id, rng.uniform_open() < 0.7, rng.uniform_open() < 0.8,
                       std::floor(rng.uniform(0, 8)), 10, 30});
      NodeView nv;
      nv.id = id;
      nv.health.system_state = rng.uniform_open() < 0.4 ? Health::critical : Health::pass;
      const int t = static_cast<int>(rng.uniform(0, 5));
      for (int j = 0; j < t; ++j) {
        std::optional<double> lat;
        if (rng.uniform_open() < 0.9) lat = std::floor(rng.uniform(50, 200));
        nv.tasks.push_back({id + "-t" + std::to_string(j), "ed", 600, 150.0, lat});
      }
      view.nodes.push_back(std::move(nv));
    }

    std::optional<std::pair<double, std::string>> best;
    for (const auto& c : cands) {
      if (!c.healthy || !c.reachable) continue;
      const std::pair<double, std::string> key{c.score_ms, c.id};
      if (!best || key < *best) best = key;
    }
    const auto got = try_assign_node(cands);
    assign_mismatch += got != (best ? std::optional<std::string>(best->second) : std::nullopt);

    const TargetPicker pick = [&](const TaskView&, const std::string& src,
                                  const std::set<std::string>& ex) -> std::optional<std::string> {
      for (const auto& id : ids) {
        if (id != src && !ex.contains(id)) return id;
      }
      return std::nullopt;
    };
    const auto plan = monitor_and_offload(view, 1.0, {}, pick);
    for (const auto& nv : view.nodes) {
      if (!nv.critical() || nv.tasks.empty()) continue;
      std::optional<std::pair<double, std::string>> worst;
      for (const auto& t : nv.tasks) {
        const double l = t.latest_inflat.value_or(-1e300);
        if (!worst || l > worst->first || (l == worst->first && t.task_id < worst->second)) {
          worst = std::make_pair(l, t.task_id);
        }
      }
      std::vector<std::string> moved;
      for (const auto& m : plan.migrations) {
        if (m.from_node == nv.id) moved.push_back(m.task_id);
      }
      for (const auto& u : plan.unplaced) {
        if (u.node == nv.id) moved.push_back(u.task_id);
      }
      ++victims;
      victim_mismatch += moved.size() != 1 || moved[0] != worst->second;
    }
  }
  return {assign_mismatch == 0 && victim_mismatch == 0,
          fmt("%d clusters, assign mismatches %d, victim mismatches %d of %d critical nodes", clusters,
              assign_mismatch, victim_mismatch, victims)};
}

Outcome overload() {
  const auto loaded = load_scenario(EDGESIM_SCENARIO_DIR "/overload.json");
  if (!loaded.ok()) return {false, "bundled overload scenario does not load"};
  Scenario on = *loaded.scenario;
  on.orchestrator.offloading = true;
  Scenario off = on;
  off.orchestrator.offloading = false;

  std::uint64_t to_unavailable = 0, worse = 0, differing = 0, v_on = 0, v_off = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto a = run(on, seed), b = run(off, seed), again = run(on, seed);
    to_unavailable += a.counters.frames_to_unavailable;
    worse += a.counters.qos_violations > b.counters.qos_violations;
    v_on += a.counters.qos_violations;
    v_off += b.counters.qos_violations;
    differing += frames_csv(a) != frames_csv(again) || decisions_log(a) != decisions_log(again) ||
                 report_json(a).dump() != report_json(again).dump();
  }
  return {to_unavailable == 0 && worse == 0 && differing == 0,
          fmt("seeds 1-10: (a) %llu frames to critical/unreachable nodes, (b) %llu seeds where "
              "offloading is worse (violations on %llu vs off %llu), (c) %llu non-identical reruns",
              static_cast<unsigned long long>(to_unavailable), static_cast<unsigned long long>(worse),
              static_cast<unsigned long long>(v_on), static_cast<unsigned long long>(v_off),
              static_cast<unsigned long long>(differing))};
}

}  // namespace

int main() {
  criterion(1, "health state machine", 1.0, state_machine);
  criterion(2, "AvgInfLat", 0, avg_inf_lat);
  criterion(3, "stable sampler", 30.0, stable_sampler);
  criterion(4, "gossip accounting", 0, gossip);
  criterion(5, "calibration reproduction", 1.0, calibration);
  criterion(6, "placement and offload oracles", 0, algorithm_one);
  criterion(7, "overload scenario", 60.0, overload);
  return failures == 0 ? 0 : 1;
}
