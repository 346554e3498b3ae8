#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "edgesim/error.hpp"
#include "edgesim/health.hpp"
#include "edgesim/rng.hpp"

namespace edgesim {

/// Alpha-stable law in the S1 parameterization. Latencies in ms.
struct StableParams {
  double alpha = 1.6878;
  double beta = 0.0;
  double scale = 0.0980;
  double location = 13.405;

  bool valid() const noexcept {
    return alpha > 0.0 && alpha <= 2.0 && beta >= -1.0 && beta <= 1.0 && scale > 0.0 &&
           std::isfinite(location);
  }

  friend bool operator==(const StableParams&, const StableParams&) = default;
};

inline constexpr double kDefaultLatencyFloorMs = 0.1;

inline void require_valid(const StableParams& p) {
  if (!p.valid()) {
    throw ConfigError("invalid stable parameters (alpha in (0,2], beta in [-1,1], scale > 0)");
  }
}

/// One unclamped stable draw (Chambers-Mallows-Stuck).
inline double sample_stable_unclamped(const StableParams& p, RngStream& rng) {
  require_valid(p);
  constexpr double half_pi = std::numbers::pi / 2.0;
  const double v = std::numbers::pi * (rng.uniform_open() - 0.5);
  const double w = rng.exponential();
  const double a = p.alpha;

  if (a == 1.0) {
    const double b = p.beta;
    const double x =
        ((half_pi + b * v) * std::tan(v) -
         b * std::log((half_pi * w * std::cos(v)) / (half_pi + b * v))) /
        half_pi;
    return p.scale * x + (2.0 / std::numbers::pi) * b * p.scale * std::log(p.scale) +
           p.location;
  }

  const double t = p.beta * std::tan(half_pi * a);
  const double shift = std::atan(t) / a;
  const double stretch = std::pow(1.0 + t * t, 1.0 / (2.0 * a));
  const double x = stretch * std::sin(a * (v + shift)) / std::pow(std::cos(v), 1.0 / a) *
                   std::pow(std::cos(v - a * (v + shift)) / w, (1.0 - a) / a);
  return p.scale * x + p.location;
}

/// Link latency draw, clamped below at floor_ms.
inline double sample_stable(const StableParams& p, RngStream& rng,
                            double floor_ms = kDefaultLatencyFloorMs) {
  return std::max(sample_stable_unclamped(p, rng), floor_ms);
}

// ---------------------------------------------------------------------------
// Multi-horizon EMAs

inline constexpr double kHorizon1m = 60.0;
inline constexpr double kHorizon5m = 300.0;
inline constexpr double kHorizon15m = 900.0;

struct EmaState {
  double ema_1m = 0.0;
  double ema_5m = 0.0;
  double ema_15m = 0.0;
  double last_update = 0.0;
  bool initialized = false;

  friend bool operator==(const EmaState&, const EmaState&) = default;
};

struct EmaWeights {
  double w_1m = 0.2;
  double w_5m = 0.3;
  double w_15m = 0.5;

  friend bool operator==(const EmaWeights&, const EmaWeights&) = default;
};

// Empty when the weights are usable, otherwise the reason they are not.
inline std::string check_weights(const EmaWeights& w) {
  if (w.w_1m < 0.0 || w.w_5m < 0.0 || w.w_15m < 0.0) return "weights must be >= 0";
  if (std::abs(w.w_1m + w.w_5m + w.w_15m - 1.0) > 1e-9) return "weights must sum to 1";
  if (w.w_1m > w.w_5m || w.w_5m > w.w_15m) return "weights must be non-decreasing with horizon";
  return {};
}

/// Continuous-time decay toward the new sample, independently per horizon.
inline EmaState ema_update(EmaState s, double sample_ms, double now_s) {
  if (!s.initialized) {
    return EmaState{sample_ms, sample_ms, sample_ms, now_s, true};
  }
  if (now_s < s.last_update) {
    throw TimeRegressionError("EMA update at t=" + std::to_string(now_s) +
                              " precedes last update at t=" + std::to_string(s.last_update));
  }
  const double dt = now_s - s.last_update;
  auto decay = [&](double ema, double horizon) {
    return sample_ms + (ema - sample_ms) * std::exp(-dt / horizon);
  };
  s.ema_1m = decay(s.ema_1m, kHorizon1m);
  s.ema_5m = decay(s.ema_5m, kHorizon5m);
  s.ema_15m = decay(s.ema_15m, kHorizon15m);
  s.last_update = now_s;
  return s;
}

/// Weighted EMA sum; lower is better.
inline double composite_score(const EmaState& s, const EmaWeights& w) {
  if (!s.initialized) throw NotReadyError("composite score requested before any latency sample");
  return w.w_1m * s.ema_1m + w.w_5m * s.ema_5m + w.w_15m * s.ema_15m;
}

inline Health classify_link(double score_ms, double budget_ms, const Thresholds& t = {}) {
  return classify(score_ms, budget_ms, t);
}

// ---------------------------------------------------------------------------
// Network latency matrix

struct LinkEntry {
  StableParams params;
  EmaState ema;
  double latest_ms = 0.0;
  Health state = Health::pass;
};

/// Ordered-pair link table. Links are always inserted in both directions.
class Nlm {
 public:
  using Key = std::pair<std::string, std::string>;

  Nlm() = default;
  Nlm(EmaWeights weights, double budget_ms, Thresholds thresholds = {})
      : weights_(weights), budget_ms_(budget_ms), thresholds_(thresholds) {
    if (auto why = check_weights(weights_); !why.empty()) throw ConfigError(why);
    if (!(budget_ms_ > 0.0)) throw ConfigError("link budget must be > 0");
  }

  void add_link(const std::string& a, const std::string& b, const StableParams& params) {
    require_valid(params);
    if (a == b) throw ConfigError("self link '" + a + "'");
    links_[{a, b}].params = params;
    links_[{b, a}].params = params;
  }

  bool contains(const std::string& a, const std::string& b) const {
    return links_.contains({a, b});
  }

  const LinkEntry& at(const std::string& a, const std::string& b) const {
    auto it = links_.find({a, b});
    if (it == links_.end()) throw ConfigError("no link " + a + " -> " + b);
    return it->second;
  }

  /// Folds a latency sample into the (a, b) link and reclassifies it.
  const LinkEntry& observe(const std::string& a, const std::string& b, double sample_ms,
                           double now_s) {
    auto it = links_.find({a, b});
    if (it == links_.end()) throw ConfigError("no link " + a + " -> " + b);
    LinkEntry& e = it->second;
    e.ema = ema_update(e.ema, sample_ms, now_s);
    e.latest_ms = sample_ms;
    e.state = classify_link(composite_score(e.ema, weights_), budget_ms_, thresholds_);
    return e;
  }

  double score(const std::string& a, const std::string& b) const {
    return composite_score(at(a, b).ema, weights_);
  }

  // Largest composite score over initialized links, 0 if none.
  double max_score() const {
    double m = 0.0;
    for (const auto& [_, e] : links_) {
      if (e.ema.initialized) m = std::max(m, composite_score(e.ema, weights_));
    }
    return m;
  }

  const std::map<Key, LinkEntry>& links() const noexcept { return links_; }
  const EmaWeights& weights() const noexcept { return weights_; }
  double budget_ms() const noexcept { return budget_ms_; }

 private:
  EmaWeights weights_{};
  double budget_ms_ = 50.0;
  Thresholds thresholds_{};
  std::map<Key, LinkEntry> links_;
};

}  // namespace edgesim
