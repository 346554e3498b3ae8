#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "edgesim/error.hpp"

namespace edgesim {

enum class Health { pass, warning, critical };

inline constexpr std::string_view to_string(Health h) noexcept {
  switch (h) {
    case Health::pass:
      return "pass";
    case Health::warning:
      return "warning";
    case Health::critical:
      return "critical";
  }
  return "?";
}

inline Health health_from_string(std::string_view s) {
  if (s == "pass") return Health::pass;
  if (s == "warning") return Health::warning;
  if (s == "critical") return Health::critical;
  throw ConfigError("unknown health state '" + std::string(s) + "'");
}

/// Fractions of a latency budget that separate the three health states.
struct Thresholds {
  double warning_from = 0.75;
  double critical_above = 0.90;
};

/// pass below warning_from*budget, critical strictly above
/// critical_above*budget, warning in between with both boundaries inclusive.
inline Health classify(double latency_ms, double budget_ms, const Thresholds& t = {}) {
  if (!(budget_ms > 0.0)) throw ConfigError("latency budget must be > 0");
  if (latency_ms < t.warning_from * budget_ms) return Health::pass;
  if (latency_ms > t.critical_above * budget_ms) return Health::critical;
  return Health::warning;
}

}  // namespace edgesim
