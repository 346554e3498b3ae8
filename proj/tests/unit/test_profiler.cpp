#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "edgesim/health.hpp"
#include "edgesim/profiler.hpp"
#include "edgesim/rng.hpp"

using namespace edgesim;

TEST(Classify, QosExamples) {
  EXPECT_EQ(classify(100, 150), Health::pass);
  EXPECT_EQ(classify(120, 150), Health::warning);
  EXPECT_EQ(classify(140, 150), Health::critical);
}

TEST(Classify, BoundariesAreWarning) {
  EXPECT_EQ(classify(112.5, 150), Health::warning);
  EXPECT_EQ(classify(135, 150), Health::warning);
  EXPECT_EQ(classify(std::nextafter(112.5, 0.0), 150), Health::pass);
  EXPECT_EQ(classify(std::nextafter(135.0, 200.0), 150), Health::critical);
  EXPECT_THROW(classify(1, 0), ConfigError);
}

TEST(Classify, ScaleInvariantOnExactScalings) {
  // Powers of two scale without rounding, so the comparison is exact.
  RngStream rng(31);
  for (int i = 0; i < 10'000; ++i) {
    const double q = rng.uniform(1, 500), l = rng.uniform(0, 1.2 * q);
    const double k = std::ldexp(1.0, static_cast<int>(rng.uniform(-20, 20)));
    EXPECT_EQ(classify(l, q), classify(k * l, k * q));
  }
}

TEST(Profiler, Examples) {
  ProfilerState p;
  p.register_task("a", 150);
  p.record_inference("a", 100, 0.1);
  EXPECT_EQ(p.avg_inf_lat(), 100.0);

  ProfilerState q;
  for (const char* id : {"a", "b", "c"}) q.register_task(id, 150);
  q.record_inference("a", 10, 0);
  q.record_inference("b", 20, 0);
  q.record_inference("c", 30, 0);
  EXPECT_EQ(q.avg_inf_lat(), 20.0);

  ProfilerState w(3);
  w.register_task("a", 150);
  for (double l : {1.0, 2.0, 3.0, 4.0}) w.record_inference("a", l, 0);
  const auto& ring = w.tracks().at("a").ring;
  EXPECT_EQ(std::vector<double>(ring.begin(), ring.end()), (std::vector<double>{2, 3, 4}));
}

TEST(Profiler, UnknownTaskIsRegistrationError) {
  ProfilerState p;
  EXPECT_THROW(p.record_inference("ghost", 1.0, 0.0), RegistrationError);
  EXPECT_FALSE(p.avg_inf_lat());
  EXPECT_THROW(ProfilerState(0), ConfigError);
}

TEST(Profiler, IdenticalLatenciesAverageToThemselves) {
  for (int n = 1; n <= 12; ++n) {
    ProfilerState p;
    for (int i = 0; i < n; ++i) {
      p.register_task("t" + std::to_string(i), 150);
      p.record_inference("t" + std::to_string(i), 37.25, 0);
    }
    EXPECT_EQ(p.avg_inf_lat(), 37.25) << n;
  }
}

TEST(Profiler, UnregisteringDropsTaskFromAverage) {
  ProfilerState p;
  p.register_task("a", 150);
  p.register_task("b", 100);
  p.record_inference("a", 10, 0);
  p.record_inference("b", 30, 0);
  EXPECT_EQ(p.qos_reference(), 100.0);
  p.unregister_task("b");
  EXPECT_EQ(p.avg_inf_lat(), 10.0);
  EXPECT_EQ(p.qos_reference(), 150.0);
}

TEST(EvaluateHealth, IdleNodePasses) {
  ProfilerState p;
  EXPECT_EQ(evaluate_health(p).system_state, Health::pass);
  p.register_task("a", 150);
  const auto h = evaluate_health(p);
  EXPECT_EQ(h.system_state, Health::pass);
  EXPECT_TRUE(h.app_states.empty());
}

TEST(EvaluateHealth, SingleCriticalAppLeavesSystemAlone) {
  ProfilerState p;
  for (const char* id : {"a", "b", "c", "d"}) p.register_task(id, 150);
  p.record_inference("a", 140, 0);
  p.record_inference("b", 40, 0);
  p.record_inference("c", 40, 0);
  p.record_inference("d", 40, 0);
  const auto h = evaluate_health(p);
  EXPECT_EQ(h.app_states.at("a"), Health::critical);
  EXPECT_EQ(h.app_states.at("b"), Health::pass);
  EXPECT_EQ(h.system_state, Health::pass);
}

TEST(EvaluateHealth, AllPassButSystemWarning) {
  // Apps on a loose budget pass while the strict tenant sets the system reference.
  ProfilerState p;
  p.register_task("loose", 400);
  p.register_task("strict", 150);
  p.record_inference("loose", 200, 0);
  p.record_inference("strict", 40, 0);
  const auto h = evaluate_health(p);
  EXPECT_EQ(h.app_states.at("loose"), Health::pass);
  EXPECT_EQ(h.app_states.at("strict"), Health::pass);
  EXPECT_EQ(h.system_state, Health::warning);  // mean 120 vs 150
}

TEST(EvaluateHealth, PureAndConsistentWithClassify) {
  RngStream rng(32);
  for (int k = 0; k < 2000; ++k) {
    ProfilerState p(static_cast<std::size_t>(1 + rng.uniform(0, 5)));
    const int tasks = static_cast<int>(rng.uniform(0, 6));
    for (int i = 0; i < tasks; ++i) {
      const std::string id = "t" + std::to_string(i);
      p.register_task(id, rng.uniform(50, 300));
      const int samples = static_cast<int>(rng.uniform(0, 8));
      for (int s = 0; s < samples; ++s) p.record_inference(id, rng.uniform(0, 400), s);
    }
    const auto h1 = evaluate_health(p), h2 = evaluate_health(p);
    ASSERT_EQ(h1, h2);
    for (const auto& [id, t] : p.tracks()) {
      if (t.latest()) {
        ASSERT_EQ(h1.app_states.at(id), classify(*t.latest(), t.qos_ms));
      } else {
        ASSERT_FALSE(h1.app_states.contains(id));
      }
    }
    if (p.avg_inf_lat()) {
      ASSERT_EQ(h1.system_state, classify(*p.avg_inf_lat(), *p.qos_reference()));
    }
  }
}

TEST(CarrySince, KeepsStampsUntilStateChanges) {
  HealthState prev;
  prev.app_states["a"] = Health::pass;
  prev.since["a"] = 1.0;
  prev.system_state = Health::pass;
  prev.system_since = 1.0;

  HealthState same = prev;
  same.since.clear();
  same = carry_since(prev, same, 5.0);
  EXPECT_EQ(same.since.at("a"), 1.0);
  EXPECT_EQ(same.system_since, 1.0);

  HealthState changed;
  changed.app_states["a"] = Health::critical;
  changed.app_states["b"] = Health::pass;
  changed.system_state = Health::warning;
  changed = carry_since(prev, changed, 6.0);
  EXPECT_EQ(changed.since.at("a"), 6.0);
  EXPECT_EQ(changed.since.at("b"), 6.0);
  EXPECT_EQ(changed.system_since, 6.0);
}
