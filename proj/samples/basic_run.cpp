// Builds a small cluster in code, runs it and prints the headline numbers.
#include <iostream>

#include "edgesim/edgesim.hpp"

int main() {
  using namespace edgesim;

  Scenario sc;
  sc.name = "basic";
  sc.devices = defaults::cluster();
  for (int i = 1; i <= 3; ++i) {
    EndDevice e;
    e.id = "cam-" + std::to_string(i);
    e.fps = 5.0;
    e.start_s = 2.0 * (i - 1);
    sc.end_devices.push_back(e);
  }
  sc.sim.duration_s = 30.0;

  for (Policy p : {Policy::min_latency, Policy::weighted}) {
    sc.orchestrator.policy = p;
    const MetricsReport r = run(sc, 7);
    std::cout << "== " << to_string(p) << "\n" << summary_text(r) << "\n";
  }
}
