#pragma once

#include <vector>

#include "edgesim/device_model.hpp"

namespace edgesim::defaults {

// Accelerator cells at 600 px / 1 instance are measured values. Every other
// cell is fit so that frame doubling reproduces the observed total-latency
// growth ranges (tests/oracles/fit_calibration.py regenerates them).

inline DeviceProfile up_squared() {
  return {"up-squared",
          AcceleratorKind::vpu,
          {{600, 1200},
           {1, 2, 3, 4},
           {{20.0, 24.0, 28.0, 32.0}, {42.58, 50.9, 59.6, 66.18}},
           {{62.65, 70.0, 78.0, 86.0}, {76.43, 85.4, 95.16, 104.92}}},
          2000.0,
          4,
          0.7};
}

inline DeviceProfile jetson_nano() {
  return {"jetson-nano",
          AcceleratorKind::gpu,
          {{600, 1200},
           {1, 2, 3, 4},
           {{25.0, 30.0, 35.0, 40.0}, {48.83, 69.04, 97.44, 99.1}},
           {{79.59, 88.0, 97.0, 106.0}, {95.51, 105.6, 116.4, 127.2}}},
          2000.0,
          4,
          0.7};
}

inline DeviceProfile coral_dev() {
  return {"coral-dev",
          AcceleratorKind::tpu,
          {{600, 1200},
           {1, 2, 3, 4},
           {{30.0, 36.0, 42.0, 48.0}, {68.04, 83.28, 105.8, 111.84}},
           {{71.81, 80.0, 88.0, 96.0}, {89.76, 100.0, 110.0, 120.0}}},
          2000.0,
          4,
          0.7};
}

inline std::vector<DeviceProfile> cluster() { return {up_squared(), jetson_nano(), coral_dev()}; }

}  // namespace edgesim::defaults
