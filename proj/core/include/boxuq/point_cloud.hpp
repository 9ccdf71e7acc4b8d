#pragma once

#include <cstddef>
#include <vector>

namespace boxuq {

// One LiDAR return in the ground frame (x forward, y left, z up).
struct LidarPoint {
  float x = 0.f;
  float y = 0.f;
  float z = 0.f;
  float intensity = 0.f;
};

using PointCloud = std::vector<LidarPoint>;

}  // namespace boxuq
