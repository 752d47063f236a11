#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace hopc {

using Point3 = Eigen::Vector3d;

/// One depth-sensor snapshot. May be empty (sensor dropout).
struct PointCloudFrame {
  std::vector<Point3> points;
};

/// Ordered frames; the frame's position in `frames` is its time index.
/// Frame indices are zero-based throughout the library.
struct PointCloudSequence {
  std::vector<PointCloudFrame> frames;

  std::size_t num_frames() const noexcept { return frames.size(); }
  std::size_t num_points() const noexcept {
    std::size_t n = 0;
    for (const auto& f : frames) n += f.points.size();
    return n;
  }
  bool empty() const noexcept { return num_points() == 0; }
};

}  // namespace hopc
