#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bnuk/field.hpp"

namespace bnuk {

/// Random forest-style map: vertical cylinders and axis-aligned boxes
/// standing on the floor.
struct MapSpec {
  std::uint64_t seed = 1;
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d size{20.0, 20.0, 4.0};
  double resolution = 0.2;
  int obstacle_count = 60;
  /// Share of obstacles that are cylinders; the rest are boxes.
  double cylinder_fraction = 0.7;
  /// Cylinder radius, or box half-width per horizontal axis.
  double radius_min = 0.2;
  double radius_max = 0.6;
  double height_min = 2.0;
  double height_max = 4.0;
  /// Horizontal discs that obstacles may not intrude on.
  std::vector<Eigen::Vector3d> keep_free;
  double keep_free_radius = 1.0;
  int max_attempts = 100;

  void validate() const;
  GridGeometry geometry() const;
};

class OverDenseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seeded, reproducible grid. Throws OverDenseError when an obstacle cannot be
/// placed within max_attempts draws.
OccupancyGrid gen_random_map(const MapSpec& spec);

/// Small deterministic generator with a fixed output mapping, so maps do not
/// depend on the standard library's distribution implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

 private:
  std::uint64_t state_;
};

}  // namespace bnuk
