#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace bnuk {

using Index3 = Eigen::Vector3i;

/// Axis-aligned voxel lattice. Cell (i,j,k) spans
/// [origin + (i,j,k)*resolution, origin + (i+1,j+1,k+1)*resolution).
struct GridGeometry {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  double resolution = 0.2;
  Index3 dims = Index3::Ones();

  void validate() const;

  std::size_t cell_count() const {
    return static_cast<std::size_t>(dims.x()) * static_cast<std::size_t>(dims.y()) * static_cast<std::size_t>(dims.z());
  }
  bool in_bounds(const Index3& idx) const {
    return (idx.array() >= 0).all() && (idx.array() < dims.array()).all();
  }
  /// Cell containing p (may be out of bounds).
  Index3 index_of(const Eigen::Vector3d& p) const;
  Eigen::Vector3d center(const Index3& idx) const {
    return origin + (idx.cast<double>().array() + 0.5).matrix() * resolution;
  }
  /// x-fastest linear offset; idx must be in bounds.
  std::size_t linear(const Index3& idx) const {
    return static_cast<std::size_t>(idx.x()) +
           static_cast<std::size_t>(dims.x()) *
               (static_cast<std::size_t>(idx.y()) + static_cast<std::size_t>(dims.y()) * static_cast<std::size_t>(idx.z()));
  }
  Index3 unlinear(std::size_t offset) const;
  /// Length of the box diagonal in meters.
  double diagonal() const { return resolution * dims.cast<double>().norm(); }
  Eigen::Vector3d extent() const { return dims.cast<double>() * resolution; }

  bool operator==(const GridGeometry&) const = default;
};

class OccupancyGrid {
 public:
  explicit OccupancyGrid(const GridGeometry& geometry);

  const GridGeometry& geometry() const { return geometry_; }

  bool occupied(const Index3& idx) const { return cells_[geometry_.linear(idx)] != 0; }
  void set_occupied(const Index3& idx, bool value = true) { cells_[geometry_.linear(idx)] = value ? 1 : 0; }
  /// Marks the cell containing p; points outside the grid are ignored.
  /// Returns whether a cell was marked.
  bool mark_point(const Eigen::Vector3d& p);

  const std::vector<std::uint8_t>& cells() const { return cells_; }
  std::vector<std::uint8_t>& cells() { return cells_; }
  std::size_t occupied_count() const;

  /// FNV-1a over geometry and occupancy; used as a cache key.
  std::uint64_t content_hash() const;

  bool operator==(const OccupancyGrid&) const = default;

 private:
  GridGeometry geometry_;
  std::vector<std::uint8_t> cells_;
};

/// Per-cell Euclidean distance (meters) from each cell center to the nearest
/// occupied cell center. Occupied cells hold 0; a grid without obstacles
/// holds the box diagonal everywhere.
class DistanceField {
 public:
  DistanceField(const GridGeometry& geometry, std::vector<double> distances);

  const GridGeometry& geometry() const { return geometry_; }
  double at(const Index3& idx) const { return dist_[geometry_.linear(idx)]; }
  const std::vector<double>& values() const { return dist_; }

  /// Nearest-cell lookup; points outside the grid read as 0.
  double distance_at(const Eigen::Vector3d& p) const;

 private:
  GridGeometry geometry_;
  std::vector<double> dist_;
};

/// Exact distance transform: one lower-envelope pass of squared distances
/// per axis, integer arithmetic throughout.
DistanceField build_esdf(const OccupancyGrid& grid);

/// Squared index-space distances computed by the same transform; exposed so
/// tests can compare integer results exactly.
std::vector<std::int64_t> squared_index_distances(const OccupancyGrid& grid);

struct StepParams {
  double tau = 0.4;
  double v_max = 1.6;
  double dt = 0.5;

  void validate() const;
};

/// Clearance-to-step mapping: 0 up to tau, then d - tau, saturating at v_max*dt.
double step_length(double d, const StepParams& p);

}  // namespace bnuk
