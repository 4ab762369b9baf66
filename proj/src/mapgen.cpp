#include "bnuk/mapgen.hpp"

#include <algorithm>
#include <cmath>

namespace bnuk {
namespace {

struct Obstacle {
  bool cylinder;
  double cx, cy;
  double rx, ry;  // radius, or half-widths
  double height;
};

// Horizontal distance from a point to the obstacle footprint.
double footprint_distance(const Obstacle& o, double x, double y) {
  if (o.cylinder) return std::max(0.0, std::hypot(x - o.cx, y - o.cy) - o.rx);
  const double dx = std::max(0.0, std::abs(x - o.cx) - o.rx);
  const double dy = std::max(0.0, std::abs(y - o.cy) - o.ry);
  return std::hypot(dx, dy);
}

void rasterize(const Obstacle& o, OccupancyGrid& grid) {
  const GridGeometry& g = grid.geometry();
  const Index3 lo = g.index_of(Eigen::Vector3d(o.cx - o.rx, o.cy - o.ry, g.origin.z())).cwiseMax(Index3::Zero());
  const Index3 hi = g.index_of(Eigen::Vector3d(o.cx + o.rx, o.cy + o.ry, g.origin.z())).cwiseMin(g.dims - Index3::Ones());
  for (int iz = 0; iz < g.dims.z(); ++iz) {
    for (int iy = lo.y(); iy <= hi.y(); ++iy) {
      for (int ix = lo.x(); ix <= hi.x(); ++ix) {
        const Index3 idx(ix, iy, iz);
        const Eigen::Vector3d c = g.center(idx);
        if (c.z() - g.origin.z() > o.height) continue;
        const bool inside = o.cylinder ? std::hypot(c.x() - o.cx, c.y() - o.cy) <= o.rx
                                       : std::abs(c.x() - o.cx) <= o.rx && std::abs(c.y() - o.cy) <= o.ry;
        if (inside) grid.set_occupied(idx);
      }
    }
  }
}

}  // namespace

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void MapSpec::validate() const {
  if (!(resolution > 0.0)) throw std::invalid_argument("map resolution must be positive");
  if (!(size.array() >= resolution).all()) throw std::invalid_argument("map size must hold at least one cell per axis");
  if (obstacle_count < 0) throw std::invalid_argument("obstacle_count must be nonnegative");
  if (!(cylinder_fraction >= 0.0 && cylinder_fraction <= 1.0)) {
    throw std::invalid_argument("cylinder_fraction must lie in [0, 1]");
  }
  if (!(radius_min > 0.0 && radius_min <= radius_max)) throw std::invalid_argument("invalid obstacle radius range");
  if (!(height_min > 0.0 && height_min <= height_max)) throw std::invalid_argument("invalid obstacle height range");
  if (!(keep_free_radius >= 0.0)) throw std::invalid_argument("keep_free_radius must be nonnegative");
  if (max_attempts < 1) throw std::invalid_argument("max_attempts must be positive");
}

GridGeometry MapSpec::geometry() const {
  GridGeometry g;
  g.origin = origin;
  g.resolution = resolution;
  for (int a = 0; a < 3; ++a) g.dims[a] = static_cast<int>(std::lround(size[a] / resolution));
  g.validate();
  return g;
}

OccupancyGrid gen_random_map(const MapSpec& spec) {
  spec.validate();
  OccupancyGrid grid(spec.geometry());
  SplitMix64 rng(spec.seed);
  for (int n = 0; n < spec.obstacle_count; ++n) {
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_attempts && !placed; ++attempt) {
      Obstacle o;
      o.cylinder = rng.unit() < spec.cylinder_fraction;
      o.cx = rng.uniform(spec.origin.x(), spec.origin.x() + spec.size.x());
      o.cy = rng.uniform(spec.origin.y(), spec.origin.y() + spec.size.y());
      o.rx = rng.uniform(spec.radius_min, spec.radius_max);
      o.ry = o.cylinder ? o.rx : rng.uniform(spec.radius_min, spec.radius_max);
      o.height = rng.uniform(spec.height_min, spec.height_max);
      const bool clear = std::all_of(spec.keep_free.begin(), spec.keep_free.end(), [&](const Eigen::Vector3d& k) {
        return footprint_distance(o, k.x(), k.y()) >= spec.keep_free_radius;
      });
      if (!clear) continue;
      rasterize(o, grid);
      placed = true;
    }
    if (!placed) throw OverDenseError("could not place obstacle " + std::to_string(n) + " within the attempt limit");
  }
  return grid;
}

}  // namespace bnuk
