#include "bnuk/field.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bnuk {
namespace {

constexpr std::int64_t kUnreached = std::numeric_limits<std::int64_t>::max() / 4;

// Parabola intersection abscissa kept as an exact fraction num/den, den > 0.
struct Boundary {
  std::int64_t num;
  std::int64_t den;
};

// 1-D squared distance transform over one scan line (lower envelope of
// parabolas rooted at the finite samples).
class LineTransform {
 public:
  explicit LineTransform(std::size_t max_len) : sites_(max_len), bounds_(max_len) {}

  void run(const std::vector<std::int64_t>& f, std::vector<std::int64_t>& out) {
    const auto n = static_cast<std::int64_t>(f.size());
    std::int64_t k = -1;
    for (std::int64_t q = 0; q < n; ++q) {
      const std::int64_t fq = f[static_cast<std::size_t>(q)];
      if (fq >= kUnreached) continue;
      Boundary s{0, 1};
      while (k >= 0) {
        const std::int64_t v = sites_[static_cast<std::size_t>(k)];
        const std::int64_t fv = f[static_cast<std::size_t>(v)];
        s = Boundary{(fq + q * q) - (fv + v * v), 2 * (q - v)};
        if (k == 0) break;
        const Boundary& zk = bounds_[static_cast<std::size_t>(k)];
        if (s.num * zk.den <= zk.num * s.den) {
          --k;
        } else {
          break;
        }
      }
      ++k;
      sites_[static_cast<std::size_t>(k)] = q;
      bounds_[static_cast<std::size_t>(k)] = s;
    }

    if (k < 0) {
      std::fill(out.begin(), out.begin() + n, kUnreached);
      return;
    }
    std::int64_t j = 0;
    for (std::int64_t x = 0; x < n; ++x) {
      while (j < k) {
        const Boundary& next = bounds_[static_cast<std::size_t>(j + 1)];
        if (next.num < x * next.den) {
          ++j;
        } else {
          break;
        }
      }
      const std::int64_t v = sites_[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(x)] = (x - v) * (x - v) + f[static_cast<std::size_t>(v)];
    }
  }

 private:
  std::vector<std::int64_t> sites_;
  std::vector<Boundary> bounds_;
};

void transform_axis(const GridGeometry& g, int axis, std::vector<std::int64_t>& data) {
  const int n = g.dims[axis];
  const int a1 = (axis + 1) % 3;
  const int a2 = (axis + 2) % 3;
  LineTransform line(static_cast<std::size_t>(n));
  std::vector<std::int64_t> in(static_cast<std::size_t>(n));
  std::vector<std::int64_t> out(static_cast<std::size_t>(n));
  Index3 idx;
  for (int j = 0; j < g.dims[a2]; ++j) {
    for (int i = 0; i < g.dims[a1]; ++i) {
      idx[a1] = i;
      idx[a2] = j;
      for (int x = 0; x < n; ++x) {
        idx[axis] = x;
        in[static_cast<std::size_t>(x)] = data[g.linear(idx)];
      }
      line.run(in, out);
      for (int x = 0; x < n; ++x) {
        idx[axis] = x;
        data[g.linear(idx)] = out[static_cast<std::size_t>(x)];
      }
    }
  }
}

}  // namespace

void GridGeometry::validate() const {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) throw std::invalid_argument("grid resolution must be positive");
  if ((dims.array() < 1).any()) throw std::invalid_argument("grid dimensions must be at least 1");
  if (!origin.allFinite()) throw std::invalid_argument("grid origin must be finite");
}

Index3 GridGeometry::index_of(const Eigen::Vector3d& p) const {
  const Eigen::Vector3d rel = (p - origin) / resolution;
  return Index3(static_cast<int>(std::floor(rel.x())), static_cast<int>(std::floor(rel.y())),
                static_cast<int>(std::floor(rel.z())));
}

Index3 GridGeometry::unlinear(std::size_t offset) const {
  const auto nx = static_cast<std::size_t>(dims.x());
  const auto ny = static_cast<std::size_t>(dims.y());
  return Index3(static_cast<int>(offset % nx), static_cast<int>((offset / nx) % ny), static_cast<int>(offset / (nx * ny)));
}

OccupancyGrid::OccupancyGrid(const GridGeometry& geometry) : geometry_(geometry) {
  geometry_.validate();
  cells_.assign(geometry_.cell_count(), 0);
}

bool OccupancyGrid::mark_point(const Eigen::Vector3d& p) {
  if (!p.allFinite()) return false;
  const Index3 idx = geometry_.index_of(p);
  if (!geometry_.in_bounds(idx)) return false;
  set_occupied(idx);
  return true;
}

std::size_t OccupancyGrid::occupied_count() const {
  std::size_t n = 0;
  for (auto c : cells_) n += c != 0;
  return n;
}

std::uint64_t OccupancyGrid::content_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  mix(geometry_.origin.data(), sizeof(double) * 3);
  mix(&geometry_.resolution, sizeof(double));
  mix(geometry_.dims.data(), sizeof(int) * 3);
  mix(cells_.data(), cells_.size());
  return h;
}

DistanceField::DistanceField(const GridGeometry& geometry, std::vector<double> distances)
    : geometry_(geometry), dist_(std::move(distances)) {
  geometry_.validate();
  if (dist_.size() != geometry_.cell_count()) throw std::invalid_argument("distance array does not match grid size");
}

double DistanceField::distance_at(const Eigen::Vector3d& p) const {
  if (!p.allFinite()) return 0.0;
  const Index3 idx = geometry_.index_of(p);
  if (!geometry_.in_bounds(idx)) return 0.0;
  return at(idx);
}

std::vector<std::int64_t> squared_index_distances(const OccupancyGrid& grid) {
  const GridGeometry& g = grid.geometry();
  std::vector<std::int64_t> data(g.cell_count());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = grid.cells()[i] ? 0 : kUnreached;
  for (int axis = 0; axis < 3; ++axis) transform_axis(g, axis, data);
  return data;
}

DistanceField build_esdf(const OccupancyGrid& grid) {
  const GridGeometry& g = grid.geometry();
  const std::vector<std::int64_t> sq = squared_index_distances(grid);
  std::vector<double> dist(sq.size());
  const double diagonal = g.diagonal();
  for (std::size_t i = 0; i < sq.size(); ++i) {
    dist[i] = sq[i] >= kUnreached ? diagonal : g.resolution * std::sqrt(static_cast<double>(sq[i]));
  }
  return DistanceField(g, std::move(dist));
}

void StepParams::validate() const {
  if (!(tau >= 0.0)) throw std::invalid_argument("tau must be nonnegative");
  if (!(v_max > 0.0) || !(dt > 0.0)) throw std::invalid_argument("v_max and dt must be positive");
}

double step_length(double d, const StepParams& p) {
  const double cap = p.v_max * p.dt;
  if (d <= p.tau) return 0.0;
  if (d - p.tau <= cap) return d - p.tau;
  return cap;
}

}  // namespace bnuk
