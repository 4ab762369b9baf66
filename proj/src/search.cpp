#include "bnuk/search.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace bnuk {
namespace {

constexpr double kSnapSlack = 1e-9;

bool voxel_less(const Index3& a, const Index3& b) {
  return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
}

// Open-set ordering: smaller f, then larger g, then voxel index.
struct OpenKey {
  double f;
  double g;
  Index3 voxel;
  NodeId id;

  bool operator<(const OpenKey& o) const {
    if (f != o.f) return f < o.f;
    if (g != o.g) return g > o.g;
    if (voxel != o.voxel) return voxel_less(voxel, o.voxel);
    return id < o.id;
  }
};

struct PopsLater {
  bool operator()(const OpenKey& a, const OpenKey& b) const { return b < a; }
};

// Binary heap with lazy deletion: an entry is stale once its node is closed
// or has been re-keyed with a lower g.
class OpenSet {
 public:
  void push(const SearchNode& n, NodeId id) { heap_.push({n.f, n.g, n.voxel, id}); }

  std::optional<NodeId> pop(const SearchTree& tree) {
    while (!heap_.empty()) {
      const OpenKey top = heap_.top();
      heap_.pop();
      const SearchNode& n = tree.node(top.id);
      if (!n.closed && n.f == top.f && n.g == top.g) return top.id;
    }
    return std::nullopt;
  }

 private:
  std::priority_queue<OpenKey, std::vector<OpenKey>, PopsLater> heap_;
};

const std::array<Vec3, 26>& lattice_directions() {
  static const std::array<Vec3, 26> dirs = [] {
    std::array<Vec3, 26> out;
    std::size_t n = 0;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          out[n++] = Vec3(dx, dy, dz).normalized();
        }
    return out;
  }();
  return dirs;
}

// Snapping works in cell units relative to the node's voxel, with cell
// centers on integer offsets. For each direction the nearest center to the
// target is chosen among the 3x3x3 block around the target's cell, keeping
// only centers no farther than the step from the node. Offset 0 (the node's
// own voxel) is never chosen. Exact ties go to the center nearer the
// preferred point (the goal) when one is given, then lexicographically.
constexpr double kCruiseMargin = 1e-6;

class Snapper {
 public:
  struct Snap {
    std::optional<Index3> offset;
    bool tied = false;
  };
  using Offsets = std::array<Snap, 26>;

  Snapper(const Vec3& rel, double radius, std::optional<Vec3> prefer = std::nullopt)
      : rel_(rel), prefer_(prefer), radius_(radius), radius_sq_(radius * radius + kSnapSlack) {}

  /// in_bounds(offset) says whether the offset cell exists.
  template <typename InBounds>
  Snap operator()(const Vec3& dir, const InBounds& in_bounds) const {
    const double t[3] = {rel_.x() + radius_ * dir.x(), rel_.y() + radius_ * dir.y(), rel_.z() + radius_ * dir.z()};
    int c[3];
    bool near_half = false;
    for (int a = 0; a < 3; ++a) {
      c[a] = static_cast<int>(std::floor(t[a] + 0.5));
      near_half = near_half || std::abs(t[a] - c[a]) >= 0.5 - 1e-6;
    }
    // The rounded cell is the nearest center overall; accept it directly
    // unless a coordinate sits near a half-cell tie.
    if (!near_half && admissible(c[0], c[1], c[2], in_bounds)) return {Index3(c[0], c[1], c[2]), false};

    Snap best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int x = c[0] + dx, y = c[1] + dy, z = c[2] + dz;
          const double d2 = sq(x - t[0]) + sq(y - t[1]) + sq(z - t[2]);
          if (d2 > best_d2 + 1e-12 || !admissible(x, y, z, in_bounds)) continue;
          const Index3 off(x, y, z);
          if (d2 < best_d2 - 1e-12) {
            best = {off, false};
            best_d2 = d2;
          } else {
            best.tied = true;
            if (preferred(off, *best.offset)) best.offset = off;
          }
        }
    return best;
  }

  /// Offsets for all 26 directions ignoring the grid bounds.
  Offsets unbounded() const {
    Offsets out;
    const auto& dirs = lattice_directions();
    for (std::size_t i = 0; i < dirs.size(); ++i) out[i] = (*this)(dirs[i], [](int, int, int) { return true; });
    return out;
  }

 private:
  static double sq(double v) { return v * v; }

  template <typename InBounds>
  bool admissible(int x, int y, int z, const InBounds& in_bounds) const {
    if (x == 0 && y == 0 && z == 0) return false;
    if (!in_bounds(x, y, z)) return false;
    return sq(x - rel_.x()) + sq(y - rel_.y()) + sq(z - rel_.z()) <= radius_sq_;
  }

  bool preferred(const Index3& a, const Index3& b) const {
    if (prefer_) {
      const double da = (a.cast<double>() - *prefer_).squaredNorm();
      const double db = (b.cast<double>() - *prefer_).squaredNorm();
      if (da < db - 1e-12) return true;
      if (db < da - 1e-12) return false;
    }
    return voxel_less(a, b);
  }

  Vec3 rel_;
  std::optional<Vec3> prefer_;
  double radius_;
  double radius_sq_;
};

// Per-search cache of snap offsets for on-grid nodes, keyed by step length.
// A cached offset stays valid whenever its cell is in bounds, since the bounds
// only remove alternatives. Tied entries depend on the node and are redone.
class SnapCache {
 public:
  const Snapper::Offsets& get(double radius) {
    const auto key = std::bit_cast<std::uint64_t>(radius);
    auto it = table_.find(key);
    if (it == table_.end()) it = table_.emplace(key, Snapper(Vec3::Zero(), radius).unbounded()).first;
    return it->second;
  }

 private:
  std::unordered_map<std::uint64_t, Snapper::Offsets> table_;
};

void expand_into(const SearchNode& node, const DistanceField& field, const SearchConfig& cfg, double step,
                 const Vec3* toward, SnapCache* cache, std::vector<ExpansionCandidate>& out) {
  out.clear();
  if (step <= 0.0) return;
  const GridGeometry& g = field.geometry();
  const auto to_cells = [&](const Vec3& p) -> Vec3 {
    return (p - g.origin) / g.resolution - Vec3::Constant(0.5) - node.voxel.cast<double>();
  };
  Vec3 rel = to_cells(node.position);
  const bool on_grid = node.position == g.center(node.voxel);
  if (on_grid) rel.setZero();
  // A step of exactly v_max*dt can never pass the strict hull test, so the
  // snap radius stays just below it.
  const double radius = std::min(step, cfg.limits.v_max * cfg.dt * (1.0 - kCruiseMargin)) / g.resolution;
  const Snapper snap(rel, radius, toward ? std::optional<Vec3>(to_cells(*toward)) : std::nullopt);
  auto in_bounds = [&](int x, int y, int z) { return g.in_bounds(node.voxel + Index3(x, y, z)); };
  const Snapper::Offsets* cached = on_grid && cache ? &cache->get(radius) : nullptr;

  const auto& dirs = lattice_directions();
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    std::optional<Index3> off;
    if (cached) {
      const auto& c = (*cached)[i];
      if (!c.offset) continue;
      const bool reuse = !c.tied && in_bounds(c.offset->x(), c.offset->y(), c.offset->z());
      off = reuse ? c.offset : snap(dirs[i], in_bounds).offset;
    } else {
      off = snap(dirs[i], in_bounds).offset;
    }
    if (!off) continue;
    const Index3 idx = node.voxel + *off;
    if (field.at(idx) < cfg.tau) continue;
    const bool seen = std::any_of(out.begin(), out.end(), [&](const ExpansionCandidate& e) { return e.voxel == idx; });
    if (!seen) out.push_back({idx, g.center(idx)});
  }
}

void write_vec(std::ostream& os, const Vec3& v) { os << '[' << v.x() << ',' << v.y() << ',' << v.z() << ']'; }

struct Completion {
  std::vector<Vec3> points;
  double added_cost = 0.0;
};

// Closes the chain at the goal. Up to kMaxSettlePoints points on the goal's
// constant-velocity line go before the two solved suffix points; with three of
// them the suffix lands exactly on that line.
std::optional<Completion> complete_at_goal(const SearchTree& tree, NodeId id, const Vec3& goal_pos, const Vec3& goal_vel,
                                           const WindowEvaluator& eval, const SearchConfig& cfg) {
  const std::vector<Vec3> chain = tree.retrieve_all(id);
  const Vec3 spacing = goal_vel * cfg.dt;
  for (int settle = 0; settle <= kMaxSettlePoints; ++settle) {
    std::vector<Vec3> pts = chain;
    for (int k = 1; k <= settle; ++k) pts.push_back(goal_pos + static_cast<double>(k - settle) * spacing);
    const std::size_t n = pts.size();
    const std::array<Vec3, 4> tail{pts[n - 4], pts[n - 3], pts[n - 2], pts[n - 1]};
    const auto suffix = solve_goal_cps(tail, goal_pos, goal_vel, cfg.dt);
    pts.push_back(suffix[0]);
    pts.push_back(suffix[1]);

    Completion out;
    bool ok = true;
    for (std::size_t end = chain.size(); end < pts.size() && ok; ++end) {
      const Window w = make_window(std::span<const Vec3>(pts).subspan(end - 5, 6));
      ok = w.allFinite() && eval.feasible(w);
      if (ok) out.added_cost += (cfg.lambda == 0.0 ? 0.0 : cfg.lambda * eval.cost(w)) + cfg.dt;
    }
    if (ok) {
      out.points = std::move(pts);
      return out;
    }
  }
  return std::nullopt;
}

}  // namespace

void SearchConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  limits.validate();
  if (!(tau >= 0.0)) throw std::invalid_argument("tau must be nonnegative");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("cost weights must be nonnegative");
  }
  if (!(goal_tolerance >= 0.0)) throw std::invalid_argument("goal tolerance must be nonnegative");
  if (max_expansions == 0) throw std::invalid_argument("max_expansions must be positive");
  if (!(taper >= 0.0)) throw std::invalid_argument("taper must be nonnegative");
}

NodeId SearchTree::add(const SearchNode& node) {
  nodes_.push_back(node);
  return static_cast<NodeId>(nodes_.size() - 1);
}

std::vector<Vec3> SearchTree::retrieve(NodeId id, std::size_t m) const {
  if (m == 0) throw std::invalid_argument("retrieve needs at least one point");
  const SearchNode& start = node(id);
  const std::size_t available = prefix_.size() + static_cast<std::size_t>(start.depth);
  if (m > available) throw std::invalid_argument("retrieve asked for more points than the chain holds");
  std::vector<Vec3> out(m);
  std::size_t slot = m;
  NodeId cur = id;
  while (slot > 0 && cur != kNoNode && node(cur).depth > 0) {
    out[--slot] = node(cur).position;
    cur = node(cur).parent;
  }
  for (std::size_t p = prefix_.size(); slot > 0;) out[--slot] = prefix_[--p];
  return out;
}

std::vector<Vec3> SearchTree::retrieve_all(NodeId id) const {
  return retrieve(id, prefix_.size() + static_cast<std::size_t>(node(id).depth));
}

Window SearchTree::window_with(NodeId id, const Vec3& next) const {
  Window w;
  w.row(5) = next.transpose();
  int row = 4;
  NodeId cur = id;
  while (row >= 0 && cur != kNoNode && node(cur).depth > 0) {
    w.row(row--) = node(cur).position.transpose();
    cur = node(cur).parent;
  }
  for (std::size_t p = prefix_.size(); row >= 0;) w.row(row--) = prefix_[--p].transpose();
  return w;
}

double expansion_step(const Vec3& p, const DistanceField& field, const SearchConfig& cfg,
                      const std::optional<TaperHint>& hint) {
  double step = step_length(field.distance_at(p), cfg.step_params());
  if (hint && cfg.taper > 0.0) {
    // Fraction of the speed that can still brake to (or build up from) the
    // boundary speed over the remaining distance at a_max.
    auto cap_at = [&](const Vec3& q, double speed) {
      const double d = (p - q).norm();
      return cfg.taper * std::sqrt(speed * speed + 2.0 * cfg.limits.a_max * d) * cfg.dt;
    };
    const double near_start = cap_at(hint->start, hint->start_speed);
    const double near_goal = cap_at(hint->goal, hint->goal_speed);
    const double cap = std::max(std::min(near_start, near_goal), field.geometry().resolution);
    step = std::min(step, cap);
  }
  return step;
}

std::vector<ExpansionCandidate> node_expansion(const SearchNode& node, const DistanceField& field,
                                               const SearchConfig& cfg, const std::optional<TaperHint>& hint) {
  std::vector<ExpansionCandidate> out;
  const double step = expansion_step(node.position, field, cfg, hint);
  expand_into(node, field, cfg, step, hint ? &hint->goal : nullptr, nullptr, out);
  return out;
}

double heuristic_cost(const Vec3& pos, const Vec3& goal, double v_max) {
  std::array<double, 3> d{std::abs(pos.x() - goal.x()), std::abs(pos.y() - goal.y()), std::abs(pos.z() - goal.z())};
  std::sort(d.begin(), d.end(), std::greater<>());
  const double diag = (d[0] - d[1]) + std::sqrt(2.0) * (d[1] - d[2]) + std::sqrt(3.0) * d[2];
  return diag / v_max;
}

double tentative_cost(double g_cur, const Window& local, const SearchConfig& cfg) {
  const double control = cfg.lambda == 0.0 ? 0.0 : cfg.lambda * span_cost(local, cfg.dt, cfg.weights);
  return g_cur + control + cfg.dt;
}

std::string_view to_string(SearchStatus s) {
  switch (s) {
    case SearchStatus::success:
      return "success";
    case SearchStatus::no_path:
      return "no-path";
    case SearchStatus::budget_exhausted:
      return "budget-exhausted";
  }
  return "unknown";
}

SearchResult bnuk_search(const FlatState& start, const Vec3& goal_pos, const Vec3& goal_vel,
                         const DistanceField& field, const SearchConfig& cfg, const SearchOptions& options) {
  cfg.validate();
  if (!start.finite() || !goal_pos.allFinite() || !goal_vel.allFinite()) {
    throw std::invalid_argument("start and goal must be finite");
  }
  if (!(field.distance_at(start.pos) > cfg.tau)) throw std::invalid_argument("start clearance is not above tau");
  if (!(field.distance_at(goal_pos) > cfg.tau)) throw std::invalid_argument("goal clearance is not above tau");

  const GridGeometry& geom = field.geometry();
  const WindowEvaluator eval(cfg.dt, cfg.limits, cfg.weights);
  const TaperHint hint{start.pos, start.vel.norm(), goal_pos, goal_vel.norm()};
  auto heuristic = [&](const Vec3& p) { return cfg.use_heuristic ? heuristic_cost(p, goal_pos, cfg.limits.v_max) : 0.0; };
  auto control_cost = [&](const Window& w) { return cfg.lambda == 0.0 ? 0.0 : cfg.lambda * eval.cost(w); };

  SearchTree tree(solve_start_cps(start, cfg.dt));
  const Vec3 root_pos = tree.prefix().back();
  const Index3 root_voxel = geom.index_of(root_pos);
  if (!geom.in_bounds(root_voxel)) throw std::invalid_argument("start control points leave the map");

  std::vector<NodeId> by_voxel(geom.cell_count(), kNoNode);
  OpenSet open;
  SnapCache snap_cache;
  std::vector<ExpansionCandidate> candidates;

  SearchNode root;
  root.voxel = root_voxel;
  root.position = root_pos;
  root.g = 0.0;
  root.f = heuristic(root_pos);
  const NodeId root_id = tree.add(root);
  by_voxel[geom.linear(root_voxel)] = root_id;
  open.push(root, root_id);

  SearchResult result;
  while (true) {
    const std::optional<NodeId> next = open.pop(tree);
    if (!next) break;
    if (result.expansions >= cfg.max_expansions) {
      result.status = SearchStatus::budget_exhausted;
      return result;
    }
    const NodeId cur_id = *next;
    tree.node(cur_id).closed = true;
    ++result.expansions;
    const SearchNode cur = tree.node(cur_id);

    if (options.record_pops) {
      result.popped_keys.push_back(cur.f);
      result.popped_g.push_back(cur.g);
    }

    const double step = expansion_step(cur.position, field, cfg, hint);
    if (options.trace) {
      *options.trace << "{\"voxel\":[" << cur.voxel.x() << ',' << cur.voxel.y() << ',' << cur.voxel.z()
                     << "],\"pos\":";
      write_vec(*options.trace, cur.position);
      *options.trace << ",\"g\":" << cur.g << ",\"f\":" << cur.f << ",\"depth\":" << cur.depth
                     << ",\"step\":" << step << "}\n";
    }

    if ((cur.position - goal_pos).norm() <= cfg.goal_tolerance) {
      if (auto done = complete_at_goal(tree, cur_id, goal_pos, goal_vel, eval, cfg)) {
        result.status = SearchStatus::success;
        result.control_points = std::move(done->points);
        result.cost = cur.g + done->added_cost;
        result.searched_points = static_cast<std::size_t>(cur.depth);
        return result;
      }
    }

    const Window base = tree.window_with(cur_id, cur.position);
    expand_into(cur, field, cfg, step, &goal_pos, &snap_cache, candidates);
    for (const ExpansionCandidate& cand : candidates) {
      const std::size_t slot = geom.linear(cand.voxel);
      const NodeId existing = by_voxel[slot];
      if (existing != kNoNode && tree.node(existing).closed) continue;
      Window w = base;
      w.row(5) = cand.position.transpose();
      if (!eval.feasible(w)) continue;
      const double g = cur.g + control_cost(w) + cfg.dt;
      if (existing != kNoNode) {
        SearchNode& nb = tree.node(existing);
        if (g < nb.g) {
          nb.g = g;
          nb.f = g + heuristic(nb.position);
          nb.parent = cur_id;
          nb.depth = cur.depth + 1;
          open.push(nb, existing);
        }
        continue;
      }
      SearchNode nb;
      nb.voxel = cand.voxel;
      nb.position = cand.position;
      nb.g = g;
      nb.f = g + heuristic(cand.position);
      nb.parent = cur_id;
      nb.depth = cur.depth + 1;
      const NodeId id = tree.add(nb);
      by_voxel[slot] = id;
      open.push(nb, id);
    }
  }
  result.status = SearchStatus::no_path;
  return result;
}

}  // namespace bnuk
