#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "bnuk/field.hpp"
#include "bnuk/spline.hpp"

namespace bnuk {

struct SearchConfig {
  double dt = 0.5;
  DynamicLimits limits{};
  double tau = 0.4;
  double lambda = 0.01;
  CostWeights weights = kDefaultCostWeights;
  double goal_tolerance = 0.4;
  std::size_t max_expansions = 200000;
  /// Diagonal-distance heuristic; false runs the same search in Dijkstra mode.
  bool use_heuristic = true;
  /// Caps the step near the start and goal at this fraction of the distance
  /// to them (never below one cell or the boundary speed times dt), so the
  /// chain can speed up from and slow down to the boundary velocities.
  /// 0 disables it.
  double taper = 0.7;

  void validate() const;
  StepParams step_params() const { return StepParams{tau, limits.v_max, dt}; }
};

/// Most goal-line points inserted before the two solved goal points.
inline constexpr int kMaxSettlePoints = 3;

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

struct SearchNode {
  Index3 voxel = Index3::Zero();
  /// Cell center, except the root which sits on the last start control point.
  Vec3 position = Vec3::Zero();
  double g = 0.0;
  double f = 0.0;
  NodeId parent = kNoNode;
  /// Number of searched control points on the chain ending here (root = 0).
  int depth = 0;
  bool closed = false;
};

/// Node storage plus the off-grid start prefix; answers window queries.
class SearchTree {
 public:
  explicit SearchTree(const std::array<Vec3, 5>& prefix) : prefix_(prefix) {}

  NodeId add(const SearchNode& node);
  const SearchNode& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
  SearchNode& node(NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return nodes_.size(); }
  const std::array<Vec3, 5>& prefix() const { return prefix_; }

  /// Last m control points ending at node id, oldest first; the start prefix
  /// fills in when the chain is shorter than m.
  std::vector<Vec3> retrieve(NodeId id, std::size_t m) const;
  /// Prefix followed by the whole chain (5 + depth points).
  std::vector<Vec3> retrieve_all(NodeId id) const;
  /// Window formed by the five points ending at id and one more point.
  Window window_with(NodeId id, const Vec3& next) const;

 private:
  std::array<Vec3, 5> prefix_;
  std::vector<SearchNode> nodes_;
};

/// Boundary positions and speeds used to taper the step.
struct TaperHint {
  Vec3 start;
  double start_speed = 0.0;
  Vec3 goal;
  double goal_speed = 0.0;
};

struct ExpansionCandidate {
  Index3 voxel;
  Vec3 position;
};

/// Step length used when expanding from position p.
double expansion_step(const Vec3& p, const DistanceField& field, const SearchConfig& cfg,
                      const std::optional<TaperHint>& hint = std::nullopt);

/// Candidates in the 26 lattice directions at the clearance-dependent step.
/// Each target point is snapped to the nearest cell center whose distance
/// from the node does not exceed the step (and stays below v_max*dt); exact
/// ties go to the center nearer hint->goal, then lexicographically.
/// Self-snaps, duplicates and cells with clearance below tau are dropped.
std::vector<ExpansionCandidate> node_expansion(const SearchNode& node, const DistanceField& field,
                                               const SearchConfig& cfg,
                                               const std::optional<TaperHint>& hint = std::nullopt);

/// Diagonal (octile) distance divided by v_max.
double heuristic_cost(const Vec3& pos, const Vec3& goal, double v_max);

/// g_cur + lambda * span cost + dt.
double tentative_cost(double g_cur, const Window& local, const SearchConfig& cfg);

enum class SearchStatus { success, no_path, budget_exhausted };

std::string_view to_string(SearchStatus s);

struct SearchResult {
  SearchStatus status = SearchStatus::no_path;
  /// Start prefix, searched points, goal suffix.
  std::vector<Vec3> control_points;
  std::size_t expansions = 0;
  /// Objective of the assembled control points: sum of lambda*E + dt per span.
  double cost = 0.0;
  std::size_t searched_points = 0;
  /// Key (f) of every popped node in pop order; filled when requested.
  std::vector<double> popped_keys;
  std::vector<double> popped_g;
};

struct SearchOptions {
  /// Newline-delimited JSON trace of expanded nodes.
  std::ostream* trace = nullptr;
  bool record_pops = false;
};

/// Best-first search over control point placements. Throws
/// std::invalid_argument when start or goal clearance is not above tau or
/// either lies outside the field.
SearchResult bnuk_search(const FlatState& start, const Vec3& goal_pos, const Vec3& goal_vel,
                         const DistanceField& field, const SearchConfig& cfg, const SearchOptions& options = {});

}  // namespace bnuk
