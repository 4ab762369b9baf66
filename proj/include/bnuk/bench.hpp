#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bnuk/io.hpp"
#include "bnuk/mapgen.hpp"
#include "bnuk/planner.hpp"

namespace bnuk {

struct BenchQuery {
  std::string name;
  Vec3 start;
  Vec3 goal;
};

/// Center of the map to a point 1 m inside the +x side and to a point 1 m
/// inside the +x/+y corner, all at half height.
std::vector<BenchQuery> standard_queries(const MapSpec& spec, double margin = 1.0);

struct BenchRow {
  std::uint64_t seed = 0;
  std::string query;
  PlanStatus status = PlanStatus::no_path;
  TrajectoryReport report{};
  std::size_t expansions = 0;
  double cost = 0.0;
  /// Smallest ESDF value over the searched (on-grid) control points.
  double min_cp_clearance = 0.0;
};

struct MetricStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct BenchSummary {
  std::size_t maps = 0;
  std::size_t runs = 0;
  std::size_t successes = 0;
  std::size_t no_path = 0;
  std::size_t budget_exhausted = 0;
  std::size_t boundary_infeasible = 0;
  std::size_t verification_failed = 0;
  /// Over successful runs only.
  MetricStats length, duration, avg_vel, avg_acc, max_vel, max_acc, min_clearance, avg_clearance;
  MetricStats compute_time_ms, esdf_time_ms;
};

struct BenchStats {
  std::vector<BenchRow> rows;
  BenchSummary summary;
};

/// Plans every standard query on every map. Maps run on up to jobs threads;
/// rows come back in (map, query) order regardless of scheduling.
BenchStats run_benchmark(const std::vector<MapSpec>& specs, const PlannerConfig& config, unsigned jobs = 1);

/// Recomputes the summary from rows.
BenchSummary summarize(const std::vector<BenchRow>& rows, std::size_t maps);

/// Deterministic rows (no wall-clock fields).
std::string bench_rows_csv(const std::vector<BenchRow>& rows);
std::string bench_timing_csv(const std::vector<BenchRow>& rows);
/// Summary without timing; timing goes to a separate object.
nlohmann::json bench_summary_json(const BenchSummary& s);
nlohmann::json bench_timing_json(const BenchSummary& s);

struct ReplanConfig {
  PlannerConfig planner{};
  /// Sensing window (and local planning map) size in meters.
  Vec3 window{20.0, 20.0, 5.0};
  /// Local goals stay this far inside the window.
  double goal_margin = 1.5;
  /// Minimum clearance for a substitute local goal.
  double goal_clearance = 0.8;
  /// Replan once the executed point is this close to the local goal.
  double trigger_distance = 3.0;
  /// Executed trajectory is sampled and re-sensed at this period (s).
  double sim_step = 0.05;
  int max_plans = 60;
  /// Accepted final distance to the global goal.
  double arrive_tolerance = 0.5;
};

struct ReplanSegment {
  UniformBSpline spline;
  double t_begin;
  double t_end;
};

struct ReplanStats {
  bool reached = false;
  std::string failure;
  int plans = 0;
  int replans = 0;
  double length = 0.0;
  double duration = 0.0;
  double min_clearance = 0.0;
  bool collision_free = true;
  /// Largest splice mismatch in position, velocity, acceleration and jerk.
  std::array<double, 4> splice_error{0.0, 0.0, 0.0, 0.0};
  std::vector<double> compute_ms;
  std::vector<ReplanSegment> segments;
};

/// Receding-horizon simulation with perfect tracking. Obstacles become known
/// once inside the sensing window centered on the vehicle. A new plan starts
/// from the current flat state whenever the vehicle nears its local goal or
/// newly known obstacles block the remaining plan.
ReplanStats replan_sim(const OccupancyGrid& world, const Vec3& start, const Vec3& goal, const ReplanConfig& config);

/// World spec used for the replanning runs: 50x50x5 m forest, start and goal
/// near opposite corners.
MapSpec replan_world_spec(std::uint64_t seed);
Vec3 replan_start(const MapSpec& spec);
Vec3 replan_goal(const MapSpec& spec);

std::string replan_rows_csv(const std::vector<std::pair<std::uint64_t, ReplanStats>>& runs);
std::string replan_timing_csv(const std::vector<std::pair<std::uint64_t, ReplanStats>>& runs);
nlohmann::json replan_summary_json(const std::vector<std::pair<std::uint64_t, ReplanStats>>& runs);

}  // namespace bnuk
