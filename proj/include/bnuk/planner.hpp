#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string_view>

#include "bnuk/field.hpp"
#include "bnuk/search.hpp"
#include "bnuk/spline.hpp"

namespace bnuk {

struct PlannerConfig {
  SearchConfig search{};
  /// Verification sample period in seconds; 0 means dt / 20.
  double sample_period = 0.0;

  void validate() const;
  double effective_sample_period() const { return sample_period > 0.0 ? sample_period : search.dt / 20.0; }
};

struct PlanRequest {
  FlatState start{};
  Vec3 goal_pos = Vec3::Zero();
  Vec3 goal_vel = Vec3::Zero();
  double t0 = 0.0;
  PlannerConfig config{};
};

struct TrajectoryReport {
  double length = 0.0;
  double duration = 0.0;
  /// Search plus spline assembly; excludes the ESDF build and verification.
  double compute_time_ms = 0.0;
  double esdf_time_ms = 0.0;
  double avg_vel = 0.0;
  double avg_acc = 0.0;
  double max_vel = 0.0;
  double max_acc = 0.0;
  double min_clearance = 0.0;
  double avg_clearance = 0.0;
  bool feasible = false;
  bool collision_free = false;
};

enum class PlanStatus { success, no_path, budget_exhausted, boundary_infeasible, verification_failed };

std::string_view to_string(PlanStatus s);

struct PlanResult {
  PlanStatus status = PlanStatus::no_path;
  /// Present on success and on verification failure.
  std::optional<UniformBSpline> spline;
  TrajectoryReport report{};
  std::size_t expansions = 0;
  /// Objective value of the returned control points.
  double cost = 0.0;
  std::size_t searched_points = 0;
  /// Reason text for boundary failures.
  std::string message;

  bool ok() const { return status == PlanStatus::success; }
};

/// Samples the spline every sample_period seconds (plus the end point) and
/// reports length, speeds, accelerations and clearance.
TrajectoryReport verify_trajectory(const UniformBSpline& spline, const DistanceField& field,
                                   const DynamicLimits& limits, double sample_period);

/// Position and derivatives up to jerk at time t.
FlatState state_at(const UniformBSpline& spline, double t);

/// Single query against a prebuilt field.
PlanResult plan(const PlanRequest& req, const DistanceField& field);

/// Plans against occupancy grids, reusing distance fields by content hash.
/// Safe to call from several threads.
class Planner {
 public:
  PlanResult plan(const PlanRequest& req, const OccupancyGrid& grid);
  std::shared_ptr<const DistanceField> field_for(const OccupancyGrid& grid, double* build_ms = nullptr);
  std::size_t cache_size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::uint64_t, std::shared_ptr<const DistanceField>> cache_;
};

}  // namespace bnuk
