#include "bnuk/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace bnuk {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

void PlannerConfig::validate() const {
  search.validate();
  if (!(sample_period >= 0.0) || !std::isfinite(sample_period)) {
    throw std::invalid_argument("sample_period must be nonnegative");
  }
}

std::string_view to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::success:
      return "success";
    case PlanStatus::no_path:
      return "no-path";
    case PlanStatus::budget_exhausted:
      return "budget-exhausted";
    case PlanStatus::boundary_infeasible:
      return "boundary-infeasible";
    case PlanStatus::verification_failed:
      return "verification-failed";
  }
  return "unknown";
}

TrajectoryReport verify_trajectory(const UniformBSpline& spline, const DistanceField& field,
                                   const DynamicLimits& limits, double sample_period) {
  if (!(sample_period > 0.0)) throw std::invalid_argument("sample period must be positive");
  TrajectoryReport r;
  r.duration = spline.duration();
  const auto n = static_cast<std::size_t>(std::ceil(r.duration / sample_period - 1e-9));
  double acc_sum = 0.0;
  double clearance_sum = 0.0;
  r.min_clearance = std::numeric_limits<double>::infinity();
  Vec3 prev = Vec3::Zero();
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = i == n ? spline.t_end() : spline.t0() + static_cast<double>(i) * sample_period;
    const Vec3 p = spline.evaluate(t, 0);
    const double v = limits.magnitude(spline.evaluate(t, 1));
    const double a = limits.magnitude(spline.evaluate(t, 2));
    const double d = field.distance_at(p);
    if (i > 0) r.length += (p - prev).norm();
    prev = p;
    r.max_vel = std::max(r.max_vel, v);
    r.max_acc = std::max(r.max_acc, a);
    acc_sum += a;
    clearance_sum += d;
    r.min_clearance = std::min(r.min_clearance, d);
  }
  const double samples = static_cast<double>(n + 1);
  r.avg_vel = r.duration > 0.0 ? r.length / r.duration : 0.0;
  r.avg_acc = acc_sum / samples;
  r.avg_clearance = clearance_sum / samples;
  r.feasible = r.max_vel < limits.v_max && r.max_acc < limits.a_max;
  r.collision_free = r.min_clearance > 0.0;
  return r;
}

FlatState state_at(const UniformBSpline& spline, double t) {
  return FlatState{spline.evaluate(t, 0), spline.evaluate(t, 1), spline.evaluate(t, 2), spline.evaluate(t, 3)};
}

PlanResult plan(const PlanRequest& req, const DistanceField& field) {
  const auto t_start = Clock::now();
  req.config.validate();
  const SearchConfig& cfg = req.config.search;
  PlanResult out;
  if (!req.start.finite() || !req.goal_pos.allFinite() || !req.goal_vel.allFinite()) {
    throw std::invalid_argument("start and goal must be finite");
  }
  if (!(field.distance_at(req.start.pos) > cfg.tau)) {
    out.status = PlanStatus::boundary_infeasible;
    out.message = "start clearance is not above tau";
    return out;
  }
  if (!(field.distance_at(req.goal_pos) > cfg.tau)) {
    out.status = PlanStatus::boundary_infeasible;
    out.message = "goal clearance is not above tau";
    return out;
  }
  if (!(req.goal_vel.norm() < cfg.limits.v_max) || !(req.start.vel.norm() < cfg.limits.v_max)) {
    out.status = PlanStatus::boundary_infeasible;
    out.message = "boundary velocity is not below v_max";
    return out;
  }

  SearchResult sr;
  try {
    sr = bnuk_search(req.start, req.goal_pos, req.goal_vel, field, cfg);
  } catch (const std::invalid_argument& e) {
    out.status = PlanStatus::boundary_infeasible;
    out.message = e.what();
    return out;
  }
  out.expansions = sr.expansions;
  out.cost = sr.cost;
  out.searched_points = sr.searched_points;
  if (sr.status == SearchStatus::no_path) {
    out.status = PlanStatus::no_path;
  } else if (sr.status == SearchStatus::budget_exhausted) {
    out.status = PlanStatus::budget_exhausted;
  }
  if (sr.status != SearchStatus::success) {
    out.report.compute_time_ms = ms_since(t_start);
    return out;
  }

  UniformBSpline spline(kQuinticOrder, cfg.dt, req.t0, std::move(sr.control_points));
  const double compute_ms = ms_since(t_start);
  out.report = verify_trajectory(spline, field, cfg.limits, req.config.effective_sample_period());
  out.report.compute_time_ms = compute_ms;
  out.spline = std::move(spline);
  out.status = out.report.feasible && out.report.collision_free ? PlanStatus::success : PlanStatus::verification_failed;
  return out;
}

std::shared_ptr<const DistanceField> Planner::field_for(const OccupancyGrid& grid, double* build_ms) {
  const std::uint64_t key = grid.content_hash();
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      if (build_ms) *build_ms = 0.0;
      return it->second;
    }
  }
  const auto t0 = Clock::now();
  auto field = std::make_shared<const DistanceField>(build_esdf(grid));
  if (build_ms) *build_ms = ms_since(t0);
  std::lock_guard lock(mutex_);
  return cache_.emplace(key, std::move(field)).first->second;
}

std::size_t Planner::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

PlanResult Planner::plan(const PlanRequest& req, const OccupancyGrid& grid) {
  double esdf_ms = 0.0;
  const auto field = field_for(grid, &esdf_ms);
  PlanResult out = bnuk::plan(req, *field);
  out.report.esdf_time_ms = esdf_ms;
  return out;
}

}  // namespace bnuk
