#include "bnuk/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace bnuk {
namespace {

using Clock = std::chrono::steady_clock;

void add_metric(MetricStats& m, double v, std::size_t n_before) {
  if (n_before == 0) {
    m = {v, v, v};
    return;
  }
  m.mean += v;
  m.min = std::min(m.min, v);
  m.max = std::max(m.max, v);
}

json metric_json(const MetricStats& m) { return json{{"mean", m.mean}, {"min", m.min}, {"max", m.max}}; }

void append_csv(std::string& out, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  out += '\n';
}

std::string fmt(double v) { return format_double(v); }

// Searched control points sit between the five start points and the goal tail.
double searched_clearance(const UniformBSpline& s, std::size_t searched, const DistanceField& field) {
  double m = std::numeric_limits<double>::infinity();
  const auto& cps = s.control_points();
  for (std::size_t i = 5; i < 5 + searched && i < cps.size(); ++i) m = std::min(m, field.distance_at(cps[i]));
  return searched == 0 ? 0.0 : m;
}

}  // namespace

std::vector<BenchQuery> standard_queries(const MapSpec& spec, double margin) {
  const Vec3 lo = spec.origin;
  const Vec3 hi = spec.origin + spec.size;
  const Vec3 center = lo + 0.5 * spec.size;
  const Vec3 side(hi.x() - margin, center.y(), center.z());
  const Vec3 corner(hi.x() - margin, hi.y() - margin, center.z());
  return {{"side", center, side}, {"corner", center, corner}};
}

BenchSummary summarize(const std::vector<BenchRow>& rows, std::size_t maps) {
  BenchSummary s;
  s.maps = maps;
  s.runs = rows.size();
  for (const auto& r : rows) {
    switch (r.status) {
      case PlanStatus::success:
        break;
      case PlanStatus::no_path:
        ++s.no_path;
        continue;
      case PlanStatus::budget_exhausted:
        ++s.budget_exhausted;
        continue;
      case PlanStatus::boundary_infeasible:
        ++s.boundary_infeasible;
        continue;
      case PlanStatus::verification_failed:
        ++s.verification_failed;
        continue;
    }
    const std::size_t n = s.successes++;
    const TrajectoryReport& t = r.report;
    add_metric(s.length, t.length, n);
    add_metric(s.duration, t.duration, n);
    add_metric(s.avg_vel, t.avg_vel, n);
    add_metric(s.avg_acc, t.avg_acc, n);
    add_metric(s.max_vel, t.max_vel, n);
    add_metric(s.max_acc, t.max_acc, n);
    add_metric(s.min_clearance, t.min_clearance, n);
    add_metric(s.avg_clearance, t.avg_clearance, n);
    add_metric(s.compute_time_ms, t.compute_time_ms, n);
    add_metric(s.esdf_time_ms, t.esdf_time_ms, n);
  }
  if (s.successes > 0) {
    const double n = static_cast<double>(s.successes);
    for (MetricStats* m : {&s.length, &s.duration, &s.avg_vel, &s.avg_acc, &s.max_vel, &s.max_acc, &s.min_clearance,
                           &s.avg_clearance, &s.compute_time_ms, &s.esdf_time_ms}) {
      m->mean /= n;
    }
  }
  return s;
}

BenchStats run_benchmark(const std::vector<MapSpec>& specs, const PlannerConfig& config, unsigned jobs) {
  config.validate();
  std::vector<std::vector<BenchRow>> per_map(specs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      try {
        const MapSpec& spec = specs[i];
        const auto queries = standard_queries(spec);
        MapSpec with_free = spec;
        for (const auto& q : queries) {
          with_free.keep_free.push_back(q.start);
          with_free.keep_free.push_back(q.goal);
        }
        const OccupancyGrid grid = gen_random_map(with_free);
        const auto t0 = Clock::now();
        const DistanceField field = build_esdf(grid);
        const double esdf_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        for (const auto& q : queries) {
          PlanRequest req;
          req.start = FlatState::at_rest(q.start);
          req.goal_pos = q.goal;
          req.config = config;
          const PlanResult res = plan(req, field);
          BenchRow row;
          row.seed = spec.seed;
          row.query = q.name;
          row.status = res.status;
          row.report = res.report;
          row.report.esdf_time_ms = esdf_ms;
          row.expansions = res.expansions;
          row.cost = res.cost;
          if (res.spline) row.min_cp_clearance = searched_clearance(*res.spline, res.searched_points, field);
          per_map[i].push_back(row);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(specs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  BenchStats stats;
  for (auto& rows : per_map) stats.rows.insert(stats.rows.end(), rows.begin(), rows.end());
  stats.summary = summarize(stats.rows, specs.size());
  return stats;
}

std::string bench_rows_csv(const std::vector<BenchRow>& rows) {
  std::string out =
      "seed,query,status,length_m,time_s,avg_vel,avg_acc,max_vel,max_acc,min_dis,avg_dis,expansions,cost,"
      "min_cp_dis\n";
  for (const auto& r : rows) {
    const TrajectoryReport& t = r.report;
    append_csv(out, {std::to_string(r.seed), r.query, std::string(to_string(r.status)), fmt(t.length), fmt(t.duration),
                     fmt(t.avg_vel), fmt(t.avg_acc), fmt(t.max_vel), fmt(t.max_acc), fmt(t.min_clearance),
                     fmt(t.avg_clearance), std::to_string(r.expansions), fmt(r.cost), fmt(r.min_cp_clearance)});
  }
  return out;
}

std::string bench_timing_csv(const std::vector<BenchRow>& rows) {
  std::string out = "seed,query,comp_time_ms,esdf_time_ms\n";
  for (const auto& r : rows) {
    append_csv(out, {std::to_string(r.seed), r.query, fmt(r.report.compute_time_ms), fmt(r.report.esdf_time_ms)});
  }
  return out;
}

json bench_summary_json(const BenchSummary& s) {
  return json{{"maps", s.maps},
              {"runs", s.runs},
              {"successes", s.successes},
              {"success_rate", s.runs ? static_cast<double>(s.successes) / static_cast<double>(s.runs) : 0.0},
              {"failures",
               {{"no-path", s.no_path},
                {"budget-exhausted", s.budget_exhausted},
                {"boundary-infeasible", s.boundary_infeasible},
                {"verification-failed", s.verification_failed}}},
              {"length_m", metric_json(s.length)},
              {"time_s", metric_json(s.duration)},
              {"avg_vel", metric_json(s.avg_vel)},
              {"avg_acc", metric_json(s.avg_acc)},
              {"max_vel", metric_json(s.max_vel)},
              {"max_acc", metric_json(s.max_acc)},
              {"min_dis", metric_json(s.min_clearance)},
              {"avg_dis", metric_json(s.avg_clearance)}};
}

json bench_timing_json(const BenchSummary& s) {
  return json{{"comp_time_ms", metric_json(s.compute_time_ms)}, {"esdf_time_ms", metric_json(s.esdf_time_ms)}};
}

// ---------------------------------------------------------------------------
// Replanning

namespace {

struct Window3 {
  Index3 offset;  // world index of the window's first cell
  GridGeometry geometry;
};

Window3 window_around(const GridGeometry& world, const Vec3& p, const Vec3& size) {
  Window3 w;
  Index3 dims;
  for (int a = 0; a < 3; ++a) dims[a] = std::min(world.dims[a], static_cast<int>(std::lround(size[a] / world.resolution)));
  for (int a = 0; a < 3; ++a) {
    const double lo = (p[a] - world.origin[a]) / world.resolution - 0.5 * dims[a];
    w.offset[a] = std::clamp(static_cast<int>(std::lround(lo)), 0, world.dims[a] - dims[a]);
  }
  w.geometry.resolution = world.resolution;
  w.geometry.dims = dims;
  w.geometry.origin = world.origin + w.offset.cast<double>() * world.resolution;
  return w;
}

// Copies world occupancy inside the window into the known map; returns true
// when a previously unknown obstacle cell appeared.
bool sense(const OccupancyGrid& world, const Window3& w, OccupancyGrid& known) {
  bool fresh = false;
  const Index3& d = w.geometry.dims;
  for (int z = 0; z < d.z(); ++z)
    for (int y = 0; y < d.y(); ++y)
      for (int x = 0; x < d.x(); ++x) {
        const Index3 idx = w.offset + Index3(x, y, z);
        if (world.occupied(idx) && !known.occupied(idx)) {
          known.set_occupied(idx);
          fresh = true;
        }
      }
  return fresh;
}

OccupancyGrid local_grid(const OccupancyGrid& known, const Window3& w) {
  OccupancyGrid local(w.geometry);
  const Index3& d = w.geometry.dims;
  for (int z = 0; z < d.z(); ++z)
    for (int y = 0; y < d.y(); ++y)
      for (int x = 0; x < d.x(); ++x) {
        if (known.occupied(w.offset + Index3(x, y, z))) local.set_occupied(Index3(x, y, z));
      }
  return local;
}

bool inside_box(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

// Global goal when it is inside the window; otherwise the free cell nearest
// to where the ray toward the goal leaves the shrunken window.
std::optional<Vec3> choose_local_goal(const Vec3& p, const Vec3& goal, const DistanceField& field,
                                      const ReplanConfig& cfg, bool& is_global) {
  const GridGeometry& g = field.geometry();
  Vec3 margin = Vec3::Constant(cfg.goal_margin);
  for (int a = 0; a < 3; ++a) margin[a] = std::min(margin[a], 0.5 * g.extent()[a] - g.resolution);
  const Vec3 lo = g.origin + margin;
  const Vec3 hi = g.origin + g.extent() - margin;
  is_global = inside_box(goal, g.origin, g.origin + g.extent()) && field.distance_at(goal) > cfg.planner.search.tau;
  if (is_global) return goal;

  const Vec3 from = p.cwiseMax(lo).cwiseMin(hi);
  const Vec3 dir = goal - from;
  double t = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] > 0) t = std::min(t, (hi[a] - from[a]) / dir[a]);
    if (dir[a] < 0) t = std::min(t, (lo[a] - from[a]) / dir[a]);
  }
  const Vec3 target = from + std::max(0.0, t) * dir;

  std::optional<Vec3> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    if (field.values()[i] < cfg.goal_clearance) continue;
    const Vec3 c = g.center(g.unlinear(i));
    if (!inside_box(c, lo, hi)) continue;
    const double d = (c - target).norm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

MapSpec replan_world_spec(std::uint64_t seed) {
  MapSpec spec;
  spec.seed = seed;
  spec.size = Vec3(50.0, 50.0, 5.0);
  spec.obstacle_count = 300;
  spec.height_min = 2.5;
  spec.height_max = 5.0;
  spec.keep_free = {replan_start(spec), replan_goal(spec)};
  return spec;
}

Vec3 replan_start(const MapSpec& spec) { return spec.origin + Vec3(3.0, 3.0, 0.4 * spec.size.z()); }

Vec3 replan_goal(const MapSpec& spec) {
  return spec.origin + Vec3(spec.size.x() - 3.0, spec.size.y() - 3.0, 0.4 * spec.size.z());
}

ReplanStats replan_sim(const OccupancyGrid& world, const Vec3& start, const Vec3& goal, const ReplanConfig& config) {
  config.planner.validate();
  if (!(config.sim_step > 0.0)) throw std::invalid_argument("sim_step must be positive");
  const GridGeometry& wg = world.geometry();
  const DistanceField truth = build_esdf(world);

  ReplanStats stats;
  stats.min_clearance = std::numeric_limits<double>::infinity();
  OccupancyGrid known(wg);
  Planner planner;

  FlatState state = FlatState::at_rest(start);
  double now = 0.0;
  std::optional<UniformBSpline> current;
  bool current_is_final = false;
  Vec3 local_goal = goal;
  double segment_begin = 0.0;

  auto record_segment = [&](double until) {
    if (current && until > segment_begin) stats.segments.push_back({*current, segment_begin, until});
  };

  // Returns false when no plan could be made from the current state.
  auto replan = [&]() -> bool {
    const Window3 w = window_around(wg, state.pos, config.window);
    sense(world, w, known);
    const OccupancyGrid local = local_grid(known, w);
    const auto field = planner.field_for(local);
    bool is_global = false;
    const auto lg = choose_local_goal(state.pos, goal, *field, config, is_global);
    if (!lg) return false;
    PlanRequest req;
    req.start = state;
    req.goal_pos = *lg;
    req.t0 = now;
    req.config = config.planner;
    const PlanResult res = planner.plan(req, local);
    ++stats.plans;
    stats.compute_ms.push_back(res.report.compute_time_ms);
    if (!res.ok()) return false;
    if (current) {
      const FlatState next = state_at(*res.spline, now);
      stats.splice_error[0] = std::max(stats.splice_error[0], (next.pos - state.pos).norm());
      stats.splice_error[1] = std::max(stats.splice_error[1], (next.vel - state.vel).norm());
      stats.splice_error[2] = std::max(stats.splice_error[2], (next.acc - state.acc).norm());
      stats.splice_error[3] = std::max(stats.splice_error[3], (next.jerk - state.jerk).norm());
    }
    record_segment(now);
    current = *res.spline;
    current_is_final = is_global;
    local_goal = *lg;
    segment_begin = now;
    return true;
  };

  if (!replan()) {
    stats.failure = "initial plan failed";
    stats.replans = std::max(0, stats.plans - 1);
    return stats;
  }

  Vec3 prev = state.pos;
  stats.min_clearance = truth.distance_at(prev);
  while (true) {
    const double t_next = std::min(now + config.sim_step, current->t_end());
    now = t_next;
    state = state_at(*current, now);
    stats.length += (state.pos - prev).norm();
    prev = state.pos;
    const double clearance = truth.distance_at(state.pos);
    stats.min_clearance = std::min(stats.min_clearance, clearance);
    if (!(clearance > 0.0)) stats.collision_free = false;

    const Window3 w = window_around(wg, state.pos, config.window);
    const bool fresh = sense(world, w, known);
    bool blocked = false;
    if (fresh) {
      for (double t = now; t < current->t_end() && !blocked; t += config.sim_step) {
        const Index3 idx = wg.index_of(current->evaluate(t));
        blocked = wg.in_bounds(idx) && known.occupied(idx);
      }
    }

    const bool at_end = now >= current->t_end();
    if (at_end && current_is_final) {
      record_segment(now);
      stats.reached = (state.pos - goal).norm() <= config.arrive_tolerance;
      if (!stats.reached) stats.failure = "final plan ended away from the goal";
      break;
    }
    const bool near_local = (state.pos - local_goal).norm() <= config.trigger_distance;
    if (at_end || blocked || (near_local && !current_is_final)) {
      if (stats.plans >= config.max_plans) {
        record_segment(now);
        stats.failure = "plan limit reached";
        break;
      }
      const bool clear_start = truth.distance_at(state.pos) > config.planner.search.tau;
      if (clear_start && replan()) continue;
      if (at_end) {
        record_segment(now);
        stats.failure = "replanning failed";
        break;
      }
    }
  }
  stats.duration = now;
  stats.replans = std::max(0, stats.plans - 1);
  return stats;
}

std::string replan_rows_csv(const std::vector<std::pair<std::uint64_t, ReplanStats>>& runs) {
  std::string out =
      "seed,reached,failure,length_m,time_s,replan_times,min_dis,collision_free,splice_pos,splice_vel,splice_acc,"
      "splice_jerk\n";
  for (const auto& [seed, s] : runs) {
    append_csv(out, {std::to_string(seed), s.reached ? "1" : "0", s.failure, fmt(s.length), fmt(s.duration),
                     std::to_string(s.replans), fmt(s.min_clearance), s.collision_free ? "1" : "0",
                     fmt(s.splice_error[0]), fmt(s.splice_error[1]), fmt(s.splice_error[2]), fmt(s.splice_error[3])});
  }
  return out;
}

std::string replan_timing_csv(const std::vector<std::pair<std::uint64_t, ReplanStats>>& runs) {
  std::string out = "seed,plan,comp_time_ms\n";
  for (const auto& [seed, s] : runs) {
    for (std::size_t i = 0; i < s.compute_ms.size(); ++i) {
      append_csv(out, {std::to_string(seed), std::to_string(i), fmt(s.compute_ms[i])});
    }
  }
  return out;
}

json replan_summary_json(const std::vector<std::pair<std::uint64_t, ReplanStats>>& runs) {
  std::size_t reached = 0;
  double replans = 0.0, length = 0.0, duration = 0.0;
  int max_replans = 0;
  bool all_safe = true;
  double worst_splice = 0.0;
  for (const auto& [seed, s] : runs) {
    reached += s.reached;
    replans += s.replans;
    length += s.length;
    duration += s.duration;
    max_replans = std::max(max_replans, s.replans);
    all_safe = all_safe && s.collision_free;
    for (double e : s.splice_error) worst_splice = std::max(worst_splice, e);
  }
  const double n = runs.empty() ? 1.0 : static_cast<double>(runs.size());
  return json{{"runs", runs.size()},
              {"reached", reached},
              {"mean_replan_times", replans / n},
              {"max_replan_times", max_replans},
              {"mean_length_m", length / n},
              {"mean_time_s", duration / n},
              {"all_collision_free", all_safe},
              {"max_splice_error", worst_splice}};
}

}  // namespace bnuk
