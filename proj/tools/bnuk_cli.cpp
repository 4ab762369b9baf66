// bnuk: map generation, single plans, benchmark sweeps, replanning runs and
// ESDF export. Exit codes: 0 ok, 1 planning failure, 2 invalid input.

#include <chrono>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "bnuk/bench.hpp"
#include "bnuk/config.hpp"
#include "bnuk/io.hpp"
#include "bnuk/mapgen.hpp"
#include "bnuk/planner.hpp"

namespace fs = std::filesystem;
using namespace bnuk;

namespace {

constexpr int kOk = 0;
constexpr int kPlanFailure = 1;
constexpr int kInvalidInput = 2;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  unsigned jobs = 1;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RunConfig resolve_config(const Options& o) {
  RunConfig c = o.config_path.empty() ? parse_run_config(json::object()) : load_run_config(o.config_path);
  if (o.seed) c.set_seed(*o.seed);
  if (!o.out_dir.empty()) c.output_dir = o.out_dir;
  return c;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write(const RunConfig& c, const std::string& name, std::string_view content) {
  fs::create_directories(c.output_dir);
  write_file_atomic(c.output_dir / name, content);
}

// Map from file if configured, otherwise generated with the query endpoints
// kept free.
OccupancyGrid load_map(const RunConfig& c) {
  if (c.map_file) {
    if (!fs::exists(*c.map_file)) throw InputError("map file not found: " + c.map_file->string());
    if (c.map_file->extension() == ".json") {
      try {
        return map_from_json(json::parse(read_file(*c.map_file)));
      } catch (const json::exception& e) {
        throw InputError(c.map_file->string() + ": " + e.what());
      }
    }
    std::ifstream in(*c.map_file);
    return load_point_cloud(in, c.map.geometry());
  }
  MapSpec spec = c.map;
  spec.keep_free.push_back(c.query.start);
  spec.keep_free.push_back(c.query.goal);
  return gen_random_map(spec);
}

json report_json(const TrajectoryReport& r) {
  return {{"length_m", r.length},       {"time_s", r.duration},          {"avg_vel", r.avg_vel},
          {"avg_acc", r.avg_acc},       {"max_vel", r.max_vel},          {"max_acc", r.max_acc},
          {"min_dis", r.min_clearance}, {"avg_dis", r.avg_clearance},    {"feasible", r.feasible},
          {"collision_free", r.collision_free}};
}

int cmd_map_gen(const Options& o) {
  const RunConfig c = resolve_config(o);
  const OccupancyGrid grid = load_map(c);
  write(c, "map.json", dump(map_to_json(grid)));
  std::cerr << "map: " << grid.occupied_count() << " of " << grid.geometry().cell_count() << " cells occupied\n";
  return kOk;
}

int cmd_plan(const Options& o) {
  const RunConfig c = resolve_config(o);
  const OccupancyGrid grid = load_map(c);
  const auto t0 = std::chrono::steady_clock::now();
  const DistanceField field = build_esdf(grid);
  const double esdf_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  PlanRequest req;
  req.start = c.query.start_state();
  req.goal_pos = c.query.goal;
  req.goal_vel = c.query.goal_vel;
  req.config = c.planner;
  const PlanResult res = plan(req, field);

  json result = {{"status", to_string(res.status)}, {"expansions", res.expansions}, {"cost", res.cost}};
  if (!res.message.empty()) result["message"] = res.message;
  if (!res.ok()) {
    write(c, "plan_result.json", dump(result));
    std::cerr << "planning failed: " << to_string(res.status);
    if (!res.message.empty()) std::cerr << " (" << res.message << ")";
    std::cerr << "\n";
    return kPlanFailure;
  }
  result["report"] = report_json(res.report);
  write(c, "samples.csv", samples_csv(*res.spline, c.planner.effective_sample_period()));
  write(c, "trajectory.json", dump(spline_to_json(*res.spline)));
  write(c, "plan_result.json", dump(result));
  write(c, "timing.json", dump({{"comp_time_ms", res.report.compute_time_ms}, {"esdf_time_ms", esdf_ms}}));
  std::cerr << "plan: " << res.report.length << " m in " << res.report.duration << " s, " << res.expansions
            << " expansions, " << res.report.compute_time_ms << " ms\n";
  return kOk;
}

int cmd_bench(const Options& o) {
  const RunConfig c = resolve_config(o);
  std::vector<MapSpec> specs;
  for (int i = 0; i < c.bench.maps; ++i) {
    MapSpec s = c.map;
    s.seed = c.bench.first_seed + static_cast<std::uint64_t>(i);
    specs.push_back(s);
  }
  const BenchStats stats = run_benchmark(specs, c.planner, o.jobs);
  write(c, "bench_rows.csv", bench_rows_csv(stats.rows));
  write(c, "bench_summary.json", dump(bench_summary_json(stats.summary)));
  write(c, "bench_timing.csv", bench_timing_csv(stats.rows));
  write(c, "bench_timing.json", dump(bench_timing_json(stats.summary)));
  std::cerr << "bench: " << stats.summary.successes << "/" << stats.summary.runs << " succeeded, mean compute "
            << stats.summary.compute_time_ms.mean << " ms\n";
  return kOk;
}

int cmd_replan(const Options& o) {
  const RunConfig c = resolve_config(o);
  ReplanConfig sim = c.replan.sim;
  sim.planner = c.planner;
  std::vector<std::pair<std::uint64_t, ReplanStats>> runs;
  json segments = json::array();
  bool all_reached = true;
  for (int i = 0; i < c.replan.worlds; ++i) {
    MapSpec spec = c.replan.world;
    spec.seed = c.replan.first_seed + static_cast<std::uint64_t>(i);
    const Vec3 start = replan_start(spec);
    const Vec3 goal = replan_goal(spec);
    spec.keep_free = {start, goal};
    const ReplanStats stats = replan_sim(gen_random_map(spec), start, goal, sim);
    json segs = json::array();
    for (const auto& s : stats.segments) {
      segs.push_back({{"t_begin", s.t_begin}, {"t_end", s.t_end}, {"spline", spline_to_json(s.spline)}});
    }
    segments.push_back({{"seed", spec.seed}, {"segments", segs}});
    all_reached = all_reached && stats.reached;
    std::cerr << "world " << spec.seed << ": " << (stats.reached ? "reached" : "failed: " + stats.failure) << ", "
              << stats.replans << " replans, " << stats.length << " m\n";
    runs.emplace_back(spec.seed, stats);
  }
  write(c, "replan_rows.csv", replan_rows_csv(runs));
  write(c, "replan_summary.json", dump(replan_summary_json(runs)));
  write(c, "replan_segments.json", segments.dump() + "\n");
  write(c, "replan_timing.csv", replan_timing_csv(runs));
  return all_reached ? kOk : kPlanFailure;
}

int cmd_esdf_dump(const Options& o) {
  const RunConfig c = resolve_config(o);
  const DistanceField field = build_esdf(load_map(c));
  const GridGeometry& g = field.geometry();
  write(c, "esdf.csv", esdf_csv(field));
  write(c, "esdf_geometry.json",
        dump({{"origin", {g.origin.x(), g.origin.y(), g.origin.z()}},
              {"resolution", g.resolution},
              {"dims", {g.dims.x(), g.dims.y(), g.dims.z()}}}));
  return kOk;
}

int guarded(int (*fn)(const Options&), const Options& o) {
  try {
    return fn(o);
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
  } catch (const InputError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
  } catch (const OverDenseError& e) {
    std::cerr << "invalid map spec: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kInvalidInput;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinodynamic B-spline search planner"};
  app.require_subcommand(1);
  Options opts;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Seed for maps and worlds (overrides the config)");
    sub->add_option("--out", opts.out_dir, "Output directory (overrides the config)");
  };
  auto* map_gen = app.add_subcommand("map-gen", "Generate a random map and write map.json");
  auto* plan_cmd = app.add_subcommand("plan", "Plan one query; writes trajectory.json and samples.csv");
  auto* bench = app.add_subcommand("bench", "Run the center-to-side/corner sweep over random maps");
  auto* replan = app.add_subcommand("replan-sim", "Receding-horizon replanning on large random worlds");
  auto* esdf = app.add_subcommand("esdf-dump", "Write the distance field as CSV");
  for (auto* sub : {map_gen, plan_cmd, bench, replan, esdf}) common(sub);
  bench->add_option("--jobs", opts.jobs, "Worker threads over maps")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalidInput;
  }
  for (auto* sub : {map_gen, plan_cmd, bench, replan, esdf}) {
    if (sub->count("--seed") > 0) opts.seed = seed;
  }

  if (*map_gen) return guarded(cmd_map_gen, opts);
  if (*plan_cmd) return guarded(cmd_plan, opts);
  if (*bench) return guarded(cmd_bench, opts);
  if (*replan) return guarded(cmd_replan, opts);
  return guarded(cmd_esdf_dump, opts);
}
