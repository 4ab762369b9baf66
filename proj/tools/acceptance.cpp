// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <string>

#include "bnuk/basis.hpp"
#include "bnuk/bench.hpp"
#include "bnuk/io.hpp"
#include "bnuk/mapgen.hpp"
#include "bnuk/planner.hpp"
#include "bnuk/search.hpp"
#include "bnuk/spline.hpp"

namespace fs = std::filesystem;
using namespace bnuk;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Window random_window(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Window w;
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 3; ++c) w(r, c) = u(rng);
  return w;
}

// Recursive Cox-de Boor blending function on integer knots.
double cox_de_boor(int j, int k, double t) {
  if (k == 1) return (t >= j && t < j + 1) ? 1.0 : 0.0;
  return (t - j) / (k - 1) * cox_de_boor(j, k - 1, t) + (j + k - t) / (k - 1) * cox_de_boor(j + 1, k - 1, t);
}

double binom(int n, int r) {
  double c = 1.0;
  for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return c;
}

Vec3 bernstein(const Eigen::MatrixX3d& Q, double u) {
  const int n = static_cast<int>(Q.rows()) - 1;
  Vec3 out = Vec3::Zero();
  for (int j = 0; j <= n; ++j) out += binom(n, j) * std::pow(u, j) * std::pow(1.0 - u, n - j) * Q.row(j).transpose();
  return out;
}

Outcome basis_correctness() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int k = 2; k <= 6; ++k) {
    const Eigen::MatrixXd M = basis_matrix(k);
    for (int i = 0; i <= 100; ++i) {
      const double u = i / 100.0;
      const Eigen::RowVectorXd w = monomial_row(k, u) * M;
      for (int j = 0; j < k; ++j) worst = std::max(worst, std::abs(w(j) - cox_de_boor(j, k, (k - 1) + u)));
    }
  }
  const double ms = ms_since(t0);
  return {worst < 1e-9 && ms < 1000.0, fmt("max error %.2e, %.1f ms", worst, ms)};
}

Outcome bezier_exactness() {
  std::mt19937_64 rng(101);
  double eval_err = 0.0, end_err = 0.0;
  const Eigen::MatrixXd M = basis_matrix(6);
  for (int s = 0; s < 1000; ++s) {
    const Window P = random_window(rng, 3.0);
    const Eigen::MatrixX3d Q = span_to_bezier(P, 6);
    for (int i = 0; i <= 20; ++i) {
      const double u = i / 20.0;
      const Vec3 b = (monomial_row(6, u) * M * P).transpose();
      eval_err = std::max(eval_err, (bernstein(Q, u) - b).norm());
    }
    const Vec3 first = (monomial_row(6, 0.0) * M * P).transpose();
    const Vec3 last = (monomial_row(6, 1.0) * M * P).transpose();
    end_err = std::max({end_err, (Vec3(Q.row(0).transpose()) - first).norm(), (Vec3(Q.row(5).transpose()) - last).norm()});
  }
  return {eval_err < 1e-9 && end_err < 1e-9, fmt("evaluation error %.2e, endpoint error %.2e", eval_err, end_err)};
}

Outcome strict_hull() {
  std::mt19937_64 rng(202);
  const double dt = 0.5;
  const DynamicLimits limits{3.0, 1e9};
  const Eigen::MatrixXd M5 = basis_matrix(5);
  int sound = 0, ordered = 0, tighter = 0, strict_only = 0;
  const int n = 1000;
  for (int s = 0; s < n; ++s) {
    const Window P = random_window(rng, 1.0);
    const Eigen::Matrix<double, 5, 3> vel = (P.bottomRows<5>() - P.topRows<5>()) / dt;
    const double bez = span_to_bezier(vel, 5).rowwise().norm().maxCoeff();
    const double raw = vel.rowwise().norm().maxCoeff();
    double sampled = 0.0;
    for (int i = 0; i <= 1000; ++i) sampled = std::max(sampled, (monomial_row(5, i / 1000.0) * M5 * vel).norm());
    sound += sampled <= bez + 1e-12;
    ordered += bez <= raw + 1e-12;
    tighter += bez < raw;
    strict_only += check_dynamic(P, dt, limits) && !check_dynamic_bspline_hull(P, dt, limits);
  }
  const bool pass = sound == n && ordered == n && tighter >= 0.95 * n && strict_only >= 0.01 * n;
  return {pass, fmt("sampled<=bezier %d/%d, bezier<=bspline %d/%d, strictly tighter %d/%d, strict-only accepts %d/%d",
                    sound, n, ordered, n, tighter, n, strict_only, n)};
}

Outcome cost_closed_form() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> dts(0.2, 1.5);
  const CostWeights w = kDefaultCostWeights;
  double worst = 0.0;
  for (int s = 0; s < 200; ++s) {
    const Window P = random_window(rng, 2.0);
    const double dt = dts(rng);
    const UniformBSpline sp(6, dt, 0.0, {P.row(0).transpose(), P.row(1).transpose(), P.row(2).transpose(),
                                         P.row(3).transpose(), P.row(4).transpose(), P.row(5).transpose()});
    const int N = 10000;
    double quad = 0.0;
    for (int i = 0; i < N; ++i) {
      const double t = (i + 0.5) * dt / N;
      for (int l = 1; l <= 4; ++l) {
        const double wl = w[static_cast<std::size_t>(l - 1)];
        if (wl != 0.0) quad += wl * sp.evaluate(t, l).squaredNorm();
      }
    }
    quad *= dt / N;
    worst = std::max(worst, std::abs(span_cost(P, dt, w) - quad) / quad);
  }
  bool scaling = true;
  for (int l = 1; l <= 4; ++l) {
    for (double dt : {0.1, 0.25, 0.5, 0.8, 1.7}) {
      scaling = scaling && (cost_matrix(l, dt) - cost_matrix(l, 1.0) / std::pow(dt, 2 * l - 1)).cwiseAbs().maxCoeff() == 0.0;
    }
  }
  return {worst < 1e-6 && scaling, fmt("max relative error %.2e, scaling law %s", worst, scaling ? "exact" : "inexact")};
}

Outcome boundary_round_trips() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(-2.0, 2.0), dts(0.2, 1.0);
  auto rv = [&] { return Vec3(u(rng), u(rng), u(rng)); };
  double worst = 0.0;
  for (int s = 0; s < 500; ++s) {
    const FlatState st{rv(), rv(), rv(), rv()};
    const Vec3 gp = rv(), gv = rv();
    const double dt = dts(rng);
    const auto head = solve_start_cps(st, dt);
    std::vector<Vec3> pts(head.begin(), head.end());
    const int middle = s % 4;
    for (int i = 0; i < middle; ++i) pts.push_back(rv());
    const std::array<Vec3, 4> tail{pts[pts.size() - 4], pts[pts.size() - 3], pts[pts.size() - 2], pts.back()};
    const auto end = solve_goal_cps(tail, gp, gv, dt);
    pts.push_back(end[0]);
    pts.push_back(end[1]);
    const UniformBSpline sp(6, dt, 0.0, pts);
    worst = std::max({worst, (sp.evaluate(0.0, 0) - st.pos).norm(), (sp.evaluate(0.0, 1) - st.vel).norm(),
                      (sp.evaluate(0.0, 2) - st.acc).norm(), (sp.evaluate(0.0, 3) - st.jerk).norm(),
                      (sp.evaluate(sp.t_end(), 0) - gp).norm(), (sp.evaluate(sp.t_end(), 1) - gv).norm()});
  }
  return {worst < 1e-6, fmt("max constraint error %.2e over 500 cases", worst)};
}

Outcome esdf_exactness() {
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> dim(1, 32);
  std::uniform_real_distribution<double> fill(0.001, 0.3);
  int exact = 0;
  for (int s = 0; s < 30; ++s) {
    GridGeometry g;
    g.dims = Index3(dim(rng), dim(rng), dim(rng));
    OccupancyGrid grid(g);
    std::bernoulli_distribution occ(fill(rng));
    for (auto& c : grid.cells()) c = occ(rng) ? 1 : 0;
    if (grid.occupied_count() == 0) grid.cells()[0] = 1;
    std::vector<Index3> sites;
    for (std::size_t i = 0; i < g.cell_count(); ++i)
      if (grid.cells()[i]) sites.push_back(g.unlinear(i));
    const auto field = build_esdf(grid);
    bool same = true;
    for (std::size_t i = 0; i < g.cell_count() && same; ++i) {
      const Index3 c = g.unlinear(i);
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      for (const auto& site : sites) best = std::min<std::int64_t>(best, (c - site).squaredNorm());
      same = field.values()[i] == std::sqrt(static_cast<double>(best)) * g.resolution;
    }
    exact += same;
  }
  MapSpec spec;
  spec.seed = 1;
  const auto grid = gen_random_map(spec);
  double best_ms = 1e9;
  for (int i = 0; i < 3; ++i) {
    const auto t0 = Clock::now();
    const auto f = build_esdf(grid);
    best_ms = std::min(best_ms, ms_since(t0));
  }
  return {exact == 30 && best_ms < 200.0, fmt("exact on %d/30 grids, 100x100x20 build %.1f ms", exact, best_ms)};
}

Outcome planner_properties() {
  std::vector<MapSpec> specs;
  for (int s = 1; s <= 50; ++s) {
    MapSpec m;
    m.seed = static_cast<std::uint64_t>(s);
    specs.push_back(m);
  }
  const PlannerConfig cfg;
  const BenchStats stats = run_benchmark(specs, cfg, 1);
  int violations = 0;
  for (const auto& r : stats.rows) {
    if (r.status != PlanStatus::success) continue;
    const auto& t = r.report;
    violations += !(t.max_vel < 1.6) + !(t.max_acc < 1.6) + !(t.min_clearance > 0.0) +
                  !(r.min_cp_clearance >= cfg.search.tau);
  }
  const auto& s = stats.summary;
  const double rate = static_cast<double>(s.successes) / static_cast<double>(s.runs);
  const double v_max = cfg.search.limits.v_max;
  const bool pass = rate >= 0.9 && violations == 0 && s.compute_time_ms.mean < 170.0 &&
                    s.min_clearance.mean >= cfg.search.tau + 0.2 && s.avg_vel.mean > 0.4 * v_max &&
                    s.avg_vel.mean < 1.0 * v_max;
  return {pass, fmt("success %zu/%zu, violations %d, max vel %.3f, max acc %.3f, mean comp %.1f ms, "
                    "mean min dis %.3f m, mean avg vel %.3f m/s, mean length %.2f m",
                    s.successes, s.runs, violations, s.max_vel.max, s.max_acc.max, s.compute_time_ms.mean,
                    s.min_clearance.mean, s.avg_vel.mean, s.length.mean)};
}

Outcome heuristic_admissibility() {
  GridGeometry g;
  g.dims = Index3(100, 100, 20);
  const auto field = build_esdf(OccupancyGrid(g));
  SplitMix64 rng(7);
  int equal = 0, fewer = 0;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Vec3 ext = g.extent();
    auto rp = [&] { return Vec3(rng.uniform(1, ext.x() - 1), rng.uniform(1, ext.y() - 1), rng.uniform(1, ext.z() - 1)); };
    const Vec3 s = rp(), e = rp();
    SearchConfig c;
    c.max_expansions = 10000000;
    const auto a = bnuk_search(FlatState::at_rest(s), e, Vec3::Zero(), field, c);
    c.use_heuristic = false;
    const auto b = bnuk_search(FlatState::at_rest(s), e, Vec3::Zero(), field, c);
    const double diff = std::abs(a.cost - b.cost);
    worst = std::max(worst, diff);
    equal += a.status == SearchStatus::success && b.status == SearchStatus::success && diff <= 1e-9;
    fewer += a.expansions < b.expansions;
  }
  return {equal == 20 && fewer >= 18,
          fmt("J equal on %d/20, fewer expansions on %d/20, max |J_h - J_0| %.3f", equal, fewer, worst)};
}

Outcome replanning() {
  std::vector<std::pair<std::uint64_t, ReplanStats>> runs;
  int reached = 0, unsafe = 0, max_replans = 0;
  double splice = 0.0, length = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const MapSpec spec = replan_world_spec(seed);
    const auto r = replan_sim(gen_random_map(spec), replan_start(spec), replan_goal(spec), ReplanConfig{});
    reached += r.reached;
    unsafe += !r.collision_free;
    max_replans = std::max(max_replans, r.replans);
    for (double e : r.splice_error) splice = std::max(splice, e);
    length += r.length;
  }
  return {reached >= 8 && unsafe == 0 && splice < 1e-6 && max_replans <= 30,
          fmt("reached %d/10, unsafe runs %d, max splice error %.2e, max replans %d, mean length %.1f m", reached,
              unsafe, splice, max_replans, length / 10.0)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BNUK_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename().string().find("timing") == std::string::npos) {
      out[fs::relative(e.path(), dir).string()] = read_file(e.path());
    }
  }
  return out;
}

Outcome determinism() {
  const fs::path work = fs::temp_directory_path() / "bnuk_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  std::ofstream(work / "bench.json") << R"({"bench": {"maps": 6}})";
  std::ofstream(work / "replan.json") << R"({"replan": {"worlds": 2}})";
  const std::vector<std::string> cmds = {
      "map-gen --seed 11",
      "plan --seed 11",
      "esdf-dump --seed 11",
      "bench --config " + (work / "bench.json").string() + " --seed 21 --jobs 3",
      "replan-sim --config " + (work / "replan.json").string() + " --seed 31",
  };
  int identical = 0;
  std::size_t files = 0;
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    const fs::path a = work / ("a" + std::to_string(i)), b = work / ("b" + std::to_string(i));
    const int ca = run_cli(cmds[i] + " --out " + a.string());
    const int cb = run_cli(cmds[i] + " --out " + b.string());
    const auto sa = snapshot(a), sb = snapshot(b);
    files += sa.size();
    identical += ca == cb && !sa.empty() && sa == sb;
  }
  fs::remove_all(work);
  return {identical == static_cast<int>(cmds.size()),
          fmt("%d/%zu commands byte-identical (%zu data files)", identical, cmds.size(), files)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"basis matches Cox-de Boor", basis_correctness},
      {"Bezier conversion exact", bezier_exactness},
      {"strict hull sound and tighter", strict_hull},
      {"closed-form span cost", cost_closed_form},
      {"boundary round trips", boundary_round_trips},
      {"ESDF exact and fast", esdf_exactness},
      {"planner safety and feasibility", planner_properties},
      {"heuristic admissibility", heuristic_admissibility},
      {"receding-horizon replanning", replanning},
      {"CLI determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%-4s %2zu %-32s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                ms_since(t0) / 1000.0);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
