#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "bnuk/basis.hpp"
#include "bnuk/spline.hpp"
#include "oracles.hpp"

using bnuk::Vec3;
using bnuk::Window;

namespace {

bnuk::UniformBSpline random_spline(std::mt19937_64& rng, int n, double dt, double t0 = 0.0) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<Vec3> cps;
  for (int i = 0; i < n; ++i) cps.emplace_back(u(rng), u(rng), u(rng));
  return bnuk::UniformBSpline(6, dt, t0, cps);
}

double binom(int n, int r) {
  double c = 1.0;
  for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return c;
}

// Direct Bernstein-form evaluation, independent of the basis tables.
Vec3 bernstein_eval(const Eigen::MatrixX3d& Q, double u) {
  const int n = static_cast<int>(Q.rows()) - 1;
  Vec3 out = Vec3::Zero();
  for (int j = 0; j <= n; ++j) out += binom(n, j) * std::pow(u, j) * std::pow(1.0 - u, n - j) * Q.row(j).transpose();
  return out;
}

double max_row_norm(const Eigen::MatrixX3d& m) { return m.rowwise().norm().maxCoeff(); }

}  // namespace

TEST_CASE("basis matrix small orders") {
  CHECK(bnuk::basis_matrix(1)(0, 0) == 1.0);
  Eigen::Matrix2d expected;
  expected << 1, 0, -1, 1;
  CHECK(bnuk::basis_matrix(2).isApprox(expected, 0.0));
  CHECK_THROWS_AS(bnuk::basis_matrix(0), std::invalid_argument);
  CHECK_THROWS_AS(bnuk::basis_matrix(7), std::invalid_argument);
}

TEST_CASE("quintic basis first row") {
  const Eigen::MatrixXd M = bnuk::basis_matrix(6);
  const double expected[6] = {1, 26, 66, 26, 1, 0};
  for (int j = 0; j < 6; ++j) CHECK(M(0, j) == doctest::Approx(expected[j] / 120.0).epsilon(1e-15));
  CHECK(M.row(0).sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("basis matches Cox-de Boor recursion and sums to one") {
  for (int k = 2; k <= 6; ++k) {
    const Eigen::MatrixXd M = bnuk::basis_matrix(k);
    for (int i = 0; i <= 100; ++i) {
      const double u = i / 100.0;
      const Eigen::RowVectorXd w = bnuk::monomial_row(k, u) * M;
      CHECK((w - oracle::local_weights(k, u)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(std::abs(1.0 - w.sum()) < 1e-12);
    }
  }
}

TEST_CASE("bezier matrix") {
  Eigen::Matrix2d b2;
  b2 << 1, 0, -1, 1;
  CHECK(bnuk::bezier_matrix(2).isApprox(b2, 0.0));
  Eigen::Matrix3d b3;
  b3 << 1, 0, 0, -2, 2, 0, 1, -2, 1;
  CHECK(bnuk::bezier_matrix(3).isApprox(b3, 0.0));
  for (int k = 1; k <= 6; ++k) {
    const Eigen::MatrixXd B = bnuk::bezier_matrix(k);
    const Eigen::MatrixXd I = B.inverse() * B;
    CHECK((I - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(bnuk::bezier_matrix(0), std::invalid_argument);
}

TEST_CASE("spline construction invariants") {
  std::vector<Vec3> five(5, Vec3::Zero());
  CHECK_THROWS_AS(bnuk::UniformBSpline(6, 0.5, 0.0, five), std::invalid_argument);
  std::vector<Vec3> nine(9, Vec3::Zero());
  CHECK_THROWS_AS(bnuk::UniformBSpline(6, 0.0, 0.0, nine), std::invalid_argument);
  const bnuk::UniformBSpline s(6, 0.5, 1.0, nine);
  CHECK(s.num_spans() == 4);
  CHECK(s.duration() == doctest::Approx(2.0));
}

TEST_CASE("evaluate simple cases") {
  const Vec3 p(1.5, -2.0, 0.25);
  const bnuk::UniformBSpline constant(6, 0.3, 2.0, std::vector<Vec3>(8, p));
  for (double t : {2.0, 2.1, 2.45, 2.9}) CHECK((constant.evaluate(t) - p).norm() < 1e-12);

  std::vector<Vec3> line;
  const double d = 0.7, dt = 0.4;
  for (int i = 0; i < 10; ++i) line.emplace_back(i * d, 0.0, 0.0);
  const bnuk::UniformBSpline s(6, dt, 0.0, line);
  for (int i = 0; i <= 40; ++i) {
    const double t = s.duration() * i / 40.0;
    CHECK((s.evaluate(t, 1) - Vec3(d / dt, 0, 0)).norm() < 1e-9);
  }
}

TEST_CASE("evaluate matches De Boor algorithm") {
  std::mt19937_64 rng(11);
  const auto s = random_spline(rng, 12, 0.37, -1.0);
  std::uniform_real_distribution<double> ut(s.t0(), s.t_end());
  for (int i = 0; i < 100; ++i) {
    const double t = ut(rng);
    CHECK((s.evaluate(t) - oracle::de_boor(s, t)).norm() < 1e-9);
  }
  CHECK((s.evaluate(s.t_end()) - oracle::de_boor(s, s.t_end())).norm() < 1e-9);
}

TEST_CASE("evaluate domain errors") {
  std::mt19937_64 rng(3);
  const auto s = random_spline(rng, 8, 0.5);
  CHECK_THROWS_AS(s.evaluate(-1e-6), std::out_of_range);
  CHECK_THROWS_AS(s.evaluate(s.t_end() + 1e-6), std::out_of_range);
  CHECK_THROWS_AS(s.evaluate(0.1, 6), std::invalid_argument);
  CHECK_NOTHROW(s.evaluate(s.t_end(), 5));
}

TEST_CASE("derivative spline") {
  const bnuk::UniformBSpline constant(6, 0.5, 0.0, std::vector<Vec3>(7, Vec3(1, 2, 3)));
  const auto flat = constant.derivative();
  for (const auto& q : flat.control_points()) CHECK(q.norm() == 0.0);
  CHECK_THROWS_AS(bnuk::UniformBSpline(1, 0.5, 0.0, std::vector<Vec3>(3, Vec3::Zero())).derivative(),
                  std::invalid_argument);

  std::mt19937_64 rng(5);
  const auto s = random_spline(rng, 11, 0.45, 0.3);
  const auto ds = s.derivative();
  CHECK(ds.order() == 5);
  CHECK(ds.control_points().size() == 10);
  CHECK(ds.duration() == doctest::Approx(s.duration()));
  const double h = 1e-5;
  for (int i = 1; i < 60; ++i) {
    const double t = s.t0() + s.duration() * i / 60.0;
    CHECK((ds.evaluate(t) - s.evaluate(t, 1)).norm() < 1e-9);
    const Vec3 fd = (s.evaluate(t + h) - s.evaluate(t - h)) / (2 * h);
    const Vec3 exact = ds.evaluate(t);
    CHECK((fd - exact).norm() <= 1e-5 * std::max(1.0, exact.norm()));
  }
}

TEST_CASE("span to bezier") {
  Eigen::MatrixX3d constant(6, 3);
  constant.rowwise() = Eigen::RowVector3d(4, 5, 6);
  CHECK((bnuk::span_to_bezier(constant, 6) - constant).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(bnuk::span_to_bezier(constant, 5), std::invalid_argument);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Window P = oracle::random_window(rng, 2.0);
    const Eigen::MatrixX3d Q = bnuk::span_to_bezier(P, 6);
    const Eigen::RowVector3d start = bnuk::monomial_row(6, 0.0) * bnuk::basis_matrix(6) * P;
    CHECK((Q.row(0) - start).norm() < 1e-12);
    for (int i = 0; i < 50; ++i) {
      const double u = i / 49.0;
      const Vec3 bspline = (oracle::local_weights(6, u) * P).transpose();
      CHECK((bernstein_eval(Q, u) - bspline).norm() < 1e-9);
    }
  }
}

TEST_CASE("check_dynamic simple cases") {
  const bnuk::DynamicLimits limits{1.6, 1.6};
  Window same;
  same.rowwise() = Eigen::RowVector3d(1, 1, 1);
  CHECK(bnuk::check_dynamic(same, 0.5, limits));
  CHECK(bnuk::check_dynamic(same, 0.5, bnuk::DynamicLimits{1e-6, 1e-6}));

  const double dt = 0.5;
  Window line;
  for (int r = 0; r < 6; ++r) line.row(r) = Eigen::RowVector3d(r * 1.5 * limits.v_max * dt, 0, 0);
  CHECK_FALSE(bnuk::check_dynamic(line, dt, limits));

  Window bad = same;
  bad(2, 1) = std::nan("");
  CHECK_THROWS_AS(bnuk::check_dynamic(bad, dt, limits), std::invalid_argument);
}

TEST_CASE("strict hull accepts spans the B-spline hull rejects") {
  // Random search for a span whose raw velocity control points exceed v_max
  // while the Bezier points, and hence the sampled speed, stay below it.
  std::mt19937_64 rng(2024);
  const double dt = 1.0;
  const bnuk::DynamicLimits limits{1.0, 100.0};
  bool found = false;
  for (int trial = 0; trial < 20000 && !found; ++trial) {
    const Window P = oracle::random_window(rng, 1.5);
    if (!bnuk::check_dynamic(P, dt, limits) || bnuk::check_dynamic_bspline_hull(P, dt, limits)) continue;
    std::vector<Vec3> cps;
    for (int r = 0; r < 6; ++r) cps.push_back(P.row(r).transpose());
    const bnuk::UniformBSpline s(6, dt, 0.0, cps);
    double max_speed = 0.0;
    for (int i = 0; i <= 2000; ++i) max_speed = std::max(max_speed, s.evaluate(i / 2000.0, 1).norm());
    CHECK(max_speed < limits.v_max);
    found = true;
  }
  CHECK(found);
}

TEST_CASE("cost matrix") {
  CHECK(bnuk::cost_matrix(1, 1.0)(1, 1) == 1.0);
  CHECK_THROWS_AS(bnuk::cost_matrix(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(bnuk::cost_matrix(5, 1.0), std::invalid_argument);

  // Composite Simpson, 1024 intervals, on the derivative Gram integrand.
  const int n = 1024;
  for (int l = 1; l <= 4; ++l) {
    Eigen::Matrix<double, 6, 6> quad = Eigen::Matrix<double, 6, 6>::Zero();
    for (int i = 0; i <= n; ++i) {
      const double u = static_cast<double>(i) / n;
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      const Eigen::RowVectorXd b = bnuk::monomial_row(6, u, l);
      quad += w * b.transpose() * b;
    }
    quad /= 3.0 * n;
    const auto Q = bnuk::cost_matrix(l, 1.0);
    CHECK((Q - quad).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((Q - Q.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>>(Q).eigenvalues().minCoeff() > -1e-9);
    for (double dt : {0.1, 0.5, 0.8, 2.0}) {
      const Eigen::Matrix<double, 6, 6> scaled = Q / std::pow(dt, 2 * l - 1);
      CHECK((bnuk::cost_matrix(l, dt) - scaled).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("span cost") {
  const bnuk::CostWeights w{0.3, 0.7, 1.1, 0.9};
  Window same;
  same.rowwise() = Eigen::RowVector3d(3, -1, 2);
  CHECK(bnuk::span_cost(same, 0.5, w) == doctest::Approx(0.0));
  CHECK_THROWS_AS(bnuk::span_cost(same, 0.5, bnuk::CostWeights{0, -1, 0, 0}), std::invalid_argument);

  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    const Window P = oracle::random_window(rng, 2.0);
    const double dt = 0.3 + 0.1 * trial;
    const double closed = bnuk::span_cost(P, dt, w);
    CHECK(closed >= 0.0);
    const double quad = oracle::span_cost_quadrature(P, dt, w, 10000);
    CHECK(std::abs(closed - quad) <= 1e-6 * quad);

    Window shifted = P;
    shifted.rowwise() += Eigen::RowVector3d(5, -7, 2);
    CHECK(std::abs(bnuk::span_cost(shifted, dt, w) - closed) <= 1e-9 * std::max(1.0, closed));

    const Eigen::Matrix3d R = Eigen::AngleAxisd(0.3 * trial + 0.1, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    const Window rotated = P * R.transpose();
    CHECK(std::abs(bnuk::span_cost(rotated, dt, w) - closed) <= 1e-9 * std::max(1.0, closed));
  }
}

TEST_CASE("window evaluator agrees with the free functions") {
  std::mt19937_64 rng(99);
  const bnuk::DynamicLimits limits{1.6, 1.6};
  const double dt = 0.8;
  const bnuk::WindowEvaluator eval(dt, limits, bnuk::kDefaultCostWeights);
  int agreements = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const Window P = oracle::random_window(rng, 0.9);
    agreements += eval.feasible(P) == bnuk::check_dynamic(P, dt, limits);
    const double ref = bnuk::span_cost(P, dt, bnuk::kDefaultCostWeights);
    CHECK(std::abs(eval.cost(P) - ref) <= 1e-9 * std::max(1.0, ref));
  }
  CHECK(agreements == 2000);
}

TEST_CASE("start boundary control points") {
  const Vec3 p(1, 2, 3);
  for (const auto& c : bnuk::solve_start_cps(bnuk::FlatState::at_rest(p), 0.5)) CHECK((c - p).norm() < 1e-12);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  auto random_state = [&] {
    return bnuk::FlatState{Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng)),
                           Vec3(u(rng), u(rng), u(rng))};
  };
  for (int trial = 0; trial < 50; ++trial) {
    const auto state = random_state();
    const double dt = 0.2 + 0.05 * trial;
    const auto cps = bnuk::solve_start_cps(state, dt);
    std::vector<Vec3> pts(cps.begin(), cps.end());
    pts.push_back(Vec3(u(rng), u(rng), u(rng)));  // arbitrary sixth point
    const bnuk::UniformBSpline s(6, dt, 0.0, pts);
    CHECK((s.evaluate(0.0, 0) - state.pos).norm() < 1e-8);
    CHECK((s.evaluate(0.0, 1) - state.vel).norm() < 1e-8);
    CHECK((s.evaluate(0.0, 2) - state.acc).norm() < 1e-8);
    CHECK((s.evaluate(0.0, 3) - state.jerk).norm() < 1e-8);
    CHECK(s.evaluate(0.0, 4).norm() < 1e-8);
  }

  const auto s1 = random_state();
  const auto s2 = random_state();
  const double a = 0.7, b = -1.3;
  const bnuk::FlatState mix{a * s1.pos + b * s2.pos, a * s1.vel + b * s2.vel, a * s1.acc + b * s2.acc,
                            a * s1.jerk + b * s2.jerk};
  const auto c1 = bnuk::solve_start_cps(s1, 0.5);
  const auto c2 = bnuk::solve_start_cps(s2, 0.5);
  const auto cm = bnuk::solve_start_cps(mix, 0.5);
  for (std::size_t i = 0; i < 5; ++i) CHECK((cm[i] - (a * c1[i] + b * c2[i])).norm() < 1e-9);

  bnuk::FlatState bad;
  bad.vel.x() = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(bnuk::solve_start_cps(bad, 0.5), std::invalid_argument);
}

TEST_CASE("goal boundary control points") {
  const Vec3 g(-1, 0.5, 2);
  const std::array<Vec3, 4> still{g, g, g, g};
  for (const auto& c : bnuk::solve_goal_cps(still, g, Vec3::Zero(), 0.5)) CHECK((c - g).norm() < 1e-12);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  auto rv = [&] { return Vec3(u(rng), u(rng), u(rng)); };
  for (int trial = 0; trial < 50; ++trial) {
    const std::array<Vec3, 4> tail{rv(), rv(), rv(), rv()};
    const Vec3 gp = rv(), gv = rv();
    const double dt = 0.25 + 0.03 * trial;
    const auto end = bnuk::solve_goal_cps(tail, gp, gv, dt);
    std::vector<Vec3> pts{rv(), tail[0], tail[1], tail[2], tail[3], end[0], end[1]};
    const bnuk::UniformBSpline s(6, dt, 0.0, pts);
    CHECK((s.evaluate(s.t_end(), 0) - gp).norm() < 1e-8);
    CHECK((s.evaluate(s.t_end(), 1) - gv).norm() < 1e-8);
  }

  // Terminal acceleration is free and moves continuously with the goal velocity.
  const std::array<Vec3, 4> tail{Vec3(0, 0, 0), Vec3(0.5, 0, 0), Vec3(1, 0, 0), Vec3(1.5, 0, 0)};
  auto terminal_acc = [&](const Vec3& gv) {
    const auto end = bnuk::solve_goal_cps(tail, Vec3(2, 0, 0), gv, 0.5);
    const bnuk::UniformBSpline s(6, 0.5, 0.0, {tail[0], tail[0], tail[1], tail[2], tail[3], end[0], end[1]});
    return s.evaluate(s.t_end(), 2);
  };
  const Vec3 a0 = terminal_acc(Vec3(1, 0, 0));
  const Vec3 a1 = terminal_acc(Vec3(1 + 1e-6, 0, 0));
  CHECK((a1 - a0).norm() < 1e-4);
}

TEST_CASE("span continuity through snap") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_spline(rng, 10, 0.5);
    const Eigen::MatrixXd M = bnuk::basis_matrix(6);
    for (std::size_t i = 0; i + 1 < s.num_spans(); ++i) {
      for (int l = 0; l <= 4; ++l) {
        const Eigen::RowVector3d left = bnuk::monomial_row(6, 1.0, l) * M * s.span(i);
        const Eigen::RowVector3d right = bnuk::monomial_row(6, 0.0, l) * M * s.span(i + 1);
        CHECK((left - right).norm() / std::pow(s.dt(), l) < 1e-8);
      }
    }
  }
}

TEST_CASE("strict hull dominance and containment") {
  std::mt19937_64 rng(31);
  int tighter = 0;
  const int spans = 500;
  for (int trial = 0; trial < spans; ++trial) {
    const Window P = oracle::random_window(rng, 1.0);
    const double dt = 0.5;
    const Eigen::Matrix<double, 5, 3> vel = (P.bottomRows<5>() - P.topRows<5>()) / dt;
    const Eigen::MatrixX3d qb = bnuk::span_to_bezier(vel, 5);
    double sampled = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double u = i / 400.0;
      const Vec3 v = (bnuk::monomial_row(5, u) * bnuk::basis_matrix(5) * vel).transpose();
      sampled = std::max(sampled, v.norm());
      // Bernstein weights certify membership in the hull of the Bezier points.
      Vec3 recon = Vec3::Zero();
      double wsum = 0.0;
      for (int j = 0; j < 5; ++j) {
        const double b = binom(4, j) * std::pow(u, j) * std::pow(1 - u, 4 - j);
        CHECK(b >= 0.0);
        wsum += b;
        recon += b * qb.row(j).transpose();
      }
      CHECK(std::abs(wsum - 1.0) < 1e-12);
      CHECK((recon - v).norm() < 1e-9);
    }
    const double bez = max_row_norm(qb);
    const double raw = max_row_norm(vel);
    CHECK(sampled <= bez + 1e-12);
    CHECK(bez <= raw + 1e-9);
    tighter += bez < raw;
  }
  CHECK(tighter >= 0.95 * spans);
}

TEST_CASE("check_dynamic soundness") {
  std::mt19937_64 rng(41);
  const bnuk::DynamicLimits limits{1.6, 1.6};
  const double dt = 0.8;
  int accepted = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    const Window P = oracle::random_window(rng, 0.6);
    if (!bnuk::check_dynamic(P, dt, limits)) continue;
    ++accepted;
    std::vector<Vec3> cps;
    for (int r = 0; r < 6; ++r) cps.push_back(P.row(r).transpose());
    const bnuk::UniformBSpline s(6, dt, 0.0, cps);
    for (int i = 0; i <= 200; ++i) {
      const double t = dt * i / 200.0;
      CHECK(s.evaluate(t, 1).norm() < limits.v_max);
      CHECK(s.evaluate(t, 2).norm() < limits.a_max);
    }
  }
  CHECK(accepted > 50);
}

TEST_CASE("per-axis limits") {
  const bnuk::DynamicLimits per_axis{1.0, 10.0, true};
  const bnuk::DynamicLimits euclid{1.0, 10.0, false};
  Window diag;
  for (int r = 0; r < 6; ++r) diag.row(r) = Eigen::RowVector3d(0.8 * r, 0.8 * r, 0.0);
  CHECK(bnuk::check_dynamic(diag, 1.0, per_axis));
  CHECK_FALSE(bnuk::check_dynamic(diag, 1.0, euclid));
}
