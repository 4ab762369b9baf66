#include "bnuk/spline.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bnuk {
namespace {

// l-fold forward difference scaled by dt^-l: maps m points to m-l points.
Eigen::MatrixXd difference_operator(int m, int l, double dt) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(m, m);
  for (int step = 0; step < l; ++step) {
    const int rows = static_cast<int>(S.rows()) - 1;
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(rows, rows + 1);
    for (int i = 0; i < rows; ++i) {
      D(i, i) = -1.0 / dt;
      D(i, i + 1) = 1.0 / dt;
    }
    S = D * S;
  }
  return S;
}

// Row weights such that row * P is the l-th time derivative of a quintic span
// at parameter u, built from the derivative B-spline of order 6-l.
Eigen::RowVectorXd derivative_row(int l, double u, double dt) {
  const int order = kQuinticOrder - l;
  const auto& tables = BasisTables::instance();
  return monomial_row(order, u) * tables.basis(order) * difference_operator(kQuinticOrder, l, dt);
}

bool all_finite(const Eigen::Ref<const Eigen::MatrixX3d>& m) { return m.allFinite(); }

// Relative slack so that a hull point sitting on the limit in exact
// arithmetic is rejected regardless of rounding.
constexpr double kStrictMargin = 1e-9;

template <typename Derived>
bool rows_below(const Eigen::MatrixBase<Derived>& pts, double bound, const DynamicLimits& limits) {
  for (Eigen::Index r = 0; r < pts.rows(); ++r) {
    if (!(limits.magnitude(pts.row(r).transpose()) < bound * (1.0 - kStrictMargin))) return false;
  }
  return true;
}

void check_weights(const CostWeights& w) {
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("cost weights must be finite and nonnegative");
  }
}

}  // namespace

bool FlatState::finite() const { return pos.allFinite() && vel.allFinite() && acc.allFinite() && jerk.allFinite(); }

void DynamicLimits::validate() const {
  if (!(v_max > 0.0) || !(a_max > 0.0)) throw std::invalid_argument("v_max and a_max must be positive");
}

UniformBSpline::UniformBSpline(int order, double dt, double t0, std::vector<Vec3> control_points)
    : order_(order), dt_(dt), t0_(t0), control_points_(std::move(control_points)) {
  if (order_ < 1 || order_ > kMaxOrder) throw std::invalid_argument("unsupported spline order " + std::to_string(order_));
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw std::invalid_argument("knot spacing must be positive");
  if (!std::isfinite(t0_)) throw std::invalid_argument("start time must be finite");
  if (control_points_.size() < static_cast<std::size_t>(order_)) {
    throw std::invalid_argument("a spline of order " + std::to_string(order_) + " needs at least that many control points");
  }
}

Vec3 UniformBSpline::evaluate(double t, int l) const {
  if (l < 0 || l >= order_) throw std::invalid_argument("derivative order out of range");
  if (!(t >= t0_) || !(t <= t_end())) throw std::out_of_range("evaluation time outside the spline domain");
  const double s = (t - t0_) / dt_;
  auto i = static_cast<std::size_t>(std::floor(s));
  if (i >= num_spans()) i = num_spans() - 1;
  const double u = s - static_cast<double>(i);
  const Eigen::RowVectorXd w = monomial_row(order_, u, l) * BasisTables::instance().basis(order_);
  Vec3 out = (w * span(i)).transpose();
  if (l > 0) out /= std::pow(dt_, l);
  return out;
}

Eigen::MatrixX3d UniformBSpline::span(std::size_t i) const {
  if (i >= num_spans()) throw std::out_of_range("span index out of range");
  Eigen::MatrixX3d P(order_, 3);
  for (int r = 0; r < order_; ++r) P.row(r) = control_points_[i + static_cast<std::size_t>(r)].transpose();
  return P;
}

UniformBSpline UniformBSpline::derivative() const {
  if (order_ < 2) throw std::invalid_argument("cannot differentiate an order-1 spline");
  std::vector<Vec3> q;
  q.reserve(control_points_.size() - 1);
  for (std::size_t i = 0; i + 1 < control_points_.size(); ++i) {
    q.push_back((control_points_[i + 1] - control_points_[i]) / dt_);
  }
  return UniformBSpline(order_ - 1, dt_, t0_, std::move(q));
}

Eigen::MatrixX3d span_to_bezier(const Eigen::Ref<const Eigen::MatrixX3d>& local, int k) {
  if (k < 1 || k > kMaxOrder) throw std::invalid_argument("unsupported span order " + std::to_string(k));
  if (local.rows() != k) throw std::invalid_argument("span needs exactly k control points");
  return BasisTables::instance().conversion(k) * local;
}

bool check_dynamic(const Window& local, double dt, const DynamicLimits& limits) {
  if (!all_finite(local) || !std::isfinite(dt)) throw std::invalid_argument("non-finite window");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const Eigen::Matrix<double, 5, 3> vel = (local.bottomRows<5>() - local.topRows<5>()) / dt;
  const Eigen::Matrix<double, 4, 3> acc = (vel.bottomRows<4>() - vel.topRows<4>()) / dt;
  return rows_below(span_to_bezier(vel, 5), limits.v_max, limits) &&
         rows_below(span_to_bezier(acc, 4), limits.a_max, limits);
}

bool check_dynamic_bspline_hull(const Window& local, double dt, const DynamicLimits& limits) {
  if (!all_finite(local) || !std::isfinite(dt)) throw std::invalid_argument("non-finite window");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const Eigen::Matrix<double, 5, 3> vel = (local.bottomRows<5>() - local.topRows<5>()) / dt;
  const Eigen::Matrix<double, 4, 3> acc = (vel.bottomRows<4>() - vel.topRows<4>()) / dt;
  return rows_below(vel, limits.v_max, limits) && rows_below(acc, limits.a_max, limits);
}

double span_cost(const Window& local, double dt, const CostWeights& weights) {
  check_weights(weights);
  const Eigen::Matrix<double, 6, 6> M = BasisTables::instance().basis(kQuinticOrder);
  const Window coeffs = M * local;
  double total = 0.0;
  for (int l = 1; l <= kMaxCostDerivative; ++l) {
    const double w = weights[static_cast<std::size_t>(l - 1)];
    if (w == 0.0) continue;
    total += w * (coeffs.transpose() * cost_matrix(l, dt) * coeffs).trace();
  }
  return total;
}

WindowEvaluator::WindowEvaluator(double dt, const DynamicLimits& limits, const CostWeights& weights)
    : dt_(dt), limits_(limits) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  limits.validate();
  check_weights(weights);
  const auto& tables = BasisTables::instance();
  vel_bezier_ = tables.conversion(5) * difference_operator(6, 1, dt);
  acc_bezier_ = tables.conversion(4) * difference_operator(6, 2, dt);
  const Eigen::Matrix<double, 6, 6> M = tables.basis(kQuinticOrder);
  cost_hessian_.setZero();
  for (int l = 1; l <= kMaxCostDerivative; ++l) {
    const double w = weights[static_cast<std::size_t>(l - 1)];
    if (w != 0.0) cost_hessian_ += w * M.transpose() * cost_matrix(l, dt) * M;
  }
}

bool WindowEvaluator::feasible(const Window& local) const {
  const Eigen::Matrix<double, 5, 3> vel = vel_bezier_ * local;
  if (!rows_below(vel, limits_.v_max, limits_)) return false;
  const Eigen::Matrix<double, 4, 3> acc = acc_bezier_ * local;
  return rows_below(acc, limits_.a_max, limits_);
}

double WindowEvaluator::cost(const Window& local) const { return local.cwiseProduct(cost_hessian_ * local).sum(); }

std::array<Vec3, 5> solve_start_cps(const FlatState& state, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (!state.finite()) throw std::invalid_argument("start state must be finite");

  // Rows l = 0..3 reproduce the state, row 4 pins snap to zero. The sixth
  // control point carries zero weight in every row.
  Eigen::Matrix<double, 5, 6> A;
  for (int l = 0; l <= 4; ++l) A.row(l) = derivative_row(l, 0.0, dt);
  if (A.col(5).cwiseAbs().maxCoeff() > 1e-12) throw std::logic_error("start constraints depend on the sixth point");

  const Eigen::Matrix<double, 5, 5> system = A.leftCols<5>();
  Eigen::Matrix<double, 5, 3> rhs;
  rhs.row(0) = state.pos.transpose();
  rhs.row(1) = state.vel.transpose();
  rhs.row(2) = state.acc.transpose();
  rhs.row(3) = state.jerk.transpose();
  rhs.row(4).setZero();

  const Eigen::FullPivLU<Eigen::Matrix<double, 5, 5>> lu(system);
  if (!lu.isInvertible()) throw std::runtime_error("singular start boundary system");
  const Eigen::Matrix<double, 5, 3> cps = lu.solve(rhs);

  std::array<Vec3, 5> out;
  for (int i = 0; i < 5; ++i) out[static_cast<std::size_t>(i)] = cps.row(i).transpose();
  return out;
}

std::array<Vec3, 2> solve_goal_cps(std::span<const Vec3, 4> tail, const Vec3& goal_pos, const Vec3& goal_vel,
                                   double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  for (const auto& p : tail) {
    if (!p.allFinite()) throw std::invalid_argument("tail control points must be finite");
  }
  if (!goal_pos.allFinite() || !goal_vel.allFinite()) throw std::invalid_argument("goal must be finite");

  const Eigen::RowVectorXd pos_row = derivative_row(0, 1.0, dt);
  const Eigen::RowVectorXd vel_row = derivative_row(1, 1.0, dt);

  Eigen::Matrix2d system;
  system << pos_row(4), pos_row(5), vel_row(4), vel_row(5);

  Eigen::Matrix<double, 2, 3> rhs;
  rhs.row(0) = goal_pos.transpose();
  rhs.row(1) = goal_vel.transpose();
  for (int i = 0; i < 4; ++i) {
    rhs.row(0) -= pos_row(i) * tail[static_cast<std::size_t>(i)].transpose();
    rhs.row(1) -= vel_row(i) * tail[static_cast<std::size_t>(i)].transpose();
  }

  const Eigen::FullPivLU<Eigen::Matrix2d> lu(system);
  if (!lu.isInvertible()) throw std::runtime_error("singular goal boundary system");
  const Eigen::Matrix<double, 2, 3> cps = lu.solve(rhs);
  return {cps.row(0).transpose(), cps.row(1).transpose()};
}

Window make_window(std::span<const Vec3> points) {
  if (points.size() != 6) throw std::invalid_argument("a window holds exactly six control points");
  Window w;
  for (int r = 0; r < 6; ++r) w.row(r) = points[static_cast<std::size_t>(r)].transpose();
  return w;
}

}  // namespace bnuk
