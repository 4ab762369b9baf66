#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "bnuk/basis.hpp"

namespace bnuk {

using Vec3 = Eigen::Vector3d;

/// Six consecutive control points of a quintic span, one point per row.
using Window = Eigen::Matrix<double, 6, 3>;

/// Weights w_1..w_4 on the squared velocity, acceleration, jerk and snap integrals.
using CostWeights = std::array<double, 4>;

inline constexpr CostWeights kDefaultCostWeights{0.0, 0.0, 1.0, 1.0};

/// Position and its first three time derivatives.
struct FlatState {
  Vec3 pos = Vec3::Zero();
  Vec3 vel = Vec3::Zero();
  Vec3 acc = Vec3::Zero();
  Vec3 jerk = Vec3::Zero();

  bool finite() const;
  static FlatState at_rest(const Vec3& p) { return FlatState{p, Vec3::Zero(), Vec3::Zero(), Vec3::Zero()}; }
};

struct DynamicLimits {
  double v_max = 1.6;
  double a_max = 1.6;
  /// Bound each axis separately instead of the Euclidean norm.
  bool per_axis = false;

  void validate() const;
  /// Magnitude used against the limits: Euclidean norm or max-abs component.
  double magnitude(const Vec3& v) const { return per_axis ? v.cwiseAbs().maxCoeff() : v.norm(); }
};

/// Uniform B-spline over equally spaced knots. Span i covers
/// [t0 + i*dt, t0 + (i+1)*dt] and depends on control points i..i+order-1.
class UniformBSpline {
 public:
  UniformBSpline(int order, double dt, double t0, std::vector<Vec3> control_points);

  int order() const { return order_; }
  double dt() const { return dt_; }
  double t0() const { return t0_; }
  const std::vector<Vec3>& control_points() const { return control_points_; }

  std::size_t num_spans() const { return control_points_.size() - static_cast<std::size_t>(order_) + 1; }
  double duration() const { return static_cast<double>(num_spans()) * dt_; }
  double t_end() const { return t0_ + duration(); }

  /// l-th time derivative at t. Throws std::out_of_range outside [t0, t_end]
  /// and std::invalid_argument for l >= order.
  Vec3 evaluate(double t, int l = 0) const;

  /// Local control points of span i (order x 3).
  Eigen::MatrixX3d span(std::size_t i) const;

  /// Spline of order-1 with control points (p_{i+1} - p_i) / dt.
  UniformBSpline derivative() const;

 private:
  int order_;
  double dt_;
  double t0_;
  std::vector<Vec3> control_points_;
};

/// Bezier control points of the polynomial span given by k B-spline points.
Eigen::MatrixX3d span_to_bezier(const Eigen::Ref<const Eigen::MatrixX3d>& local, int k);

/// Velocity and acceleration hull check of one quintic span using the
/// Bezier control points of its derivative curves.
bool check_dynamic(const Window& local, double dt, const DynamicLimits& limits);

/// Same test using the raw B-spline derivative control points (looser hull).
bool check_dynamic_bspline_hull(const Window& local, double dt, const DynamicLimits& limits);

/// Weighted integral of squared derivatives over one span, summed over axes.
double span_cost(const Window& local, double dt, const CostWeights& weights);

/// Precomputed per-dt operators for repeated window evaluation inside search.
/// Results match check_dynamic and span_cost.
class WindowEvaluator {
 public:
  WindowEvaluator(double dt, const DynamicLimits& limits, const CostWeights& weights);

  bool feasible(const Window& local) const;
  double cost(const Window& local) const;
  double dt() const { return dt_; }

 private:
  double dt_;
  DynamicLimits limits_;
  Eigen::Matrix<double, 5, 6> vel_bezier_;
  Eigen::Matrix<double, 4, 6> acc_bezier_;
  Eigen::Matrix<double, 6, 6> cost_hessian_;
};

/// First five control points reproducing pos/vel/acc/jerk of the state at the
/// start of span 0, closed by zero snap at that point.
std::array<Vec3, 5> solve_start_cps(const FlatState& state, double dt);

/// Last two control points so the final span ends at goal_pos with goal_vel,
/// given the four control points preceding them.
std::array<Vec3, 2> solve_goal_cps(std::span<const Vec3, 4> tail, const Vec3& goal_pos, const Vec3& goal_vel,
                                   double dt);

/// Stack six points into a window.
Window make_window(std::span<const Vec3> points);

}  // namespace bnuk
