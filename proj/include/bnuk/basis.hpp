#pragma once

#include <Eigen/Dense>

#include <array>

namespace bnuk {

/// Highest B-spline order (degree + 1) supported by the basis tables.
inline constexpr int kMaxOrder = 6;

/// Order of the trajectory splines (quintic).
inline constexpr int kQuinticOrder = 6;

/// Highest derivative order with a closed-form cost matrix.
inline constexpr int kMaxCostDerivative = 4;

/// Uniform B-spline basis matrix M_k.
///
/// Row r holds the coefficients of u^r, column j the blending weight of local
/// control point j, so that [1 u ... u^{k-1}] * M_k * P evaluates one span.
/// The coefficients come from expanding the De Boor-Cox recursion on integer
/// knots with exact rational arithmetic.
Eigen::MatrixXd basis_matrix(int k);

/// Bernstein basis matrix B_k of degree k-1, same row/column layout as M_k.
Eigen::MatrixXd bezier_matrix(int k);

/// Gram matrix of the l-th u-derivatives of [1 u ... u^5] over [0,1],
/// scaled by dt^(1-2l). Valid for 1 <= l <= 4.
Eigen::Matrix<double, 6, 6> cost_matrix(int l, double dt);

/// l-th derivative of the monomial vector [1 u ... u^{k-1}] at u.
Eigen::RowVectorXd monomial_row(int k, double u, int l = 0);

/// Immutable tables built once on first use and shared read-only.
class BasisTables {
 public:
  static const BasisTables& instance();

  const Eigen::MatrixXd& basis(int k) const;
  const Eigen::MatrixXd& bezier(int k) const;
  /// C_k = B_k^{-1} M_k: maps B-spline span control points to Bezier points.
  const Eigen::MatrixXd& conversion(int k) const;
  /// Q_l at dt = 1.
  const Eigen::Matrix<double, 6, 6>& cost(int l) const;

 private:
  BasisTables();

  std::array<Eigen::MatrixXd, kMaxOrder + 1> basis_;
  std::array<Eigen::MatrixXd, kMaxOrder + 1> bezier_;
  std::array<Eigen::MatrixXd, kMaxOrder + 1> conversion_;
  std::array<Eigen::Matrix<double, 6, 6>, kMaxCostDerivative + 1> cost_;
};

}  // namespace bnuk
