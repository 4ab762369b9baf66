#include "bnuk/basis.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace bnuk {
namespace {

// Exact rational used only while expanding the recursion; the magnitudes
// involved for k <= 6 stay far below int64 limits.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  Rational operator+(const Rational& o) const { return {num * o.den + o.num * den, den * o.den}; }
  Rational operator*(const Rational& o) const { return {num * o.num, den * o.den}; }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// Polynomial in u; coefficient i multiplies u^i.
using Poly = std::vector<Rational>;

// (a + b*u) * p, truncated to the size of p (degrees never exceed k-1 here).
Poly mul_linear(const Poly& p, const Rational& a, const Rational& b) {
  Poly out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] = out[i] + a * p[i];
    if (i + 1 < p.size()) out[i + 1] = out[i + 1] + b * p[i];
  }
  return out;
}

Poly add(const Poly& a, const Poly& b) {
  Poly out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

void check_order(int k) {
  if (k < 1 || k > kMaxOrder) {
    throw std::invalid_argument("unsupported B-spline order " + std::to_string(k));
  }
}

std::int64_t binomial(int n, int r) {
  std::int64_t c = 1;
  for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return c;
}

double falling_factorial(int n, int l) {
  double f = 1.0;
  for (int i = 0; i < l; ++i) f *= n - i;
  return f;
}

}  // namespace

Eigen::MatrixXd basis_matrix(int k) {
  check_order(k);
  // Knots at the integers; the local span is [k-1, k) with t = k-1 + u.
  const int count = 2 * k - 1;
  std::vector<Poly> blend(count, Poly(k));
  blend[k - 1][0] = Rational(1);
  for (int m = 2; m <= k; ++m) {
    std::vector<Poly> next(count - (m - 1), Poly(k));
    for (int j = 0; j < static_cast<int>(next.size()); ++j) {
      // (t - j)/(m-1) * B_{j,m-1} + (j + m - t)/(m-1) * B_{j+1,m-1}
      const Poly left = mul_linear(blend[j], Rational(k - 1 - j, m - 1), Rational(1, m - 1));
      const Poly right = mul_linear(blend[j + 1], Rational(j + m - k + 1, m - 1), Rational(-1, m - 1));
      next[j] = add(left, right);
    }
    blend = std::move(next);
  }

  Eigen::MatrixXd M(k, k);
  for (int col = 0; col < k; ++col) {
    for (int row = 0; row < k; ++row) M(row, col) = blend[col][row].value();
  }
  return M;
}

Eigen::MatrixXd bezier_matrix(int k) {
  check_order(k);
  const int n = k - 1;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k, k);
  // C(n,j) u^j (1-u)^(n-j) = sum_r C(n,j) C(n-j, r-j) (-1)^(r-j) u^r
  for (int j = 0; j <= n; ++j) {
    for (int r = j; r <= n; ++r) {
      const double sign = ((r - j) % 2 == 0) ? 1.0 : -1.0;
      B(r, j) = sign * static_cast<double>(binomial(n, j) * binomial(n - j, r - j));
    }
  }
  return B;
}

Eigen::Matrix<double, 6, 6> cost_matrix(int l, double dt) {
  if (l < 1 || l > kMaxCostDerivative) {
    throw std::invalid_argument("cost derivative order must be in 1..4, got " + std::to_string(l));
  }
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  Eigen::Matrix<double, 6, 6> Q = Eigen::Matrix<double, 6, 6>::Zero();
  for (int r = l; r < 6; ++r) {
    for (int c = l; c < 6; ++c) {
      Q(r, c) = falling_factorial(r, l) * falling_factorial(c, l) / static_cast<double>(r + c - 2 * l + 1);
    }
  }
  if (dt == 1.0) return Q;
  return Q / std::pow(dt, 2 * l - 1);
}

Eigen::RowVectorXd monomial_row(int k, double u, int l) {
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(k);
  for (int r = l; r < k; ++r) b(r) = falling_factorial(r, l) * std::pow(u, r - l);
  return b;
}

BasisTables::BasisTables() {
  for (int k = 1; k <= kMaxOrder; ++k) {
    basis_[k] = basis_matrix(k);
    bezier_[k] = bezier_matrix(k);
    // B_k is lower triangular with a nonzero diagonal.
    conversion_[k] = bezier_[k].triangularView<Eigen::Lower>().solve(basis_[k]);
  }
  for (int l = 1; l <= kMaxCostDerivative; ++l) cost_[l] = cost_matrix(l, 1.0);
}

const BasisTables& BasisTables::instance() {
  static const BasisTables tables;
  return tables;
}

const Eigen::MatrixXd& BasisTables::basis(int k) const {
  check_order(k);
  return basis_[k];
}

const Eigen::MatrixXd& BasisTables::bezier(int k) const {
  check_order(k);
  return bezier_[k];
}

const Eigen::MatrixXd& BasisTables::conversion(int k) const {
  check_order(k);
  return conversion_[k];
}

const Eigen::Matrix<double, 6, 6>& BasisTables::cost(int l) const {
  if (l < 1 || l > kMaxCostDerivative) {
    throw std::invalid_argument("cost derivative order must be in 1..4, got " + std::to_string(l));
  }
  return cost_[l];
}

}  // namespace bnuk
