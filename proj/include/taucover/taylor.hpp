#pragma once

#include <memory>
#include <vector>

namespace taucover {

/// Monomial basis of truncated power series in `vars` variables up to total
/// degree `order`, with a precomputed product table.
class SeriesSpace {
 public:
  SeriesSpace(int vars, int order);

  int vars() const { return vars_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(exps_.size()); }
  const std::vector<int>& exponents(int k) const { return exps_[k]; }
  int degree(int k) const { return deg_[k]; }
  /// Index of the monomial, or -1 if its degree exceeds the order.
  int index(const std::vector<int>& e) const;

  struct Product {
    int a, b, c, deg;
  };
  const std::vector<Product>& products() const { return prod_; }

 private:
  int vars_, order_;
  std::vector<std::vector<int>> exps_;
  std::vector<int> deg_;
  std::vector<Product> prod_;
};

using SpacePtr = std::shared_ptr<const SeriesSpace>;

/// Truncated multivariate Taylor series with binary64 coefficients. `valid`
/// is the highest total degree whose coefficients are exact; derivatives
/// lower it by one.
class Series {
 public:
  Series() = default;
  Series(SpacePtr sp, int valid);

  static Series constant(SpacePtr sp, double c);
  /// x0 + delta_i.
  static Series variable(SpacePtr sp, int i, double x0);

  const SpacePtr& space() const { return sp_; }
  int valid() const { return valid_; }
  double value() const { return c_.empty() ? 0.0 : c_[0]; }
  double coeff(int k) const { return c_[k]; }
  double& coeff(int k) { return c_[k]; }
  double coeff(const std::vector<int>& e) const;
  /// Partial derivative of order e at the origin (coefficient times e!).
  double derivative_at_origin(const std::vector<int>& e) const;

  Series& operator+=(const Series& o);
  Series& operator-=(const Series& o);
  Series& operator*=(double s);
  friend Series operator+(Series a, const Series& b) { return a += b; }
  friend Series operator-(Series a, const Series& b) { return a -= b; }
  friend Series operator*(Series a, double s) { return a *= s; }
  friend Series operator*(double s, Series a) { return a *= s; }
  friend Series operator*(const Series& a, const Series& b);
  friend Series operator/(const Series& a, const Series& b) { return a * b.inverse(); }
  Series operator-() const { return *this * -1.0; }
  Series operator+(double s) const;

  Series inverse() const;
  /// a^r via the binomial series around the constant term (which must be > 0).
  Series pow(double r) const;
  Series sqrt() const { return pow(0.5); }
  Series derivative(int i) const;
  /// this(inner_1, ..., inner_m); inner series must have zero constant term
  /// and live in a common space.
  Series compose(const std::vector<Series>& inner) const;

 private:
  SpacePtr sp_;
  int valid_ = 0;
  std::vector<double> c_;
};

/// Solves a small dense system of series, A X = B, by Gaussian elimination with
/// partial pivoting on constant terms. A is n x n, B is n x m (row-major).
std::vector<std::vector<Series>> solve(std::vector<std::vector<Series>> A, std::vector<std::vector<Series>> B);

}  // namespace taucover
