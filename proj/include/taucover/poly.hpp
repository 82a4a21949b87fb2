#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "taucover/rational.hpp"

namespace taucover {

/// Sparse polynomial in v^1..v^n with rational coefficients.
class CoeffPoly {
 public:
  using Exponents = std::vector<int>;
  using TermMap = std::map<Exponents, Rational>;

  explicit CoeffPoly(int n = 1) : n_(n) {}

  static CoeffPoly constant(int n, const Rational& c);
  /// v^{i+1}; i is zero based.
  static CoeffPoly variable(int n, int i);
  static CoeffPoly monomial(int n, Exponents e, const Rational& c);

  int dim() const { return n_; }
  bool is_zero() const { return terms_.empty(); }
  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  void add_term(const Exponents& e, const Rational& c);
  Rational coeff(const Exponents& e) const;

  CoeffPoly& operator+=(const CoeffPoly& o);
  CoeffPoly& operator-=(const CoeffPoly& o);
  CoeffPoly& operator*=(const Rational& c);
  friend CoeffPoly operator+(CoeffPoly a, const CoeffPoly& b) { return a += b; }
  friend CoeffPoly operator-(CoeffPoly a, const CoeffPoly& b) { return a -= b; }
  friend CoeffPoly operator*(CoeffPoly a, const Rational& c) { return a *= c; }
  friend CoeffPoly operator*(const Rational& c, CoeffPoly a) { return a *= c; }
  friend CoeffPoly operator*(const CoeffPoly& a, const CoeffPoly& b);
  CoeffPoly operator-() const;
  bool operator==(const CoeffPoly& o) const { return n_ == o.n_ && terms_ == o.terms_; }
  bool operator!=(const CoeffPoly& o) const { return !(*this == o); }

  /// d/dv^{i+1}.
  CoeffPoly derivative(int i) const;
  /// -1 for the zero polynomial.
  int total_degree() const;
  CoeffPoly homogeneous_part(int k) const;
  /// Drops all monomials of total degree <= k.
  CoeffPoly without_degree_at_most(int k) const;
  bool is_constant() const;
  Rational constant_term() const;

  double eval(const std::vector<double>& v) const;
  Rational eval(const std::vector<Rational>& v) const;
  /// Largest absolute coefficient (0 for zero).
  double max_abs_coeff() const;

  /// Canonical text, e.g. "1/2*v1^2*v2 + 3".
  std::string str() const;

 private:
  void check_dim(const CoeffPoly& o) const;
  int n_;
  TermMap terms_;
};

/// p(inner_1, ..., inner_n); terms above total degree max_degree are dropped
/// when max_degree >= 0.
CoeffPoly compose(const CoeffPoly& p, const std::vector<CoeffPoly>& inner, int max_degree = -1);
/// Drops all monomials of total degree > max_degree.
CoeffPoly truncate(const CoeffPoly& p, int max_degree);

using RatMatrix = std::vector<std::vector<Rational>>;
/// nullopt if singular.
std::optional<RatMatrix> inverse(const RatMatrix& m);
CoeffPoly determinant(const std::vector<std::vector<CoeffPoly>>& m);

/// Polynomial whose Hessian equals the given symmetric matrix of polynomials and
/// whose affine part vanishes at the origin. Does not check integrability.
CoeffPoly integrate_hessian(const std::vector<std::vector<CoeffPoly>>& hessian);

/// Polynomial vanishing at the origin whose gradient is the given field.
/// Does not check integrability.
CoeffPoly integrate_gradient(const std::vector<CoeffPoly>& grad);

}  // namespace taucover
