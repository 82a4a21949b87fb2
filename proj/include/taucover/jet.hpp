#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taucover/poly.hpp"
#include "taucover/rational.hpp"

namespace taucover {

enum class Parity : std::uint8_t { Even = 0, Odd = 1 };

/// u^{i,s} (even) or theta_i^s (odd). u^{i,0} is the flat coordinate v^i.
struct JetVariable {
  Parity parity = Parity::Even;
  int index = 1;  ///< 1..n
  int order = 0;  ///< s >= 0
  bool operator==(const JetVariable&) const = default;
};

inline JetVariable u(int i, int s) { return {Parity::Even, i, s}; }
inline JetVariable v(int i) { return {Parity::Even, i, 0}; }
inline JetVariable theta(int i, int s = 0) { return {Parity::Odd, i, s}; }

/// Element of the super-commutative differential polynomial algebra.
///
/// A monomial is a sorted list of packed factors (code << 8 | exponent).
/// The code orders variables by (order, index, parity) with odd above even,
/// which is also the order used by integration by parts. Odd factors carry
/// exponent 1 and appear in ascending code order; the coefficient absorbs the
/// sign of reordering.
class DiffPoly {
 public:
  using Mono = std::vector<std::uint32_t>;
  using TermMap = std::map<Mono, Rational>;

  explicit DiffPoly(int n = 1) : n_(n) {}

  static DiffPoly constant(int n, const Rational& c);
  static DiffPoly variable(int n, JetVariable x);
  static DiffPoly from_coeff(const CoeffPoly& p);

  int dim() const { return n_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  const TermMap& terms() const { return terms_; }

  /// Adds c times an already canonical monomial.
  void add_term(const Mono& m, const Rational& c);

  DiffPoly& operator+=(const DiffPoly& o);
  DiffPoly& operator-=(const DiffPoly& o);
  DiffPoly& operator*=(const Rational& c);
  friend DiffPoly operator+(DiffPoly a, const DiffPoly& b) { return a += b; }
  friend DiffPoly operator-(DiffPoly a, const DiffPoly& b) { return a -= b; }
  friend DiffPoly operator*(DiffPoly a, const Rational& c) { return a *= c; }
  friend DiffPoly operator*(const Rational& c, DiffPoly a) { return a *= c; }
  friend DiffPoly operator*(const DiffPoly& a, const DiffPoly& b);
  DiffPoly operator-() const;
  bool operator==(const DiffPoly& o) const { return n_ == o.n_ && terms_ == o.terms_; }
  bool operator!=(const DiffPoly& o) const { return !(*this == o); }

  /// Canonical text form: terms in monomial order joined by " + ",
  /// coefficient first, factors v1, u1_2, t2_0 with optional ^k.
  std::string str() const;
  static DiffPoly parse(int n, std::string_view text);

  // Packed-monomial helpers.
  static std::uint32_t code_of(int n, JetVariable x);
  static JetVariable variable_of(int n, std::uint32_t code);
  static std::uint32_t code(std::uint32_t packed) { return packed >> 8; }
  static std::uint32_t exponent(std::uint32_t packed) { return packed & 0xffu; }
  static std::uint32_t pack(std::uint32_t code, std::uint32_t exp) { return (code << 8) | exp; }
  static bool is_odd_code(std::uint32_t code) { return (code & 1u) != 0; }
  int order_of_code(std::uint32_t code) const { return static_cast<int>(code >> 1) / n_; }

 private:
  int n_;
  TermMap terms_;
};

/// Multiplies two canonical monomials. Returns 0 when an odd factor repeats,
/// otherwise +1/-1 and writes the canonical product to out.
int multiply_monomials(const DiffPoly::Mono& a, const DiffPoly::Mono& b, DiffPoly::Mono& out);

enum class DegreeKind { Standard, Super };

struct DegreeInfo {
  enum class Status { Homogeneous, Inhomogeneous, Zero };
  Status status = Status::Zero;
  int value = 0;
  bool homogeneous() const { return status == Status::Homogeneous; }
};

int standard_degree(const DiffPoly& a, const DiffPoly::Mono& m);
int super_degree(const DiffPoly::Mono& m);
DegreeInfo degree(const DiffPoly& a, DegreeKind kind);

DiffPoly total_derivative(const DiffPoly& a);
DiffPoly total_derivative(const DiffPoly& a, int times);

/// Partial derivative; left derivative for odd variables.
DiffPoly partial(const DiffPoly& a, JetVariable x);

/// Highest jet order of the given variable family present in a (-1 if none).
int max_order(const DiffPoly& a, int index, Parity parity);

/// delta/delta u^i (Even) or delta/delta theta_i (Odd), i in 1..n.
DiffPoly variational_derivative(const DiffPoly& a, int index, Parity parity);

bool is_exact(const DiffPoly& a);

/// Preimage of the total derivative with zero constant term. Throws NotExact.
DiffPoly integrate(const DiffPoly& a);

/// Canonical representative of the class of a modulo total derivatives.
DiffPoly normal_form(const DiffPoly& a);

/// Keeps only the terms of standard degree <= max_degree.
DiffPoly truncate(const DiffPoly& a, int max_degree);
DiffPoly homogeneous_component(const DiffPoly& a, int std_degree);

/// True if a contains only order-0 even variables (a function of v).
bool is_function_of_v(const DiffPoly& a);
/// Converts a function of v to a CoeffPoly. Throws if a has jet variables.
CoeffPoly to_coeff(const DiffPoly& a);

/// Replaces v^i and u^{i,s} by subs[i-1] and its s-th total derivative.
/// Odd variables are kept. Terms above max_degree are dropped throughout.
DiffPoly substitute(const DiffPoly& a, const std::vector<DiffPoly>& subs, int max_degree);

/// Element of the space of local functionals, stored by its normal form.
class LocalFunctional {
 public:
  explicit LocalFunctional(int n = 1) : rep_(n) {}
  explicit LocalFunctional(const DiffPoly& density) : rep_(normal_form(density)) {}

  int dim() const { return rep_.dim(); }
  const DiffPoly& density() const { return rep_; }
  bool is_zero() const { return rep_.is_zero(); }
  /// Super degree; nullopt for zero; throws InhomogeneousSuperDegree otherwise.
  std::optional<int> super_degree() const;

  LocalFunctional& operator+=(const LocalFunctional& o) { rep_ += o.rep_; return *this; }
  LocalFunctional& operator-=(const LocalFunctional& o) { rep_ -= o.rep_; return *this; }
  friend LocalFunctional operator+(LocalFunctional a, const LocalFunctional& b) { return a += b; }
  friend LocalFunctional operator-(LocalFunctional a, const LocalFunctional& b) { return a -= b; }
  friend LocalFunctional operator*(const Rational& c, LocalFunctional a) {
    a.rep_ *= c;
    return a;
  }
  bool operator==(const LocalFunctional& o) const { return rep_ == o.rep_; }
  bool operator!=(const LocalFunctional& o) const { return !(rep_ == o.rep_); }

 private:
  DiffPoly rep_;
};

}  // namespace taucover
