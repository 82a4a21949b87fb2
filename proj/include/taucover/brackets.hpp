#pragma once

#include <map>
#include <vector>

#include "taucover/jet.hpp"

namespace taucover {

/// Schouten-Nijenhuis bracket [P, Q] of local functionals.
LocalFunctional schouten(const LocalFunctional& P, const LocalFunctional& Q);

/// The derivation D_P attached to a local functional P, with cached
/// x-derivatives of its variational derivatives.
class EvolutionaryDerivation {
 public:
  explicit EvolutionaryDerivation(const LocalFunctional& P);
  /// Derivation acting by d/dt v^i = X[i] on functions of even variables
  /// (the theta part is zero).
  static EvolutionaryDerivation from_components(const std::vector<DiffPoly>& X);

  DiffPoly operator()(const DiffPoly& a) const;
  int dim() const { return n_; }
  int parity() const { return p_; }

 private:
  EvolutionaryDerivation() = default;
  const DiffPoly& even_coeff(int i, int s) const;
  const DiffPoly& odd_coeff(int i, int s) const;

  int n_ = 1;
  int p_ = 0;
  std::vector<DiffPoly> dtheta_;  // delta P / delta theta_i
  std::vector<DiffPoly> du_;      // delta P / delta u^i
  mutable std::map<std::pair<int, int>, DiffPoly> even_cache_;
  mutable std::map<std::pair<int, int>, DiffPoly> odd_cache_;
};

DiffPoly evolutionary_derivation(const LocalFunctional& P, const DiffPoly& a);

bool is_hamiltonian(const LocalFunctional& P);
bool is_bihamiltonian(const LocalFunctional& P1, const LocalFunctional& P2);
bool is_exact_triple(const LocalFunctional& P1, const LocalFunctional& P2, const LocalFunctional& Z);

/// Throws NonPositiveDegreeShift unless every term of Y has standard degree >= 2.
void require_degree_shift(const LocalFunctional& Y);

/// e^{ad_Y} Q = sum_k ad_Y^k(Q)/k!, terms above standard degree max_degree dropped.
LocalFunctional miura_exp(const LocalFunctional& Y, const LocalFunctional& Q, int max_degree);

/// e^{D_Y} a on differential polynomials, truncated at standard degree max_degree.
DiffPoly exp_derivation(const LocalFunctional& Y, const DiffPoly& a, int max_degree);

/// Functional truncated to standard degree <= max_degree.
LocalFunctional truncate(const LocalFunctional& F, int max_degree);

}  // namespace taucover
