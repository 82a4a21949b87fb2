#include "taucover/brackets.hpp"

#include "taucover/errors.hpp"

namespace taucover {

namespace {

int parity_of(const LocalFunctional& P) {
  auto p = P.super_degree();
  return p ? *p : 0;
}

int sign_pow(int k) { return (k % 2 == 0) ? 1 : -1; }

}  // namespace

LocalFunctional schouten(const LocalFunctional& P, const LocalFunctional& Q) {
  if (P.dim() != Q.dim()) throw DimensionMismatch("schouten arguments");
  const int n = P.dim();
  if (P.is_zero() || Q.is_zero()) return LocalFunctional(n);
  const int p = parity_of(P);
  const DiffPoly& a = P.density();
  const DiffPoly& b = Q.density();
  DiffPoly sum(n);
  for (int i = 1; i <= n; ++i) {
    DiffPoly pt = variational_derivative(a, i, Parity::Odd);
    DiffPoly qu = variational_derivative(b, i, Parity::Even);
    if (!pt.is_zero() && !qu.is_zero()) sum += pt * qu;
    DiffPoly pu = variational_derivative(a, i, Parity::Even);
    DiffPoly qt = variational_derivative(b, i, Parity::Odd);
    if (!pu.is_zero() && !qt.is_zero()) sum += Rational(sign_pow(p)) * (pu * qt);
  }
  return LocalFunctional(sum);
}

EvolutionaryDerivation::EvolutionaryDerivation(const LocalFunctional& P) : n_(P.dim()), p_(parity_of(P)) {
  for (int i = 1; i <= n_; ++i) {
    dtheta_.push_back(variational_derivative(P.density(), i, Parity::Odd));
    DiffPoly w = variational_derivative(P.density(), i, Parity::Even);
    if (p_ % 2 == 1) w = -w;
    du_.push_back(std::move(w));
  }
}

EvolutionaryDerivation EvolutionaryDerivation::from_components(const std::vector<DiffPoly>& X) {
  EvolutionaryDerivation d;
  d.n_ = X.empty() ? 1 : X.front().dim();
  d.p_ = 1;
  d.dtheta_ = X;
  for (int i = 0; i < d.n_; ++i) d.du_.emplace_back(d.n_);
  return d;
}

const DiffPoly& EvolutionaryDerivation::even_coeff(int i, int s) const {
  auto key = std::make_pair(i, s);
  auto it = even_cache_.find(key);
  if (it != even_cache_.end()) return it->second;
  DiffPoly c = s == 0 ? dtheta_[i - 1] : total_derivative(even_coeff(i, s - 1));
  return even_cache_.emplace(key, std::move(c)).first->second;
}

const DiffPoly& EvolutionaryDerivation::odd_coeff(int i, int s) const {
  auto key = std::make_pair(i, s);
  auto it = odd_cache_.find(key);
  if (it != odd_cache_.end()) return it->second;
  DiffPoly c = s == 0 ? du_[i - 1] : total_derivative(odd_coeff(i, s - 1));
  return odd_cache_.emplace(key, std::move(c)).first->second;
}

DiffPoly EvolutionaryDerivation::operator()(const DiffPoly& a) const {
  if (a.dim() != n_) throw DimensionMismatch("derivation argument");
  DiffPoly r(n_);
  for (int i = 1; i <= n_; ++i) {
    if (!dtheta_[i - 1].is_zero()) {
      int top = max_order(a, i, Parity::Even);
      for (int s = 0; s <= top; ++s) {
        DiffPoly d = partial(a, u(i, s));
        if (d.is_zero()) continue;
        r += even_coeff(i, s) * d;
      }
    }
    if (!du_[i - 1].is_zero()) {
      int top = max_order(a, i, Parity::Odd);
      for (int s = 0; s <= top; ++s) {
        DiffPoly d = partial(a, theta(i, s));
        if (d.is_zero()) continue;
        r += odd_coeff(i, s) * d;
      }
    }
  }
  return r;
}

DiffPoly evolutionary_derivation(const LocalFunctional& P, const DiffPoly& a) {
  return EvolutionaryDerivation(P)(a);
}

bool is_hamiltonian(const LocalFunctional& P) { return schouten(P, P).is_zero(); }

bool is_bihamiltonian(const LocalFunctional& P1, const LocalFunctional& P2) {
  return is_hamiltonian(P1) && is_hamiltonian(P2) && schouten(P1, P2).is_zero();
}

bool is_exact_triple(const LocalFunctional& P1, const LocalFunctional& P2, const LocalFunctional& Z) {
  return schouten(Z, P1).is_zero() && schouten(Z, P2) == P1;
}

void require_degree_shift(const LocalFunctional& Y) {
  for (const auto& [m, c] : Y.density().terms())
    if (standard_degree(Y.density(), m) < 2)
      throw NonPositiveDegreeShift("vector field has a component of standard degree " +
                                   std::to_string(standard_degree(Y.density(), m)));
}

LocalFunctional truncate(const LocalFunctional& F, int max_degree) {
  // Normal form reduction is homogeneous in the standard degree, so the
  // truncated normal form is again a normal form.
  LocalFunctional r(F.dim());
  r += LocalFunctional(truncate(F.density(), max_degree));
  return r;
}

LocalFunctional miura_exp(const LocalFunctional& Y, const LocalFunctional& Q, int max_degree) {
  require_degree_shift(Y);
  LocalFunctional sum = truncate(Q, max_degree);
  LocalFunctional term = sum;
  for (int k = 1; !term.is_zero(); ++k) {
    term = truncate(schouten(Y, term), max_degree);
    term = Rational(1, k) * term;
    sum += term;
  }
  return sum;
}

DiffPoly exp_derivation(const LocalFunctional& Y, const DiffPoly& a, int max_degree) {
  require_degree_shift(Y);
  EvolutionaryDerivation D(Y);
  DiffPoly sum = truncate(a, max_degree);
  DiffPoly term = sum;
  for (int k = 1; !term.is_zero(); ++k) {
    term = truncate(D(term), max_degree);
    term *= Rational(1, k);
    sum += term;
  }
  return sum;
}

}  // namespace taucover
