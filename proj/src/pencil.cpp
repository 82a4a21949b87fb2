#include "taucover/pencil.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "taucover/errors.hpp"
#include "taucover/taylor.hpp"

namespace taucover {

HydroMetric::HydroMetric(int dim)
    : n(dim),
      g(dim, std::vector<CoeffPoly>(dim, CoeffPoly(dim))),
      gamma(dim, std::vector<std::vector<CoeffPoly>>(dim, std::vector<CoeffPoly>(dim, CoeffPoly(dim)))) {}

HydroMetric HydroMetric::constant(const std::vector<std::vector<Rational>>& g) {
  HydroMetric m(static_cast<int>(g.size()));
  for (int a = 0; a < m.n; ++a) {
    if (static_cast<int>(g[a].size()) != m.n) throw DimensionMismatch("metric is not square");
    for (int b = 0; b < m.n; ++b) m.g[a][b] = CoeffPoly::constant(m.n, g[a][b]);
  }
  return m;
}

void HydroMetric::validate() const {
  if (static_cast<int>(g.size()) != n || static_cast<int>(gamma.size()) != n)
    throw DimensionMismatch("metric size");
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (g[a][b] != g[b][a])
        throw NonSymmetricMetric("g^{" + std::to_string(a + 1) + std::to_string(b + 1) + "} != g^{" +
                                 std::to_string(b + 1) + std::to_string(a + 1) + "}");
}

Matrix HydroMetric::eval(const Point& v) const {
  Matrix m(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) m(a, b) = g[a][b].eval(v);
  return m;
}

LocalFunctional poisson_operator(const HydroMetric& m) {
  m.validate();
  const int n = m.n;
  DiffPoly density(n);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      DiffPoly tt = DiffPoly::variable(n, theta(i)) * DiffPoly::variable(n, theta(j));
      density += DiffPoly::from_coeff(m.g[i - 1][j - 1]) * DiffPoly::variable(n, theta(i)) *
                 DiffPoly::variable(n, theta(j, 1));
      if (tt.is_zero()) continue;
      for (int k = 1; k <= n; ++k)
        density += DiffPoly::from_coeff(m.gamma[i - 1][j - 1][k - 1]) * DiffPoly::variable(n, u(k, 1)) * tt;
    }
  density *= make_rational(1, 2);
  return LocalFunctional(density);
}

namespace {

using SeriesMatrix = std::vector<std::vector<Series>>;

class PolySeries {
 public:
  PolySeries(const SpacePtr& sp, const Point& v) : sp_(sp) {
    for (int a = 0; a < sp->vars(); ++a) powers_.push_back({Series::constant(sp, 1.0), Series::variable(sp, a, v[a])});
  }
  Series operator()(const CoeffPoly& p) {
    Series r = Series::constant(sp_, 0.0);
    for (const auto& [e, c] : p.terms()) {
      Series t = Series::constant(sp_, to_double(c));
      for (int a = 0; a < sp_->vars(); ++a)
        if (e[a] > 0) t = t * power(a, e[a]);
      r += t;
    }
    return r;
  }

 private:
  const Series& power(int a, int k) {
    while (static_cast<int>(powers_[a].size()) <= k) powers_[a].push_back(powers_[a].back() * powers_[a][1]);
    return powers_[a][k];
  }
  SpacePtr sp_;
  std::vector<std::vector<Series>> powers_;
};

SeriesMatrix to_series(const HydroMetric& m, PolySeries& ps) {
  SeriesMatrix r(m.n);
  for (int a = 0; a < m.n; ++a)
    for (int b = 0; b < m.n; ++b) r[a].push_back(ps(m.g[a][b]));
  return r;
}

// Eigenvalue branch of M through (lambda0, r0), by the bordered iteration
// (M - lambda) r = 0, r0^T r = 1 with the Jacobian frozen at the origin.
Series eigen_branch(const SeriesMatrix& M, const Matrix& M0, double lambda0, const Eigen::VectorXd& r0) {
  const int n = static_cast<int>(M.size());
  const SpacePtr& sp = M[0][0].space();
  Matrix B = Matrix::Zero(n + 1, n + 1);
  B.topLeftCorner(n, n) = M0 - lambda0 * Matrix::Identity(n, n);
  B.block(0, n, n, 1) = -r0;
  B.block(n, 0, 1, n) = r0.transpose();
  Matrix Binv = B.inverse();
  std::vector<Series> r;
  for (int i = 0; i < n; ++i) r.push_back(Series::constant(sp, r0(i)));
  Series lambda = Series::constant(sp, lambda0);
  for (int it = 0; it <= sp->order() + 1; ++it) {
    std::vector<Series> F;
    for (int i = 0; i < n; ++i) {
      Series s = r[i] * lambda * -1.0;
      for (int j = 0; j < n; ++j) s += M[i][j] * r[j];
      F.push_back(s);
    }
    Series last = Series::constant(sp, -1.0);
    for (int i = 0; i < n; ++i) last += r[i] * r0(i);
    F.push_back(last);
    for (int i = 0; i <= n; ++i) {
      Series d = Series::constant(sp, 0.0);
      for (int j = 0; j <= n; ++j)
        if (Binv(i, j) != 0.0) d += F[j] * Binv(i, j);
      if (i < n)
        r[i] -= d;
      else
        lambda -= d;
    }
  }
  return lambda;
}

void fill_residuals(PencilChart& c) {
  c.residuals["egoroff"] = check_egoroff(c);
  GammaSystemResidual gs = check_gamma_system(c);
  c.residuals["gamma_distinct"] = gs.distinct;
  c.residuals["gamma_sum"] = gs.sum;
  c.residuals["gamma_euler"] = gs.euler;
  c.residuals["DZ_f"] = check_DZ_f(c);
}

}  // namespace

PencilChart canonical_coordinates_at(const HydroMetric& g1, const HydroMetric& g2, const Point& v, int order) {
  const int n = g1.n;
  if (g2.n != n || static_cast<int>(v.size()) != n) throw DimensionMismatch("pencil dimensions");
  g1.validate();
  g2.validate();
  auto sp = std::make_shared<const SeriesSpace>(n, order);
  PolySeries ps(sp, v);
  SeriesMatrix G1 = to_series(g1, ps), G2 = to_series(g2, ps);

  Matrix A1 = g1.eval(v), A2 = g2.eval(v);
  Eigen::FullPivLU<Matrix> lu(A1);
  if (!lu.isInvertible()) throw DegenerateMetric("g1 is degenerate at the sample point");
  Matrix M0 = lu.solve(A2);
  Eigen::EigenSolver<Matrix> es(M0);
  double scale = 1.0 + M0.cwiseAbs().maxCoeff();
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < n; ++i)
    if (std::fabs(es.eigenvalues()(i).imag()) > 1e-9 * scale) throw ComplexSpectrum("non-real root of det(g2 - u g1)");
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return es.eigenvalues()(a).real() < es.eigenvalues()(b).real(); });
  for (int i = 0; i + 1 < n; ++i)
    if (es.eigenvalues()(idx[i + 1]).real() - es.eigenvalues()(idx[i]).real() < 1e-9 * scale)
      throw DegenerateSpectrum("repeated root of det(g2 - u g1)");

  SeriesMatrix M = solve(G1, G2);
  PencilChart c;
  c.n = n;
  c.point = v;
  std::vector<Series> U;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd r0 = es.eigenvectors().col(idx[i]).real();
    r0.normalize();
    U.push_back(eigen_branch(M, M0, es.eigenvalues()(idx[i]).real(), r0));
    c.u.push_back(U.back().value());
  }

  // Jacobian series and the metrics in canonical coordinates.
  SeriesMatrix J(n);
  c.du_dv = Matrix(n, n);
  c.d2u_dv2.assign(n, Matrix(n, n));
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a) {
      J[i].push_back(U[i].derivative(a));
      c.du_dv(i, a) = J[i][a].value();
      for (int b = 0; b < n; ++b) c.d2u_dv2[i](a, b) = J[i][a].derivative(b).value();
    }
  c.dv_du = c.du_dv.inverse();
  std::vector<Series> F;
  double off1 = 0, off2 = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Series s1 = Series::constant(sp, 0.0), s2 = Series::constant(sp, 0.0);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          Series jj = J[i][a] * J[j][b];
          s1 += jj * G1[a][b];
          s2 += jj * G2[a][b];
        }
      if (i == j) {
        F.push_back(s1);
        off2 = std::max(off2, std::fabs(s2.value() - c.u[i] * s1.value()));
      } else {
        off1 = std::max(off1, std::fabs(s1.value()));
        off2 = std::max(off2, std::fabs(s2.value()));
      }
    }
  c.residuals["diagonal_g1"] = off1;
  c.residuals["diagonal_g2"] = off2;
  for (int i = 0; i < n; ++i) {
    c.f.push_back(F[i].value());
    if (std::fabs(c.f.back()) < 1e-14 * scale) throw ZeroDiagonalEntry("f^" + std::to_string(i + 1) + " vanishes");
    c.sign.push_back(c.f.back() > 0 ? 1 : -1);
  }

  // v as a series in (u - u*), by fixed-point iteration on the nonlinear part.
  std::vector<Series> du, dv(n);
  for (int i = 0; i < n; ++i) du.push_back(Series::variable(sp, i, 0.0));
  std::vector<Series> shifted;
  for (int i = 0; i < n; ++i) shifted.push_back(U[i] + (-c.u[i]));
  for (int a = 0; a < n; ++a) {
    dv[a] = Series::constant(sp, 0.0);
    for (int i = 0; i < n; ++i) dv[a] += du[i] * c.dv_du(a, i);
  }
  for (int it = 0; it < order; ++it) {
    std::vector<Series> res;
    for (int i = 0; i < n; ++i) res.push_back(shifted[i].compose(dv) - du[i]);
    for (int a = 0; a < n; ++a)
      for (int i = 0; i < n; ++i) dv[a] -= res[i] * c.dv_du(a, i);
  }

  std::vector<Series> fu, fcov, rho;
  c.df = Matrix(n, n);
  c.df_cov = Matrix(n, n);
  for (int i = 0; i < n; ++i) {
    fu.push_back(F[i].compose(dv));
    fcov.push_back(fu[i].inverse());
    rho.push_back((fcov[i] * static_cast<double>(c.sign[i])).sqrt());
    for (int k = 0; k < n; ++k) {
      c.df(i, k) = fu[i].derivative(k).value();
      c.df_cov(i, k) = fcov[i].derivative(k).value();
    }
  }
  // gamma_ij = d_j f_i / (2 sqrt(f_i) sqrt(f_j)), sqrt(f_i) = rho_i * phase_i.
  std::vector<std::complex<double>> phase;
  for (int i = 0; i < n; ++i) phase.push_back(c.sign[i] > 0 ? std::complex<double>(1, 0) : std::complex<double>(0, 1));
  c.gamma = CMatrix::Zero(n, n);
  c.dgamma.assign(n, CMatrix::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      Series g = fcov[i].derivative(j) * (rho[i] * rho[j]).inverse() * 0.5;
      std::complex<double> ph = 1.0 / (phase[i] * phase[j]);
      c.gamma(i, j) = g.value() * ph;
      for (int k = 0; k < n; ++k) c.dgamma[k](i, j) = g.derivative(k).value() * ph;
    }
  c.space = sp;
  c.u_series = U;
  c.dv_series = dv;
  fill_residuals(c);
  ChristoffelResidual cr = check_christoffel(c, g1, g2);
  c.residuals["christoffel_g1"] = cr.first;
  c.residuals["christoffel_g2"] = cr.second;
  return c;
}

DiagonalVelocities diagonal_velocities(const PencilChart& c, const std::vector<std::vector<CoeffPoly>>& V) {
  const int n = c.n;
  const SpacePtr& sp = c.space;
  PolySeries ps(sp, c.point);
  SeriesMatrix J(n), Vs(n);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a) {
      J[i].push_back(c.u_series[i].derivative(a));
      Vs[i].push_back(ps(V[i][a]));
    }
  // J V J^{-1} = (J^{-T} (J V)^T)^T
  SeriesMatrix JT(n), JVT(n);
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i) {
      JT[a].push_back(J[i][a]);
      Series s = Series::constant(sp, 0.0);
      for (int b = 0; b < n; ++b) s += J[i][b] * Vs[b][a];
      JVT[a].push_back(s);
    }
  // X = J^{-T} (J V)^T solves J^T X = (J V)^T, and (J V J^{-1})_{ij} = X_{ji}.
  SeriesMatrix X = solve(JT, JVT);
  DiagonalVelocities out;
  for (int i = 0; i < n; ++i) {
    out.A.push_back(X[i][i].compose(c.dv_series));
    for (int j = 0; j < n; ++j)
      if (j != i) out.offdiag = std::max(out.offdiag, std::fabs(X[j][i].value()));
  }
  return out;
}

CMatrix rotation_coefficients(const PencilChart& chart) { return chart.gamma; }

double check_egoroff(const PencilChart& c) {
  double r = 0;
  for (int i = 0; i < c.n; ++i)
    for (int j = 0; j < c.n; ++j) r = std::max(r, std::fabs(c.df_cov(i, j) - c.df_cov(j, i)));
  return r;
}

GammaSystemResidual check_gamma_system(const PencilChart& c) {
  GammaSystemResidual r;
  const int n = c.n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      std::complex<double> sum = 0, euler = c.gamma(i, j);
      for (int k = 0; k < n; ++k) {
        sum += c.dgamma[k](i, j);
        euler += c.u[k] * c.dgamma[k](i, j);
        if (k != i && k != j)
          r.distinct = std::max(r.distinct, std::abs(c.dgamma[k](i, j) - c.gamma(i, k) * c.gamma(j, k)));
      }
      r.sum = std::max(r.sum, std::abs(sum));
      r.euler = std::max(r.euler, std::abs(euler));
    }
  return r;
}

bool check_irreducible(const PencilChart& c, double tol) {
  std::vector<bool> seen(c.n, false);
  std::vector<int> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    for (int j = 0; j < c.n; ++j)
      if (!seen[j] && (std::abs(c.gamma(i, j)) > tol || std::abs(c.gamma(j, i)) > tol)) {
        seen[j] = true;
        stack.push_back(j);
      }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

double check_DZ_f(const PencilChart& c) {
  double r = 0;
  for (int i = 0; i < c.n; ++i) r = std::max(r, std::fabs(c.df.row(i).sum()));
  return r;
}

ChristoffelResidual check_christoffel(const PencilChart& c, const HydroMetric& g1, const HydroMetric& g2) {
  const int n = c.n;
  auto transported = [&](const HydroMetric& m, int i, int j, int k) {
    double s = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double gab = m.g[a][b].eval(c.point);
        for (int cc = 0; cc < n; ++cc) {
          double inner = gab * c.d2u_dv2[j](b, cc) + c.du_dv(j, b) * m.gamma[a][b][cc].eval(c.point);
          s += c.du_dv(i, a) * inner * c.dv_du(cc, k);
        }
      }
    return s;
  };
  auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  ChristoffelResidual r;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const auto& f = c.f;
        const auto& df = c.df;
        double e1 = 0.5 * df(i, k) * delta(i, j) + 0.5 * f[i] / f[j] * df(j, i) * delta(j, k) -
                    0.5 * f[j] / f[i] * df(i, j) * delta(i, k);
        double dphi = delta(i, k) * f[i] + c.u[i] * df(i, k);
        double e2 = 0.5 * dphi * delta(i, j) + 0.5 * c.u[i] * f[i] / f[j] * df(j, i) * delta(j, k) -
                    0.5 * c.u[j] * f[j] / f[i] * df(i, j) * delta(i, k);
        r.first = std::max(r.first, std::fabs(transported(g1, i, j, k) - e1));
        r.second = std::max(r.second, std::fabs(transported(g2, i, j, k) - e2));
      }
  return r;
}

PsiResidual psi_residual(const PencilChart& c, const PsiField& psi, double h) {
  const int n = c.n;
  CMatrix p0 = psi(c.point);
  PsiResidual out;
  out.trivial = p0.cwiseAbs().maxCoeff() < 1e-14;
  auto central = [&](int a, double step) {
    Point vp = c.point, vm = c.point;
    vp[a] += step;
    vm[a] -= step;
    return CMatrix((psi(vp) - psi(vm)) / (2 * step));
  };
  // dpsi[a] = d psi / d v^a
  std::vector<CMatrix> dpsi_dv;
  for (int a = 0; a < n; ++a) {
    CMatrix d1 = central(a, h), d2 = central(a, h / 2);
    dpsi_dv.push_back((4.0 * d2 - d1) / 3.0);
  }
  for (int col = 0; col < p0.cols(); ++col)
    for (int i = 0; i < n; ++i) {
      // d psi_j / d u^i for all j
      Eigen::VectorXcd d = Eigen::VectorXcd::Zero(n);
      for (int a = 0; a < n; ++a) d += dpsi_dv[a].col(col) * c.dv_du(a, i);
      for (int j = 0; j < n; ++j) {
        std::complex<double> r;
        if (j != i) {
          r = d(j) - c.gamma(j, i) * p0(i, col);
        } else {
          r = d(i);
          for (int k = 0; k < n; ++k)
            if (k != i) r += c.gamma(k, i) * p0(k, col);
        }
        out.value = std::max(out.value, std::abs(r));
      }
    }
  return out;
}

}  // namespace taucover
