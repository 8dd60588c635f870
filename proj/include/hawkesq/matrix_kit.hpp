#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <vector>

#include "hawkesq/errors.hpp"
#include "hawkesq/quadrature.hpp"

namespace hawkesq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr int kMaxPhases = 64;

// Relative smallest-singular-value threshold below which a matrix is
// treated as singular for the closed forms.
inline bool is_near_singular(const Matrix& A) {
  Eigen::JacobiSVD<Matrix> svd(A);
  const auto& sv = svd.singularValues();
  return sv(sv.size() - 1) < 1e-12 * (1.0 + sv(0));
}

inline void require_square(const Matrix& A) {
  if (A.rows() != A.cols()) throw NonSquare();
}

inline Matrix expm(const Matrix& A) {
  require_square(A);
  return A.exp();
}

// integral_0^t e^{Ls} ds = L^{-1}(e^{Lt} - I)
inline Matrix integrate_expm(const Matrix& L, double t) {
  require_square(L);
  if (is_near_singular(L)) throw SingularMatrix("integrate_expm: L singular");
  Matrix I = Matrix::Identity(L.rows(), L.cols());
  return L.fullPivLu().solve(expm(L * t) - I);
}

// integral_0^t e^{Ls} nu s^eta e^{gamma s} ds, via the finite-sum closed form.
inline Vector integral_poly_exp(const Matrix& L, const Vector& nu, int eta,
                                double gamma, double t) {
  require_square(L);
  if (L.rows() != nu.size()) throw DimensionMismatch();
  const Eigen::Index n = L.rows();
  Matrix shifted = L + gamma * Matrix::Identity(n, n);
  if (is_near_singular(shifted))
    throw SingularShiftedMatrix("integral_poly_exp: L + gamma I singular");
  auto lu = shifted.fullPivLu();

  Vector expterm = expm(L * t) * nu * std::exp(gamma * t);
  Vector acc = Vector::Zero(n);
  double fact = 1.0;  // eta! / (eta - k)!
  double sign = 1.0;
  Vector inv_pow = expterm;
  for (int k = 0; k <= eta; ++k) {
    inv_pow = lu.solve(inv_pow);
    acc += fact * sign * inv_pow * std::pow(t, eta - k);
    fact *= (eta - k);
    sign = -sign;
  }
  // trailing constant: eta! (-1)^eta (L + gamma I)^{-(eta+1)} nu
  Vector tail = nu;
  for (int k = 0; k <= eta; ++k) tail = lu.solve(tail);
  double etafact = 1.0;
  for (int k = 2; k <= eta; ++k) etafact *= k;
  acc -= etafact * ((eta % 2 == 0) ? 1.0 : -1.0) * tail;
  return acc;
}

struct ForcingTerm {
  Vector nu;
  int eta = 0;
  double gamma = 0.0;
};

// Explicit solution of g' = -L g + sum_i nu_i t^{eta_i} e^{gamma_i t},
// g(0) = g0.
inline Vector solve_linear_ode(const Matrix& L,
                               const std::vector<ForcingTerm>& terms,
                               const Vector& g0, double t) {
  require_square(L);
  const Eigen::Index n = L.rows();
  Matrix eLmt = expm(-L * t);
  Vector g = eLmt * g0;
  for (const auto& term : terms) {
    if (term.nu.size() != n) throw DimensionMismatch();
    Matrix shifted = L + term.gamma * Matrix::Identity(n, n);
    if (is_near_singular(shifted))
      throw SingularShiftedMatrix("solve_linear_ode: L + gamma_i I singular");
    auto lu = shifted.fullPivLu();
    double fact = 1.0, sign = 1.0;
    Vector inv_pow = term.nu;
    for (int k = 0; k <= term.eta; ++k) {
      inv_pow = lu.solve(inv_pow);
      g += fact * sign * inv_pow * std::pow(t, term.eta - k) *
           std::exp(term.gamma * t);
      fact *= (term.eta - k);
      sign = -sign;
    }
    Vector tail = term.nu;
    for (int k = 0; k <= term.eta; ++k) tail = lu.solve(tail);
    double etafact = 1.0;
    for (int k = 2; k <= term.eta; ++k) etafact *= k;
    g -= etafact * ((term.eta % 2 == 0) ? 1.0 : -1.0) * (eLmt * tail);
  }
  return g;
}

// M_{gamma,nu,L}(t) = integral_0^t e^{(gamma I - L^T)s} nu nu^T e^{-Ls} ds.
// Uses the commuting closed form when L is normal and commutes with nu nu^T,
// otherwise adaptive quadrature on the matrix-valued integrand.
inline Matrix m_matrix(double gamma, const Vector& nu, const Matrix& L,
                       double t, double tol = 1e-11) {
  require_square(L);
  if (L.rows() != nu.size()) throw DimensionMismatch();
  const Eigen::Index n = L.rows();
  if (t <= 0.0) return Matrix::Zero(n, n);
  Matrix nnT = nu * nu.transpose();
  if ((L * nnT - nnT * L).cwiseAbs().maxCoeff() < 1e-12 &&
      (L * L.transpose() - L.transpose() * L).cwiseAbs().maxCoeff() < 1e-12) {
    Matrix A = gamma * Matrix::Identity(n, n) - L.transpose() - L;
    if (!is_near_singular(A))
      return A.fullPivLu().solve(Matrix(expm(A * t) - Matrix::Identity(n, n))) *
             nnT;
  }
  Matrix mLT = gamma * Matrix::Identity(n, n) - L.transpose();
  auto integrand = [&](double s) -> Matrix {
    return expm(mLT * s) * nnT * expm(-L * s);
  };
  return quadrature(integrand, 0.0, t, tol);
}

// Stable companion of m_matrix: e^{L^T t} M_{gamma,nu,L}(t) e^{L t}
// = integral_0^t e^{gamma(t-u)} e^{L^T u} nu nu^T e^{L u} du, which keeps the
// integrand bounded when L is Hurwitz-negated (i.e. -L Hurwitz is not
// required; decaying factors appear on both sides).
inline Matrix m_matrix_sandwich(double gamma, const Vector& nu, const Matrix& L,
                                double t, double tol = 1e-12) {
  require_square(L);
  const Eigen::Index n = L.rows();
  if (t <= 0.0) return Matrix::Zero(n, n);
  Matrix nnT = nu * nu.transpose();
  auto integrand = [&](double u) -> Matrix {
    return std::exp(gamma * (t - u)) * expm(L.transpose() * u) * nnT *
           expm(L * u);
  };
  return quadrature(integrand, 0.0, t, tol);
}

// Closed form of
//   integral_0^t [ ((eta+1)gamma I - L^T)^{-1} (e^{(eta gamma I - L^T)s}
//                  - e^{-gamma s} I) nu nu^T c e^{-Ls}
//                + e^{-L^T s} nu nu^T c (e^{(eta gamma I - L)s}
//                  - e^{-gamma s} I) ((eta+1)gamma I - L)^{-1} ] ds
inline Matrix double_cross_integral(double eta, double gamma, const Vector& nu,
                                    double c, const Matrix& L, double t) {
  require_square(L);
  const Eigen::Index n = L.rows();
  if (t <= 0.0) return Matrix::Zero(n, n);
  Matrix I = Matrix::Identity(n, n);
  Matrix shifted_left = (eta + 1) * gamma * I - L.transpose();
  Matrix shifted_right = (eta + 1) * gamma * I - L;
  Matrix gL = gamma * I + L;
  if (is_near_singular(L) || is_near_singular(gL) ||
      is_near_singular(shifted_right))
    throw SingularShiftedMatrix("double_cross_integral: singular shift");
  Matrix nnT = nu * nu.transpose();
  Matrix inner =
      (eta + 2) * gamma * m_matrix(eta * gamma, nu, L, t) +
      expm((eta * gamma * I - L.transpose()) * t) * nnT * expm(-L * t) - nnT +
      nnT * (expm(-gL * t) - I) * gL.fullPivLu().solve(shifted_right) +
      shifted_left * gL.transpose().fullPivLu().solve(
                         Matrix((expm(-gL.transpose() * t) - I) * nnT));
  return c * shifted_left.fullPivLu().solve(inner) *
         shifted_right.inverse();
}

// Verifies that e^{-A} and (cA + bI)^{-1} commute (test utility).
inline bool commute_check(const Matrix& A, double b, double c) {
  require_square(A);
  Matrix shifted = c * A + b * Matrix::Identity(A.rows(), A.cols());
  if (is_near_singular(shifted)) throw SingularMatrix("commute_check");
  Matrix inv = shifted.inverse();
  Matrix eA = expm(-A);
  return (eA * inv - inv * eA).cwiseAbs().maxCoeff() < 1e-10;
}

// Solves A^T X + X A + M = 0 via Kronecker vectorization; A must be Hurwitz.
inline Matrix solve_lyapunov(const Matrix& A, const Matrix& M) {
  require_square(A);
  require_square(M);
  if (A.rows() != M.rows()) throw DimensionMismatch();
  const Eigen::Index n = A.rows();
  Eigen::EigenSolver<Matrix> es(A);
  for (Eigen::Index i = 0; i < n; ++i)
    if (es.eigenvalues()(i).real() >= 0) throw NonHurwitz();
  Matrix K = Matrix::Zero(n * n, n * n);
  // vec(A^T X + X A) = (I (x) A^T + A^T (x) I) vec(X), column-major vec
  for (Eigen::Index i = 0; i < n; ++i)
    K.block(i * n, i * n, n, n) += A.transpose();
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = 0; q < n; ++q)
      for (Eigen::Index r = 0; r < n; ++r)
        K(q * n + r, p * n + r) += A(p, q);
  Eigen::Map<const Vector> mvec(M.data(), n * n);
  Vector xvec = K.fullPivLu().solve(Vector(-mvec));
  Matrix X = Eigen::Map<const Matrix>(xvec.data(), n, n);
  return 0.5 * (X + X.transpose());
}

}  // namespace hawkesq
