#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>

namespace hawkesq {
namespace detail {

inline double abs_norm(double x) { return std::abs(x); }
template <typename Derived>
double abs_norm(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseAbs().maxCoeff();
}

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1].
inline constexpr double kKronrodX[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,                0.207784955007898,
    0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
inline constexpr double kKronrodW[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
inline constexpr double kGaussW[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870};

template <typename F, typename V>
void gk15(const F& f, double a, double b, V& kronrod, double& err) {
  const double h = 0.5 * (b - a), mid = 0.5 * (a + b);
  V gauss;
  for (int i = 0; i < 15; ++i) {
    V fx = f(mid + h * kKronrodX[i]);
    if (i == 0) {
      kronrod = kKronrodW[i] * fx;
    } else {
      kronrod += kKronrodW[i] * fx;
    }
    if (i % 2 == 1) {
      int g = i / 2;
      if (g == 0) {
        gauss = kGaussW[g] * fx;
      } else {
        gauss += kGaussW[g] * fx;
      }
    }
  }
  kronrod *= h;
  gauss *= h;
  err = abs_norm(V(kronrod - gauss));
}

template <typename F, typename V>
void adaptive_gk(const F& f, double a, double b, double tol, V& acc, int depth) {
  V k;
  double err;
  gk15(f, a, b, k, err);
  if (err <= tol || depth >= 48) {
    acc += k;
    return;
  }
  double mid = 0.5 * (a + b);
  adaptive_gk(f, a, mid, tol / 2, acc, depth + 1);
  adaptive_gk(f, mid, b, tol / 2, acc, depth + 1);
}

}  // namespace detail

// Adaptive Gauss-Kronrod quadrature of f over [a, b]. Works for scalar,
// vector, and matrix valued integrands.
template <typename F>
auto quadrature(const F& f, double a, double b, double tol = 1e-11)
    -> decltype(f(a)) {
  using V = decltype(f(a));
  V acc = f(a);
  acc -= acc;  // zero of the right shape
  if (b <= a) return acc;
  detail::adaptive_gk(f, a, b, tol, acc, 0);
  return acc;
}

}  // namespace hawkesq
