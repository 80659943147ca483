#pragma once

#include <array>
#include <cmath>
#include <functional>

#include "isodimer/common.hpp"

namespace isodimer {

// Adaptive Gauss-Kronrod (7/15) quadrature. The 15-point Kronrod value is the
// result, |K15 - G7| the error estimate; intervals are bisected until the
// estimate drops below the local tolerance budget.
namespace gk {

// Kronrod abscissae on [0,1] of the positive half; node 7 is the midpoint.
inline constexpr std::array<double, 8> kNodes = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};

// Gauss weights for nodes 1, 3, 5, 7.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <class F, class Value>
void rule(const F& f, double a, double b, Value& kronrod, double& err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  Value k = kKronrodWeights[7] * f(c);
  Value g = kGaussWeights[3] * f(c);
  for (int i = 0; i < 7; ++i) {
    const Value fp = f(c + h * kNodes[i]);
    const Value fm = f(c - h * kNodes[i]);
    k += kKronrodWeights[i] * (fp + fm);
    if (i % 2 == 1) g += kGaussWeights[i / 2] * (fp + fm);
  }
  kronrod = h * k;
  err = std::abs(h * (k - g));
}

template <class F, class Value>
Value adaptive(const F& f, double a, double b, double abs_tol, int depth, Value) {
  Value k;
  double err;
  rule<F, Value>(f, a, b, k, err);
  if (err <= abs_tol || b - a < 1e-14) {
    if (depth <= 0 && err > abs_tol) {
      throw NumericalError("quadrature did not converge to requested tolerance");
    }
    if (err <= abs_tol) return k;
  }
  if (depth <= 0) throw NumericalError("quadrature did not converge to requested tolerance");
  const double c = 0.5 * (a + b);
  return adaptive(f, a, c, 0.5 * abs_tol, depth - 1, Value{}) +
         adaptive(f, c, b, 0.5 * abs_tol, depth - 1, Value{});
}

}  // namespace gk

// Integrates a complex-valued function over [a,b] to absolute tolerance.
template <class F>
Complex integrate_complex(const F& f, double a, double b, double abs_tol = 1e-11) {
  return gk::adaptive(f, a, b, abs_tol, 48, Complex{});
}

// Integrates a real-valued function over [a,b] to absolute tolerance.
template <class F>
double integrate_real(const F& f, double a, double b, double abs_tol = 1e-11) {
  return gk::adaptive(f, a, b, abs_tol, 48, double{});
}

}  // namespace isodimer
