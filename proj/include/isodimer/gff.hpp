#pragma once

#include <Eigen/Dense>
#include <Eigen/LU>

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "isodimer/geometry.hpp"
#include "isodimer/height.hpp"
#include "isodimer/quadrature.hpp"

namespace isodimer {

// Green function of the plane, up to its additive constant.
inline double green(Complex x, Complex y) {
  if (std::abs(x - y) < 1e-300) throw ValidationError("green: coincident points");
  return -std::log(std::abs(x - y)) / (2.0 * kPi);
}

// g(u,v,u',v') = g(v,v') + g(u,u') - g(v,u') - g(u,v'): the covariance kernel
// of height increments across the segments (u,v) and (u',v'). Equals
// -(1/2pi) log of the modulus of the cross-ratio.
inline double four_point_g(Complex u, Complex v, Complex up, Complex vp) {
  return green(v, vp) + green(u, up) - green(v, up) - green(u, vp);
}

// All (k-1)!! perfect pairings of {0, ..., k-1}, k even.
inline std::vector<std::vector<std::pair<int, int>>> perfect_pairings(int k) {
  std::vector<std::vector<std::pair<int, int>>> out;
  std::vector<std::pair<int, int>> current;
  std::vector<char> used(k, 0);
  auto rec = [&](auto&& self) -> void {
    int first = -1;
    for (int i = 0; i < k; ++i) {
      if (!used[i]) {
        first = i;
        break;
      }
    }
    if (first < 0) {
      out.push_back(current);
      return;
    }
    used[first] = 1;
    for (int j = first + 1; j < k; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      current.emplace_back(first, j);
      self(self);
      current.pop_back();
      used[j] = 0;
    }
    used[first] = 0;
  };
  rec(rec);
  return out;
}

// Limit of E[prod_j (h(v_j) - h(u_j))]: zero for odd k, and the pairing sum
// (1/pi)^{k/2} sum_tau prod g(u,v,u',v') for even k.
inline double wick_moment(const std::vector<std::pair<Complex, Complex>>& segments) {
  const int k = static_cast<int>(segments.size());
  if (k % 2 == 1) return 0.0;
  double total = 0.0;
  for (const auto& pairing : perfect_pairings(k)) {
    double prod = 1.0;
    for (const auto& [a, b] : pairing) {
      prod *= four_point_g(segments[a].first, segments[a].second, segments[b].first,
                           segments[b].second);
    }
    total += prod;
  }
  return total * std::pow(1.0 / kPi, k / 2);
}

// det M for m_ii = 0, m_ij = 1/(x_i - x_j): zero for odd k; for even k it
// equals the pairing sum of prod 1/(x - x')^2.
inline double cauchy_zero_diag_det(const std::vector<double>& xs) {
  const int k = static_cast<int>(xs.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      const double d = xs[i] - xs[j];
      if (d == 0) throw ValidationError("cauchy_zero_diag_det: points must be distinct");
      M(i, j) = 1.0 / d;
    }
  }
  return M.determinant();
}

inline double pairing_sum(const std::vector<double>& xs) {
  const int k = static_cast<int>(xs.size());
  if (k % 2 == 1) return 0.0;
  double total = 0.0;
  for (const auto& pairing : perfect_pairings(k)) {
    double prod = 1.0;
    for (const auto& [a, b] : pairing) {
      const double d = xs[a] - xs[b];
      prod /= d * d;
    }
    total += prod;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

// A radial bump: amplitude * exp(-1 / (1 - (r/R)^2)) inside radius R.
struct RadialBump {
  Complex center;
  double radius = 1.0;
  double amplitude = 1.0;

  double eval(Complex x) const {
    const double r = std::abs(x - center) / radius;
    if (r >= 1.0) return 0.0;
    return amplitude * std::exp(-1.0 / (1.0 - r * r));
  }

  // Radial profile as a function of r in [0, radius].
  double profile(double r) const {
    const double t = r / radius;
    if (t >= 1.0) return 0.0;
    return amplitude * std::exp(-1.0 / (1.0 - t * t));
  }
};

// Smooth, compactly supported, mean-zero test function: the difference of two
// equal radial bumps with disjoint supports, normalized to unit maximum.
struct TestFunction {
  RadialBump positive, negative;

  static TestFunction bump_pair(Complex c1, Complex c2, double radius) {
    if (std::abs(c1 - c2) <= 2.0 * radius) {
      throw ValidationError("test function: bump supports must be disjoint");
    }
    TestFunction f;
    const double amp = std::exp(1.0);  // peak of exp(-1/(1-r^2)) is e^{-1}
    f.positive = {c1, radius, amp};
    f.negative = {c2, radius, amp};
    return f;
  }

  // The standard pair: unit-radius bumps at (-2, 0) and (2, 0).
  static TestFunction standard_pair() {
    return bump_pair(Complex(-2.0, 0.0), Complex(2.0, 0.0), 1.0);
  }

  double eval(Complex x) const { return positive.eval(x) - negative.eval(x); }

  std::array<double, 4> support_box() const {  // xmin, xmax, ymin, ymax
    const double x1 = positive.center.real(), y1 = positive.center.imag();
    const double x2 = negative.center.real(), y2 = negative.center.imag();
    return {std::min(x1 - positive.radius, x2 - negative.radius),
            std::max(x1 + positive.radius, x2 + negative.radius),
            std::min(y1 - positive.radius, y2 - negative.radius),
            std::max(y1 + positive.radius, y2 + negative.radius)};
  }
};

// ---------------------------------------------------------------------------
// Dirichlet energy, two routes
// ---------------------------------------------------------------------------

namespace detail {

// F(t) = 2 pi * int_0^R rho(s) s log(max(t, s)) ds: the circle average of
// log|x - y| against a radial density, by the mean value property of log.
inline double log_circle_average(const RadialBump& b, double t, double tol) {
  const double R = b.radius;
  auto mass_part = [&](double lo, double hi, auto f) {
    if (hi <= lo) return 0.0;
    return integrate_real(f, lo, hi, tol);
  };
  double val = 0.0;
  if (t > 0) {
    val += std::log(t) *
           mass_part(0.0, std::min(t, R), [&](double s) { return b.profile(s) * s; });
  }
  val += mass_part(std::min(t, R), R, [&](double s) { return b.profile(s) * s * std::log(s); });
  return 2.0 * kPi * val;
}

// int int log|x-y| b1(x) b2(y) dx dy via two radial reductions.
inline double log_pair_integral(const RadialBump& b1, const RadialBump& b2, double tol) {
  const double d = std::abs(b1.center - b2.center);
  auto angular = [&](double r) {
    if (d < 1e-14) return 2.0 * kPi * log_circle_average(b2, r, tol * 1e-2);
    return integrate_real(
        [&](double th) {
          const double t = std::abs(Complex(d, 0.0) + r * unit_vector(th));
          return log_circle_average(b2, t, tol * 1e-2);
        },
        0.0, 2.0 * kPi, tol);
  };
  return integrate_real([&](double r) { return b1.profile(r) * r * angular(r); }, 0.0,
                        b1.radius, tol);
}

}  // namespace detail

// The bilinear form G(phi1, phi2) = int int g(x,y) phi1(x) phi2(y) dx dy.
// The log singularity on the diagonal is integrated exactly by circle
// averaging, so the quadrature only ever sees smooth radial integrands.
inline double dirichlet_energy(const TestFunction& f1, const TestFunction& f2,
                               double tol = 1e-8) {
  const RadialBump* b1[2] = {&f1.positive, &f1.negative};
  const RadialBump* b2[2] = {&f2.positive, &f2.negative};
  double total = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double sign = (i + j) % 2 == 0 ? 1.0 : -1.0;
      total += sign * detail::log_pair_integral(*b1[i], *b2[j], tol);
    }
  }
  return -total / (2.0 * kPi);
}

// Independent route: G(phi1, phi2) = int grad f1 . grad f2 dx, where
// f_i = g * phi_i. For radial pieces the gradient is the 2d Newton field
// -(1/2pi) M(r)/r in the radial direction, with M the enclosed mass.
class GradientFormEnergy {
 public:
  GradientFormEnergy(const TestFunction& f1, const TestFunction& f2) : f1_(f1), f2_(f2) {
    build_mass_table(f1_.positive, m1_);
    build_mass_table(f2_.positive, m2_);
  }

  double value(double tol = 1e-7, double box = 60.0) const {
    // The integrand decays like |x|^-4 (both potentials are dipole fields at
    // large distance), so a large box plus adaptive quadrature suffices.
    auto inner = [&](double x) {
      return integrate_real([&](double y) { return integrand(Complex(x, y)); }, -box, box,
                            tol * 1e-2);
    };
    return integrate_real(inner, -box, box, tol);
  }

 private:
  static void build_mass_table(const RadialBump& b, std::vector<double>& table) {
    // Cumulative 2 pi int_0^r rho s ds on a uniform grid over [0, R].
    const int n = 4096;
    table.assign(n + 1, 0.0);
    const double h = b.radius / n;
    double acc = 0.0;
    double prev = 0.0;
    for (int i = 1; i <= n; ++i) {
      const double r = i * h;
      const double cur = b.profile(r) * r;
      acc += 0.5 * (prev + cur) * h;
      prev = cur;
      table[i] = 2.0 * kPi * acc;
    }
  }

  static double mass_at(const RadialBump& b, const std::vector<double>& table, double r) {
    const int n = static_cast<int>(table.size()) - 1;
    if (r >= b.radius) return table[n];
    const double x = r / b.radius * n;
    const int i = std::min(n - 1, static_cast<int>(x));
    const double frac = x - i;
    return table[i] * (1 - frac) + table[i + 1] * frac;
  }

  // grad (g * phi) for phi = b(+) - b(-), both bumps sharing one profile.
  Complex gradient(const TestFunction& f, const std::vector<double>& table, Complex x) const {
    Complex g(0, 0);
    for (int s = 0; s < 2; ++s) {
      const RadialBump& b = s == 0 ? f.positive : f.negative;
      const Complex d = x - b.center;
      const double r = std::abs(d);
      if (r < 1e-12) continue;
      const double m = mass_at(b, table, r);
      const double coef = -(s == 0 ? 1.0 : -1.0) * m / (2.0 * kPi * r * r);
      g += coef * d;
    }
    return g;
  }

  double integrand(Complex x) const {
    const Complex g1 = gradient(f1_, m1_, x);
    const Complex g2 = gradient(f2_, m2_, x);
    return dot(g1, g2);
  }

  TestFunction f1_, f2_;
  std::vector<double> m1_, m2_;
};

inline double gradient_form_energy(const TestFunction& f1, const TestFunction& f2,
                                   double tol = 1e-7) {
  return GradientFormEnergy(f1, f2).value(tol);
}

// ---------------------------------------------------------------------------
// Discrete field functional
// ---------------------------------------------------------------------------

// The functional sum_v a(v*) phi(v) h(v) over the given primal vertices,
// where a(v*) is the physical dual-face area. The weights subtract the
// area-weighted discrete mean of phi over the vertex set, so the functional
// is exactly invariant under global shifts of h.
class FieldFunctional {
 public:
  FieldFunctional(const IsoradialGraph& g, const TestFunction& phi,
                  const std::vector<int>& vertices)
      : g_(&g), vertices_(vertices) {
    weights_.reserve(vertices.size());
    double total_area = 0.0;
    double weighted_phi = 0.0;
    areas_.reserve(vertices.size());
    for (int v : vertices) {
      const double a = dual_face_area(g, v);
      areas_.push_back(a);
      const double p = phi.eval(g.primal_physical(v));
      weights_.push_back(a * p);
      total_area += a;
      weighted_phi += a * p;
    }
    raw_discrete_mean_ = weighted_phi;
    const double mean = weighted_phi / total_area;
    for (size_t i = 0; i < weights_.size(); ++i) weights_[i] -= areas_[i] * mean;
  }

  double apply(const HeightField& h) const {
    double s = 0;
    for (size_t i = 0; i < vertices_.size(); ++i) s += weights_[i] * h.at(vertices_[i]);
    return s;
  }

  // sum a(v*) phi(v) before mean correction; small for mean-zero phi.
  double raw_discrete_mean() const { return raw_discrete_mean_; }
  const std::vector<int>& vertices() const { return *&vertices_; }

 private:
  const IsoradialGraph* g_;
  std::vector<int> vertices_;
  std::vector<double> weights_, areas_;
  double raw_discrete_mean_ = 0.0;
};

inline double field_functional(const HeightField& h, const TestFunction& phi,
                               const IsoradialGraph& g, const std::vector<int>& vertices) {
  return FieldFunctional(g, phi, vertices).apply(h);
}

}  // namespace isodimer
