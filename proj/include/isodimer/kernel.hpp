#pragma once

#include <Eigen/Dense>
#include <Eigen/LU>

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <queue>
#include <unordered_map>
#include <vector>

#include "isodimer/geometry.hpp"
#include "isodimer/quadrature.hpp"

namespace isodimer {

// ---------------------------------------------------------------------------
// Dirac operator
// ---------------------------------------------------------------------------

// The complex weighted adjacency operator between white and black dual
// vertices. For the dual edge wb with rhombus (w, x, b, y) in ccw order,
// K(w,b) = i (x - y): a complex number of modulus 2 sin(theta) pointing from
// w to b. Degenerate edges (w and b coincident) get modulus 2 and the
// direction perpendicular to the primal edge, with sign fixed by orienting
// black faces counterclockwise. K(b,w) is the conjugate.
struct DiracOperator {
  const IsoradialGraph* g = nullptr;
  std::vector<Complex> entries;  // per dual edge: K(white, black), lattice units

  Complex K_wb(int dual_edge) const { return entries[dual_edge]; }
  Complex K_bw(int dual_edge) const { return std::conj(entries[dual_edge]); }
};

inline DiracOperator assemble_dirac(const IsoradialGraph& g) {
  const IsoradialValidation v = validate_isoradial(g);
  if (!v.pass()) throw ValidationError("assemble_dirac: graph failed isoradiality validation");
  DiracOperator op;
  op.g = &g;
  op.entries.reserve(g.dual_edges.size());
  for (size_t de = 0; de < g.dual_edges.size(); ++de) {
    const auto& d = g.dual_edges[de];
    auto [tail, head] = g.canonical_orientation(d.primal_edge);
    // With the black face on the left of tail -> head, the ccw rhombus order
    // (w, x, b, y) has x = head and y = tail.
    op.entries.push_back(Complex(0, 1) * (g.primal_pos[head] - g.primal_pos[tail]));
  }
  return op;
}

// Uniform bound on |K^-1(b,w)| over a graph whose rhombus half-angles are at
// least delta: (1 + 2 / sin^2 delta) / (2 pi).
inline double kernel_bound(double delta) {
  if (!(delta > 0.0) || delta > kPi / 2 + 1e-12) {
    throw ValidationError("kernel_bound: delta must lie in (0, pi/2]");
  }
  const double s = std::sin(delta);
  return (1.0 + 2.0 / (s * s)) / (2.0 * kPi);
}

// Smallest rhombus half-angle of a graph.
inline double min_rhombus_angle(const IsoradialGraph& g) {
  double m = kPi / 2;
  for (const auto& d : g.dual_edges) m = std::min(m, d.theta);
  return m;
}

// ---------------------------------------------------------------------------
// Rhombus complex and discrete exponentials
// ---------------------------------------------------------------------------

// The 1-skeleton of the union of rhombi: vertices are primal and dual
// vertices, edges are rhombus sides (each joining one primal and one dual
// vertex, all of unit length in lattice coordinates).
struct RhombusComplex {
  const IsoradialGraph* g = nullptr;
  int primal_count = 0;
  // node id: primal v -> v, dual f -> primal_count + f
  std::vector<std::vector<int>> adj;  // node -> neighbor nodes
  std::vector<Complex> pos;

  int node_of_primal(int v) const { return v; }
  int node_of_dual(int f) const { return primal_count + f; }
  bool is_dual(int node) const { return node >= primal_count; }
  int dual_of_node(int node) const { return node - primal_count; }

  static RhombusComplex build(const IsoradialGraph& g) {
    RhombusComplex rc;
    rc.g = &g;
    rc.primal_count = g.num_primal_vertices();
    const int n = g.num_primal_vertices() + g.num_faces();
    rc.adj.assign(n, {});
    rc.pos.resize(n);
    for (int v = 0; v < g.num_primal_vertices(); ++v) rc.pos[v] = g.primal_pos[v];
    for (int f = 0; f < g.num_faces(); ++f) rc.pos[rc.primal_count + f] = g.faces[f].center;
    std::map<std::pair<int, int>, bool> seen;
    auto add_side = [&](int dual_face, int primal_v) {
      const int a = rc.node_of_dual(dual_face);
      const int b = primal_v;
      if (!seen.emplace(std::make_pair(a, b), true).second) return;
      rc.adj[a].push_back(b);
      rc.adj[b].push_back(a);
    };
    for (const auto& d : g.dual_edges) {
      const auto& pe = g.primal_edges[d.primal_edge];
      add_side(d.white, pe.u);
      add_side(d.white, pe.v);
      add_side(d.black, pe.u);
      add_side(d.black, pe.v);
    }
    return rc;
  }

  // Near-shortest path between two nodes that stays close to the straight
  // segment between them (Dijkstra with a small off-axis penalty). Step
  // directions then make acute-ish angles with the segment, which keeps the
  // poles of the discrete exponential inside the admissible arc.
  std::vector<int> path(int from, int to) const {
    const Complex a = pos[from];
    const Complex b = pos[to];
    const double len = std::abs(b - a);
    const Complex dir = len > 1e-12 ? (b - a) / len : Complex(1, 0);
    auto off_axis = [&](Complex p) {
      const Complex d = p - a;
      const double along = std::clamp(dot(d, dir), 0.0, len);
      return std::abs(d - along * dir);
    };
    const int n = static_cast<int>(adj.size());
    std::vector<double> dist(n, 1e300);
    std::vector<int> prev(n, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[from] = 0;
    heap.emplace(0.0, from);
    while (!heap.empty()) {
      auto [dcur, u] = heap.top();
      heap.pop();
      if (dcur > dist[u] + 1e-15) continue;
      if (u == to) break;
      for (int w : adj[u]) {
        const double nd = dist[u] + 1.0 + 1e-3 * off_axis(pos[w]);
        if (nd < dist[w] - 1e-15) {
          dist[w] = nd;
          prev[w] = u;
          heap.emplace(nd, w);
        }
      }
    }
    if (prev[to] < 0 && to != from) {
      throw ValidationError("rhombus path: endpoints are disconnected");
    }
    std::vector<int> out;
    for (int u = to; u != -1; u = prev[u]) out.push_back(u);
    std::reverse(out.begin(), out.end());
    return out;
  }
};

// The discrete exponential f_{wv}: a rational function with zeros and poles
// on the unit circle, built multiplicatively along a rhombus path from the
// white vertex w to v. Each side of the path carries the unit vector
// e^{i alpha} directed away from its dual endpoint when white and towards it
// when black; traversing the side along that direction contributes
// 1/(z - e^{i alpha}), traversing it against contributes (z - e^{i alpha}).
// The result does not depend on the chosen path.
struct DiscreteExponential {
  // (angle, multiplicity): positive multiplicities are zeros, negative poles.
  std::vector<std::pair<double, int>> factors;

  Complex eval(Complex z) const {
    Complex acc = 0;
    for (const auto& [angle, mult] : factors) {
      acc += static_cast<double>(mult) * std::log(z - unit_vector(angle));
    }
    return std::exp(acc);
  }

  // Value at z = 0, computed from the factor representation: each factor
  // contributes (-e^{i alpha})^{mult}, which has unit modulus.
  Complex eval0() const {
    double phase = 0;
    for (const auto& [angle, mult] : factors) phase += mult * wrap_angle(angle + kPi);
    return unit_vector(phase);
  }

  int degree() const {
    int d = 0;
    for (const auto& [angle, mult] : factors) d += mult;
    return d;
  }

  // Largest |wrap(pole_angle - theta0)| over poles; pi means a pole on the
  // ray used by the real-axis integral.
  double max_pole_offset(double theta0) const {
    double m = 0;
    for (const auto& [angle, mult] : factors) {
      if (mult < 0) m = std::max(m, std::abs(wrap_angle(angle - theta0)));
    }
    return m;
  }
};

namespace detail {

// Merges an angle into a multiset of (angle, multiplicity) factors, treating
// angles within 1e-9 (mod 2pi) as equal.
inline void merge_factor(std::vector<std::pair<double, int>>& factors, double angle,
                         int mult) {
  angle = wrap_angle(angle);
  for (auto& [a, m] : factors) {
    const double d = std::abs(wrap_angle(a - angle));
    if (d < 1e-9) {
      m += mult;
      return;
    }
  }
  factors.emplace_back(angle, mult);
}

}  // namespace detail

// Builds f_{wv} for the white dual vertex w and any dual vertex v.
inline DiscreteExponential discrete_exponential(const RhombusComplex& rc, int w_face,
                                                int v_face) {
  const IsoradialGraph& g = *rc.g;
  if (g.faces[w_face].color != DualColor::White) {
    throw ValidationError("discrete_exponential: source must be a white dual vertex");
  }
  const auto path = rc.path(rc.node_of_dual(w_face), rc.node_of_dual(v_face));
  DiscreteExponential f;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    const int a = path[i];
    const int b = path[i + 1];
    const int dual_node = rc.is_dual(a) ? a : b;
    const int other = rc.is_dual(a) ? b : a;
    const bool white = g.faces[rc.dual_of_node(dual_node)].color == DualColor::White;
    // Canonical direction: away from a white dual endpoint, towards a black.
    const Complex canon = white ? rc.pos[other] - rc.pos[dual_node]
                                : rc.pos[dual_node] - rc.pos[other];
    const double alpha = std::arg(canon);
    const bool along = white ? (a == dual_node) : (b == dual_node);
    detail::merge_factor(f.factors, alpha, along ? -1 : +1);
  }
  std::erase_if(f.factors, [](const auto& p) { return p.second == 0; });
  std::sort(f.factors.begin(), f.factors.end());
  return f;
}

// ---------------------------------------------------------------------------
// Exact inverse kernel (local integral)
// ---------------------------------------------------------------------------

// Computes K^-1(b,w) by the local real-axis integral of the discrete
// exponential. In coordinates rotated so the mean direction theta0 from w to
// b is 0, K^-1 equals 1/(2 pi) times the integral of f_{wb} over (-inf, 0];
// the substitution t = -(1-s)/s maps this to a bounded smooth integrand on
// (0, 1]. The rotation contributes a factor e^{-i theta0}.
//
// Results are cached by the (b - w) offset on translation-invariant graphs.
class ExactKernel {
 public:
  explicit ExactKernel(const IsoradialGraph& g)
      : g_(&g), dirac_(assemble_dirac(g)), rc_(RhombusComplex::build(g)) {}

  const IsoradialGraph& graph() const { return *g_; }
  const DiracOperator& dirac() const { return dirac_; }
  const RhombusComplex& complex() const { return rc_; }

  // K^-1(b, w) in lattice units. `b_face` must be black, `w_face` white.
  Complex inverse(int b_face, int w_face) const {
    if (g_->faces[b_face].color != DualColor::Black ||
        g_->faces[w_face].color != DualColor::White) {
      throw ValidationError("inverse kernel: need a (black, white) pair");
    }
    std::optional<std::uint64_t> key;
    if (g_->translation_invariant) {
      const Complex d = g_->faces[b_face].center - g_->faces[w_face].center;
      key = offset_key(d);
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = cache_.find(*key);
      if (it != cache_.end()) return it->second;
    }
    const Complex value = compute(b_face, w_face);
    if (key) {
      std::lock_guard<std::mutex> lock(mutex_);
      cache_.emplace(*key, value);
    }
    return value;
  }

  // Two-term asymptotic value: (1/2pi) (1/(b-w) + f_wb(0) / conj(b-w)).
  Complex inverse_asymptotic(int b_face, int w_face) const {
    const Complex d = g_->faces[b_face].center - g_->faces[w_face].center;
    if (std::abs(d) < 1e-12) {
      throw ValidationError("asymptotic kernel: coincident positions");
    }
    const DiscreteExponential f = discrete_exponential(rc_, w_face, b_face);
    return (1.0 / d + f.eval0() / std::conj(d)) / (2.0 * kPi);
  }

  double quadrature_tolerance() const { return quad_tol_; }

 private:
  Complex compute(int b_face, int w_face) const {
    const DiscreteExponential f = discrete_exponential(rc_, w_face, b_face);
    const Complex d = g_->faces[b_face].center - g_->faces[w_face].center;
    double theta0;
    if (std::abs(d) > 1e-9) {
      theta0 = std::arg(d);
    } else {
      // Degenerate adjacent pair: use the direction of K(w,b).
      int de = -1;
      for (int cand : g_->dual_adj[w_face]) {
        if (g_->dual_edges[cand].black == b_face) de = cand;
      }
      if (de < 0) throw ValidationError("coincident non-adjacent dual vertices");
      theta0 = std::arg(dirac_.K_wb(de));
    }
    // Rotated factors; all poles must stay off the negative real axis.
    DiscreteExponential fr;
    fr.factors.reserve(f.factors.size());
    for (const auto& [angle, mult] : f.factors) {
      fr.factors.emplace_back(wrap_angle(angle - theta0), mult);
    }
    const double margin = kPi - fr.max_pole_offset(0.0);
    if (margin < 1e-6) {
      throw NumericalError("inverse kernel: pole too close to the integration ray");
    }
    auto integrand = [&](double s) -> Complex {
      const double t = -(1.0 - s) / s;
      // f(t) / s^2, evaluated in log form; the degree -2 of f keeps the
      // limit s -> 0 finite.
      Complex acc = -2.0 * std::log(s);
      for (const auto& [angle, mult] : fr.factors) {
        acc += static_cast<double>(mult) * std::log(Complex(t, 0) - unit_vector(angle));
      }
      return std::exp(acc);
    };
    const Complex integral = integrate_complex(integrand, 0.0, 1.0, quad_tol_);
    return unit_vector(-theta0) * integral / (2.0 * kPi);
  }

  static std::uint64_t offset_key(Complex d) {
    const auto qx = static_cast<std::int64_t>(std::llround(d.real() * 1048576.0));
    const auto qy = static_cast<std::int64_t>(std::llround(d.imag() * 1048576.0));
    return (static_cast<std::uint64_t>(qx) << 32) ^ static_cast<std::uint64_t>(qy & 0xffffffff);
  }

  const IsoradialGraph* g_;
  DiracOperator dirac_;
  RhombusComplex rc_;
  double quad_tol_ = 1e-11;
  mutable std::unordered_map<std::uint64_t, Complex> cache_;
  mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Finite-volume inverse kernel
// ---------------------------------------------------------------------------

// Dense inverse of the Dirac matrix restricted to a finite region; the
// independent oracle for the exact integral and the backbone of exact
// sampling. Regions are capped at 2e4 dual vertices.
class FiniteKernel {
 public:
  FiniteKernel(const DualRegion& region, const DiracOperator& dirac)
      : region_(region), dirac_(&dirac) {
    if (region.size() > 20000) {
      throw ValidationError("finite kernel: region exceeds 2e4 dual vertices");
    }
    if (region.whites.size() != region.blacks.size()) {
      throw NumericalError("finite kernel: unbalanced colors, no perfect matching");
    }
    const int n = static_cast<int>(region.whites.size());
    white_index_.assign(region.g->num_faces(), -1);
    black_index_.assign(region.g->num_faces(), -1);
    for (int i = 0; i < n; ++i) white_index_[region.whites[i]] = i;
    for (int i = 0; i < n; ++i) black_index_[region.blacks[i]] = i;
    Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(n, n);
    for (int de : region.dual_edges) {
      const auto& d = region.g->dual_edges[de];
      K(white_index_[d.white], black_index_[d.black]) = dirac.K_wb(de);
    }
    lu_.compute(K);
    // Singularity test via the log-determinant: |det K| itself is the
    // weighted matching count and overflows already for mid-sized regions.
    log_abs_det_ = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = std::abs(lu_.matrixLU()(i, i));
      if (!(u > 1e-300)) {
        throw NumericalError("finite kernel: singular Dirac matrix (no perfect matching)");
      }
      log_abs_det_ += std::log(u);
    }
    inverse_ = lu_.inverse();  // rows: blacks, cols: whites
  }

  const DualRegion& region() const { return region_; }
  const DiracOperator& dirac() const { return *dirac_; }
  int size() const { return static_cast<int>(region_.whites.size()); }

  // K^-1(b, w) for faces of the region.
  Complex inverse(int b_face, int w_face) const {
    const int bi = black_index_[b_face];
    const int wi = white_index_[w_face];
    if (bi < 0 || wi < 0) throw ValidationError("finite kernel: face outside region");
    return inverse_(bi, wi);
  }

  const Eigen::MatrixXcd& inverse_matrix() const { return inverse_; }
  int white_index(int face) const { return white_index_[face]; }
  int black_index(int face) const { return black_index_[face]; }

  // |det K| equals the weighted matching count of the region; may overflow
  // for large regions, in which case use the log form.
  double abs_determinant() const { return std::exp(log_abs_det_); }
  double log_abs_determinant() const { return log_abs_det_; }

 private:
  DualRegion region_;
  const DiracOperator* dirac_;
  std::vector<int> white_index_, black_index_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
  Eigen::MatrixXcd inverse_;
  double log_abs_det_ = 0.0;
};

}  // namespace isodimer
