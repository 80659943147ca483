#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <queue>
#include <thread>
#include <vector>

#include "isodimer/gibbs.hpp"
#include "isodimer/kernel.hpp"

namespace isodimer {

// The reference flow: theta/pi on every dual edge, directed white to black.
// Around an interior white (black) vertex the rhombus angles sum to pi, so
// the divergence is +1 at whites and -1 at blacks.
struct ReferenceFlow {
  const IsoradialGraph* g = nullptr;
  std::vector<double> value;  // per dual edge

  static ReferenceFlow of(const IsoradialGraph& g) {
    ReferenceFlow flow;
    flow.g = &g;
    flow.value.reserve(g.dual_edges.size());
    for (size_t de = 0; de < g.dual_edges.size(); ++de) {
      flow.value.push_back(g.dual_edges[de].theta / kPi);
    }
    return flow;
  }

  // Net outflow at an interior dual vertex: +1 for white, -1 for black.
  double divergence(int face) const {
    double s = 0;
    for (int de : g->dual_adj[face]) s += value[de];
    return g->faces[face].color == DualColor::White ? s : -s;
  }
};

// Height function on the primal vertices reachable through region-interior
// edges, anchored at h(v0) = 0. Along a primal edge oriented with the black
// face on the left, the height increases by theta/pi, minus 1 if the dual
// edge is matched.
struct HeightField {
  const IsoradialGraph* g = nullptr;
  std::vector<double> value;    // per primal vertex
  std::vector<char> defined;
  int v0 = -1;

  double at(int v) const {
    if (!defined[v]) throw ValidationError("height: vertex not in the height subgraph");
    return value[v];
  }
};

// Lexicographically smallest defined vertex, by (x, y) position.
inline int default_reference_vertex(const IsoradialGraph& g, const std::vector<char>& in_play) {
  int best = -1;
  for (int v = 0; v < g.num_primal_vertices(); ++v) {
    if (!in_play[v]) continue;
    if (best < 0) {
      best = v;
      continue;
    }
    const Complex a = g.primal_pos[v], b = g.primal_pos[best];
    if (a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag())) best = v;
  }
  return best;
}

inline HeightField height_from_matching(const DualRegion& region, const DimerConfiguration& m,
                                        int v0 = -1) {
  const IsoradialGraph& g = *region.g;
  if (!is_perfect_matching(region, m)) {
    throw ValidationError("height_from_matching: not a perfect matching of the region");
  }
  std::vector<char> matched(g.dual_edges.size(), 0);
  for (int de : m.edges) matched[de] = 1;

  const auto interior = region.interior_primal_edges();
  std::vector<std::vector<int>> adj(g.num_primal_vertices());
  std::vector<char> in_play(g.num_primal_vertices(), 0);
  for (int pe : interior) {
    adj[g.primal_edges[pe].u].push_back(pe);
    adj[g.primal_edges[pe].v].push_back(pe);
    in_play[g.primal_edges[pe].u] = 1;
    in_play[g.primal_edges[pe].v] = 1;
  }
  if (v0 < 0) v0 = default_reference_vertex(g, in_play);
  if (v0 < 0 || !in_play[v0]) {
    throw ValidationError("height_from_matching: reference vertex outside the region");
  }

  HeightField h;
  h.g = &g;
  h.v0 = v0;
  h.value.assign(g.num_primal_vertices(), 0.0);
  h.defined.assign(g.num_primal_vertices(), 0);
  h.defined[v0] = 1;
  std::queue<int> q;
  q.push(v0);
  size_t reached = 1, total = 0;
  for (int v = 0; v < g.num_primal_vertices(); ++v) total += in_play[v];
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int pe : adj[u]) {
      const auto& e = g.primal_edges[pe];
      const int other = e.u == u ? e.v : e.u;
      auto [tail, head] = g.canonical_orientation(pe);
      const double inc = g.dual_edges[e.dual_edge].theta / kPi - (matched[e.dual_edge] ? 1 : 0);
      const double hv = h.value[u] + (u == tail ? inc : -inc);
      if (!h.defined[other]) {
        h.defined[other] = 1;
        h.value[other] = hv;
        q.push(other);
        ++reached;
      } else if (std::abs(h.value[other] - hv) > 1e-9) {
        throw NumericalError("height_from_matching: inconsistent increments (non-zero curl)");
      }
    }
  }
  if (reached != total) {
    throw ValidationError("height_from_matching: region height subgraph is disconnected");
  }
  return h;
}

// Recovers the matching from a height field: every black face has exactly one
// boundary edge whose increment is theta/pi - 1; the dual edges of those
// boundary edges form the matching.
inline DimerConfiguration matching_from_height(const DualRegion& region, const HeightField& h) {
  const IsoradialGraph& g = *region.g;
  DimerConfiguration m;
  for (int f : region.faces) {
    if (g.faces[f].color != DualColor::Black) continue;
    int found = -1;
    for (int de : g.dual_adj[f]) {
      if (!region.contains_dual_edge(de)) continue;
      const auto& pe = g.primal_edges[g.dual_edges[de].primal_edge];
      if (!h.defined[pe.u] || !h.defined[pe.v]) {
        throw ValidationError("matching_from_height: height not defined on face boundary");
      }
      auto [tail, head] = g.canonical_orientation(g.dual_edges[de].primal_edge);
      const double inc = h.value[head] - h.value[tail];
      const double w0 = g.dual_edges[de].theta / kPi;
      if (std::abs(inc - (w0 - 1.0)) < 1e-6) {
        if (found >= 0) {
          throw ValidationError("matching_from_height: two matched edges at black face " +
                                std::to_string(f));
        }
        found = de;
      } else if (std::abs(inc - w0) > 1e-6) {
        throw ValidationError("matching_from_height: invalid increment at black face " +
                              std::to_string(f));
      }
    }
    if (found < 0) {
      throw ValidationError("matching_from_height: no matched edge at black face " +
                            std::to_string(f));
    }
    m.edges.push_back(found);
  }
  std::sort(m.edges.begin(), m.edges.end());
  if (!is_perfect_matching(region, m)) {
    throw ValidationError("matching_from_height: selected edges are not a perfect matching");
  }
  return m;
}

// ---------------------------------------------------------------------------
// Increment representation along primal paths
// ---------------------------------------------------------------------------

// The height increment along a primal path, written as a signed sum of
// centered edge indicators: h(v) - h(u) = sum_i (-1)^{delta_i} (1_{e_i} -
// theta_i/pi), where delta_i = 1 for path edges traversed with the black
// face on the left and 0 otherwise.
struct IncrementRepresentation {
  const IsoradialGraph* g = nullptr;
  std::vector<int> edges;   // dual edge per path step
  std::vector<int> deltas;  // 1 = black face on the left of travel

  double evaluate(const DimerConfiguration& m) const {
    double s = 0;
    for (size_t i = 0; i < edges.size(); ++i) {
      const double ind =
          std::binary_search(m.edges.begin(), m.edges.end(), edges[i]) ? 1.0 : 0.0;
      const double centered = ind - g->dual_edges[edges[i]].theta / kPi;
      s += deltas[i] ? -centered : centered;
    }
    return s;
  }

  IncrementRepresentation reversed() const {
    IncrementRepresentation r;
    r.g = g;
    r.edges.assign(edges.rbegin(), edges.rend());
    for (auto it = deltas.rbegin(); it != deltas.rend(); ++it) r.deltas.push_back(1 - *it);
    return r;
  }
};

inline IncrementRepresentation height_increment_representation(const IsoradialGraph& g,
                                                               const std::vector<int>& path) {
  IncrementRepresentation rep;
  rep.g = &g;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    const int pe = g.find_primal_edge(path[i], path[i + 1]);
    if (pe < 0) throw ValidationError("increment representation: path step is not an edge");
    const auto& e = g.primal_edges[pe];
    if (e.dual_edge < 0) {
      throw ValidationError("increment representation: path crosses a boundary edge");
    }
    auto [tail, head] = g.canonical_orientation(pe);
    rep.edges.push_back(e.dual_edge);
    rep.deltas.push_back(tail == path[i] ? 1 : 0);
  }
  return rep;
}

// Nearest primal vertex to a lattice-coordinate point.
inline int nearest_primal_vertex(const IsoradialGraph& g, Complex lattice_point) {
  int best = 0;
  double best_d = 1e300;
  for (int v = 0; v < g.num_primal_vertices(); ++v) {
    const double d = std::abs(g.primal_pos[v] - lattice_point);
    if (d < best_d) {
      best_d = d;
      best = v;
    }
  }
  return best;
}

// L-shaped lattice path between two vertices of a triangular-lattice patch:
// first all steps along the first lattice direction, then along the second.
// `bend_first` selects which direction is walked first, giving two distinct
// paths between the same endpoints.
inline std::vector<int> l_shaped_path(const IsoradialGraph& g, int from, int to,
                                      bool bend_first = false) {
  const double s = std::sqrt(3.0);
  const Complex a1 = s * Complex(1.0, 0.0);
  const Complex a2 = s * Complex(0.5, 0.5 * s);
  const Complex d = g.primal_pos[to] - g.primal_pos[from];
  const double n2 = d.imag() / a2.imag();
  const double n1 = (d.real() - n2 * a2.real()) / a1.real();
  const auto m1 = static_cast<int>(std::lround(n1));
  const auto m2 = static_cast<int>(std::lround(n2));
  if (std::abs(n1 - m1) > 1e-6 || std::abs(n2 - m2) > 1e-6) {
    throw ValidationError("l_shaped_path: endpoints are not lattice translates");
  }
  std::vector<int> path = {from};
  Complex pos = g.primal_pos[from];
  auto walk = [&](Complex step, int count) {
    for (int i = 0; i < count; ++i) {
      pos += step;
      const int v = nearest_primal_vertex(g, pos);
      if (std::abs(g.primal_pos[v] - pos) > 1e-6) {
        throw ValidationError("l_shaped_path: leaves the patch");
      }
      path.push_back(v);
    }
  };
  const Complex s1 = m1 >= 0 ? a1 : -a1;
  const Complex s2 = m2 >= 0 ? a2 : -a2;
  if (bend_first) {
    walk(s2, std::abs(m2));
    walk(s1, std::abs(m1));
  } else {
    walk(s1, std::abs(m1));
    walk(s2, std::abs(m2));
  }
  return path;
}

// Minimum distance between the vertex sets of two paths (lattice units).
inline double path_separation(const IsoradialGraph& g, const std::vector<int>& p1,
                              const std::vector<int>& p2) {
  double d = 1e300;
  for (int a : p1) {
    for (int b : p2) d = std::min(d, std::abs(g.primal_pos[a] - g.primal_pos[b]));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Exact height covariance
// ---------------------------------------------------------------------------

// E[(h(v1)-h(u1)) (h(v2)-h(u2))] under the whole-plane measure, as a double
// sum of truncated pair correlations over the two increment representations.
// The paths must be vertex-disjoint. Kernel evaluations may run on several
// threads; the exact kernel is reentrant.
inline double exact_height_covariance(const ExactKernel& kernel,
                                      const std::vector<int>& path1,
                                      const std::vector<int>& path2, int threads = 1) {
  const IsoradialGraph& g = kernel.graph();
  if (path_separation(g, path1, path2) < 1e-9) {
    throw ValidationError("exact_height_covariance: paths share a vertex");
  }
  const auto r1 = height_increment_representation(g, path1);
  const auto r2 = height_increment_representation(g, path2);
  const int n1 = static_cast<int>(r1.edges.size());
  const int n2 = static_cast<int>(r2.edges.size());

  auto row_sum = [&](int i) {
    const auto& di = g.dual_edges[r1.edges[i]];
    const Complex Ki = kernel.dirac().K_wb(r1.edges[i]);
    const double si = r1.deltas[i] ? -1.0 : 1.0;
    double acc = 0;
    for (int j = 0; j < n2; ++j) {
      const auto& dj = g.dual_edges[r2.edges[j]];
      const Complex Kj = kernel.dirac().K_wb(r2.edges[j]);
      const double sj = r2.deltas[j] ? -1.0 : 1.0;
      // E[(1_i - mu_i)(1_j - mu_j)] = -Re[K_i K_j K^-1(b_i,w_j) K^-1(b_j,w_i)]
      const Complex kk =
          Ki * Kj * kernel.inverse(di.black, dj.white) * kernel.inverse(dj.black, di.white);
      acc += si * sj * (-kk.real());
    }
    return acc;
  };

  if (threads <= 1) {
    double cov = 0;
    for (int i = 0; i < n1; ++i) cov += row_sum(i);
    return cov;
  }
  std::vector<double> partial(n1, 0.0);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n1) return;
      partial[i] = row_sum(i);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  double cov = 0;
  for (double p : partial) cov += p;
  return cov;
}

}  // namespace isodimer
