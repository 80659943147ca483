#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "isodimer/common.hpp"

namespace isodimer {

enum class DualColor : unsigned char { White = 0, Black = 1 };

// A planar bipartite isoradial graph: a primal graph G whose faces are all
// inscribed in circles of one common radius, together with its dual G* whose
// vertices sit at the face circumcenters and carry a proper 2-coloring.
//
// Coordinates are stored in "lattice units", normalized so the common
// circumradius is exactly 1. Physical coordinates are lattice coordinates
// times unit * mesh:
//   - `unit` is the physical circumradius at mesh 1 and records the
//     normalization applied by the builder (1/sqrt(3) for the triangular
//     lattice with side-1 edges, 1/sqrt(2) for the unit square lattice,
//     1/2 for lozenge-with-diagonals graphs built over side-1 lozenges);
//   - `mesh` is the scale factor applied when refining towards the
//     continuum.
// All kernel computations use lattice units, where every rhombus has unit
// side; continuum-facing quantities (areas, test functions) use physical
// coordinates.
struct IsoradialGraph {
  struct PrimalEdge {
    int u = -1, v = -1;          // primal endpoints
    int left_face = -1;          // face whose ccw boundary traverses u -> v
    int right_face = -1;         // face whose ccw boundary traverses v -> u
    int dual_edge = -1;          // -1 for boundary edges
  };

  struct Face {
    std::vector<int> vertices;   // ccw polygon
    Complex center;              // circumcenter (lattice units)
    DualColor color = DualColor::White;
  };

  struct DualEdge {
    int primal_edge = -1;
    int white = -1, black = -1;  // face ids
    double theta = 0.0;          // rhombus half-angle, in (0, pi/2]
  };

  std::vector<Complex> primal_pos;          // lattice units
  std::vector<PrimalEdge> primal_edges;
  std::vector<Face> faces;                  // dual vertices
  std::vector<DualEdge> dual_edges;
  std::vector<std::vector<int>> primal_adj; // vertex -> incident primal edges
  std::vector<std::vector<int>> dual_adj;   // face -> incident dual edges

  double mesh = 1.0;
  double unit = 1.0;
  bool translation_invariant = false;       // hint: kernel values depend on b-w only
  std::string family = "custom";

  double scale_to_physical() const { return unit * mesh; }
  Complex primal_physical(int v) const { return primal_pos[v] * scale_to_physical(); }
  Complex face_physical(int f) const { return faces[f].center * scale_to_physical(); }

  int num_primal_vertices() const { return static_cast<int>(primal_pos.size()); }
  int num_faces() const { return static_cast<int>(faces.size()); }

  // Critical weight of a dual edge: 2 sin(theta).
  double critical_weight(int dual_edge) const {
    return 2.0 * std::sin(dual_edges[dual_edge].theta);
  }

  double rhombus_angle(int dual_edge) const { return dual_edges[dual_edge].theta; }

  // Canonical orientation (tail, head) of a primal edge: the black face lies
  // on the left when walking tail -> head. This is the orientation induced by
  // orienting black face boundaries counterclockwise.
  std::pair<int, int> canonical_orientation(int primal_edge) const {
    const PrimalEdge& e = primal_edges[primal_edge];
    if (e.left_face >= 0 && faces[e.left_face].color == DualColor::Black) return {e.u, e.v};
    return {e.v, e.u};
  }

  // True if every primal edge incident to v has faces on both sides (the dual
  // face of v is a closed polygon).
  bool primal_vertex_interior(int v) const {
    if (primal_adj[v].empty()) return false;
    for (int e : primal_adj[v]) {
      if (primal_edges[e].left_face < 0 || primal_edges[e].right_face < 0) return false;
    }
    return true;
  }

  // A dual vertex is interior when every boundary edge of its face has a
  // face on the other side, so the full rhombus fan around it is present.
  bool dual_vertex_interior(int f) const {
    return dual_adj[f].size() == faces[f].vertices.size();
  }

  int find_primal_edge(int u, int v) const {
    for (int e : primal_adj[u]) {
      const PrimalEdge& pe = primal_edges[e];
      if ((pe.u == u && pe.v == v) || (pe.u == v && pe.v == u)) return e;
    }
    return -1;
  }
};

// The rhombus of a dual edge: vertices (w, x, b, y) in counterclockwise
// order, where w/b are the white/black dual vertices and x/y the primal
// endpoints. For degenerate edges (w and b at the same point) the order is
// fixed by the black-on-left orientation of the primal edge.
struct Rhombus {
  int w = -1, x = -1, b = -1, y = -1;
  Complex pw, px, pb, py;  // lattice units
  double theta = 0.0;
};

inline Rhombus rhombus_of(const IsoradialGraph& g, int dual_edge) {
  if (dual_edge < 0 || dual_edge >= static_cast<int>(g.dual_edges.size())) {
    throw ValidationError("rhombus_of: unknown dual edge");
  }
  const auto& de = g.dual_edges[dual_edge];
  Rhombus r;
  r.w = de.white;
  r.b = de.black;
  auto [tail, head] = g.canonical_orientation(de.primal_edge);
  r.x = head;  // i*(x - y) points along the dual edge w -> b
  r.y = tail;
  r.pw = g.faces[r.w].center;
  r.pb = g.faces[r.b].center;
  r.px = g.primal_pos[r.x];
  r.py = g.primal_pos[r.y];
  r.theta = de.theta;
  return r;
}

namespace detail {

inline Complex circumcenter(const std::vector<Complex>& pts) {
  // Least-squares circumcenter: 2 (p_i - p_0) . c = |p_i|^2 - |p_0|^2.
  const Complex p0 = pts[0];
  double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
  for (size_t i = 1; i < pts.size(); ++i) {
    const double dx = pts[i].real() - p0.real();
    const double dy = pts[i].imag() - p0.imag();
    const double rhs = 0.5 * (std::norm(pts[i]) - std::norm(p0));
    a11 += dx * dx;
    a12 += dx * dy;
    a22 += dy * dy;
    b1 += dx * rhs;
    b2 += dy * rhs;
  }
  const double det = a11 * a22 - a12 * a12;
  if (std::abs(det) < 1e-30) throw ValidationError("degenerate face: cannot place circumcenter");
  return {(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det};
}

inline double polygon_signed_area(const std::vector<Complex>& pts) {
  double a = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    const Complex& p = pts[i];
    const Complex& q = pts[(i + 1) % pts.size()];
    a += cross(p, q);
  }
  return 0.5 * a;
}

}  // namespace detail

// Assembles an IsoradialGraph from vertex positions and ccw face polygons.
// Face colors may be supplied; otherwise the dual graph is 2-colored by BFS
// (throws if it is not bipartite). Polygons given clockwise are reversed.
inline IsoradialGraph graph_from_faces(std::vector<Complex> positions,
                                       std::vector<std::vector<int>> polygons,
                                       std::vector<DualColor> colors = {},
                                       double unit = 1.0, double mesh = 1.0,
                                       std::string family = "custom",
                                       bool translation_invariant = false) {
  IsoradialGraph g;
  g.primal_pos = std::move(positions);
  g.unit = unit;
  g.mesh = mesh;
  g.family = std::move(family);
  g.translation_invariant = translation_invariant;

  g.faces.resize(polygons.size());
  for (size_t f = 0; f < polygons.size(); ++f) {
    std::vector<Complex> pts;
    pts.reserve(polygons[f].size());
    for (int v : polygons[f]) pts.push_back(g.primal_pos[v]);
    if (detail::polygon_signed_area(pts) < 0) {
      std::reverse(polygons[f].begin(), polygons[f].end());
    }
    g.faces[f].vertices = polygons[f];
    std::vector<Complex> pts2;
    for (int v : polygons[f]) pts2.push_back(g.primal_pos[v]);
    g.faces[f].center = detail::circumcenter(pts2);
  }

  // Primal edges from face boundaries; the face traversing (a,b) ccw lies on
  // the left of a -> b.
  std::map<std::pair<int, int>, int> edge_of;
  for (size_t f = 0; f < g.faces.size(); ++f) {
    const auto& poly = g.faces[f].vertices;
    for (size_t i = 0; i < poly.size(); ++i) {
      const int a = poly[i];
      const int b = poly[(i + 1) % poly.size()];
      const auto key = std::minmax(a, b);
      auto it = edge_of.find(key);
      if (it == edge_of.end()) {
        IsoradialGraph::PrimalEdge e;
        e.u = a;
        e.v = b;
        e.left_face = static_cast<int>(f);
        edge_of.emplace(key, static_cast<int>(g.primal_edges.size()));
        g.primal_edges.push_back(e);
      } else {
        IsoradialGraph::PrimalEdge& e = g.primal_edges[it->second];
        if (e.u == a && e.v == b) throw ValidationError("inconsistent face orientations");
        if (e.right_face >= 0) throw ValidationError("non-manifold edge");
        e.right_face = static_cast<int>(f);
      }
    }
  }

  // 2-color the dual graph if colors were not supplied.
  if (colors.empty()) {
    std::vector<std::vector<int>> face_nbrs(g.faces.size());
    for (const auto& e : g.primal_edges) {
      if (e.left_face < 0 || e.right_face < 0) continue;
      face_nbrs[e.left_face].push_back(e.right_face);
      face_nbrs[e.right_face].push_back(e.left_face);
    }
    colors.assign(g.faces.size(), DualColor::White);
    std::vector<int> state(g.faces.size(), -1);
    for (size_t start = 0; start < g.faces.size(); ++start) {
      if (state[start] >= 0) continue;
      state[start] = 0;
      std::queue<int> q;
      q.push(static_cast<int>(start));
      while (!q.empty()) {
        const int f = q.front();
        q.pop();
        for (int other : face_nbrs[f]) {
          if (state[other] < 0) {
            state[other] = 1 - state[f];
            q.push(other);
          } else if (state[other] == state[f]) {
            throw ValidationError("dual graph is not bipartite");
          }
        }
      }
    }
    for (size_t f = 0; f < g.faces.size(); ++f) {
      colors[f] = state[f] == 0 ? DualColor::White : DualColor::Black;
    }
  }
  for (size_t f = 0; f < g.faces.size(); ++f) g.faces[f].color = colors[f];

  // Dual edges across interior primal edges.
  for (size_t pe = 0; pe < g.primal_edges.size(); ++pe) {
    auto& e = g.primal_edges[pe];
    if (e.left_face < 0 || e.right_face < 0) continue;
    const DualColor cl = g.faces[e.left_face].color;
    const DualColor cr = g.faces[e.right_face].color;
    if (cl == cr) throw ValidationError("adjacent faces share a color");
    IsoradialGraph::DualEdge de;
    de.primal_edge = static_cast<int>(pe);
    de.white = cl == DualColor::White ? e.left_face : e.right_face;
    de.black = cl == DualColor::Black ? e.left_face : e.right_face;
    const Complex w = g.faces[de.white].center;
    const Complex x = g.primal_pos[e.u] - w;
    const Complex y = g.primal_pos[e.v] - w;
    // Half the angle at the white circumcenter; atan2 keeps full precision
    // for degenerate rhombi, where the angle is exactly pi.
    de.theta = 0.5 * std::atan2(std::abs(cross(x, y)), dot(x, y));
    e.dual_edge = static_cast<int>(g.dual_edges.size());
    g.dual_edges.push_back(de);
  }

  g.primal_adj.assign(g.primal_pos.size(), {});
  for (size_t pe = 0; pe < g.primal_edges.size(); ++pe) {
    g.primal_adj[g.primal_edges[pe].u].push_back(static_cast<int>(pe));
    g.primal_adj[g.primal_edges[pe].v].push_back(static_cast<int>(pe));
  }
  g.dual_adj.assign(g.faces.size(), {});
  for (size_t de = 0; de < g.dual_edges.size(); ++de) {
    g.dual_adj[g.dual_edges[de].white].push_back(static_cast<int>(de));
    g.dual_adj[g.dual_edges[de].black].push_back(static_cast<int>(de));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

// Patch of the equilateral triangular lattice: a (width x height)
// parallelogram of unit cells, each holding one upward and one downward
// triangle. Upward faces are white, downward black. Physical edge length is
// `mesh`; lattice coordinates carry edge length sqrt(3) so the circumradius
// is 1.
inline IsoradialGraph build_triangular_lattice(int width, int height) {
  if (width < 1 || height < 1) throw ValidationError("triangular lattice: empty extent");
  const double s = std::sqrt(3.0);
  const int nx = width + 1;
  auto vid = [&](int i, int j) { return j * nx + i; };
  std::vector<Complex> pos;
  pos.reserve(static_cast<size_t>(nx) * (height + 1));
  for (int j = 0; j <= height; ++j) {
    for (int i = 0; i <= width; ++i) {
      pos.push_back(s * Complex(i + 0.5 * j, 0.5 * s * j));
    }
  }
  std::vector<std::vector<int>> polys;
  std::vector<DualColor> colors;
  for (int j = 0; j < height; ++j) {
    for (int i = 0; i < width; ++i) {
      polys.push_back({vid(i, j), vid(i + 1, j), vid(i, j + 1)});
      colors.push_back(DualColor::White);
      polys.push_back({vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
      colors.push_back(DualColor::Black);
    }
  }
  return graph_from_faces(std::move(pos), std::move(polys), std::move(colors),
                          1.0 / s, 1.0, "triangular", true);
}

// Patch of the unit square lattice with (width x height) faces. Faces are
// checkerboard-colored. Lattice coordinates carry edge length sqrt(2) so the
// circumradius is 1; the physical edge length is `mesh`.
inline IsoradialGraph build_square_lattice(int width, int height) {
  if (width < 1 || height < 1) throw ValidationError("square lattice: empty extent");
  const double s = std::sqrt(2.0);
  const int nx = width + 1;
  auto vid = [&](int i, int j) { return j * nx + i; };
  std::vector<Complex> pos;
  for (int j = 0; j <= height; ++j) {
    for (int i = 0; i <= width; ++i) pos.push_back(s * Complex(i, j));
  }
  std::vector<std::vector<int>> polys;
  std::vector<DualColor> colors;
  for (int j = 0; j < height; ++j) {
    for (int i = 0; i < width; ++i) {
      polys.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
      colors.push_back((i + j) % 2 == 0 ? DualColor::White : DualColor::Black);
    }
  }
  return graph_from_faces(std::move(pos), std::move(polys), std::move(colors),
                          1.0 / s, 1.0, "square", true);
}

// Returns a copy with all physical coordinates multiplied by epsilon. The
// combinatorics, lattice coordinates and rhombus angles are unchanged.
inline IsoradialGraph scale(const IsoradialGraph& g, double epsilon) {
  if (!(epsilon > 0)) throw ValidationError("scale: mesh must be positive");
  IsoradialGraph out = g;
  out.mesh *= epsilon;
  return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct IsoradialValidation {
  double max_radius_rel_dev = 0.0;  // relative to the common radius
  int worst_face = -1;
  std::vector<int> centers_outside;       // faces whose circumcenter leaves the closure
  std::vector<int> nonbipartite_edges;    // dual edges joining same-colored faces
  std::vector<int> low_degree_vertices;   // interior primal vertices of degree < 3
  bool simple = true;
  double tolerance = 1e-9;

  bool pass() const {
    return max_radius_rel_dev <= tolerance && centers_outside.empty() &&
           nonbipartite_edges.empty() && low_degree_vertices.empty() && simple;
  }
};

// Checks the isoradiality conditions: all face circumradii equal the common
// radius (relative tolerance), circumcenters inside face closures, proper
// bipartite coloring of the dual, interior vertices of degree >= 3.
inline IsoradialValidation validate_isoradial(const IsoradialGraph& g,
                                              double tolerance = 1e-9) {
  IsoradialValidation rep;
  rep.tolerance = tolerance;
  for (int f = 0; f < g.num_faces(); ++f) {
    const auto& face = g.faces[f];
    for (int v : face.vertices) {
      const double dev = std::abs(std::abs(g.primal_pos[v] - face.center) - 1.0);
      if (dev > rep.max_radius_rel_dev) {
        rep.max_radius_rel_dev = dev;
        rep.worst_face = f;
      }
    }
    // Closure test: the center must not lie strictly outside any edge line.
    const auto& poly = face.vertices;
    bool outside = false;
    for (size_t i = 0; i < poly.size(); ++i) {
      const Complex a = g.primal_pos[poly[i]];
      const Complex b = g.primal_pos[poly[(i + 1) % poly.size()]];
      if (cross(b - a, face.center - a) < -tolerance) outside = true;
    }
    if (outside) rep.centers_outside.push_back(f);
  }
  for (size_t de = 0; de < g.dual_edges.size(); ++de) {
    const auto& d = g.dual_edges[de];
    if (g.faces[d.white].color == g.faces[d.black].color) {
      rep.nonbipartite_edges.push_back(static_cast<int>(de));
    }
  }
  for (int v = 0; v < g.num_primal_vertices(); ++v) {
    if (g.primal_vertex_interior(v) && g.primal_adj[v].size() < 3) {
      rep.low_degree_vertices.push_back(v);
    }
  }
  std::map<std::pair<int, int>, int> seen;
  for (const auto& e : g.primal_edges) {
    if (e.u == e.v) rep.simple = false;
    if (++seen[std::minmax(e.u, e.v)] > 1) rep.simple = false;
  }
  return rep;
}

// Euclidean area (physical units) of the dual face of an interior primal
// vertex: the polygon of circumcenters of its incident faces.
inline double dual_face_area(const IsoradialGraph& g, int v) {
  if (!g.primal_vertex_interior(v)) {
    throw ValidationError("dual_face_area: boundary vertex, dual face is unbounded");
  }
  std::vector<int> fs;
  for (int e : g.primal_adj[v]) {
    fs.push_back(g.primal_edges[e].left_face);
    fs.push_back(g.primal_edges[e].right_face);
  }
  std::sort(fs.begin(), fs.end());
  fs.erase(std::unique(fs.begin(), fs.end()), fs.end());
  const Complex c = g.primal_pos[v];
  std::sort(fs.begin(), fs.end(), [&](int a, int b) {
    return std::arg(g.faces[a].center - c) < std::arg(g.faces[b].center - c);
  });
  std::vector<Complex> poly;
  poly.reserve(fs.size());
  for (int f : fs) poly.push_back(g.faces[f].center);
  const double area = std::abs(detail::polygon_signed_area(poly));
  const double s = g.scale_to_physical();
  return area * s * s;
}

// ---------------------------------------------------------------------------
// Dual regions
// ---------------------------------------------------------------------------

// A finite set of faces of a graph, used as the index set for finite Dirac
// matrices, Boltzmann enumeration and exact sampling. Dual edges joining two
// region faces belong to the region.
struct DualRegion {
  const IsoradialGraph* g = nullptr;
  std::vector<int> faces;        // ascending face ids
  std::vector<int> face_index;   // face id -> position in `faces`, or -1
  std::vector<int> whites, blacks;
  std::vector<int> dual_edges;   // dual edges with both endpoints in region
  std::vector<int> dual_edge_index;  // dual edge id -> position or -1

  static DualRegion from_faces(const IsoradialGraph& graph, std::vector<int> ids) {
    DualRegion r;
    r.g = &graph;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    r.faces = std::move(ids);
    r.face_index.assign(graph.num_faces(), -1);
    for (size_t i = 0; i < r.faces.size(); ++i) r.face_index[r.faces[i]] = static_cast<int>(i);
    for (int f : r.faces) {
      (graph.faces[f].color == DualColor::White ? r.whites : r.blacks).push_back(f);
    }
    r.dual_edge_index.assign(graph.dual_edges.size(), -1);
    for (size_t de = 0; de < graph.dual_edges.size(); ++de) {
      const auto& d = graph.dual_edges[de];
      if (r.face_index[d.white] >= 0 && r.face_index[d.black] >= 0) {
        r.dual_edge_index[de] = static_cast<int>(r.dual_edges.size());
        r.dual_edges.push_back(static_cast<int>(de));
      }
    }
    return r;
  }

  static DualRegion whole(const IsoradialGraph& graph) {
    std::vector<int> ids(graph.num_faces());
    for (int i = 0; i < graph.num_faces(); ++i) ids[i] = i;
    return from_faces(graph, std::move(ids));
  }

  // The faces incident to a primal vertex (a hexagonal dual face on the
  // triangular lattice).
  static DualRegion around_vertex(const IsoradialGraph& graph, int v) {
    std::vector<int> ids;
    for (int e : graph.primal_adj[v]) {
      if (graph.primal_edges[e].left_face >= 0) ids.push_back(graph.primal_edges[e].left_face);
      if (graph.primal_edges[e].right_face >= 0) ids.push_back(graph.primal_edges[e].right_face);
    }
    return from_faces(graph, std::move(ids));
  }

  // Hexagonal region of a triangular-lattice patch: the faces all of whose
  // vertices lie within lattice distance k of the center vertex. Unlike
  // parallelogram regions (whose boundary freezes the tiling completely),
  // the center of a regular hexagon stays in the disordered phase with
  // symmetric slope, so local statistics converge to the whole-plane Gibbs
  // measure as k grows. k = 1 gives the six faces around the center.
  static DualRegion hexagon(const IsoradialGraph& graph, int center_vertex, int k) {
    // Lattice distance via axial coordinates recovered from positions.
    const double s = std::sqrt(3.0);
    const Complex c0 = graph.primal_pos[center_vertex];
    auto axial = [&](Complex p) {
      const Complex d = (p - c0) / s;
      const double j = d.imag() / (0.5 * s);
      const double i = d.real() - 0.5 * j;
      return std::pair<long, long>(std::lround(i), std::lround(j));
    };
    auto dist = [&](Complex p) {
      auto [i, j] = axial(p);
      return std::max({std::labs(i), std::labs(j), std::labs(i + j)});
    };
    std::vector<int> ids;
    for (int f = 0; f < graph.num_faces(); ++f) {
      bool inside = true;
      for (int v : graph.faces[f].vertices) {
        if (dist(graph.primal_pos[v]) > k) inside = false;
      }
      if (inside) ids.push_back(f);
    }
    return from_faces(graph, std::move(ids));
  }

  // Faces whose circumcenters fall in the closed lattice-coordinate box.
  static DualRegion in_box(const IsoradialGraph& graph, double xmin, double xmax,
                           double ymin, double ymax) {
    std::vector<int> ids;
    for (int f = 0; f < graph.num_faces(); ++f) {
      const Complex c = graph.faces[f].center;
      if (c.real() >= xmin && c.real() <= xmax && c.imag() >= ymin && c.imag() <= ymax) {
        ids.push_back(f);
      }
    }
    return from_faces(graph, std::move(ids));
  }

  bool contains_face(int f) const { return face_index[f] >= 0; }
  bool contains_dual_edge(int de) const { return dual_edge_index[de] >= 0; }
  int size() const { return static_cast<int>(faces.size()); }

  // Primal edges with faces on both sides inside the region. Height
  // functions are defined on the subgraph spanned by these edges.
  std::vector<int> interior_primal_edges() const {
    std::vector<int> out;
    for (int de : dual_edges) out.push_back(g->dual_edges[de].primal_edge);
    return out;
  }
};

// Primal vertex closest to the centroid of the patch.
inline int central_primal_vertex(const IsoradialGraph& g) {
  Complex mid(0, 0);
  for (const auto& p : g.primal_pos) mid += p;
  mid /= static_cast<double>(g.primal_pos.size());
  int best = 0;
  double best_d = 1e300;
  for (int v = 0; v < g.num_primal_vertices(); ++v) {
    const double d = std::abs(g.primal_pos[v] - mid);
    if (d < best_d) {
      best_d = d;
      best = v;
    }
  }
  return best;
}

// Triangular-lattice patch with a side-k hexagonal dual region at its
// center. The graph lives behind a stable pointer so the region (which
// refers to it) survives copies of the struct.
struct HexagonPatch {
  std::shared_ptr<const IsoradialGraph> graph;
  DualRegion region;
  int center_vertex = -1;
};

inline HexagonPatch hexagon_patch(int k) {
  HexagonPatch hp;
  hp.graph = std::make_shared<IsoradialGraph>(build_triangular_lattice(2 * k, 2 * k));
  hp.center_vertex = central_primal_vertex(*hp.graph);
  hp.region = DualRegion::hexagon(*hp.graph, hp.center_vertex, k);
  return hp;
}

// A perfect matching of a region's dual graph, stored as dual edge ids.
struct DimerConfiguration {
  std::vector<int> edges;  // sorted dual edge ids

  bool operator==(const DimerConfiguration& o) const { return edges == o.edges; }
  bool operator<(const DimerConfiguration& o) const { return edges < o.edges; }
};

// Checks that `m` covers every region face exactly once.
inline bool is_perfect_matching(const DualRegion& region, const DimerConfiguration& m) {
  std::vector<int> cover(region.size(), 0);
  for (int de : m.edges) {
    if (!region.contains_dual_edge(de)) return false;
    cover[region.face_index[region.g->dual_edges[de].white]]++;
    cover[region.face_index[region.g->dual_edges[de].black]]++;
  }
  for (int c : cover) {
    if (c != 1) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Lozenge tilings and lozenge-with-diagonals graphs
// ---------------------------------------------------------------------------

// A lozenge tiling of a region of the triangular lattice, i.e. a perfect
// matching of the region's honeycomb dual. Each matched dual edge fuses the
// two triangles astride its primal edge into one 60-degree rhombus.
struct LozengeTiling {
  struct Lozenge {
    int u = -1, v = -1;  // endpoints of the internal diagonal (a lattice edge)
    int p = -1, q = -1;  // opposite corners (p in the white face, q in the black)
    int white_face = -1, black_face = -1;
    int t_edge = -1;     // primal edge carrying the diagonal
  };

  const IsoradialGraph* t = nullptr;  // triangular-lattice patch
  DimerConfiguration matching;        // on the honeycomb dual
  std::vector<Lozenge> lozenges;

  static LozengeTiling from_matching(const IsoradialGraph& t, const DualRegion& region,
                                     const DimerConfiguration& m) {
    if (!is_perfect_matching(region, m)) {
      throw ValidationError("lozenge tiling: not a perfect matching of the region");
    }
    LozengeTiling lt;
    lt.t = &t;
    lt.matching = m;
    for (int de : m.edges) {
      const auto& d = t.dual_edges[de];
      const auto& pe = t.primal_edges[d.primal_edge];
      Lozenge lz;
      lz.u = pe.u;
      lz.v = pe.v;
      lz.t_edge = d.primal_edge;
      lz.white_face = d.white;
      lz.black_face = d.black;
      for (int w : t.faces[d.white].vertices) {
        if (w != lz.u && w != lz.v) lz.p = w;
      }
      for (int w : t.faces[d.black].vertices) {
        if (w != lz.u && w != lz.v) lz.q = w;
      }
      lt.lozenges.push_back(lz);
    }
    return lt;
  }
};

// The lozenge-with-diagonals graph of a tiling, together with bookkeeping
// linking it back to the triangular lattice. Drawing both diagonals splits
// every lozenge into four right triangles with hypotenuse equal to the
// lozenge side; the circumcenters sit on the hypotenuse midpoints, so dual
// edges across lozenge boundaries are degenerate (zero length).
struct LozengeDiagonalsGraph {
  IsoradialGraph graph;
  std::vector<int> t_vertex_of;      // L primal vertex -> T vertex id, -1 for centers
  std::vector<int> center_vertex;    // lozenge index -> L primal vertex id
  std::vector<int> lozenge_of_face;  // L face -> lozenge index
  const LozengeTiling* source = nullptr;

  // L primal vertex id of a T vertex, or -1.
  int l_vertex_of_t(int t_vertex) const {
    auto it = t_to_l.find(t_vertex);
    return it == t_to_l.end() ? -1 : it->second;
  }
  std::map<int, int> t_to_l;
};

// Builds the lozenge-with-diagonals graph of a tiling. The construction has
// natural circumradius 1/2 when lozenges have side 1; coordinates are
// rescaled so the lattice circumradius is exactly 1 and the factor is
// recorded in graph.unit = 1/2. Physical positions of shared vertices agree
// with the source triangular lattice.
inline LozengeDiagonalsGraph build_lozenge_with_diagonals(const LozengeTiling& lt) {
  if (lt.lozenges.empty()) throw ValidationError("lozenge-with-diagonals: empty tiling");
  const IsoradialGraph& t = *lt.t;
  // T lattice coordinates have edge length sqrt(3); L coordinates must give
  // the right triangles circumradius 1, i.e. hypotenuse length 2.
  const double rescale = 2.0 / std::sqrt(3.0);

  LozengeDiagonalsGraph out;
  out.source = &lt;
  std::vector<Complex> pos;
  auto l_vertex = [&](int tv) {
    auto it = out.t_to_l.find(tv);
    if (it != out.t_to_l.end()) return it->second;
    const int id = static_cast<int>(pos.size());
    pos.push_back(t.primal_pos[tv] * rescale);
    out.t_to_l.emplace(tv, id);
    out.t_vertex_of.push_back(tv);
    return id;
  };

  std::vector<std::vector<int>> polys;
  for (size_t k = 0; k < lt.lozenges.size(); ++k) {
    const auto& lz = lt.lozenges[k];
    const int u = l_vertex(lz.u);
    const int v = l_vertex(lz.v);
    const int p = l_vertex(lz.p);
    const int q = l_vertex(lz.q);
    const int o = static_cast<int>(pos.size());
    pos.push_back(0.5 * (t.primal_pos[lz.u] + t.primal_pos[lz.v]) * rescale);
    out.t_vertex_of.push_back(-1);
    out.center_vertex.push_back(o);
    polys.push_back({p, u, o});
    polys.push_back({u, q, o});
    polys.push_back({q, v, o});
    polys.push_back({v, p, o});
    for (int i = 0; i < 4; ++i) out.lozenge_of_face.push_back(static_cast<int>(k));
  }

  out.graph = graph_from_faces(std::move(pos), std::move(polys), {}, 0.5, t.mesh,
                               "lozenge-diagonals", false);
  return out;
}

}  // namespace isodimer
