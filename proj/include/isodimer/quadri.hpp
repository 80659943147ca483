#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <vector>

#include "isodimer/height.hpp"
#include "isodimer/sampler.hpp"

namespace isodimer {

// Quadri-tiles are pairs of right triangles (hypotenuse 1, interior angle
// pi/3) glued either along a leg of equal length or along the hypotenuse.
// They correspond one-to-one to dual edges of a lozenge-with-diagonals graph:
//   I   short-leg glue,  rhombus angle pi/6, critical weight 1
//   II  long-leg glue,   rhombus angle pi/3, critical weight sqrt(3)
//   III hypotenuse glue, mirror-symmetric pair (right kite), angle pi/2
//   IV  hypotenuse glue, point-symmetric pair (parallelogram), angle pi/2
// Types III and IV share the rhombus angle pi/2; the labels distinguish the
// two gluing geometries. Right-angle corners sit at lozenge centers and are
// black; the others are white.
enum class QuadriType { I, II, III, IV };

inline const char* to_string(QuadriType t) {
  switch (t) {
    case QuadriType::I: return "I";
    case QuadriType::II: return "II";
    case QuadriType::III: return "III";
    case QuadriType::IV: return "IV";
  }
  return "?";
}

struct QuadriTile {
  QuadriType type = QuadriType::I;
  int dual_edge = -1;     // edge of L*
  bool leg_glued = true;
  double theta = 0.0;     // rhombus angle of the dual edge
};

inline QuadriTile classify_quadri_tile(const LozengeDiagonalsGraph& ldg, int dual_edge) {
  const IsoradialGraph& L = ldg.graph;
  const auto& d = L.dual_edges[dual_edge];
  const auto& pe = L.primal_edges[d.primal_edge];
  QuadriTile tile;
  tile.dual_edge = dual_edge;
  tile.theta = d.theta;
  const bool u_center = ldg.t_vertex_of[pe.u] < 0;
  const bool v_center = ldg.t_vertex_of[pe.v] < 0;
  if (u_center || v_center) {
    // Shared edge is a leg: one endpoint is a lozenge center.
    tile.leg_glued = true;
    const double len = std::abs(L.primal_pos[pe.u] - L.primal_pos[pe.v]);
    tile.type = len < 1.5 ? QuadriType::I : QuadriType::II;  // legs are 1 or sqrt(3)
  } else {
    // Shared edge is a hypotenuse; the tile spans two lozenges. Mirror-
    // symmetric pairs (kites) have equal legs at each white corner; the
    // right-angle corners are the centers of the two lozenges.
    tile.leg_glued = false;
    const Complex u = L.primal_pos[pe.u];
    const int lz1 = ldg.lozenge_of_face[d.white];
    const int lz2 = ldg.lozenge_of_face[d.black];
    const Complex c1 = L.primal_pos[ldg.center_vertex[lz1]];
    const Complex c2 = L.primal_pos[ldg.center_vertex[lz2]];
    const double a1 = std::abs(c1 - u);
    const double a2 = std::abs(c2 - u);
    tile.type = std::abs(a1 - a2) < 1e-9 ? QuadriType::III : QuadriType::IV;
  }
  return tile;
}

// A draw from the two-stage measure on triangular quadri-tilings: first a
// lozenge tiling of the region, then a dimer configuration on the tiling's
// lozenge-with-diagonals dual.
struct QuadriSample {
  std::shared_ptr<LozengeTiling> tiling;
  std::shared_ptr<LozengeDiagonalsGraph> ldg;
  DualRegion l_region;  // all faces of ldg->graph
  DimerConfiguration quadri_matching;

  std::vector<QuadriTile> tiles() const {
    std::vector<QuadriTile> out;
    out.reserve(quadri_matching.edges.size());
    for (int de : quadri_matching.edges) out.push_back(classify_quadri_tile(*ldg, de));
    return out;
  }
};

// Draws a quadri-tiling of the region under the two-stage measure. The
// stage-one kernel is fixed per region and passed in; the stage-two kernel
// depends on the sampled tiling and is assembled here.
inline QuadriSample sample_quadri(const FiniteKernel& t_kernel, RngStream& rng) {
  QuadriSample qs;
  qs.tiling = std::make_shared<LozengeTiling>(sample_lozenge_tiling(t_kernel, rng));
  qs.ldg = std::make_shared<LozengeDiagonalsGraph>(build_lozenge_with_diagonals(*qs.tiling));
  qs.l_region = DualRegion::whole(qs.ldg->graph);
  const DiracOperator dirac = assemble_dirac(qs.ldg->graph);
  const FiniteKernel l_kernel(qs.l_region, dirac);
  qs.quadri_matching = sample_matching(l_kernel, rng);
  return qs;
}

// First height function: the height of the quadri-tiling seen as a 2-tiling
// of its underlying lozenge-with-diagonals graph. Increments take values in
// {theta/pi, theta/pi - 1} with theta in {pi/6, pi/3, pi/2}.
inline HeightField height1(const QuadriSample& qs, int v0 = -1) {
  return height_from_matching(qs.l_region, qs.quadri_matching, v0);
}

// Second height function: the height of the underlying lozenge tiling seen
// as a 2-tiling of the triangular lattice (reference flow 1/3), carried to
// the vertices of the lozenge-with-diagonals graph. Lozenge centers receive
// the mean of the four corner values, the center value of the affine
// extension on the lifted cube face.
inline HeightField height2(const QuadriSample& qs, int t_v0 = -1) {
  const LozengeTiling& lt = *qs.tiling;
  const IsoradialGraph& tg = *lt.t;
  // Region of the triangular lattice actually covered by the tiling.
  std::vector<int> t_faces;
  for (const auto& lz : lt.lozenges) {
    t_faces.push_back(lz.white_face);
    t_faces.push_back(lz.black_face);
  }
  const DualRegion t_region = DualRegion::from_faces(tg, std::move(t_faces));
  const HeightField ht = height_from_matching(t_region, lt.matching, t_v0);

  const IsoradialGraph& L = qs.ldg->graph;
  HeightField h;
  h.g = &L;
  h.value.assign(L.num_primal_vertices(), 0.0);
  h.defined.assign(L.num_primal_vertices(), 0);
  for (int v = 0; v < L.num_primal_vertices(); ++v) {
    const int tv = qs.ldg->t_vertex_of[v];
    if (tv >= 0 && ht.defined[tv]) {
      h.value[v] = ht.value[tv];
      h.defined[v] = 1;
    }
  }
  for (size_t k = 0; k < lt.lozenges.size(); ++k) {
    const auto& lz = lt.lozenges[k];
    const int corners[4] = {lz.u, lz.v, lz.p, lz.q};
    double sum = 0;
    bool ok = true;
    for (int tv : corners) {
      if (!ht.defined[tv]) ok = false;
      else sum += ht.value[tv];
    }
    if (ok) {
      const int c = qs.ldg->center_vertex[k];
      h.value[c] = 0.25 * sum;
      h.defined[c] = 1;
    }
  }
  h.v0 = ht.v0 >= 0 ? qs.ldg->l_vertex_of_t(ht.v0) : -1;
  return h;
}

// ---------------------------------------------------------------------------
// Empirical independence of the two height functions
// ---------------------------------------------------------------------------

struct IndependenceReport {
  double correlation = 0.0;
  double se = 0.0;  // batch-means SE of the correlation
  int n = 0;
  McEstimate increment1, increment2;  // the two height increments
};

// Samples N quadri-tilings and reports the sample correlation between the
// height-1 increment across (u1, v1) and the height-2 increment across
// (u2, v2); all four are vertices of the triangular lattice, so they exist
// in every sampled tiling.
inline IndependenceReport empirical_independence(const FiniteKernel& t_kernel, int u1, int v1,
                                                 int u2, int v2, int n_samples,
                                                 std::uint64_t seed, int threads) {
  if (n_samples < 1000) {
    throw ValidationError("empirical_independence: need at least 1000 samples");
  }
  std::vector<double> d1(n_samples), d2(n_samples);
  run_streams(n_samples, seed, threads, [&](int i, RngStream& rng) {
    const QuadriSample qs = sample_quadri(t_kernel, rng);
    const auto h1 = height1(qs);
    const int a1 = qs.ldg->l_vertex_of_t(u1);
    const int b1 = qs.ldg->l_vertex_of_t(v1);
    if (a1 < 0 || b1 < 0) throw ValidationError("independence: vertex not in tiling");
    d1[i] = h1.at(b1) - h1.at(a1);
    const auto h2 = height2(qs);
    const int a2 = qs.ldg->l_vertex_of_t(u2);
    const int b2 = qs.ldg->l_vertex_of_t(v2);
    d2[i] = h2.at(b2) - h2.at(a2);
  });

  IndependenceReport rep;
  rep.n = n_samples;
  rep.increment1 = batch_means(d1);
  rep.increment2 = batch_means(d2);

  auto corr_of = [](const std::vector<double>& xs, const std::vector<double>& ys, size_t lo,
                    size_t hi) {
    double mx = 0, my = 0;
    for (size_t i = lo; i < hi; ++i) {
      mx += xs[i];
      my += ys[i];
    }
    const double n = static_cast<double>(hi - lo);
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = lo; i < hi; ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
      syy += (ys[i] - my) * (ys[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
  };
  rep.correlation = corr_of(d1, d2, 0, d1.size());

  const int nbatches = 20;
  std::vector<double> batch_corr;
  const size_t base = d1.size() / nbatches;
  for (int b = 0; b < nbatches; ++b) {
    const size_t lo = b * base;
    const size_t hi = b + 1 == nbatches ? d1.size() : lo + base;
    batch_corr.push_back(corr_of(d1, d2, lo, hi));
  }
  double mean = 0;
  for (double c : batch_corr) mean += c;
  mean /= nbatches;
  double var = 0;
  for (double c : batch_corr) var += (c - mean) * (c - mean);
  var /= (nbatches - 1);
  rep.se = std::sqrt(var / nbatches);
  return rep;
}

}  // namespace isodimer
