#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "isodimer/gff.hpp"
#include "isodimer/height.hpp"
#include "isodimer/quadri.hpp"
#include "isodimer/sampler.hpp"

namespace isodimer {

// Pre-built experiment drivers shared by the CLI and the acceptance suite:
// each one compares a discrete dimer computation against its continuum
// Gaussian-field prediction.

// ---------------------------------------------------------------------------
// (a) Exact covariance of height increments across meshes
// ---------------------------------------------------------------------------

struct CovarianceTrendPoint {
  double mesh = 0;
  double covariance = 0;   // exact kernel computation
  double target = 0;       // -(1/2 pi^2) log |cross ratio| at snapped points
  double abs_err = 0;
  double rel_err = 0;
};

// Two horizontal segments (u1,v1), (u2,v2), positions in physical units
// relative to the patch center; both are refined through the given meshes.
struct CovarianceTrendConfig {
  std::vector<double> meshes = {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  Complex u1{-0.5, -0.25}, v1{0.5, -0.25};
  Complex u2{-0.5, 0.25}, v2{0.5, 0.25};
  int threads = 1;
};

inline std::vector<CovarianceTrendPoint> covariance_trend(const CovarianceTrendConfig& cfg) {
  std::vector<CovarianceTrendPoint> out;
  double extent = 0;
  for (Complex p : {cfg.u1, cfg.v1, cfg.u2, cfg.v2}) {
    extent = std::max({extent, std::abs(p.real()), std::abs(p.imag())});
  }
  for (const double mesh : cfg.meshes) {
    // Patch comfortably covering the four points plus a margin for the
    // rhombus paths of the exact kernel.
    const int cells = static_cast<int>(std::lround((2.0 * extent + 1.0) * 2.4 / mesh));
    auto g = scale(build_triangular_lattice(cells, cells), mesh);
    const Complex base = g.primal_pos[central_primal_vertex(g)];
    const double lat = 1.0 / (g.unit * g.mesh);
    const int su1 = nearest_primal_vertex(g, base + lat * cfg.u1);
    const int sv1 = nearest_primal_vertex(g, base + lat * cfg.v1);
    const int su2 = nearest_primal_vertex(g, base + lat * cfg.u2);
    const int sv2 = nearest_primal_vertex(g, base + lat * cfg.v2);
    const ExactKernel kernel(g);
    const auto p1 = l_shaped_path(g, su1, sv1);
    const auto p2 = l_shaped_path(g, su2, sv2);
    if (path_separation(g, p1, p2) < 2.0 * std::sqrt(3.0) - 1e-9) {
      throw ValidationError("covariance_trend: paths closer than two lattice edges");
    }
    CovarianceTrendPoint pt;
    pt.mesh = mesh;
    pt.covariance = exact_height_covariance(kernel, p1, p2, cfg.threads);
    const Complex U1 = g.primal_physical(su1), V1 = g.primal_physical(sv1);
    const Complex U2 = g.primal_physical(su2), V2 = g.primal_physical(sv2);
    pt.target = four_point_g(U1, V1, U2, V2) / kPi;
    pt.abs_err = std::abs(pt.covariance - pt.target);
    pt.rel_err = pt.abs_err / std::abs(pt.target);
    out.push_back(pt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// (b) Monte Carlo increment moments against Wick pairing sums
// ---------------------------------------------------------------------------

struct WickMcResult {
  double mesh = 0;
  int hexagon_k = 0;
  int samples = 0;
  McEstimate m2, m3, m4;
  double target2 = 0, target3 = 0, target4 = 0;
  std::vector<std::pair<Complex, Complex>> segments;  // snapped physical
};

struct WickMcConfig {
  double mesh = 1.0 / 32;
  int hexagon_k = 16;
  // Segment 0 runs from (sx1, sy) to (sx2, sy); segment 1 is its exact
  // mirror image across the vertical axis through the hexagon center
  // (ordered as the mirror of segment 0). Segments 2 and 3 are vertical,
  // with both endpoints on the axis. Under the mirror symmetry of the
  // region, heights are antisymmetric, so the triple (0, 1, 2) has third
  // moment exactly zero at every finite volume, not only in the limit.
  double sx1 = 0.05, sx2 = 0.19, sy = 0.10;
  double t1a = 0.05, t1b = 0.19;
  double t2a = -0.19, t2b = -0.05;
  int samples = 20000;
  std::uint64_t seed = 1;
  int threads = 1;
};

inline WickMcResult wick_increment_moments(const WickMcConfig& cfg) {
  auto hp = hexagon_patch(cfg.hexagon_k);
  auto g = std::make_shared<IsoradialGraph>(scale(*hp.graph, cfg.mesh));
  const auto region = DualRegion::hexagon(*g, hp.center_vertex, cfg.hexagon_k);
  const Complex base = g->primal_pos[hp.center_vertex];
  const double lat = 1.0 / (g->unit * g->mesh);

  // Snap an axis point to a vertex of the center column.
  auto axis_vertex = [&](double y) {
    int best = -1;
    double best_d = 1e300;
    for (int v = 0; v < g->num_primal_vertices(); ++v) {
      if (std::abs(g->primal_pos[v].real() - base.real()) > 1e-9) continue;
      const double d = std::abs(g->primal_pos[v].imag() - (base.imag() + lat * y));
      if (d < best_d) {
        best_d = d;
        best = v;
      }
    }
    return best;
  };
  auto mirror_vertex = [&](int v) {
    const Complex p = g->primal_pos[v];
    const Complex q(2.0 * base.real() - p.real(), p.imag());
    const int m = nearest_primal_vertex(*g, q);
    if (std::abs(g->primal_pos[m] - q) > 1e-9) {
      throw ValidationError("wick moments: mirror image misses the lattice");
    }
    return m;
  };

  std::array<int, 4> us, vs;
  us[0] = nearest_primal_vertex(*g, base + lat * Complex(cfg.sx1, cfg.sy));
  vs[0] = nearest_primal_vertex(*g, base + lat * Complex(cfg.sx2, cfg.sy));
  us[1] = mirror_vertex(us[0]);
  vs[1] = mirror_vertex(vs[0]);
  us[2] = axis_vertex(cfg.t1a);
  vs[2] = axis_vertex(cfg.t1b);
  us[3] = axis_vertex(cfg.t2a);
  vs[3] = axis_vertex(cfg.t2b);
  {
    std::vector<int> pts;
    for (int i = 0; i < 4; ++i) {
      pts.push_back(us[i]);
      pts.push_back(vs[i]);
    }
    std::sort(pts.begin(), pts.end());
    if (std::adjacent_find(pts.begin(), pts.end()) != pts.end()) {
      throw ValidationError("wick moments: segment endpoints collide after snapping");
    }
  }

  WickMcResult res;
  res.mesh = cfg.mesh;
  res.hexagon_k = cfg.hexagon_k;
  res.samples = cfg.samples;
  for (int i = 0; i < 4; ++i) {
    res.segments.emplace_back(g->primal_physical(us[i]), g->primal_physical(vs[i]));
  }
  res.target2 = wick_moment({res.segments[0], res.segments[1]});
  res.target3 = 0.0;
  res.target4 = wick_moment(res.segments);

  const DiracOperator dirac = assemble_dirac(*g);
  const FiniteKernel kernel(region, dirac);
  std::vector<double> p2(cfg.samples), p3(cfg.samples), p4(cfg.samples);
  run_streams(cfg.samples, cfg.seed, cfg.threads, [&](int i, RngStream& rng) {
    const auto m = sample_matching(kernel, rng);
    const auto h = height_from_matching(region, m);
    double d[4];
    for (int s = 0; s < 4; ++s) d[s] = h.at(vs[s]) - h.at(us[s]);
    p2[i] = d[0] * d[1];
    p3[i] = d[0] * d[1] * d[2];
    p4[i] = d[0] * d[1] * d[2] * d[3];
  });
  res.m2 = batch_means(p2);
  res.m3 = batch_means(p3);
  res.m4 = batch_means(p4);
  return res;
}

// ---------------------------------------------------------------------------
// (c) Variance of the field functional against the Dirichlet energy
// ---------------------------------------------------------------------------

struct VarianceMcPoint {
  double mesh = 0;
  int hexagon_k = 0;
  int samples = 0;
  double variance = 0;
  double se = 0;       // batch-means SE of the variance
  double target = 0;   // (1/pi) G(phi, phi)
  double rel_err = 0;
};

struct VarianceMcConfig {
  // Test function: bumps of radius `radius` centered at (+-center, 0),
  // relative to the hexagon center.
  double radius = 0.4;
  double center = 0.55;
  // (mesh, hexagon side, samples) triples, coarse to fine.
  struct Level {
    double mesh;
    int hexagon_k;
    int samples;
  };
  std::vector<Level> levels = {{1.0 / 4, 10, 4000}, {1.0 / 6, 15, 2000}, {1.0 / 8, 20, 1200}};
  std::uint64_t seed = 2;
  int threads = 1;
};

inline std::vector<VarianceMcPoint> functional_variance_trend(const VarianceMcConfig& cfg) {
  const auto phi0 =
      TestFunction::bump_pair(Complex(-cfg.center, 0), Complex(cfg.center, 0), cfg.radius);
  const double target = dirichlet_energy(phi0, phi0) / kPi;

  std::vector<VarianceMcPoint> out;
  for (const auto& level : cfg.levels) {
    auto hp = hexagon_patch(level.hexagon_k);
    auto g = std::make_shared<IsoradialGraph>(scale(*hp.graph, level.mesh));
    const auto region = DualRegion::hexagon(*g, hp.center_vertex, level.hexagon_k);
    const Complex base = g->primal_physical(hp.center_vertex);
    const auto phi = TestFunction::bump_pair(base + Complex(-cfg.center, 0),
                                             base + Complex(cfg.center, 0), cfg.radius);

    // Heights are defined on vertices spanned by region-interior edges;
    // restrict the functional to those that are interior in the big patch.
    std::vector<char> in_play(g->num_primal_vertices(), 0);
    for (int de : region.dual_edges) {
      const auto& pe = g->primal_edges[g->dual_edges[de].primal_edge];
      in_play[pe.u] = in_play[pe.v] = 1;
    }
    std::vector<int> verts;
    for (int v = 0; v < g->num_primal_vertices(); ++v) {
      if (in_play[v] && g->primal_vertex_interior(v)) verts.push_back(v);
    }
    const FieldFunctional functional(*g, phi, verts);

    std::vector<double> hs(level.samples);
    const DiracOperator dirac = assemble_dirac(*g);
    const FiniteKernel kernel(region, dirac);
    run_streams(level.samples, cfg.seed, cfg.threads, [&](int i, RngStream& rng) {
      const auto m = sample_matching(kernel, rng);
      const auto h = height_from_matching(region, m);
      hs[i] = functional.apply(h);
    });
    double mean = 0;
    for (double x : hs) mean += x;
    mean /= hs.size();
    std::vector<double> sq(hs.size());
    for (size_t i = 0; i < hs.size(); ++i) sq[i] = (hs[i] - mean) * (hs[i] - mean);
    const auto est = batch_means(sq);

    VarianceMcPoint pt;
    pt.mesh = level.mesh;
    pt.hexagon_k = level.hexagon_k;
    pt.samples = level.samples;
    pt.variance = est.mean;
    pt.se = est.se;
    pt.target = target;
    pt.rel_err = std::abs(pt.variance - target) / target;
    out.push_back(pt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mean-zero increments (Monte Carlo)
// ---------------------------------------------------------------------------

struct MeanZeroResult {
  std::vector<McEstimate> estimates;  // one per vertex pair
  int samples = 0;
};

// Samples the region and tests E[h(v) - h(u)] = 0 for `pairs` random vertex
// pairs near the center.
inline MeanZeroResult mean_zero_increments(int hexagon_k, int pairs, int samples,
                                           std::uint64_t seed, int threads) {
  auto hp = hexagon_patch(hexagon_k);
  const auto& g = *hp.graph;
  const Complex base = g.primal_pos[hp.center_vertex];
  RngStream pick = RngStream::make(seed, 987654321);
  std::vector<std::pair<int, int>> uv;
  const double radius = 0.45 * 1.5 * hexagon_k;  // stay inside the liquid zone
  while (static_cast<int>(uv.size()) < pairs) {
    const double a1 = 2 * kPi * pick.next_double();
    const double a2 = 2 * kPi * pick.next_double();
    const double r1 = radius * std::sqrt(pick.next_double());
    const double r2 = radius * std::sqrt(pick.next_double());
    const int u = nearest_primal_vertex(g, base + r1 * unit_vector(a1));
    const int v = nearest_primal_vertex(g, base + r2 * unit_vector(a2));
    if (u == v) continue;
    uv.emplace_back(u, v);
  }

  const DiracOperator dirac = assemble_dirac(g);
  const FiniteKernel kernel(hp.region, dirac);
  std::vector<std::vector<double>> xs(pairs, std::vector<double>(samples));
  run_streams(samples, seed, threads, [&](int i, RngStream& rng) {
    const auto m = sample_matching(kernel, rng);
    const auto h = height_from_matching(hp.region, m);
    for (int p = 0; p < pairs; ++p) xs[p][i] = h.at(uv[p].second) - h.at(uv[p].first);
  });
  MeanZeroResult res;
  res.samples = samples;
  for (int p = 0; p < pairs; ++p) res.estimates.push_back(batch_means(xs[p]));
  return res;
}

}  // namespace isodimer
