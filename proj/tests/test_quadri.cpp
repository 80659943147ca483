#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>

#include "isodimer/gibbs.hpp"
#include "isodimer/quadri.hpp"

using namespace isodimer;

TEST_CASE("quadri samples are structurally valid and classify into I-IV") {
  const auto hp = hexagon_patch(3);
  const auto dirac = assemble_dirac(*hp.graph);
  const FiniteKernel kernel(hp.region, dirac);
  RngStream rng = RngStream::make(3, 0);
  std::set<QuadriType> seen;
  for (int i = 0; i < 20; ++i) {
    const QuadriSample qs = sample_quadri(kernel, rng);
    CHECK(is_perfect_matching(qs.l_region, qs.quadri_matching));
    // Each lozenge of the tiling is covered by its matched tiles.
    std::set<int> covered;
    for (const auto& tile : qs.tiles()) {
      seen.insert(tile.type);
      const auto& d = qs.ldg->graph.dual_edges[tile.dual_edge];
      covered.insert(qs.ldg->lozenge_of_face[d.white]);
      covered.insert(qs.ldg->lozenge_of_face[d.black]);
      // Angle matches the type.
      if (tile.type == QuadriType::I) CHECK(tile.theta == Catch::Approx(kPi / 6).margin(1e-9));
      if (tile.type == QuadriType::II) CHECK(tile.theta == Catch::Approx(kPi / 3).margin(1e-9));
      if (tile.type == QuadriType::III || tile.type == QuadriType::IV) {
        CHECK(tile.theta == Catch::Approx(kPi / 2).margin(1e-9));
      }
    }
    // Removing the diagonals recovers the underlying tiling.
    CHECK(covered.size() == qs.tiling->lozenges.size());
  }
  CHECK(seen.count(QuadriType::I) == 1);
  CHECK(seen.count(QuadriType::II) == 1);
}

TEST_CASE("replay determinism of the two-stage sampler") {
  const auto hp = hexagon_patch(2);
  const auto dirac = assemble_dirac(*hp.graph);
  const FiniteKernel kernel(hp.region, dirac);
  RngStream a = RngStream::make(5, 9);
  RngStream b = RngStream::make(5, 9);
  for (int i = 0; i < 5; ++i) {
    const auto qa = sample_quadri(kernel, a);
    const auto qb = sample_quadri(kernel, b);
    CHECK(qa.tiling->matching == qb.tiling->matching);
    CHECK(qa.quadri_matching == qb.quadri_matching);
  }
}

TEST_CASE("height1 increments lie in the advertised sets") {
  const auto hp = hexagon_patch(2);
  const auto dirac = assemble_dirac(*hp.graph);
  const FiniteKernel kernel(hp.region, dirac);
  RngStream rng = RngStream::make(8, 1);
  const QuadriSample qs = sample_quadri(kernel, rng);
  const auto h1 = height1(qs);
  const auto& L = qs.ldg->graph;
  std::set<long> increments;  // in units of 1/6
  for (int pe : qs.l_region.interior_primal_edges()) {
    const auto& e = L.primal_edges[pe];
    auto [tail, head] = L.canonical_orientation(pe);
    const double inc = h1.at(head) - h1.at(tail);
    increments.insert(std::lround(inc * 6));
  }
  // theta/pi in {1/6, 1/3, 1/2} minus 0 or 1, in sixths:
  // {1, 2, 3} and {-5, -4, -3}.
  for (long inc : increments) {
    const bool ok = inc == 1 || inc == 2 || inc == 3 || inc == -5 || inc == -4 || inc == -3;
    CHECK(ok);
  }
  // A matched degenerate edge shows the -1/2 increment.
  bool found_half = false;
  for (int de : qs.quadri_matching.edges) {
    if (std::abs(L.rhombus_angle(de) - kPi / 2) < 1e-9) found_half = true;
  }
  if (found_half) {
    CHECK(increments.count(-3) == 1);
  }
}

TEST_CASE("height2: center values are corner means; hexagon tilings differ by 1") {
  const auto g = build_triangular_lattice(2, 2);
  const int center = central_primal_vertex(g);
  const auto region = DualRegion::around_vertex(g, center);
  const auto table = brute_force_measure(region);
  REQUIRE(table.matchings.size() == 2);

  double h2_at_center[2];
  for (int which = 0; which < 2; ++which) {
    QuadriSample qs;
    qs.tiling = std::make_shared<LozengeTiling>(
        LozengeTiling::from_matching(g, region, table.matchings[which]));
    qs.ldg = std::make_shared<LozengeDiagonalsGraph>(build_lozenge_with_diagonals(*qs.tiling));
    qs.l_region = DualRegion::whole(qs.ldg->graph);
    // Stage 2 matching is irrelevant for height2; use any matching.
    const auto dirac = assemble_dirac(qs.ldg->graph);
    const FiniteKernel lk(qs.l_region, dirac);
    RngStream rng = RngStream::make(1, which);
    qs.quadri_matching = sample_matching(lk, rng);

    // Reference vertex: lexicographically smallest T vertex of the tiling,
    // fixed across the two tilings.
    int t_v0 = -1;
    for (const auto& lz : qs.tiling->lozenges) {
      for (int tv : {lz.u, lz.v, lz.p, lz.q}) {
        if (t_v0 < 0) t_v0 = tv;
        const Complex a = g.primal_pos[tv], b = g.primal_pos[t_v0];
        if (a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag())) t_v0 = tv;
      }
    }
    const auto h2 = height2(qs, t_v0);
    const int lc = qs.ldg->l_vertex_of_t(center);
    REQUIRE(lc >= 0);
    h2_at_center[which] = h2.at(lc);

    // Center of every lozenge carries the mean of its corners.
    for (size_t k = 0; k < qs.tiling->lozenges.size(); ++k) {
      const auto& lz = qs.tiling->lozenges[k];
      const int c = qs.ldg->center_vertex[k];
      double mean = 0;
      for (int tv : {lz.u, lz.v, lz.p, lz.q}) mean += h2.at(qs.ldg->l_vertex_of_t(tv));
      CHECK(h2.at(c) == Catch::Approx(mean / 4).margin(1e-12));
    }
  }
  CHECK(std::abs(std::abs(h2_at_center[0] - h2_at_center[1]) - 1.0) < 1e-12);
}

TEST_CASE("two-stage law: joint frequencies match the product measure on the hexagon") {
  const auto g = build_triangular_lattice(2, 2);
  const int center = central_primal_vertex(g);
  const auto region = DualRegion::around_vertex(g, center);
  const auto dirac = assemble_dirac(g);
  const FiniteKernel kernel(region, dirac);
  const auto stage1 = brute_force_measure(region);
  REQUIRE(stage1.matchings.size() == 2);

  // Enumerate stage-2 tables for both tilings.
  std::vector<std::shared_ptr<LozengeDiagonalsGraph>> graphs;
  std::vector<BoltzmannTable> stage2;
  std::vector<DualRegion> l_regions;
  std::vector<LozengeTiling> tilings;
  for (int which = 0; which < 2; ++which) {
    tilings.push_back(LozengeTiling::from_matching(g, region, stage1.matchings[which]));
  }
  for (int which = 0; which < 2; ++which) {
    graphs.push_back(
        std::make_shared<LozengeDiagonalsGraph>(build_lozenge_with_diagonals(tilings[which])));
    l_regions.push_back(DualRegion::whole(graphs[which]->graph));
    stage2.push_back(brute_force_measure(l_regions[which]));
  }

  const int n = 10000;
  std::map<std::pair<int, int>, int> counts;  // (tiling index, matching index)
  for (int i = 0; i < n; ++i) {
    RngStream rng = RngStream::make(77, i);
    const QuadriSample qs = sample_quadri(kernel, rng);
    const int t_idx = stage1.index_of(qs.tiling->matching);
    REQUIRE(t_idx >= 0);
    const int m_idx = stage2[t_idx].index_of(qs.quadri_matching);
    REQUIRE(m_idx >= 0);
    counts[{t_idx, m_idx}]++;
  }
  for (int t_idx = 0; t_idx < 2; ++t_idx) {
    for (size_t m_idx = 0; m_idx < stage2[t_idx].matchings.size(); ++m_idx) {
      const double p = stage1.probability(t_idx) * stage2[t_idx].probability(m_idx);
      const auto it = counts.find({t_idx, static_cast<int>(m_idx)});
      const double freq = it == counts.end() ? 0.0 : it->second / static_cast<double>(n);
      const double se = std::sqrt(p * (1 - p) / n);
      CHECK(std::abs(freq - p) <= 3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("empirical independence of the two height increments") {
  const auto hp = hexagon_patch(3);
  const auto& g = *hp.graph;
  const auto dirac = assemble_dirac(g);
  const FiniteKernel kernel(hp.region, dirac);
  const double s = std::sqrt(3.0);
  const Complex base = g.primal_pos[hp.center_vertex];
  const int u1 = nearest_primal_vertex(g, base - s * Complex(1.0, 0.0));
  const int v1 = nearest_primal_vertex(g, base + s * Complex(1.0, 0.0));
  const int u2 = nearest_primal_vertex(g, base - s * Complex(0.5, 0.866));
  const int v2 = nearest_primal_vertex(g, base + s * Complex(0.5, 0.866));
  const auto rep = empirical_independence(kernel, u1, v1, u2, v2, 2000, 99, 2);
  CHECK(rep.n == 2000);
  CHECK(std::abs(rep.correlation) <= 3.0 * rep.se);
  // Self-correlation sanity: correlate an increment with itself.
  CHECK(rep.se > 0);
  CHECK_THROWS_AS(empirical_independence(kernel, u1, v1, u2, v2, 10, 99, 1), ValidationError);
}
