#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "isodimer/geometry.hpp"
#include "isodimer/gibbs.hpp"
#include "isodimer/height.hpp"
#include "isodimer/sampler.hpp"

using namespace isodimer;

namespace {

LozengeTiling aligned_tiling(const IsoradialGraph& t, const DualRegion& region) {
  DimerConfiguration m;
  for (int de : region.dual_edges) {
    const auto& d = t.dual_edges[de];
    const int a = std::min(d.white, d.black);
    const int b = std::max(d.white, d.black);
    if (b == a + 1 && a % 2 == 0) m.edges.push_back(de);
  }
  std::sort(m.edges.begin(), m.edges.end());
  return LozengeTiling::from_matching(t, region, m);
}

}  // namespace

TEST_CASE("reference flow: values and divergence") {
  const auto g = build_triangular_lattice(6, 6);
  const auto flow = ReferenceFlow::of(g);
  for (double v : flow.value) CHECK(v == Catch::Approx(1.0 / 3).margin(1e-14));
  int whites = 0, blacks = 0;
  for (int f = 0; f < g.num_faces(); ++f) {
    if (!g.dual_vertex_interior(f)) continue;
    const double div = flow.divergence(f);
    if (g.faces[f].color == DualColor::White) {
      CHECK(div == Catch::Approx(1.0).margin(1e-12));
      ++whites;
    } else {
      CHECK(div == Catch::Approx(-1.0).margin(1e-12));
      ++blacks;
    }
  }
  CHECK(whites > 0);
  CHECK(blacks > 0);

  const auto t = build_triangular_lattice(4, 4);
  const auto ldg = build_lozenge_with_diagonals(aligned_tiling(t, DualRegion::whole(t)));
  const auto lflow = ReferenceFlow::of(ldg.graph);
  std::set<int> seen;
  for (double v : lflow.value) seen.insert(static_cast<int>(std::lround(v * 6)));
  CHECK(seen == std::set<int>{1, 2, 3});  // 1/6, 1/3, 1/2
}

TEST_CASE("hexagon heights: the two matchings differ by one at the center") {
  const auto g = build_triangular_lattice(2, 2);
  const int center = central_primal_vertex(g);
  const auto region = DualRegion::around_vertex(g, center);
  const auto table = brute_force_measure(region);
  REQUIRE(table.matchings.size() == 2);
  const auto ha = height_from_matching(region, table.matchings[0]);
  const auto hb = height_from_matching(region, table.matchings[1]);
  CHECK(ha.at(ha.v0) == 0.0);
  CHECK(std::abs(std::abs(ha.at(center) - hb.at(center)) - 1.0) < 1e-12);
  // The difference field vanishes away from the flippable hexagon center.
  for (int v = 0; v < g.num_primal_vertices(); ++v) {
    if (!ha.defined[v] || v == center) continue;
    CHECK(std::abs(ha.at(v) - hb.at(v)) < 1e-12);
  }
}

TEST_CASE("matched edges carry increment theta/pi - 1") {
  const auto hp = hexagon_patch(3);
  const auto& g = *hp.graph;
  const auto dirac = assemble_dirac(g);
  const FiniteKernel kernel(hp.region, dirac);
  RngStream rng = RngStream::make(31, 0);
  const auto m = sample_matching(kernel, rng);
  const auto h = height_from_matching(hp.region, m);
  int matched_seen = 0, free_seen = 0;
  for (int pe : hp.region.interior_primal_edges()) {
    const auto& e = g.primal_edges[pe];
    auto [tail, head] = g.canonical_orientation(pe);
    const double inc = h.at(head) - h.at(tail);
    const double w0 = g.dual_edges[e.dual_edge].theta / kPi;
    if (std::binary_search(m.edges.begin(), m.edges.end(), e.dual_edge)) {
      CHECK(inc == Catch::Approx(w0 - 1.0).margin(1e-12));
      ++matched_seen;
    } else {
      CHECK(inc == Catch::Approx(w0).margin(1e-12));
      ++free_seen;
    }
  }
  CHECK(matched_seen > 0);
  CHECK(free_seen > 0);
}

TEST_CASE("height -> matching -> height round trip on all three families") {
  RngStream rng = RngStream::make(17, 0);

  SECTION("triangular") {
    const auto hp = hexagon_patch(3);
    const auto dirac = assemble_dirac(*hp.graph);
    const FiniteKernel kernel(hp.region, dirac);
    for (int i = 0; i < 100; ++i) {
      const auto m = sample_matching(kernel, rng);
      const auto h = height_from_matching(hp.region, m);
      CHECK(matching_from_height(hp.region, h) == m);
    }
  }
  SECTION("square") {
    const auto g = build_square_lattice(6, 6);
    const auto region = DualRegion::whole(g);
    const auto dirac = assemble_dirac(g);
    const FiniteKernel kernel(region, dirac);
    for (int i = 0; i < 100; ++i) {
      const auto m = sample_matching(kernel, rng);
      const auto h = height_from_matching(region, m);
      CHECK(matching_from_height(region, h) == m);
    }
  }
  SECTION("lozenge-with-diagonals") {
    const auto t = build_triangular_lattice(3, 3);
    const auto lt = aligned_tiling(t, DualRegion::whole(t));
    const auto ldg = build_lozenge_with_diagonals(lt);
    const auto region = DualRegion::whole(ldg.graph);
    const auto dirac = assemble_dirac(ldg.graph);
    const FiniteKernel kernel(region, dirac);
    for (int i = 0; i < 100; ++i) {
      const auto m = sample_matching(kernel, rng);
      const auto h = height_from_matching(region, m);
      CHECK(matching_from_height(region, h) == m);
    }
  }
}

TEST_CASE("corrupting one height value is reported with a face id") {
  const auto hp = hexagon_patch(2);
  const auto dirac = assemble_dirac(*hp.graph);
  const FiniteKernel kernel(hp.region, dirac);
  RngStream rng = RngStream::make(23, 0);
  const auto m = sample_matching(kernel, rng);
  auto h = height_from_matching(hp.region, m);
  h.value[hp.center_vertex] += 0.5;
  try {
    matching_from_height(hp.region, h);
    FAIL("expected a validation error");
  } catch (const ValidationError& err) {
    CHECK(std::string(err.what()).find("face") != std::string::npos);
  }
}

TEST_CASE("increment representation reproduces height differences") {
  const auto hp = hexagon_patch(3);
  const auto& g = *hp.graph;
  const auto dirac = assemble_dirac(g);
  const FiniteKernel kernel(hp.region, dirac);
  RngStream rng = RngStream::make(41, 0);

  std::vector<std::vector<int>> adj(g.num_primal_vertices());
  for (int pe : hp.region.interior_primal_edges()) {
    adj[g.primal_edges[pe].u].push_back(g.primal_edges[pe].v);
    adj[g.primal_edges[pe].v].push_back(g.primal_edges[pe].u);
  }

  for (int trial = 0; trial < 100; ++trial) {
    const auto m = sample_matching(kernel, rng);
    const auto h = height_from_matching(hp.region, m);
    std::vector<int> path = {hp.center_vertex};
    for (int s = 0; s < 8; ++s) {
      const auto& nb = adj[path.back()];
      if (nb.empty()) break;
      path.push_back(nb[rng.next_u64() % nb.size()]);
    }
    const auto rep = height_increment_representation(g, path);
    const double direct = h.at(path.back()) - h.at(path.front());
    CHECK(rep.evaluate(m) == Catch::Approx(direct).margin(1e-12));
    CHECK(rep.reversed().evaluate(m) == Catch::Approx(-direct).margin(1e-12));
  }

  const auto empty = height_increment_representation(g, {hp.center_vertex});
  CHECK(empty.edges.empty());
  CHECK(empty.evaluate({}) == 0.0);
}

TEST_CASE("expected height increments vanish") {
  const auto hp = hexagon_patch(6);
  const auto& g = *hp.graph;
  const ExactKernel exact(g);
  const KernelRef ref(exact);

  const int u = hp.center_vertex;
  const int v = nearest_primal_vertex(g, g.primal_pos[u] + std::sqrt(3.0) * Complex(2.0, 0.0));
  const auto path = l_shaped_path(g, u, v);
  const auto rep = height_increment_representation(g, path);
  double mean = 0;
  for (size_t i = 0; i < rep.edges.size(); ++i) {
    const double mu = edge_probability(ref, rep.edges[i]);
    const double centered = mu - g.dual_edges[rep.edges[i]].theta / kPi;
    mean += rep.deltas[i] ? -centered : centered;
  }
  CHECK(std::abs(mean) < 1e-8);

  const auto dirac = assemble_dirac(g);
  const FiniteKernel kernel(hp.region, dirac);
  const int n = 2000;
  std::vector<double> xs(n);
  run_streams(n, 77, 2, [&](int i, RngStream& rng) {
    const auto m = sample_matching(kernel, rng);
    xs[i] = rep.evaluate(m);
  });
  const auto est = batch_means(xs);
  CHECK(std::abs(est.mean) <= 3.0 * est.se + 1e-12);
}

TEST_CASE("exact height covariance: symmetry and path independence") {
  const auto g = build_triangular_lattice(24, 24);
  const ExactKernel kernel(g);
  const int c = central_primal_vertex(g);
  const double s = std::sqrt(3.0);
  const Complex base = g.primal_pos[c];
  const int u1 = nearest_primal_vertex(g, base + s * Complex(-3.0, 0));
  const int v1 = nearest_primal_vertex(g, base + s * Complex(3.0, 0));
  const int u2 = nearest_primal_vertex(g, base + s * Complex(-2.0, 3.0 * 0.866));
  const int v2 = nearest_primal_vertex(g, base + s * Complex(4.0, 3.0 * 0.866));

  const auto p1 = l_shaped_path(g, u1, v1);
  const auto p2 = l_shaped_path(g, u2, v2);
  REQUIRE(path_separation(g, p1, p2) > 1.9 * s);

  const double c12 = exact_height_covariance(kernel, p1, p2);
  const double c21 = exact_height_covariance(kernel, p2, p1);
  CHECK(c12 == Catch::Approx(c21).margin(1e-10));

  const auto p2b = l_shaped_path(g, u2, v2, true);
  const double c12b = exact_height_covariance(kernel, p1, p2b);
  CHECK(c12 == Catch::Approx(c12b).margin(1e-6));

  CHECK_THROWS_AS(exact_height_covariance(kernel, p1, p1), ValidationError);
}

TEST_CASE("exact height covariance approaches the four-point log formula") {
  // Two horizontal unit segments at vertical separation 0.5, refined twice.
  double errs[2];
  int idx = 0;
  for (const double mesh : {1.0 / 8, 1.0 / 16}) {
    const int cells = static_cast<int>(std::lround(2.4 / mesh));
    auto g = scale(build_triangular_lattice(cells, cells), mesh);
    const int c = central_primal_vertex(g);
    const Complex base = g.primal_pos[c];
    const double lat = 1.0 / (g.unit * g.mesh);  // physical -> lattice
    const int u1 = nearest_primal_vertex(g, base + lat * Complex(-0.5, -0.25));
    const int v1 = nearest_primal_vertex(g, base + lat * Complex(0.5, -0.25));
    const int u2 = nearest_primal_vertex(g, base + lat * Complex(-0.5, 0.25));
    const int v2 = nearest_primal_vertex(g, base + lat * Complex(0.5, 0.25));
    const ExactKernel kernel(g);
    const auto p1 = l_shaped_path(g, u1, v1);
    const auto p2 = l_shaped_path(g, u2, v2);
    const double cov = exact_height_covariance(kernel, p1, p2);
    const auto phys = [&](int v) { return g.primal_physical(v); };
    const Complex U1 = phys(u1), V1 = phys(v1), U2 = phys(u2), V2 = phys(v2);
    const double cr = std::abs((V1 - V2) * (U1 - U2) / ((V1 - U2) * (U1 - V2)));
    const double target = -std::log(cr) / (2.0 * kPi * kPi);
    errs[idx++] = std::abs(cov - target);
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[1] < 0.02);
}
