#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "isodimer/geometry.hpp"
#include "isodimer/gibbs.hpp"
#include "isodimer/sampler.hpp"

using namespace isodimer;

TEST_CASE("hexagon region: empirical frequencies match the two-matching law") {
  const auto g = build_triangular_lattice(2, 2);
  const auto region = DualRegion::around_vertex(g, central_primal_vertex(g));
  const auto dirac = assemble_dirac(g);
  const FiniteKernel kernel(region, dirac);
  const auto table = brute_force_measure(region);
  REQUIRE(table.matchings.size() == 2);

  const int n = 10000;
  int first = 0;
  SamplerDiagnostics diag;
  for (int i = 0; i < n; ++i) {
    RngStream rng = RngStream::make(123, i);
    const auto m = sample_matching(kernel, rng, &diag);
    REQUIRE(is_perfect_matching(region, m));
    if (table.index_of(m) == 0) ++first;
  }
  const double freq = static_cast<double>(first) / n;
  const double band = 3.0 * std::sqrt(0.25 / n);
  CHECK(std::abs(freq - 0.5) <= band);
  CHECK(diag.max_probability_sum_dev <= 1e-9);
  CHECK(diag.min_probability >= -1e-9);
}

TEST_CASE("2x2 square block: empirical frequencies match") {
  const auto g = build_square_lattice(2, 2);
  const auto region = DualRegion::whole(g);
  const auto dirac = assemble_dirac(g);
  const FiniteKernel kernel(region, dirac);
  const auto table = brute_force_measure(region);
  REQUIRE(table.matchings.size() == 2);

  const int n = 10000;
  int first = 0;
  for (int i = 0; i < n; ++i) {
    RngStream rng = RngStream::make(99, i);
    if (table.index_of(sample_matching(kernel, rng)) == 0) ++first;
  }
  CHECK(std::abs(first / static_cast<double>(n) - 0.5) <= 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("replay determinism and stream independence") {
  const auto hp = hexagon_patch(2);
  const auto dirac = assemble_dirac(*hp.graph);
  const FiniteKernel kernel(hp.region, dirac);

  RngStream a = RngStream::make(7, 3);
  RngStream b = RngStream::make(7, 3);
  std::vector<DimerConfiguration> seq_a, seq_b;
  for (int i = 0; i < 5; ++i) seq_a.push_back(sample_matching(kernel, a));
  for (int i = 0; i < 5; ++i) seq_b.push_back(sample_matching(kernel, b));
  CHECK(seq_a == seq_b);

  RngStream c = RngStream::make(7, 4);
  std::vector<DimerConfiguration> seq_c;
  for (int i = 0; i < 5; ++i) seq_c.push_back(sample_matching(kernel, c));
  CHECK(seq_a != seq_c);
}

TEST_CASE("total variation against the Boltzmann table on a 20-matching region") {
  const auto hp = hexagon_patch(2);
  const auto dirac = assemble_dirac(*hp.graph);
  const FiniteKernel kernel(hp.region, dirac);
  const auto table = brute_force_measure(hp.region);
  const auto n_match = table.matchings.size();
  REQUIRE(n_match == 20);

  const int n = 20000;
  std::vector<int> counts(n_match, 0);
  std::vector<double> sum_dev(1, 0.0);
  SamplerDiagnostics diag;
  for (int i = 0; i < n; ++i) {
    RngStream rng = RngStream::make(2024, i);
    const auto m = sample_matching(kernel, rng, &diag);
    const int idx = table.index_of(m);
    REQUIRE(idx >= 0);
    counts[idx]++;
  }
  double tv = 0;
  for (size_t k = 0; k < n_match; ++k) {
    tv += std::abs(counts[k] / static_cast<double>(n) - table.probability(k));
  }
  tv *= 0.5;
  CHECK(tv <= 5.0 * std::sqrt(static_cast<double>(n_match) / n));
  CHECK(diag.max_probability_sum_dev <= 1e-9);
}

TEST_CASE("sampled frequencies match finite-kernel edge probabilities on a bigger region") {
  const auto hp = hexagon_patch(4);
  const auto dirac = assemble_dirac(*hp.graph);
  const FiniteKernel kernel(hp.region, dirac);
  const KernelRef ref(kernel);

  const int n = 4000;
  std::map<int, int> hits;
  for (int i = 0; i < n; ++i) {
    RngStream rng = RngStream::make(5, i);
    for (int de : sample_matching(kernel, rng).edges) hits[de]++;
  }
  // Check a handful of central edges against their exact finite-volume
  // probabilities (this is the sampler's own target law, so no bias).
  int checked = 0;
  for (int de : hp.region.dual_edges) {
    const auto& d = hp.graph->dual_edges[de];
    const Complex c = hp.graph->faces[d.white].center -
                      hp.graph->primal_pos[hp.center_vertex];
    if (std::abs(c) > 2.0) continue;
    const double p = edge_probability(ref, de);
    const double freq = hits.count(de) ? hits[de] / static_cast<double>(n) : 0.0;
    CHECK(std::abs(freq - p) <= 3.0 * std::sqrt(p * (1 - p) / n) + 1e-12);
    ++checked;
  }
  CHECK(checked >= 3);
}

TEST_CASE("lozenge tilings sample and validate") {
  const auto hp = hexagon_patch(2);
  const auto dirac = assemble_dirac(*hp.graph);
  const FiniteKernel kernel(hp.region, dirac);
  RngStream rng = RngStream::make(11, 0);
  for (int i = 0; i < 10; ++i) {
    const auto lt = sample_lozenge_tiling(kernel, rng);
    CHECK(lt.lozenges.size() == hp.region.faces.size() / 2);
    for (const auto& lz : lt.lozenges) {
      CHECK(lz.p >= 0);
      CHECK(lz.q >= 0);
      // Diagonal endpoints and opposite corners are the four rhombus corners.
      const Complex u = hp.graph->primal_pos[lz.u];
      const Complex v = hp.graph->primal_pos[lz.v];
      const Complex p = hp.graph->primal_pos[lz.p];
      const Complex q = hp.graph->primal_pos[lz.q];
      CHECK(std::abs(u - v) == Catch::Approx(std::sqrt(3.0)).margin(1e-12));
      CHECK(std::abs(p - q) == Catch::Approx(3.0).margin(1e-12));
    }
  }
}

TEST_CASE("batch means standard error is sane") {
  std::vector<double> xs(2000);
  RngStream rng = RngStream::make(1, 1);
  for (auto& x : xs) x = rng.next_double();
  const auto est = batch_means(xs);
  CHECK(est.n == 2000);
  CHECK(est.batches == 20);
  CHECK(est.mean == Catch::Approx(0.5).margin(0.05));
  // SE of the mean of 2000 uniforms is about 0.0065.
  CHECK(est.se > 0.001);
  CHECK(est.se < 0.02);
}

TEST_CASE("run_streams is deterministic across thread counts") {
  std::vector<double> one(64), four(64);
  run_streams(64, 42, 1, [&](int i, RngStream& rng) { one[i] = rng.next_double(); });
  run_streams(64, 42, 4, [&](int i, RngStream& rng) { four[i] = rng.next_double(); });
  CHECK(one == four);
}
