#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "isodimer/geometry.hpp"

using namespace isodimer;

namespace {
constexpr double kSqrt3 = 1.7320508075688772;
}

TEST_CASE("triangular lattice rhombus angles and critical weights") {
  const auto g = build_triangular_lattice(4, 4);
  REQUIRE(g.num_faces() == 32);
  for (size_t de = 0; de < g.dual_edges.size(); ++de) {
    CHECK(g.rhombus_angle(static_cast<int>(de)) == Catch::Approx(kPi / 3).margin(1e-12));
    CHECK(g.critical_weight(static_cast<int>(de)) == Catch::Approx(kSqrt3).margin(1e-12));
  }
}

TEST_CASE("triangular lattice validates exactly") {
  const auto g = build_triangular_lattice(5, 3);
  const auto rep = validate_isoradial(g);
  CHECK(rep.pass());
  CHECK(rep.max_radius_rel_dev <= 1e-12);
  CHECK(rep.nonbipartite_edges.empty());
}

TEST_CASE("square lattice validates and has angle pi/4") {
  const auto g = build_square_lattice(4, 4);
  const auto rep = validate_isoradial(g);
  CHECK(rep.pass());
  for (size_t de = 0; de < g.dual_edges.size(); ++de) {
    CHECK(g.rhombus_angle(static_cast<int>(de)) == Catch::Approx(kPi / 4).margin(1e-12));
    CHECK(g.critical_weight(static_cast<int>(de)) ==
          Catch::Approx(std::sqrt(2.0)).margin(1e-12));
  }
}

TEST_CASE("perturbed vertex fails validation with a named face") {
  auto g = build_triangular_lattice(3, 3);
  // Move an interior vertex; faces around it lose the common circumradius.
  int interior = -1;
  for (int v = 0; v < g.num_primal_vertices(); ++v) {
    if (g.primal_vertex_interior(v)) interior = v;
  }
  REQUIRE(interior >= 0);
  g.primal_pos[interior] += Complex(0.1, 0.0);
  const auto rep = validate_isoradial(g);
  CHECK_FALSE(rep.pass());
  CHECK(rep.worst_face >= 0);
  CHECK(rep.max_radius_rel_dev > 0.01);
}

TEST_CASE("critical weight equals primal edge length over radius") {
  for (const auto& g : {build_triangular_lattice(3, 3), build_square_lattice(3, 3)}) {
    for (size_t de = 0; de < g.dual_edges.size(); ++de) {
      const auto& d = g.dual_edges[de];
      const auto& pe = g.primal_edges[d.primal_edge];
      const double len = std::abs(g.primal_pos[pe.u] - g.primal_pos[pe.v]);
      CHECK(g.critical_weight(static_cast<int>(de)) == Catch::Approx(len).margin(1e-12));
    }
  }
}

TEST_CASE("rhombus angle sum around interior dual vertices is pi") {
  for (const auto& g : {build_triangular_lattice(4, 4), build_square_lattice(4, 4)}) {
    int checked = 0;
    for (int f = 0; f < g.num_faces(); ++f) {
      if (!g.dual_vertex_interior(f)) continue;
      double sum = 0;
      for (int de : g.dual_adj[f]) sum += g.rhombus_angle(de);
      CHECK(sum == Catch::Approx(kPi).margin(1e-12));
      ++checked;
    }
    CHECK(checked > 0);
  }
}

TEST_CASE("dual face areas") {
  auto g = build_triangular_lattice(4, 4);
  int interior = -1;
  for (int v = 0; v < g.num_primal_vertices(); ++v) {
    if (g.primal_vertex_interior(v)) interior = v;
  }
  REQUIRE(interior >= 0);
  CHECK(dual_face_area(g, interior) == Catch::Approx(kSqrt3 / 2).margin(1e-12));

  const auto half = scale(g, 0.5);
  CHECK(dual_face_area(half, interior) == Catch::Approx(kSqrt3 / 8).margin(1e-12));

  auto sq = build_square_lattice(4, 4);
  int sq_interior = -1;
  for (int v = 0; v < sq.num_primal_vertices(); ++v) {
    if (sq.primal_vertex_interior(v)) sq_interior = v;
  }
  REQUIRE(sq_interior >= 0);
  CHECK(dual_face_area(sq, sq_interior) == Catch::Approx(1.0).margin(1e-12));

  int boundary = 0;  // corner vertex of the patch
  CHECK_THROWS_AS(dual_face_area(g, boundary), ValidationError);
}

TEST_CASE("scaling composes and leaves weights unchanged") {
  const auto g = build_triangular_lattice(2, 2);
  const auto a = scale(scale(g, 0.5), 0.5);
  const auto b = scale(g, 0.25);
  CHECK(a.mesh == Catch::Approx(b.mesh));
  CHECK(a.scale_to_physical() == Catch::Approx(b.scale_to_physical()));
  for (size_t de = 0; de < g.dual_edges.size(); ++de) {
    CHECK(a.critical_weight(static_cast<int>(de)) ==
          Catch::Approx(g.critical_weight(static_cast<int>(de))));
  }
  CHECK(scale(g, 1.0).mesh == Catch::Approx(g.mesh));
}

TEST_CASE("hexagon region around an interior vertex has six faces") {
  const auto g = build_triangular_lattice(2, 2);
  int interior = -1;
  for (int v = 0; v < g.num_primal_vertices(); ++v) {
    if (g.primal_vertex_interior(v)) interior = v;
  }
  REQUIRE(interior >= 0);
  const auto region = DualRegion::around_vertex(g, interior);
  CHECK(region.size() == 6);
  CHECK(region.whites.size() == 3);
  CHECK(region.blacks.size() == 3);
  // The six faces form a 6-cycle in the dual: each face has exactly two
  // region dual edges.
  for (int f : region.faces) {
    int deg = 0;
    for (int de : g.dual_adj[f]) {
      if (region.contains_dual_edge(de)) ++deg;
    }
    CHECK(deg == 2);
  }
}

TEST_CASE("rhombus of a dual edge closes up with unit sides") {
  for (const auto& g : {build_triangular_lattice(3, 3), build_square_lattice(3, 3)}) {
    for (size_t de = 0; de < g.dual_edges.size(); ++de) {
      const Rhombus r = rhombus_of(g, static_cast<int>(de));
      CHECK(std::abs(r.pw - r.px) == Catch::Approx(1.0).margin(1e-12));
      CHECK(std::abs(r.px - r.pb) == Catch::Approx(1.0).margin(1e-12));
      CHECK(std::abs(r.pb - r.py) == Catch::Approx(1.0).margin(1e-12));
      CHECK(std::abs(r.py - r.pw) == Catch::Approx(1.0).margin(1e-12));
      // ccw order
      const double area = cross(r.px - r.pw, r.pb - r.pw) + cross(r.pb - r.pw, r.py - r.pw);
      CHECK(area > 0);
    }
  }
}

TEST_CASE("empty extents are rejected") {
  CHECK_THROWS_AS(build_triangular_lattice(0, 2), ValidationError);
  CHECK_THROWS_AS(build_square_lattice(3, 0), ValidationError);
}
