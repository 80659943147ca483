#pragma once

#include <json.hpp>

#include <string>

#include "isodimer/geometry.hpp"
#include "isodimer/quadri.hpp"

namespace isodimer {

// Graph document: primal vertices (id, x, y), primal edges, dual vertices
// (id, x, y, color), dual edges (id, primal edge, white, black), mesh and
// unit. Coordinates are lattice units (common circumradius 1) with 17
// significant digits; physical positions are coordinates times unit * mesh.
// Face polygons are included so the import is lossless; absent polygons are
// reconstructed from the dual edges by angular ordering.
inline nlohmann::json graph_to_json(const IsoradialGraph& g) {
  nlohmann::json j;
  j["mesh"] = g.mesh;
  j["unit"] = g.unit;
  j["family"] = g.family;
  j["translation_invariant"] = g.translation_invariant;
  auto& pv = j["primal_vertices"] = nlohmann::json::array();
  for (int v = 0; v < g.num_primal_vertices(); ++v) {
    pv.push_back({{"id", v}, {"x", g.primal_pos[v].real()}, {"y", g.primal_pos[v].imag()}});
  }
  auto& pe = j["primal_edges"] = nlohmann::json::array();
  for (size_t e = 0; e < g.primal_edges.size(); ++e) {
    pe.push_back({{"id", e}, {"u", g.primal_edges[e].u}, {"v", g.primal_edges[e].v}});
  }
  auto& dv = j["dual_vertices"] = nlohmann::json::array();
  for (int f = 0; f < g.num_faces(); ++f) {
    dv.push_back({{"id", f},
                  {"x", g.faces[f].center.real()},
                  {"y", g.faces[f].center.imag()},
                  {"color", g.faces[f].color == DualColor::White ? "white" : "black"},
                  {"polygon", g.faces[f].vertices}});
  }
  auto& de = j["dual_edges"] = nlohmann::json::array();
  for (size_t e = 0; e < g.dual_edges.size(); ++e) {
    de.push_back({{"id", e},
                  {"primal_edge", g.dual_edges[e].primal_edge},
                  {"white", g.dual_edges[e].white},
                  {"black", g.dual_edges[e].black}});
  }
  return j;
}

inline IsoradialGraph graph_from_json(const nlohmann::json& j) {
  std::vector<Complex> pos(j.at("primal_vertices").size());
  for (const auto& v : j.at("primal_vertices")) {
    pos.at(v.at("id").get<size_t>()) = Complex(v.at("x").get<double>(), v.at("y").get<double>());
  }
  const auto& dv = j.at("dual_vertices");
  std::vector<std::vector<int>> polygons(dv.size());
  std::vector<DualColor> colors(dv.size(), DualColor::White);
  for (const auto& f : dv) {
    const auto id = f.at("id").get<size_t>();
    colors.at(id) = f.at("color").get<std::string>() == "white" ? DualColor::White
                                                                : DualColor::Black;
    if (f.contains("polygon")) {
      polygons.at(id) = f.at("polygon").get<std::vector<int>>();
    }
  }
  // Reconstruct missing polygons by angular order of dual-edge endpoints.
  if (j.contains("dual_edges")) {
    std::vector<std::vector<int>> endpoints(dv.size());
    for (const auto& e : j.at("dual_edges")) {
      const auto pe = j.at("primal_edges").at(e.at("primal_edge").get<size_t>());
      for (const int side : {e.at("white").get<int>(), e.at("black").get<int>()}) {
        endpoints[side].push_back(pe.at("u").get<int>());
        endpoints[side].push_back(pe.at("v").get<int>());
      }
    }
    for (size_t f = 0; f < polygons.size(); ++f) {
      if (!polygons[f].empty()) continue;
      auto& eps = endpoints[f];
      std::sort(eps.begin(), eps.end());
      eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
      const Complex c(dv.at(f).at("x").get<double>(), dv.at(f).at("y").get<double>());
      std::sort(eps.begin(), eps.end(), [&](int a, int b) {
        return std::arg(pos[a] - c) < std::arg(pos[b] - c);
      });
      polygons[f] = eps;
    }
  }
  return graph_from_faces(std::move(pos), std::move(polygons), std::move(colors),
                          j.value("unit", 1.0), j.value("mesh", 1.0),
                          j.value("family", std::string("json")),
                          j.value("translation_invariant", false));
}

// One sample per line: a JSON array of dual edge ids.
inline std::string matching_to_jsonl_line(const DimerConfiguration& m) {
  return nlohmann::json(m.edges).dump();
}

inline nlohmann::json quadri_sample_to_json(const QuadriSample& qs) {
  nlohmann::json j;
  auto& lz = j["lozenges"] = nlohmann::json::array();
  for (const auto& l : qs.tiling->lozenges) {
    lz.push_back({{"u", l.u}, {"v", l.v}, {"p", l.p}, {"q", l.q}});
  }
  auto& tiles = j["quadri_tiles"] = nlohmann::json::array();
  for (const auto& t : qs.tiles()) {
    tiles.push_back({{"dual_edge", t.dual_edge},
                     {"type", to_string(t.type)},
                     {"leg_glued", t.leg_glued}});
  }
  const auto h1 = height1(qs);
  const auto h2 = height2(qs);
  auto dump_height = [&](const HeightField& h) {
    nlohmann::json arr = nlohmann::json::array();
    const auto& L = qs.ldg->graph;
    for (int v = 0; v < L.num_primal_vertices(); ++v) {
      if (!h.defined[v]) continue;
      arr.push_back({{"vertex", v},
                     {"x", L.primal_physical(v).real()},
                     {"y", L.primal_physical(v).imag()},
                     {"h", h.value[v]}});
    }
    return arr;
  };
  j["height1"] = dump_height(h1);
  j["height2"] = dump_height(h2);
  return j;
}

}  // namespace isodimer
