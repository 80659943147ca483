#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "isodimer/experiments.hpp"
#include "isodimer/graph_json.hpp"
#include "isodimer/io.hpp"

namespace isodimer::cli {

struct Options {
  std::string lattice = "tri";  // tri | square | lozenge-diag
  int extent_w = 8;
  int extent_h = 8;
  int hexagon = 0;  // tri only: side of the central hexagonal region (0 = extent/2)
  double mesh = 1.0;
  std::uint64_t seed = 1;
  int samples = 1000;
  std::string out = "out";
  int threads = 0;  // 0 = hardware concurrency
  std::string input;

  double max_distance = 16.0;   // kernel
  int wick_samples = 20000;     // moments
  int var_samples = 1200;       // moments
  int independence_samples = 10000;  // quadri

  int eff_threads() const { return threads > 0 ? threads : default_threads(); }
};

// The sampling universe of a run: a graph plus the dual region measured.
// Triangular patches use the central hexagonal region (parallelogram regions
// of the triangular lattice admit a single frozen tiling); square patches
// use the whole dual; lozenge-with-diagonals graphs are built over a tiling
// drawn with the run seed.
struct Workspace {
  std::shared_ptr<const IsoradialGraph> graph;
  DualRegion region;
  int center_vertex = -1;
  std::shared_ptr<LozengeTiling> tiling;
  std::shared_ptr<LozengeDiagonalsGraph> ldg;
  std::shared_ptr<const IsoradialGraph> tri_source;
};

inline Workspace make_workspace(const Options& opt) {
  Workspace ws;
  if (opt.lattice == "tri") {
    auto g = std::make_shared<IsoradialGraph>(
        scale(build_triangular_lattice(opt.extent_w, opt.extent_h), opt.mesh));
    ws.center_vertex = central_primal_vertex(*g);
    const int k =
        opt.hexagon > 0 ? opt.hexagon : std::max(1, std::min(opt.extent_w, opt.extent_h) / 2);
    ws.region = DualRegion::hexagon(*g, ws.center_vertex, k);
    ws.graph = g;
  } else if (opt.lattice == "square") {
    auto g = std::make_shared<IsoradialGraph>(
        scale(build_square_lattice(opt.extent_w, opt.extent_h), opt.mesh));
    ws.center_vertex = central_primal_vertex(*g);
    ws.region = DualRegion::whole(*g);
    ws.graph = g;
  } else if (opt.lattice == "lozenge-diag") {
    auto t = std::make_shared<IsoradialGraph>(
        scale(build_triangular_lattice(opt.extent_w, opt.extent_h), opt.mesh));
    const int k =
        opt.hexagon > 0 ? opt.hexagon : std::max(1, std::min(opt.extent_w, opt.extent_h) / 2);
    const auto t_region = DualRegion::hexagon(*t, central_primal_vertex(*t), k);
    const DiracOperator dirac = assemble_dirac(*t);
    const FiniteKernel kernel(t_region, dirac);
    RngStream rng = RngStream::make(opt.seed, 2026);
    ws.tiling = std::make_shared<LozengeTiling>(sample_lozenge_tiling(kernel, rng));
    ws.ldg = std::make_shared<LozengeDiagonalsGraph>(build_lozenge_with_diagonals(*ws.tiling));
    ws.tri_source = t;
    ws.graph = std::shared_ptr<const IsoradialGraph>(ws.ldg, &ws.ldg->graph);
    ws.region = DualRegion::whole(*ws.graph);
    ws.center_vertex = central_primal_vertex(*ws.graph);
  } else {
    throw ValidationError("unknown lattice: " + opt.lattice);
  }
  return ws;
}

inline RunHeader make_header(const Options& opt, const std::string& command) {
  RunHeader h;
  h.set("command", command);
  h.set("lattice", opt.lattice);
  h.set("extent", std::to_string(opt.extent_w) + " " + std::to_string(opt.extent_h));
  if (opt.hexagon > 0) h.set("hexagon", static_cast<long long>(opt.hexagon));
  h.set("mesh", opt.mesh);
  h.set("seed", static_cast<long long>(opt.seed));
  h.set("samples", static_cast<long long>(opt.samples));
  h.set("threads", static_cast<long long>(opt.eff_threads()));
  return h;
}

inline int cmd_build(const Options& opt) {
  const Workspace ws = make_workspace(opt);
  const auto rep = validate_isoradial(*ws.graph);
  nlohmann::json j = graph_to_json(*ws.graph);
  j["header"] = {{"tool", "isodimer"},
                 {"version", kToolVersion},
                 {"seed", opt.seed},
                 {"lattice", opt.lattice}};
  write_file_atomic(std::filesystem::path(opt.out) / "graph.json", j.dump(2) + "\n");

  auto hdr = make_header(opt, "build");
  std::ostringstream os;
  os << hdr.comment_block();
  os << "faces=" << ws.graph->num_faces() << "\n";
  os << "dual_edges=" << ws.graph->dual_edges.size() << "\n";
  os << "max_radius_rel_dev=" << format_double(rep.max_radius_rel_dev, 6) << "\n";
  os << "pass=" << (rep.pass() ? "true" : "false") << "\n";
  write_file_atomic(std::filesystem::path(opt.out) / "validation.txt", os.str());
  std::cout << os.str();
  return rep.pass() ? 0 : 4;
}

inline int cmd_validate(const Options& opt) {
  std::shared_ptr<const IsoradialGraph> g;
  if (!opt.input.empty()) {
    std::ifstream in(opt.input);
    if (!in) throw ValidationError("cannot read " + opt.input);
    nlohmann::json j;
    in >> j;
    g = std::make_shared<IsoradialGraph>(graph_from_json(j));
  } else {
    g = make_workspace(opt).graph;
  }
  const auto rep = validate_isoradial(*g);
  auto hdr = make_header(opt, "validate");
  std::ostringstream os;
  os << hdr.comment_block();
  os << "max_radius_rel_dev=" << format_double(rep.max_radius_rel_dev, 6) << "\n";
  if (rep.worst_face >= 0) os << "worst_face=" << rep.worst_face << "\n";
  os << "centers_outside=" << rep.centers_outside.size() << "\n";
  os << "nonbipartite_edges=" << rep.nonbipartite_edges.size() << "\n";
  os << "low_degree_interior_vertices=" << rep.low_degree_vertices.size() << "\n";
  os << "simple=" << (rep.simple ? "true" : "false") << "\n";
  os << "pass=" << (rep.pass() ? "true" : "false") << "\n";
  write_file_atomic(std::filesystem::path(opt.out) / "validation.txt", os.str());
  std::cout << os.str();
  return rep.pass() ? 0 : 4;
}

inline int cmd_kernel(const Options& opt) {
  const Workspace ws = make_workspace(opt);
  const ExactKernel kernel(*ws.graph);
  const auto& g = *ws.graph;
  int w = -1;
  double best = 1e300;
  const Complex c0 = g.primal_pos[ws.center_vertex];
  for (int f = 0; f < g.num_faces(); ++f) {
    if (g.faces[f].color != DualColor::White) continue;
    const double d = std::abs(g.faces[f].center - c0);
    if (d < best) {
      best = d;
      w = f;
    }
  }
  std::ostringstream os;
  os << make_header(opt, "kernel").comment_block();
  os << "b_id,w_id,distance,re_exact,im_exact,re_asym,im_asym,abs_err\n";
  for (int b = 0; b < g.num_faces(); ++b) {
    if (g.faces[b].color != DualColor::Black) continue;
    const double d = std::abs(g.faces[b].center - g.faces[w].center);
    if (d > opt.max_distance) continue;
    const Complex e = kernel.inverse(b, w);
    const bool have_asym = d > 1e-9;
    Complex a(0, 0);
    if (have_asym) a = kernel.inverse_asymptotic(b, w);
    os << b << "," << w << "," << format_double(d, 12) << "," << format_double(e.real()) << ","
       << format_double(e.imag()) << "," << (have_asym ? format_double(a.real()) : "nan") << ","
       << (have_asym ? format_double(a.imag()) : "nan") << ","
       << (have_asym ? format_double(std::abs(e - a), 6) : "nan") << "\n";
  }
  write_file_atomic(std::filesystem::path(opt.out) / "kernel.csv", os.str());
  std::cout << "wrote " << (std::filesystem::path(opt.out) / "kernel.csv").string() << "\n";
  return 0;
}

inline int cmd_probs(const Options& opt) {
  const Workspace ws = make_workspace(opt);
  const ExactKernel kernel(*ws.graph);
  const KernelRef ref(kernel);
  const auto& g = *ws.graph;
  std::ostringstream os;
  os << make_header(opt, "probs").comment_block();
  os << "event,probability,imag_residue,backend\n";
  // One representative interior edge per rhombus-angle class.
  std::map<long, int> angle_rep;
  for (size_t de = 0; de < g.dual_edges.size(); ++de) {
    const auto& d = g.dual_edges[de];
    if (!g.dual_vertex_interior(d.white) || !g.dual_vertex_interior(d.black)) continue;
    const long key = std::lround(g.rhombus_angle(static_cast<int>(de)) * 1e9);
    if (!angle_rep.count(key)) angle_rep[key] = static_cast<int>(de);
  }
  for (const auto& [key, de] : angle_rep) {
    const auto st = local_statistic(ref, {{de}});
    os << "edge_theta=" << format_double(g.rhombus_angle(de), 9) << ","
       << format_double(st.value) << "," << format_double(st.imag_residue, 3) << ","
       << st.backend << "\n";
  }
  // A pair cylinder sharing a vertex (probability zero).
  for (int f = 0; f < g.num_faces(); ++f) {
    if (g.faces[f].color != DualColor::White || !g.dual_vertex_interior(f)) continue;
    const auto st = local_statistic(ref, {{g.dual_adj[f][0], g.dual_adj[f][1]}});
    os << "pair_shared_vertex," << format_double(st.value) << ","
       << format_double(st.imag_residue, 3) << "," << st.backend << "\n";
    break;
  }
  write_file_atomic(std::filesystem::path(opt.out) / "probs.csv", os.str());
  std::cout << os.str();
  return 0;
}

inline int cmd_sample(const Options& opt) {
  const Workspace ws = make_workspace(opt);
  const DiracOperator dirac = assemble_dirac(*ws.graph);
  const FiniteKernel kernel(ws.region, dirac);
  const nlohmann::json header = {{"tool", "isodimer"}, {"version", kToolVersion},
                                 {"command", "sample"}, {"lattice", opt.lattice},
                                 {"mesh", opt.mesh},    {"seed", opt.seed},
                                 {"samples", opt.samples}};
  std::vector<std::string> lines(opt.samples);
  run_streams(opt.samples, opt.seed, opt.eff_threads(), [&](int i, RngStream& rng) {
    lines[i] = matching_to_jsonl_line(sample_matching(kernel, rng));
  });
  std::string body = header.dump() + "\n";
  for (auto& l : lines) body += l + "\n";
  write_file_atomic(std::filesystem::path(opt.out) / "samples.jsonl", body);
  std::cout << "wrote " << opt.samples << " samples\n";
  return 0;
}

inline int cmd_height(const Options& opt) {
  const Workspace ws = make_workspace(opt);
  const DiracOperator dirac = assemble_dirac(*ws.graph);
  const FiniteKernel kernel(ws.region, dirac);
  RngStream rng = RngStream::make(opt.seed, 0);
  const auto m = sample_matching(kernel, rng);
  const auto h = height_from_matching(ws.region, m);
  std::ostringstream os;
  os << make_header(opt, "height").comment_block();
  os << "vertex_id,x,y,h\n";
  for (int v = 0; v < ws.graph->num_primal_vertices(); ++v) {
    if (!h.defined[v]) continue;
    const Complex p = ws.graph->primal_physical(v);
    os << v << "," << format_double(p.real()) << "," << format_double(p.imag()) << ","
       << format_double(h.value[v]) << "\n";
  }
  write_file_atomic(std::filesystem::path(opt.out) / "height.csv", os.str());
  std::cout << "wrote height field (" << m.edges.size() << " dimers)\n";
  return 0;
}

inline int cmd_moments(const Options& opt) {
  std::ostringstream os, human;
  os << make_header(opt, "moments").comment_block();
  os << "section,label,mesh,computed,target,se,abs_err,rel_err,n\n";

  CovarianceTrendConfig cov_cfg;
  cov_cfg.threads = opt.eff_threads();
  const auto trend = covariance_trend(cov_cfg);
  for (const auto& pt : trend) {
    os << "covariance,exact_vs_log_formula," << format_double(pt.mesh, 9) << ","
       << format_double(pt.covariance) << "," << format_double(pt.target) << ",,"
       << format_double(pt.abs_err, 6) << "," << format_double(pt.rel_err, 6) << ",\n";
  }
  human << "exact increment covariance vs -(1/2pi^2) log |cross ratio|:\n";
  for (const auto& pt : trend) {
    human << "  mesh " << pt.mesh << ": " << pt.covariance << " vs " << pt.target
          << " (rel err " << 100 * pt.rel_err << "%)\n";
  }

  WickMcConfig wick_cfg;
  wick_cfg.samples = opt.wick_samples;
  wick_cfg.seed = opt.seed;
  wick_cfg.threads = opt.eff_threads();
  const auto wick = wick_increment_moments(wick_cfg);
  auto emit_moment = [&](const char* label, const McEstimate& est, double target) {
    os << "wick," << label << "," << format_double(wick.mesh, 9) << ","
       << format_double(est.mean) << "," << format_double(target) << ","
       << format_double(est.se, 6) << "," << format_double(std::abs(est.mean - target), 6)
       << ",," << est.n << "\n";
    human << "  " << label << ": " << est.mean << " +- " << est.se << " vs " << target << "\n";
  };
  human << "Monte Carlo increment moments vs Wick pairing sums (mesh " << wick.mesh << "):\n";
  emit_moment("k2", wick.m2, wick.target2);
  emit_moment("k3", wick.m3, wick.target3);
  emit_moment("k4", wick.m4, wick.target4);

  VarianceMcConfig var_cfg;
  var_cfg.seed = opt.seed;
  var_cfg.threads = opt.eff_threads();
  if (opt.var_samples > 0) var_cfg.levels.back().samples = opt.var_samples;
  const auto var = functional_variance_trend(var_cfg);
  human << "Var(H phi) vs (1/pi) G(phi,phi):\n";
  for (const auto& pt : var) {
    os << "variance,functional," << format_double(pt.mesh, 9) << ","
       << format_double(pt.variance) << "," << format_double(pt.target) << ","
       << format_double(pt.se, 6) << "," << format_double(std::abs(pt.variance - pt.target), 6)
       << "," << format_double(pt.rel_err, 6) << "," << pt.samples << "\n";
    human << "  mesh " << pt.mesh << ": " << pt.variance << " vs " << pt.target << " (rel err "
          << 100 * pt.rel_err << "%)\n";
  }

  write_file_atomic(std::filesystem::path(opt.out) / "moments.csv", os.str());
  write_file_atomic(std::filesystem::path(opt.out) / "moments.txt", human.str());
  std::cout << human.str();
  return 0;
}

inline int cmd_quadri(const Options& opt) {
  Options topt = opt;
  topt.lattice = "tri";
  const Workspace ws = make_workspace(topt);
  const DiracOperator dirac = assemble_dirac(*ws.graph);
  const FiniteKernel kernel(ws.region, dirac);

  const nlohmann::json header = {{"tool", "isodimer"}, {"version", kToolVersion},
                                 {"command", "quadri"}, {"mesh", opt.mesh},
                                 {"seed", opt.seed},    {"samples", opt.samples}};
  std::vector<std::string> lines(opt.samples);
  run_streams(opt.samples, opt.seed, opt.eff_threads(), [&](int i, RngStream& rng) {
    const QuadriSample qs = sample_quadri(kernel, rng);
    lines[i] = quadri_sample_to_json(qs).dump();
  });
  std::string body = header.dump() + "\n";
  for (auto& l : lines) body += l + "\n";
  write_file_atomic(std::filesystem::path(opt.out) / "quadri.jsonl", body);
  std::cout << "wrote " << opt.samples << " quadri samples\n";

  if (opt.independence_samples >= 1000) {
    const auto& g = *ws.graph;
    const double s = std::sqrt(3.0);
    const Complex base = g.primal_pos[ws.center_vertex];
    const int u1 = nearest_primal_vertex(g, base - s * Complex(1.0, 0.0));
    const int v1 = nearest_primal_vertex(g, base + s * Complex(1.0, 0.0));
    const int u2 = nearest_primal_vertex(g, base - s * Complex(0.5, 0.866));
    const int v2 = nearest_primal_vertex(g, base + s * Complex(0.5, 0.866));
    const auto rep = empirical_independence(kernel, u1, v1, u2, v2, opt.independence_samples,
                                            opt.seed, opt.eff_threads());
    std::ostringstream os;
    os << make_header(opt, "quadri").comment_block();
    os << "quantity,value,se,n\n";
    os << "corr_dh1_dh2," << format_double(rep.correlation) << "," << format_double(rep.se, 6)
       << "," << rep.n << "\n";
    os << "mean_dh1," << format_double(rep.increment1.mean) << ","
       << format_double(rep.increment1.se, 6) << "," << rep.n << "\n";
    os << "mean_dh2," << format_double(rep.increment2.mean) << ","
       << format_double(rep.increment2.se, 6) << "," << rep.n << "\n";
    write_file_atomic(std::filesystem::path(opt.out) / "independence.csv", os.str());
    std::cout << "corr(dh1, dh2) = " << rep.correlation << " +- " << rep.se << " (n=" << rep.n
              << ")\n";
  }
  return 0;
}

inline int run(int argc, char** argv) {
  CLI::App app{"dimer models on bipartite isoradial graphs"};
  app.set_config("--config", "", "TOML-style key=value configuration file");
  Options opt;

  app.add_option("--lattice", opt.lattice, "tri | square | lozenge-diag")
      ->check(CLI::IsMember({"tri", "square", "lozenge-diag"}));
  std::vector<int> extent;
  app.add_option("--extent", extent, "patch extent: W H")->expected(2);
  app.add_option("--hexagon", opt.hexagon, "side of the central hexagonal region (tri)");
  app.add_option("--mesh", opt.mesh, "mesh epsilon")->check(CLI::PositiveNumber);
  app.add_option("--seed", opt.seed, "random seed");
  app.add_option("--samples", opt.samples, "number of samples");
  app.add_option("--out", opt.out, "output directory");
  app.add_option("--threads", opt.threads, "worker threads (0 = hardware)");
  app.add_option("--input", opt.input, "input graph JSON (validate)");
  app.add_option("--max-distance", opt.max_distance, "kernel table radius");
  app.add_option("--wick-samples", opt.wick_samples, "moments: Monte Carlo samples");
  app.add_option("--var-samples", opt.var_samples, "moments: variance samples at finest mesh");
  app.add_option("--independence-samples", opt.independence_samples,
                 "quadri: samples for the independence report");

  app.require_subcommand(1);
  auto* sub_build = app.add_subcommand("build", "construct and validate a graph");
  auto* sub_validate = app.add_subcommand("validate", "validate a graph");
  auto* sub_kernel = app.add_subcommand("kernel", "inverse-kernel table");
  auto* sub_probs = app.add_subcommand("probs", "edge and cylinder probabilities");
  auto* sub_sample = app.add_subcommand("sample", "draw exact samples");
  auto* sub_height = app.add_subcommand("height", "height field of one sample");
  auto* sub_moments = app.add_subcommand("moments", "Gaussian-limit comparisons");
  auto* sub_quadri = app.add_subcommand("quadri", "triangular quadri-tilings");
  // Global options may follow the subcommand name.
  for (auto* s : {sub_build, sub_validate, sub_kernel, sub_probs, sub_sample, sub_height,
                  sub_moments, sub_quadri}) {
    s->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }
  if (!extent.empty()) {
    opt.extent_w = extent[0];
    opt.extent_h = extent[1];
  }

  try {
    if (sub_build->parsed()) return cmd_build(opt);
    if (sub_validate->parsed()) return cmd_validate(opt);
    if (sub_kernel->parsed()) return cmd_kernel(opt);
    if (sub_probs->parsed()) return cmd_probs(opt);
    if (sub_sample->parsed()) return cmd_sample(opt);
    if (sub_height->parsed()) return cmd_height(opt);
    if (sub_moments->parsed()) return cmd_moments(opt);
    if (sub_quadri->parsed()) return cmd_quadri(opt);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 4;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace isodimer::cli
