#include "elastigraph/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "elastigraph/electrical.hpp"
#include "elastigraph/emb.hpp"
#include "elastigraph/harmonic.hpp"
#include "elastigraph/io.hpp"
#include "elastigraph/taut.hpp"

namespace elastigraph {

namespace {

int log_level() {
  const char* env = std::getenv("ELASTIGRAPH_LOG");
  if (!env) return 0;
  std::string s(env);
  if (s == "debug") return 2;
  if (s == "info") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[elastigraph] " << msg << "\n";
}

struct Io {
  std::string out_path;
  void emit(const Json& j) const {
    if (out_path.empty())
      std::cout << j.dump(2) << std::endl;
    else
      write_json_file(out_path, j);
  }
};

Exponent parse_exponent(const std::string& s) {
  if (s == "inf" || s == "infinity" || s == "oo") return Exponent::infinity();
  return Exponent::of(rat_from_string(s));
}

const EdgeScalars& structure_for(const GraphBundle& b, const Exponent& p) {
  if (p.inf) return b.require(ScalarKind::Length);
  if (p.is(1)) return b.require(ScalarKind::Weight);
  return b.require(ScalarKind::Elastic);
}

Json cut_to_json(const MarkedGraph& g, const Cut& c) {
  Json j;
  j["mark"] = g.vertices[c.mark].id;
  Json side = Json::array();
  for (size_t v = 0; v < c.side.size(); ++v)
    if (c.side[v]) side.push_back(g.vertices[v].id);
  j["side"] = side;
  Json edges = Json::array();
  for (int e : c.cut_edges) edges.push_back(g.edges[e].id);
  j["cut_edges"] = edges;
  j["weight"] = number_json(c.weight);
  return j;
}

Json gate_report_to_json(const GateReport& rep, const MarkedGraph& dom) {
  Json j;
  j["passed"] = rep.passed;
  j["worst_slack"] = rep.worst_slack;
  Json entries = Json::array();
  for (const auto& e : rep.entries) {
    Json je;
    je["vertex"] = dom.vertices[e.vertex].id;
    je["at_codomain_vertex"] = e.at_codomain_vertex;
    je["gate_tensions"] = e.gate_tension;
    je["slack"] = e.slack;
    entries.push_back(je);
  }
  j["entries"] = entries;
  return j;
}

Json strands_to_json(const StrandMap& sm) {
  Json j = Json::object();
  for (size_t d = 0; d < sm.strands.size(); ++d) {
    Json list = Json::array();
    for (const auto& s : sm.strands[d]) {
      Json js;
      js["a0"] = rat_to_string(s.a0);
      js["a1"] = rat_to_string(s.a1);
      js["image"] = oedge_to_string(sm.codomain, s.o);
      js["u0"] = rat_to_string(s.u0);
      js["u1"] = rat_to_string(s.u1);
      list.push_back(js);
    }
    j[sm.domain.edges[d].id] = list;
  }
  return j;
}

StrandMap strands_from_json(const Json& j, const GraphMap& base) {
  StrandMap sm;
  sm.domain = base.domain;
  sm.codomain = base.codomain;
  sm.vertex_images = base.vertex_images;
  sm.strands.resize(base.domain.edges.size());
  for (size_t d = 0; d < base.domain.edges.size(); ++d) {
    const auto& id = base.domain.edges[d].id;
    if (!j.contains(id)) continue;
    for (const auto& js : j.at(id)) {
      Strand s;
      s.a0 = rat_from_string(js.at("a0").get<std::string>());
      s.a1 = rat_from_string(js.at("a1").get<std::string>());
      s.o = oedge_from_string(base.codomain, js.at("image").get<std::string>());
      s.u0 = rat_from_string(js.at("u0").get<std::string>());
      s.u1 = rat_from_string(js.at("u1").get<std::string>());
      sm.strands[d].push_back(s);
    }
  }
  return sm;
}

Json certificate_to_json(const EmbCertificate& cert, const GraphBundle& dom,
                         const GraphBundle& cod) {
  Json j;
  j["lambda"] = cert.lambda;
  j["converged"] = cert.converged;
  j["iterations"] = cert.iterations;
  j["restarts"] = cert.restarts;
  j["lower_bound"] = cert.lower_bound;
  j["upper_bound"] = cert.upper_bound;
  j["emb_psi"] = cert.emb_psi;
  j["el_ratio"] = cert.el_ratio;
  j["el_ratio_rational"] = rat_to_string(cert.el_ratio_exact);
  j["witness_exact"] = cert.witness_exact;
  j["domain"] = graph_to_json(dom);
  j["codomain"] = graph_to_json(cod);
  j["psi"] = map_to_json(cert.psi);
  j["psi_strands"] = strands_to_json(cert.psi_strands);
  j["witness"] = curve_to_json(cert.witness, cert.psi.domain);
  Json d1 = Json::array(), d2 = Json::array();
  for (int e : cert.delta1) d1.push_back(cert.psi.domain.edges[e].id);
  for (int e : cert.delta2) d2.push_back(cert.psi.codomain.edges[e].id);
  j["delta1"] = d1;
  j["delta2"] = d2;
  GraphBundle kb;
  kb.graph = cert.k_graph;
  kb.length = scalars_from_double(ScalarKind::Length, cert.k_lengths);
  j["k"] = graph_to_json(kb);
  j["collapse_map"] = map_to_json(cert.collapse_map);
  Json ell = Json::object();
  for (size_t e = 0; e < cert.ell_fixed.size(); ++e)
    ell[cert.psi.codomain.edges[e].id] = cert.ell_fixed[e];
  j["ell_fixed"] = ell;
  Json rep;
  rep["checked"] = cert.report.checked;
  rep["passed"] = cert.report.passed;
  rep["el_c"] = cert.report.el_c;
  rep["emb_psi"] = cert.report.emb_psi;
  rep["dir_f"] = cert.report.dir_f;
  rep["len_composite"] = cert.report.len_composite;
  rep["chain_residual"] = cert.report.chain_residual;
  rep["pair_el_residual"] = cert.report.pair_el_residual;
  rep["pair_dir_residual"] = cert.report.pair_dir_residual;
  rep["harmonic_ok"] = cert.report.harmonic_ok;
  rep["pushforward_constant"] = cert.report.pushforward_constant;
  j["report"] = rep;
  return j;
}

void write_trace(const std::string& path, const IterationTrace& unused, const EmbCertificate&,
                 const std::vector<IterStep>& steps, const MarkedGraph& cod) {
  (void)unused;
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write trace '" + path + "'");
  for (const auto& s : steps) {
    Json j;
    j["i"] = s.index;
    j["lambda_dr"] = s.lambda_dr;
    j["scale"] = s.scale;
    j["cell"] = s.cell;
    Json ell = Json::object();
    for (size_t e = 0; e < s.lengths.size() && e < cod.edges.size(); ++e)
      ell[cod.edges[e].id] = s.lengths[e];
    j["lengths"] = ell;
    out << j.dump() << "\n";
  }
}

struct CommonArgs {
  std::string domain, codomain, map, graph, out;
  double tol = 1e-9;
  int max_iters = 10000;
  unsigned seed = 0;
  bool exact = false;
};

int cmd_emb_single(const std::string& dom_path, const std::string& cod_path,
                   const std::string& map_path, const CommonArgs& common,
                   const std::string& trace_path, const std::string& cert_path) {
  auto dom = parse_graph(read_json_file(dom_path));
  auto cod = parse_graph(read_json_file(cod_path));
  auto phi = parse_map(read_json_file(map_path), dom.graph, cod.graph);
  IterOptions opts;
  opts.tol = common.tol;
  opts.max_iters = common.max_iters;
  opts.seed = common.seed;

  // Keep the trace of the final run for the trace file.
  IterationTrace final_trace;
  EmbCertificate cert = compute_emb(phi, dom.require(ScalarKind::Elastic),
                                    cod.require(ScalarKind::Elastic), opts);
  if (!trace_path.empty()) {
    std::vector<double> ell0(cod.graph.edges.size(), 1.0);
    final_trace = iterate_to_fixed(ell0, phi, dom.require(ScalarKind::Elastic),
                                   cod.require(ScalarKind::Elastic), opts);
    write_trace(trace_path, final_trace, cert, final_trace.steps, cod.graph);
  }
  Json j = certificate_to_json(cert, dom, cod);
  Io io{common.out.empty() ? cert_path : common.out};
  io.emit(j);
  return cert.converged ? 0 : 3;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"elastigraph: energies, harmonic maps, and embedding energy on marked graphs"};
  app.require_subcommand(1);

  CommonArgs common;
  app.add_option("--tol", common.tol, "numeric tolerance")->capture_default_str();
  app.add_option("--max-iters", common.max_iters, "iteration budget")->capture_default_str();
  app.add_option("--seed", common.seed, "randomized initial lengths (0 = all ones)");
  app.add_option("--out", common.out, "output file (default: stdout)");
  app.add_flag("--exact", common.exact, "prefer exact rational output where available");

  // energy
  auto* energy_cmd = app.add_subcommand("energy", "E^p_q of a map");
  std::string e_dom, e_cod, e_map, e_p = "2", e_q = "inf";
  energy_cmd->add_option("--domain", e_dom)->required();
  energy_cmd->add_option("--codomain", e_cod)->required();
  energy_cmd->add_option("--map", e_map)->required();
  energy_cmd->add_option("--p", e_p);
  energy_cmd->add_option("--q", e_q);

  // harmonic
  auto* harm_cmd = app.add_subcommand("harmonic", "Dirichlet minimizer in a homotopy class");
  std::string h_dom, h_cod, h_map;
  int h_max_transitions = 10000;
  harm_cmd->add_option("--domain", h_dom)->required();
  harm_cmd->add_option("--codomain", h_cod)->required();
  harm_cmd->add_option("--map", h_map)->required();
  harm_cmd->add_option("--max-transitions", h_max_transitions);

  // lip
  auto* lip_cmd = app.add_subcommand("lip", "minimal Lipschitz constant of a class");
  std::string l_dom, l_cod, l_map;
  lip_cmd->add_option("--domain", l_dom)->required();
  lip_cmd->add_option("--codomain", l_cod)->required();
  lip_cmd->add_option("--map", l_map)->required();

  // taut
  auto* taut_cmd = app.add_subcommand("taut", "taut representative of a weighted class");
  std::string t_dom, t_cod, t_map;
  taut_cmd->add_option("--domain", t_dom)->required();
  taut_cmd->add_option("--codomain", t_cod)->required();
  taut_cmd->add_option("--map", t_map)->required();

  // mincut
  auto* mincut_cmd = app.add_subcommand("mincut", "minimal vertex cut");
  std::string m_graph, m_node;
  mincut_cmd->add_option("--graph", m_graph)->required();
  mincut_cmd->add_option("--node", m_node)->required();

  // flows
  auto* flows_cmd = app.add_subcommand("flows", "cuts and pairwise flows");
  std::string f_graph;
  flows_cmd->add_option("--graph", f_graph)->required();

  // emb
  auto* emb_cmd = app.add_subcommand("emb", "embedding energy via the duality iteration");
  std::string em_dom, em_cod, em_map, em_trace, em_cert, em_batch;
  int em_jobs = 1;
  emb_cmd->add_option("--domain", em_dom);
  emb_cmd->add_option("--codomain", em_cod);
  emb_cmd->add_option("--map", em_map);
  emb_cmd->add_option("--trace", em_trace, "JSONL per-iteration trace");
  emb_cmd->add_option("--certificate", em_cert, "certificate output file");
  emb_cmd->add_option("--batch", em_batch, "directory of cases (domain/codomain/map .json)");
  emb_cmd->add_option("--jobs", em_jobs, "parallel batch workers");

  // elcurves
  auto* el_cmd = app.add_subcommand("elcurves", "extremal-length stretch lower bound");
  std::string el_dom, el_cod, el_map;
  el_cmd->add_option("--domain", el_dom)->required();
  el_cmd->add_option("--codomain", el_cod)->required();
  el_cmd->add_option("--map", el_map)->required();

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "re-check a tight-sequence certificate");
  std::string v_cert;
  verify_cmd->add_option("--certificate", v_cert)->required();

  // electrical
  auto* elec_cmd = app.add_subcommand("electrical", "resistor-network layer");
  std::string ec_op = "response", ec_graph, ec_graph2, ec_r, ec_R;
  elec_cmd->add_option("--op", ec_op, "response | reduce | ydelta | equiv");
  elec_cmd->add_option("--graph", ec_graph);
  elec_cmd->add_option("--graph2", ec_graph2);
  elec_cmd->add_option("--r", ec_r, "comma-separated star resistances");
  elec_cmd->add_option("--R", ec_R, "comma-separated triangle resistances");

  std::vector<const char*> argv;
  argv.push_back("elastigraph");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Io io{common.out};
  try {
    if (*energy_cmd) {
      auto dom = parse_graph(read_json_file(e_dom));
      auto cod = parse_graph(read_json_file(e_cod));
      auto f = parse_map(read_json_file(e_map), dom.graph, cod.graph);
      Exponent p = parse_exponent(e_p), q = parse_exponent(e_q);
      Json j;
      j["p"] = e_p;
      j["q"] = e_q;
      EnergyKind kind = classify_energy(p, q);
      const auto& ds = structure_for(dom, p);
      const auto& cs = structure_for(cod, q);
      if (kind != EnergyKind::General) {
        Rat raw = energy_exact(f, ds, cs, p, q);
        const char* names[] = {"weight_ratio", "extremal_length", "length",
                               "embedding", "dirichlet", "lipschitz"};
        j["kind"] = names[static_cast<int>(kind)];
        j["value"] = number_json(raw);
      } else {
        j["kind"] = "general";
      }
      j["E"] = number_json(energy_E(f, ds, cs, p, q));
      io.emit(j);
      return 0;
    }
    if (*harm_cmd) {
      auto dom = parse_graph(read_json_file(h_dom));
      auto cod = parse_graph(read_json_file(h_cod));
      auto f0 = parse_map(read_json_file(h_map), dom.graph, cod.graph);
      HarmonicOptions opts;
      opts.cert_tol = common.tol > 0 ? std::max(common.tol, 1e-12) : 1e-8;
      opts.max_transitions = h_max_transitions;
      auto ell = scalars_to_double(cod.require(ScalarKind::Length));
      auto res = harmonic_solve(f0, dom.require(ScalarKind::Elastic), ell, opts);
      Json j;
      j["dirichlet"] = res.dirichlet;
      j["map"] = map_to_json(res.map);
      Json tension = Json::object(), pullback = Json::object();
      for (size_t d = 0; d < res.tension.size(); ++d) {
        tension[dom.graph.edges[d].id] = res.tension[d];
        pullback[dom.graph.edges[d].id] = res.pullback[d];
      }
      j["tension"] = tension;
      j["pullback"] = pullback;
      j["certificate"] = gate_report_to_json(res.certificate, dom.graph);
      j["transitions"] = res.transitions;
      io.emit(j);
      return 0;
    }
    if (*lip_cmd) {
      auto dom = parse_graph(read_json_file(l_dom));
      auto cod = parse_graph(read_json_file(l_cod));
      auto f = parse_map(read_json_file(l_map), dom.graph, cod.graph);
      auto res = lipschitz_stretch(f, dom.require(ScalarKind::Length),
                                   cod.require(ScalarKind::Length));
      Json j;
      j["value"] = number_json(res.value);
      if (res.witness) {
        MultiCurve mc;
        mc.components.push_back(*res.witness);
        j["witness"] = curve_to_json(mc, dom.graph);
      }
      io.emit(j);
      return 0;
    }
    if (*taut_cmd) {
      auto dom = parse_graph(read_json_file(t_dom));
      auto cod = parse_graph(read_json_file(t_cod));
      auto f = parse_map(read_json_file(t_map), dom.graph, cod.graph);
      const auto& w = dom.require(ScalarKind::Weight);
      auto taut = make_taut(f, w);
      auto n = taut_multiplicities(f, w);
      Json j;
      j["map"] = map_to_json(taut);
      Json nm = Json::object();
      for (size_t e = 0; e < n.size(); ++e) nm[cod.graph.edges[e].id] = number_json(n[e]);
      j["multiplicity"] = nm;
      io.emit(j);
      return 0;
    }
    if (*mincut_cmd) {
      auto b = parse_graph(read_json_file(m_graph));
      int vi = b.graph.vertex_index(m_node);
      if (vi < 0) throw std::invalid_argument("unknown vertex '" + m_node + "'");
      auto cut = min_vertex_cut(b.graph, b.require(ScalarKind::Weight), vi);
      io.emit(cut_to_json(b.graph, cut));
      return 0;
    }
    if (*flows_cmd) {
      auto b = parse_graph(read_json_file(f_graph));
      auto fd = vertex_flows(b.graph, b.require(ScalarKind::Weight));
      auto marks = b.graph.marked_vertices();
      Json j;
      Json cuts = Json::array();
      for (const auto& c : fd.cuts) cuts.push_back(cut_to_json(b.graph, c));
      j["cuts"] = cuts;
      Json flows = Json::object();
      for (const auto& [key, mc] : fd.flows) {
        std::string name = b.graph.vertices[marks[key.first]].id + "-" +
                           b.graph.vertices[marks[key.second]].id;
        Json jf;
        jf["curve"] = curve_to_json(mc, b.graph);
        jf["weight"] = number_json(fd.flow_weight(key.first, key.second));
        flows[name] = jf;
      }
      j["flows"] = flows;
      io.emit(j);
      return 0;
    }
    if (*emb_cmd) {
      if (!em_batch.empty()) {
        namespace fs = std::filesystem;
        std::vector<fs::path> cases;
        for (const auto& entry : fs::directory_iterator(em_batch))
          if (entry.is_directory()) cases.push_back(entry.path());
        std::sort(cases.begin(), cases.end());
        std::mutex mu;
        std::vector<int> codes(cases.size(), 0);
        size_t next = 0;
        auto worker = [&]() {
          while (true) {
            size_t i;
            {
              std::lock_guard<std::mutex> lk(mu);
              if (next >= cases.size()) return;
              i = next++;
            }
            CommonArgs local = common;
            local.out = (cases[i] / "certificate.json").string();
            try {
              codes[i] = cmd_emb_single((cases[i] / "domain.json").string(),
                                        (cases[i] / "codomain.json").string(),
                                        (cases[i] / "map.json").string(), local, "", "");
            } catch (const std::exception& err) {
              std::lock_guard<std::mutex> lk(mu);
              std::cerr << cases[i].string() << ": " << err.what() << "\n";
              codes[i] = 2;
            }
          }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < std::max(1, em_jobs); ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        int worst = 0;
        for (int c : codes) worst = std::max(worst, c);
        return worst;
      }
      if (em_dom.empty() || em_cod.empty() || em_map.empty())
        throw std::invalid_argument("emb requires --domain, --codomain, --map (or --batch)");
      return cmd_emb_single(em_dom, em_cod, em_map, common, em_trace, em_cert);
    }
    if (*el_cmd) {
      auto dom = parse_graph(read_json_file(el_dom));
      auto cod = parse_graph(read_json_file(el_cod));
      auto f = parse_map(read_json_file(el_map), dom.graph, cod.graph);
      auto res = sf_el_lower_bound(f, dom.require(ScalarKind::Elastic),
                                   cod.require(ScalarKind::Elastic));
      Json j;
      j["value"] = res.value;
      j["value_rational"] = rat_to_string(res.exact_ratio);
      j["witness"] = curve_to_json(res.witness, dom.graph);
      io.emit(j);
      return 0;
    }
    if (*verify_cmd) {
      Json cj = read_json_file(v_cert);
      auto dom = parse_graph(cj.at("domain"));
      auto cod = parse_graph(cj.at("codomain"));
      EmbCertificate cert;
      cert.lambda = cj.at("lambda").get<double>();
      cert.converged = cj.value("converged", true);
      cert.emb_psi = cj.at("emb_psi").get<double>();
      cert.psi = parse_map(cj.at("psi"), dom.graph, cod.graph);
      cert.psi_strands = strands_from_json(cj.at("psi_strands"), cert.psi);
      cert.witness = parse_curve(cj.at("witness"), dom.graph);
      auto kb = parse_graph(cj.at("k"));
      cert.k_graph = kb.graph;
      if (kb.length) cert.k_lengths = scalars_to_double(*kb.length);
      cert.collapse_map = parse_map(cj.at("collapse_map"), cod.graph, kb.graph);
      auto rep = verify_tight(cert, dom.require(ScalarKind::Elastic),
                              cod.require(ScalarKind::Elastic), std::max(common.tol, 1e-6));
      Json j;
      j["passed"] = rep.passed;
      j["chain_residual"] = rep.chain_residual;
      j["pair_el_residual"] = rep.pair_el_residual;
      j["pair_dir_residual"] = rep.pair_dir_residual;
      j["harmonic_ok"] = rep.harmonic_ok;
      j["pushforward_constant"] = rep.pushforward_constant;
      io.emit(j);
      return 0;
    }
    if (*elec_cmd) {
      Json j;
      if (ec_op == "ydelta") {
        auto parse3 = [](const std::string& s) {
          YDelta y;
          auto c1 = s.find(',');
          auto c2 = s.find(',', c1 + 1);
          if (c1 == std::string::npos || c2 == std::string::npos)
            throw std::invalid_argument("expected three comma-separated values");
          y.a = rat_from_string(s.substr(0, c1));
          y.b = rat_from_string(s.substr(c1 + 1, c2 - c1 - 1));
          y.c = rat_from_string(s.substr(c2 + 1));
          return y;
        };
        if (!ec_r.empty()) {
          auto R = y_to_delta(parse3(ec_r));
          j["R"] = {rat_to_string(R.a), rat_to_string(R.b), rat_to_string(R.c)};
        } else if (!ec_R.empty()) {
          auto r = delta_to_y(parse3(ec_R));
          j["r"] = {rat_to_string(r.a), rat_to_string(r.b), rat_to_string(r.c)};
        } else {
          throw std::invalid_argument("ydelta needs --r or --R");
        }
      } else if (ec_op == "response") {
        auto b = parse_graph(read_json_file(ec_graph));
        auto m = response_matrix(b.graph, b.require(ScalarKind::Elastic));
        Json rows = Json::array();
        for (int i = 0; i < m.n; ++i) {
          Json row = Json::array();
          for (int k = 0; k < m.n; ++k) row.push_back(rat_to_string(m.at(i, k)));
          rows.push_back(row);
        }
        j["response"] = rows;
      } else if (ec_op == "reduce") {
        auto b = parse_graph(read_json_file(ec_graph));
        auto r = reduce_network(b.graph, b.require(ScalarKind::Elastic));
        GraphBundle out;
        out.graph = r.graph;
        out.alpha = r.alpha;
        j["graph"] = graph_to_json(out);
        j["series_steps"] = r.series_steps;
        j["parallel_steps"] = r.parallel_steps;
        j["loops_dropped"] = r.loops_dropped;
      } else if (ec_op == "equiv") {
        auto b1 = parse_graph(read_json_file(ec_graph));
        auto b2 = parse_graph(read_json_file(ec_graph2));
        auto m1 = response_matrix(b1.graph, b1.require(ScalarKind::Elastic));
        auto m2 = response_matrix(b2.graph, b2.require(ScalarKind::Elastic));
        j["equivalent"] = common.exact ? response_equal(m1, m2) : response_close(m1, m2, 1e-10);
      } else {
        throw std::invalid_argument("unknown electrical op '" + ec_op + "'");
      }
      io.emit(j);
      return 0;
    }
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  log_info("no subcommand executed");
  return 2;
}

}  // namespace elastigraph
