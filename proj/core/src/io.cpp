#include "elastigraph/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace elastigraph {

const EdgeScalars& GraphBundle::require(ScalarKind kind) const {
  const std::optional<EdgeScalars>* s = nullptr;
  const char* name = "";
  switch (kind) {
    case ScalarKind::Elastic:
      s = &alpha;
      name = "alpha";
      break;
    case ScalarKind::Length:
      s = &length;
      name = "length";
      break;
    case ScalarKind::Weight:
      s = &weight;
      name = "weight";
      break;
  }
  if (!s->has_value())
    throw std::invalid_argument(std::string("graph is missing per-edge '") + name + "' values");
  return s->value();
}

namespace {

Rat parse_scalar(const Json& v) {
  if (v.is_string()) return rat_from_string(v.get<std::string>());
  if (v.is_number_integer()) return Rat(v.get<long long>());
  if (v.is_number_float()) return rat_from_double(v.get<double>());
  throw std::invalid_argument("expected a rational literal");
}

}  // namespace

GraphBundle parse_graph(const Json& j) {
  GraphBundle b;
  if (!j.contains("vertices") || !j.contains("edges"))
    throw std::invalid_argument("graph JSON needs 'vertices' and 'edges'");
  for (const auto& v : j.at("vertices"))
    b.graph.add_vertex(v.at("id").get<std::string>(), v.value("marked", false));
  bool any_alpha = false, any_len = false, any_w = false;
  for (const auto& e : j.at("edges")) {
    if (e.contains("alpha")) any_alpha = true;
    if (e.contains("length")) any_len = true;
    if (e.contains("weight")) any_w = true;
  }
  if (any_alpha) b.alpha = EdgeScalars{ScalarKind::Elastic, {}};
  if (any_len) b.length = EdgeScalars{ScalarKind::Length, {}};
  if (any_w) b.weight = EdgeScalars{ScalarKind::Weight, {}};
  for (const auto& e : j.at("edges")) {
    auto ends = e.at("ends");
    int a = b.graph.vertex_index(ends.at(0).get<std::string>());
    int c = b.graph.vertex_index(ends.at(1).get<std::string>());
    if (a < 0 || c < 0)
      throw std::invalid_argument("edge '" + e.at("id").get<std::string>() +
                                  "' has a dangling endpoint");
    b.graph.add_edge(e.at("id").get<std::string>(), a, c);
    if (any_alpha) b.alpha->values.push_back(e.contains("alpha") ? parse_scalar(e.at("alpha")) : Rat(1));
    if (any_len) b.length->values.push_back(e.contains("length") ? parse_scalar(e.at("length")) : Rat(1));
    if (any_w) b.weight->values.push_back(e.contains("weight") ? parse_scalar(e.at("weight")) : Rat(1));
  }
  auto rep = validate_graph(b.graph);
  if (!rep.ok()) throw std::invalid_argument("invalid graph: " + rep.errors.front());
  return b;
}

Json graph_to_json(const GraphBundle& b) {
  Json j;
  j["vertices"] = Json::array();
  for (const auto& v : b.graph.vertices) {
    Json jv;
    jv["id"] = v.id;
    if (v.marked) jv["marked"] = true;
    j["vertices"].push_back(jv);
  }
  j["edges"] = Json::array();
  for (size_t e = 0; e < b.graph.edges.size(); ++e) {
    Json je;
    je["id"] = b.graph.edges[e].id;
    je["ends"] = {b.graph.vertices[b.graph.edges[e].ends[0]].id,
                  b.graph.vertices[b.graph.edges[e].ends[1]].id};
    if (b.alpha) je["alpha"] = rat_to_string(b.alpha->values[e]);
    if (b.length) je["length"] = rat_to_string(b.length->values[e]);
    if (b.weight) je["weight"] = rat_to_string(b.weight->values[e]);
    j["edges"].push_back(je);
  }
  return j;
}

std::string oedge_to_string(const MarkedGraph& g, int o) {
  return (oedge_dir(o) == 0 ? "+" : "-") + g.edges[oedge_edge(o)].id;
}

int oedge_from_string(const MarkedGraph& g, const std::string& s) {
  if (s.size() < 2 || (s[0] != '+' && s[0] != '-'))
    throw std::invalid_argument("oriented edge must look like '+e1' or '-e1'");
  int e = g.edge_index(s.substr(1));
  if (e < 0) throw std::invalid_argument("unknown edge id '" + s.substr(1) + "'");
  return oedge(e, s[0] == '+' ? 0 : 1);
}

GraphMap parse_map(const Json& j, const MarkedGraph& domain, const MarkedGraph& codomain) {
  GraphMap f;
  f.domain = domain;
  f.codomain = codomain;
  f.vertex_images.resize(domain.vertices.size());
  f.edge_paths.resize(domain.edges.size());

  const auto& vi = j.at("vertex_images");
  for (size_t v = 0; v < domain.vertices.size(); ++v) {
    const std::string& id = domain.vertices[v].id;
    if (!vi.contains(id)) throw std::invalid_argument("missing vertex image for '" + id + "'");
    const Json& img = vi.at(id);
    if (img.is_string()) {
      int u = codomain.vertex_index(img.get<std::string>());
      if (u < 0) throw std::invalid_argument("unknown codomain vertex '" + img.get<std::string>() + "'");
      f.vertex_images[v] = PointOnGraph::at_vertex(u);
    } else {
      int e = codomain.edge_index(img.at("edge").get<std::string>());
      if (e < 0) throw std::invalid_argument("unknown codomain edge in vertex image");
      f.vertex_images[v] = PointOnGraph::on_edge(e, parse_scalar(img.at("offset")));
    }
  }
  const auto& ep = j.at("edge_paths");
  for (size_t e = 0; e < domain.edges.size(); ++e) {
    const std::string& id = domain.edges[e].id;
    if (!ep.contains(id)) throw std::invalid_argument("missing edge path for '" + id + "'");
    const Json& pj = ep.at(id);
    EdgePath p;
    for (const auto& w : pj.at("word")) p.word.push_back(oedge_from_string(codomain, w.get<std::string>()));
    if (pj.contains("start_offset")) p.start_u = parse_scalar(pj.at("start_offset"));
    if (pj.contains("end_offset")) p.end_u = parse_scalar(pj.at("end_offset"));
    if (p.word.empty()) {
      p.start_u = 0;
      p.end_u = 1;
    }
    f.edge_paths[e] = p;
  }
  auto rep = validate_map(f);
  if (!rep.ok()) throw std::invalid_argument("invalid map: " + rep.errors.front());
  return f;
}

Json map_to_json(const GraphMap& f) {
  Json j;
  Json vi = Json::object();
  for (size_t v = 0; v < f.domain.vertices.size(); ++v) {
    const auto& p = f.vertex_images[v];
    if (p.is_vertex())
      vi[f.domain.vertices[v].id] = f.codomain.vertices[p.vertex].id;
    else
      vi[f.domain.vertices[v].id] = {{"edge", f.codomain.edges[p.edge].id},
                                     {"offset", rat_to_string(p.offset)}};
  }
  j["vertex_images"] = vi;
  Json ep = Json::object();
  for (size_t e = 0; e < f.domain.edges.size(); ++e) {
    const auto& p = f.edge_paths[e];
    Json pj;
    pj["word"] = Json::array();
    for (int o : p.word) pj["word"].push_back(oedge_to_string(f.codomain, o));
    pj["start_offset"] = rat_to_string(p.start_u);
    pj["end_offset"] = rat_to_string(p.end_u);
    ep[f.domain.edges[e].id] = pj;
  }
  j["edge_paths"] = ep;
  return j;
}

MultiCurve parse_curve(const Json& j, const MarkedGraph& g) {
  MultiCurve c;
  for (const auto& comp : j.at("components")) {
    CurveComponent cc;
    std::string kind = comp.value("kind", "loop");
    cc.kind = kind == "arc" ? CurveComponent::Kind::Arc : CurveComponent::Kind::Loop;
    for (const auto& w : comp.at("word")) cc.word.push_back(oedge_from_string(g, w.get<std::string>()));
    if (comp.contains("weight")) cc.weight = parse_scalar(comp.at("weight"));
    c.components.push_back(std::move(cc));
  }
  return c;
}

Json curve_to_json(const MultiCurve& c, const MarkedGraph& g) {
  Json j;
  j["components"] = Json::array();
  for (const auto& comp : c.components) {
    Json jc;
    jc["kind"] = comp.kind == CurveComponent::Kind::Arc ? "arc" : "loop";
    jc["word"] = Json::array();
    for (int o : comp.word) jc["word"].push_back(oedge_to_string(g, o));
    jc["weight"] = rat_to_string(comp.weight);
    j["components"].push_back(jc);
  }
  return j;
}

Json number_json(const Rat& r) {
  Json j;
  j["decimal"] = to_double(r);
  j["rational"] = rat_to_string(r);
  return j;
}

Json number_json(double x) {
  Json j;
  j["decimal"] = x;
  return j;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& err) {
    // Translate the byte offset into line/column.
    size_t line = 1, col = 1;
    for (size_t i = 0; i < std::min(err.byte, text.size()); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << "malformed JSON in '" << path << "' at line " << line << ", column " << col << ": "
       << err.what();
    throw std::invalid_argument(os.str());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

}  // namespace elastigraph
