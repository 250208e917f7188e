#include "elastigraph/graph.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace elastigraph {

Rat rat_from_string(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("empty rational literal");
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    BigInt num(s.substr(0, slash));
    BigInt den(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
    return Rat(num, den);
  }
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find('E') == std::string::npos) {
    return Rat(BigInt(s));
  }
  // Decimal literal: mantissa.fraction[e exp], parsed exactly.
  size_t pos = 0;
  bool neg = false;
  if (s[pos] == '+' || s[pos] == '-') {
    neg = s[pos] == '-';
    ++pos;
  }
  BigInt digits = 0;
  long frac_digits = 0;
  long exponent = 0;
  bool any = false;
  for (; pos < s.size() && s[pos] >= '0' && s[pos] <= '9'; ++pos) {
    digits = digits * 10 + (s[pos] - '0');
    any = true;
  }
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    for (; pos < s.size() && s[pos] >= '0' && s[pos] <= '9'; ++pos) {
      digits = digits * 10 + (s[pos] - '0');
      ++frac_digits;
      any = true;
    }
  }
  if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
    exponent = std::stol(s.substr(pos + 1));
    pos = s.size();
  }
  if (!any || pos != s.size()) throw std::invalid_argument("bad rational literal '" + s + "'");
  Rat r(digits);
  long net = exponent - frac_digits;
  BigInt p10 = 1;
  for (long i = 0; i < std::abs(net); ++i) p10 *= 10;
  if (net >= 0)
    r *= Rat(p10);
  else
    r /= Rat(p10);
  return neg ? Rat(-r) : r;
}

std::string rat_to_string(const Rat& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

int MarkedGraph::add_vertex(const std::string& id, bool marked) {
  vertices.push_back({id, marked});
  return static_cast<int>(vertices.size()) - 1;
}

int MarkedGraph::add_edge(const std::string& id, int a, int b) {
  Edge e;
  e.id = id;
  e.ends[0] = a;
  e.ends[1] = b;
  edges.push_back(e);
  return static_cast<int>(edges.size()) - 1;
}

int MarkedGraph::vertex_index(const std::string& id) const {
  for (size_t i = 0; i < vertices.size(); ++i)
    if (vertices[i].id == id) return static_cast<int>(i);
  return -1;
}

int MarkedGraph::edge_index(const std::string& id) const {
  for (size_t i = 0; i < edges.size(); ++i)
    if (edges[i].id == id) return static_cast<int>(i);
  return -1;
}

std::vector<int> MarkedGraph::half_edges_at(int v) const {
  std::vector<int> out;
  for (size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].ends[0] == v) out.push_back(2 * static_cast<int>(e));
    if (edges[e].ends[1] == v) out.push_back(2 * static_cast<int>(e) + 1);
  }
  return out;
}

std::vector<int> MarkedGraph::oedges_at(int v) const {
  // Half-edge (e, side) leaves v as oriented edge (e, dir=side).
  return half_edges_at(v);
}

std::vector<int> MarkedGraph::marked_vertices() const {
  std::vector<int> out;
  for (size_t i = 0; i < vertices.size(); ++i)
    if (vertices[i].marked) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<double> scalars_to_double(const EdgeScalars& s) {
  std::vector<double> out(s.values.size());
  for (size_t i = 0; i < s.values.size(); ++i) out[i] = to_double(s.values[i]);
  return out;
}

EdgeScalars scalars_from_double(ScalarKind kind, const std::vector<double>& v) {
  EdgeScalars s;
  s.kind = kind;
  s.values.reserve(v.size());
  for (double x : v) s.values.push_back(rat_from_double(x));
  return s;
}

SubgraphRef::SubgraphRef(const MarkedGraph& g, std::vector<int> edges_in) : graph(&g) {
  edge_set = std::move(edges_in);
  std::sort(edge_set.begin(), edge_set.end());
  edge_set.erase(std::unique(edge_set.begin(), edge_set.end()), edge_set.end());
}

bool SubgraphRef::contains_edge(int e) const {
  return std::binary_search(edge_set.begin(), edge_set.end(), e);
}

std::vector<int> SubgraphRef::induced_vertices() const {
  std::vector<char> in(graph->vertices.size(), 0);
  for (int e : edge_set) {
    in[graph->edges[e].ends[0]] = 1;
    in[graph->edges[e].ends[1]] = 1;
  }
  std::vector<int> out;
  for (size_t v = 0; v < in.size(); ++v)
    if (in[v]) out.push_back(static_cast<int>(v));
  return out;
}

SubgraphRef SubgraphRef::complement() const {
  std::vector<int> rest;
  for (size_t e = 0; e < graph->edges.size(); ++e)
    if (!contains_edge(static_cast<int>(e))) rest.push_back(static_cast<int>(e));
  return SubgraphRef(*graph, rest);
}

ValidationReport validate_graph(const MarkedGraph& g) {
  ValidationReport report;
  std::unordered_set<std::string> vids, eids;
  for (const auto& v : g.vertices) {
    if (!vids.insert(v.id).second)
      report.errors.push_back("duplicate vertex id '" + v.id + "'");
  }
  int n = static_cast<int>(g.vertices.size());
  for (const auto& e : g.edges) {
    if (!eids.insert(e.id).second)
      report.errors.push_back("duplicate edge id '" + e.id + "'");
    for (int s = 0; s < 2; ++s) {
      if (e.ends[s] < 0 || e.ends[s] >= n)
        report.errors.push_back("dangling endpoint on edge '" + e.id + "'");
    }
  }
  return report;
}

void validate_scalars(const MarkedGraph& g, const EdgeScalars& s) {
  if (s.values.size() != g.edges.size())
    throw std::invalid_argument("scalar table size does not match edge count");
  for (size_t e = 0; e < s.values.size(); ++e) {
    if (s.values[e] < 0)
      throw std::invalid_argument("negative scalar on edge '" + g.edges[e].id + "'");
    if (s.kind == ScalarKind::Elastic && s.values[e] == 0)
      throw std::invalid_argument("zero elastic constant on edge '" + g.edges[e].id + "'");
  }
}

CollapseResult collapse_subgraph(const MarkedGraph& g, const SubgraphRef& null) {
  int n = static_cast<int>(g.vertices.size());
  // Union-find over vertices joined by null edges.
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int e : null.edge_set) {
    int a = find(g.edges[e].ends[0]);
    int b = find(g.edges[e].ends[1]);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }

  CollapseResult res;
  res.vertex_map.assign(n, -1);
  std::vector<int> rep_to_new(n, -1);
  for (int v = 0; v < n; ++v) {
    int r = find(v);
    if (rep_to_new[r] < 0) {
      rep_to_new[r] = res.graph.add_vertex(g.vertices[r].id, false);
    }
    res.vertex_map[v] = rep_to_new[r];
    if (g.vertices[v].marked) res.graph.vertices[rep_to_new[r]].marked = true;
  }
  res.edge_map.assign(g.edges.size(), -1);
  for (size_t e = 0; e < g.edges.size(); ++e) {
    if (null.contains_edge(static_cast<int>(e))) continue;
    int a = res.vertex_map[g.edges[e].ends[0]];
    int b = res.vertex_map[g.edges[e].ends[1]];
    int ne = res.graph.add_edge(g.edges[e].id, a, b);
    res.edge_map[e] = ne;
    res.edge_preimage.push_back(static_cast<int>(e));
  }
  return res;
}

SubdivideResult subdivide_edge(const MarkedGraph& g, int e, const Rat& t,
                               const std::vector<EdgeScalars>& scalars) {
  if (!(t > 0 && t < 1)) throw std::invalid_argument("subdivision parameter out of (0,1)");
  SubdivideResult res;
  res.graph = g;
  std::string base = g.edges[e].id;
  res.new_vertex = res.graph.add_vertex(base + ".mid", false);
  int a = g.edges[e].ends[0];
  int b = g.edges[e].ends[1];
  // Reuse slot e for the first half, append the second half.
  res.graph.edges[e].id = base + ".a";
  res.graph.edges[e].ends[0] = a;
  res.graph.edges[e].ends[1] = res.new_vertex;
  res.first_half = e;
  res.second_half = res.graph.add_edge(base + ".b", res.new_vertex, b);

  for (const auto& s : scalars) {
    EdgeScalars ns = s;
    Rat v = s.values[e];
    if (s.kind == ScalarKind::Weight) {
      ns.values[e] = v;
      ns.values.push_back(v);
    } else {
      ns.values[e] = v * t;
      ns.values.push_back(v * (1 - t));
    }
    res.scalars.push_back(std::move(ns));
  }
  return res;
}

}  // namespace elastigraph
