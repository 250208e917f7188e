#pragma once

#include <random>
#include <vector>

#include "elastigraph/curve.hpp"
#include "elastigraph/graph.hpp"
#include "elastigraph/map.hpp"

namespace testsupport {

using namespace elastigraph;

inline EdgeScalars scalars(ScalarKind kind, std::vector<Rat> v) {
  EdgeScalars s;
  s.kind = kind;
  s.values = std::move(v);
  return s;
}

// Tripod: center c, leaves l1..l3 (marked), edge ei = [c, li].
inline MarkedGraph tripod() {
  MarkedGraph g;
  g.add_vertex("c", false);
  g.add_vertex("l1", true);
  g.add_vertex("l2", true);
  g.add_vertex("l3", true);
  g.add_edge("e1", 0, 1);
  g.add_edge("e2", 0, 2);
  g.add_edge("e3", 0, 3);
  return g;
}

// The straight tripod-to-tripod class (leaf i -> leaf i).
inline GraphMap tripod_map() {
  GraphMap f;
  f.domain = tripod();
  f.codomain = tripod();
  for (int v = 0; v < 4; ++v) f.vertex_images.push_back(PointOnGraph::at_vertex(v));
  for (int e = 0; e < 3; ++e) {
    EdgePath p;
    p.word = {oedge(e, 0)};
    f.edge_paths.push_back(p);
  }
  return f;
}

// Figure eight: one vertex, two self-loops a, b.
inline MarkedGraph figure_eight(bool marked_vertex = false) {
  MarkedGraph g;
  g.add_vertex("v", marked_vertex);
  g.add_edge("a", 0, 0);
  g.add_edge("b", 0, 0);
  return g;
}

inline GraphMap figure_eight_identity_class() {
  MarkedGraph g = figure_eight();
  GraphMap f;
  f.domain = g;
  f.codomain = g;
  f.vertex_images.push_back(PointOnGraph::at_vertex(0));
  for (int e = 0; e < 2; ++e) {
    EdgePath p;
    p.word = {oedge(e, 0)};
    f.edge_paths.push_back(p);
  }
  return f;
}

// Theta graph: two vertices x, y and three parallel edges p, q, r.
inline MarkedGraph theta(bool marked = false) {
  MarkedGraph g;
  g.add_vertex("x", marked);
  g.add_vertex("y", marked);
  g.add_edge("p", 0, 1);
  g.add_edge("q", 0, 1);
  g.add_edge("r", 0, 1);
  return g;
}

// Circle: one vertex, one self-loop.
inline MarkedGraph circle(bool marked = false) {
  MarkedGraph g;
  g.add_vertex("v", marked);
  g.add_edge("e", 0, 0);
  return g;
}

// Interval with both endpoints marked.
inline MarkedGraph interval() {
  MarkedGraph g;
  g.add_vertex("s", true);
  g.add_vertex("t", true);
  g.add_edge("e", 0, 1);
  return g;
}

// Eyeglass: loops a at u and b at v, bar c between them.
inline MarkedGraph eyeglass() {
  MarkedGraph g;
  g.add_vertex("u", false);
  g.add_vertex("v", false);
  g.add_edge("a", 0, 0);
  g.add_edge("b", 1, 1);
  g.add_edge("c", 0, 1);
  return g;
}

// Random connected marked graph with <= max_edges edges.
inline MarkedGraph random_graph(std::mt19937& rng, int max_vertices, int max_edges,
                                int min_marks = 1) {
  std::uniform_int_distribution<int> nv(std::max(1, min_marks), max_vertices);
  int n = nv(rng);
  MarkedGraph g;
  for (int v = 0; v < n; ++v) g.add_vertex("v" + std::to_string(v), false);
  // Spanning tree then extra edges.
  int e_id = 0;
  for (int v = 1; v < n; ++v) {
    std::uniform_int_distribution<int> prev(0, v - 1);
    g.add_edge("e" + std::to_string(e_id++), prev(rng), v);
  }
  std::uniform_int_distribution<int> extra(0, std::max(0, max_edges - (n - 1)));
  int extras = extra(rng);
  std::uniform_int_distribution<int> anyv(0, n - 1);
  for (int k = 0; k < extras && e_id < max_edges; ++k)
    g.add_edge("e" + std::to_string(e_id++), anyv(rng), anyv(rng));
  if (g.edges.empty()) g.add_edge("e0", 0, 0);
  // Marks.
  std::uniform_int_distribution<int> nmarks(min_marks, std::max(min_marks, n / 2 + 1));
  int m = std::min(n, nmarks(rng));
  std::vector<int> ids(n);
  for (int v = 0; v < n; ++v) ids[v] = v;
  std::shuffle(ids.begin(), ids.end(), rng);
  for (int k = 0; k < m; ++k) g.vertices[ids[k]].marked = true;
  return g;
}

inline EdgeScalars random_scalars(std::mt19937& rng, ScalarKind kind, size_t n, int num_max = 8,
                                  int den_max = 4) {
  std::uniform_int_distribution<int> num(1, num_max), den(1, den_max);
  EdgeScalars s;
  s.kind = kind;
  for (size_t e = 0; e < n; ++e) s.values.push_back(Rat(num(rng), den(rng)));
  return s;
}

// Random reduced walk from vertex a of length <= len; returns its endpoint.
inline std::vector<int> random_reduced_walk(std::mt19937& rng, const MarkedGraph& g, int a,
                                            int len, int* endpoint) {
  std::vector<int> word;
  int cur = a;
  std::uniform_int_distribution<int> coin(0, 2);
  for (int i = 0; i < len; ++i) {
    auto outs = g.oedges_at(cur);
    std::vector<int> usable;
    for (int o : outs)
      if (word.empty() || o != oedge_reverse(word.back())) usable.push_back(o);
    if (usable.empty()) break;
    std::uniform_int_distribution<int> pick(0, static_cast<int>(usable.size()) - 1);
    int o = usable[pick(rng)];
    word.push_back(o);
    cur = g.head(o);
    if (coin(rng) == 0) break;
  }
  *endpoint = cur;
  return word;
}

// Random vertex-to-vertex marked map in some homotopy class.
inline GraphMap random_map(std::mt19937& rng, const MarkedGraph& dom, const MarkedGraph& cod,
                           int walk_len = 3) {
  GraphMap f;
  f.domain = dom;
  f.codomain = cod;
  auto cod_marks = cod.marked_vertices();
  std::uniform_int_distribution<int> anyv(0, static_cast<int>(cod.vertices.size()) - 1);
  f.vertex_images.resize(dom.vertices.size());
  for (size_t v = 0; v < dom.vertices.size(); ++v) {
    if (dom.vertices[v].marked) {
      std::uniform_int_distribution<int> pick(0, static_cast<int>(cod_marks.size()) - 1);
      f.vertex_images[v] = PointOnGraph::at_vertex(cod_marks[pick(rng)]);
    } else {
      f.vertex_images[v] = PointOnGraph::at_vertex(anyv(rng));
    }
  }
  // Edge words: random walk from f(a), then a shortest path to f(b).
  f.edge_paths.resize(dom.edges.size());
  for (size_t e = 0; e < dom.edges.size(); ++e) {
    int a = dom.edges[e].ends[0], b = dom.edges[e].ends[1];
    int fa = f.vertex_images[a].vertex, fb = f.vertex_images[b].vertex;
    int mid = fa;
    auto prefix = random_reduced_walk(rng, cod, fa, walk_len, &mid);
    // BFS shortest path mid -> fb.
    std::vector<int> pred_arc(cod.vertices.size(), -2);
    std::vector<int> queue{mid};
    pred_arc[mid] = -1;
    for (size_t qi = 0; qi < queue.size(); ++qi) {
      int v = queue[qi];
      for (int o : cod.oedges_at(v)) {
        int h = cod.head(o);
        if (pred_arc[h] != -2) continue;
        pred_arc[h] = o;
        queue.push_back(h);
      }
    }
    std::vector<int> suffix;
    if (pred_arc[fb] == -2)
      throw std::logic_error("random_map requires a connected codomain");
    for (int v = fb; pred_arc[v] != -1; v = cod.tail(pred_arc[v])) suffix.push_back(pred_arc[v]);
    std::reverse(suffix.begin(), suffix.end());
    PathBuilder pb;
    for (int o : prefix) pb.push(o, Rat(0), Rat(1));
    for (int o : suffix) pb.push(o, Rat(0), Rat(1));
    f.edge_paths[e] = pb.to_edge_path();
  }
  // Fix up: endpoint images must match the (possibly reassigned) words.
  auto rep = validate_map(f);
  if (!rep.ok()) throw std::logic_error("random_map produced an invalid map: " + rep.errors[0]);
  return f;
}

}  // namespace testsupport
