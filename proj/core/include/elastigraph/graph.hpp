#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "elastigraph/rational.hpp"

namespace elastigraph {

// Vertices and edges are addressed by dense indices; string ids are kept
// for serialization. Half-edge h = 2*edge + side, side 0 at ends[0].
// Oriented edge o = 2*edge + dir; dir 0 travels ends[0] -> ends[1].

struct Vertex {
  std::string id;
  bool marked = false;

  bool operator==(const Vertex&) const = default;
};

struct Edge {
  std::string id;
  int ends[2] = {-1, -1};

  bool operator==(const Edge& o) const {
    return id == o.id && ends[0] == o.ends[0] && ends[1] == o.ends[1];
  }
};

inline int oedge(int edge, int dir) { return 2 * edge + dir; }
inline int oedge_edge(int o) { return o >> 1; }
inline int oedge_dir(int o) { return o & 1; }
inline int oedge_reverse(int o) { return o ^ 1; }

struct MarkedGraph {
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;

  int add_vertex(const std::string& id, bool marked = false);
  int add_edge(const std::string& id, int a, int b);

  int vertex_index(const std::string& id) const;  // -1 if absent
  int edge_index(const std::string& id) const;

  int tail(int o) const { return edges[oedge_edge(o)].ends[oedge_dir(o)]; }
  int head(int o) const { return edges[oedge_edge(o)].ends[1 - oedge_dir(o)]; }

  // Half-edges incident to v, sorted by (edge, side). A self-loop
  // contributes both of its half-edges.
  std::vector<int> half_edges_at(int v) const;
  // Oriented edges leaving v (same enumeration as half_edges_at).
  std::vector<int> oedges_at(int v) const;

  int degree(int v) const { return static_cast<int>(half_edges_at(v).size()); }
  std::vector<int> marked_vertices() const;

  bool operator==(const MarkedGraph&) const = default;
};

enum class ScalarKind { Weight, Elastic, Length };

// Per-edge scalar structure paired with one of the three graph flavors.
struct EdgeScalars {
  ScalarKind kind = ScalarKind::Weight;
  std::vector<Rat> values;  // indexed by edge

  static EdgeScalars uniform(ScalarKind kind, size_t n, const Rat& v) {
    EdgeScalars s;
    s.kind = kind;
    s.values.assign(n, v);
    return s;
  }
  const Rat& operator[](int e) const { return values[e]; }
  Rat& operator[](int e) { return values[e]; }
  size_t size() const { return values.size(); }
};

std::vector<double> scalars_to_double(const EdgeScalars& s);
EdgeScalars scalars_from_double(ScalarKind kind, const std::vector<double>& v);

// Edge-id subset closed under endpoints.
struct SubgraphRef {
  std::vector<int> edge_set;            // sorted edge indices
  std::vector<int> induced_vertices() const;  // requires bind to a graph
  const MarkedGraph* graph = nullptr;

  SubgraphRef() = default;
  SubgraphRef(const MarkedGraph& g, std::vector<int> edges);
  SubgraphRef complement() const;
  bool contains_edge(int e) const;
};

struct ValidationReport {
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

ValidationReport validate_graph(const MarkedGraph& g);
void validate_scalars(const MarkedGraph& g, const EdgeScalars& s);  // throws on violation

struct CollapseResult {
  MarkedGraph graph;
  std::vector<int> vertex_map;           // old vertex -> new vertex
  std::vector<int> edge_map;             // old edge -> new edge, -1 if collapsed
  std::vector<int> edge_preimage;        // new edge -> old edge
};

// Collapses each connected component of `null` to a single vertex
// (marked iff the component contained a marked vertex). Non-null edges
// survive with reattached endpoints.
CollapseResult collapse_subgraph(const MarkedGraph& g, const SubgraphRef& null);

struct SubdivideResult {
  MarkedGraph graph;
  int new_vertex = -1;
  int first_half = -1;   // edge index covering [0, t] of the old edge
  int second_half = -1;  // edge index covering [t, 1]
  std::vector<EdgeScalars> scalars;
};

// Splits edge e at parameter t in (0,1). Elastic constants and lengths
// split proportionally t : 1-t; weights are densities and copy to both
// halves.
SubdivideResult subdivide_edge(const MarkedGraph& g, int e, const Rat& t,
                               const std::vector<EdgeScalars>& scalars);

}  // namespace elastigraph
