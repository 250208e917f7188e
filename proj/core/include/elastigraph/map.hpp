#pragma once

#include <optional>
#include <vector>

#include "elastigraph/graph.hpp"

namespace elastigraph {

// A point of a graph: at a vertex, or strictly inside an edge at a
// parameter offset in (0,1) measured along the edge's intrinsic
// orientation.
struct PointOnGraph {
  int vertex = -1;
  int edge = -1;
  Rat offset = 0;

  static PointOnGraph at_vertex(int v) { return {v, -1, 0}; }
  static PointOnGraph on_edge(int e, Rat off) { return {-1, e, std::move(off)}; }
  bool is_vertex() const { return vertex >= 0; }
  bool operator==(const PointOnGraph&) const = default;
};

// Image of an oriented domain edge: the reduced sequence of oriented
// codomain edges traversed, with fractional first/last segments when an
// endpoint maps to an edge interior. Offsets are in the coordinates of
// the oriented word element they index into (0 = start of travel).
// Empty word = constant path. A single-element word covers
// [start_u, end_u] with start_u < end_u.
struct EdgePath {
  std::vector<int> word;
  Rat start_u = 0;
  Rat end_u = 1;

  bool constant() const { return word.empty(); }
};

EdgePath reverse_path(const EdgePath& p);

struct GraphMap {
  MarkedGraph domain;
  MarkedGraph codomain;
  std::vector<PointOnGraph> vertex_images;  // per domain vertex
  std::vector<EdgePath> edge_paths;         // per domain edge, oriented +e

  EdgePath path_of(int o) const {
    return oedge_dir(o) == 0 ? edge_paths[oedge_edge(o)] : reverse_path(edge_paths[oedge_edge(o)]);
  }
};

GraphMap identity_map(const MarkedGraph& g);
ValidationReport validate_map(const GraphMap& f);

// Monotone image interval of one linear piece of a map. The domain
// sub-interval [a0,a1] of the +edge parameter maps onto [u0,u1] in the
// coordinates of oriented edge `o` (travel direction = o).
struct Strand {
  Rat a0, a1;
  int o;
  Rat u0, u1;
};

// A concrete PL map: combinatorial data plus per-edge parameterization.
// Gaps between strand domain intervals are constant stretches.
struct StrandMap {
  MarkedGraph domain;
  MarkedGraph codomain;
  std::vector<PointOnGraph> vertex_images;
  std::vector<std::vector<Strand>> strands;  // per domain edge, sorted by a0

  PointOnGraph image_of_point(const PointOnGraph& p) const;
};

// The constant-derivative representative of f's combinatorial type,
// measuring the codomain with `cod_lengths` (pass the elastic constants
// of an elastic codomain; they act as lengths).
StrandMap canonical_strands(const GraphMap& f, const std::vector<Rat>& cod_lengths);
inline StrandMap canonical_strands(const GraphMap& f, const EdgeScalars& cod) {
  std::vector<Rat> L(cod.values.begin(), cod.values.end());
  return canonical_strands(f, L);
}
// Unit codomain edge lengths; used where only the combinatorics matter.
StrandMap unit_strands(const GraphMap& f);

// Literal composite g . f of two concrete PL maps; exact.
StrandMap compose_strands(const StrandMap& f, const StrandMap& g);

// Extracts the combinatorial map of a strand map, cancelling backtracks
// (homotopy rel vertex images).
GraphMap combinatorial_map(const StrandMap& sm);

// Combinatorial composition: canonical representatives composed, then
// reduced. Requires codomain(f) == domain(g).
GraphMap compose(const GraphMap& f, const GraphMap& g);

// Removes dead ends. Never increases any E^p_q.
GraphMap reduce_map(const GraphMap& f);

// Piecewise-constant function on codomain edges; breakpoints in edge
// coordinates, sorted.
struct SegmentFunction {
  struct Seg {
    Rat t0, t1;
    Rat value;
  };
  std::vector<std::vector<Seg>> per_edge;

  Rat max_value() const;
  // Value at the midpoint of the segment containing t (t regular).
  Rat value_at(int edge, const Rat& t) const;
};

// Weighted count of preimages, away from singular values.
SegmentFunction multiplicity(const StrandMap& f, const EdgeScalars& w_dom);
SegmentFunction multiplicity(const GraphMap& f, const EdgeScalars& w_dom);

// Fill(y) = sum of |f'| over preimage strands; requires positive domain
// and codomain length structures (elastic constants act as lengths).
SegmentFunction fill_function(const StrandMap& f, const EdgeScalars& dom_len,
                              const EdgeScalars& cod_len);

struct Exponent {
  bool inf = false;
  Rat value = 1;
  static Exponent infinity() { return {true, 0}; }
  static Exponent of(Rat v) { return {false, std::move(v)}; }
  bool is(int v) const { return !inf && value == v; }
};

enum class EnergyKind {
  WeightRatio,     // p=q=1
  ExtremalLength,  // p=1, q=2  (un-square-rooted)
  WeightedLength,  // p=1, q=inf
  Embedding,       // p=q=2    (un-square-rooted convention: Emb itself)
  Dirichlet,       // p=2, q=inf (un-square-rooted)
  Lipschitz,       // p=q=inf
  General,
};

EnergyKind classify_energy(const Exponent& p, const Exponent& q);

// Raw energy of a concrete PL map in the classical convention (WR, EL,
// ell, Emb, Dir, Lip). Exact; requires p,q in {1,2,inf}.
Rat energy_exact(const StrandMap& f, const EdgeScalars& dom, const EdgeScalars& cod,
                 const Exponent& p, const Exponent& q);

// E^p_q in the normalized (square-rooted) convention, any 1<=p<=q<=inf.
double energy_E(const StrandMap& f, const EdgeScalars& dom, const EdgeScalars& cod,
                const Exponent& p, const Exponent& q);

// Convenience wrappers taking the combinatorial map; the canonical
// constant-derivative representative is evaluated.
Rat energy_exact(const GraphMap& f, const EdgeScalars& dom, const EdgeScalars& cod,
                 const Exponent& p, const Exponent& q);
double energy_E(const GraphMap& f, const EdgeScalars& dom, const EdgeScalars& cod,
                const Exponent& p, const Exponent& q);

// Total length traced by each domain edge's image.
EdgeScalars pullback_lengths(const GraphMap& f, const EdgeScalars& cod_lengths);

// Transport of a map under subdivision of its codomain edge e
// (resulting in the graph of `sub`).
GraphMap map_subdivide_codomain(const GraphMap& f, int e, const Rat& t,
                                const SubdivideResult& sub);
// Transport under domain subdivision; the new vertex image is placed by
// the constant-derivative parameterization w.r.t. cod_lengths.
GraphMap map_subdivide_domain(const GraphMap& f, int e, const Rat& t,
                              const SubdivideResult& sub,
                              const std::vector<Rat>& cod_lengths);

// Incremental path assembly with exact backtrack cancellation.
class PathBuilder {
 public:
  struct Seg {
    int o;
    Rat u0, u1;
  };
  void push(int o, Rat u0, Rat u1);
  void push_path(const MarkedGraph& cod, const EdgePath& p);
  const std::vector<Seg>& segments() const { return segs_; }
  // Collapses to an EdgePath (merging contiguous runs); the path must be
  // continuous.
  EdgePath to_edge_path() const;

 private:
  std::vector<Seg> segs_;
};

}  // namespace elastigraph
