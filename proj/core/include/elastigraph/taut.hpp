#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "elastigraph/curve.hpp"
#include "elastigraph/map.hpp"

namespace elastigraph {

// Vertex cut of a k-marked weighted graph: `side[v]` is true on the
// S-side, which contains exactly one marked vertex (`mark`).
struct Cut {
  int mark = -1;
  std::vector<char> side;
  std::vector<int> cut_edges;
  Rat weight = 0;
};

Cut make_cut(const MarkedGraph& g, const EdgeScalars& w, int mark, std::vector<char> side);
bool cuts_nested(const Cut& a, const Cut& b);

// Exact min cut separating `sources` from `sinks` (undirected, rational
// capacities). The returned side is the set reachable from the sources in
// the residual network: the inclusion-minimal minimum cut.
struct MinCutResult {
  Rat value = 0;
  std::vector<char> side;
};
MinCutResult min_cut_between(const MarkedGraph& g, const EdgeScalars& w,
                             const std::vector<int>& sources, const std::vector<int>& sinks);

// Minimal v_i-cut, deterministic: the side closest to v_i (intersection
// of all minimal cuts).
Cut min_vertex_cut(const MarkedGraph& g, const EdgeScalars& w, int vi);

// Lowers weights so no slack edges remain while preserving every
// mincut_i. Processes edges in index order; each edge drops to the
// smallest value preserving all minimal cut weights.
EdgeScalars minimize_weights(const MarkedGraph& g, const EdgeScalars& w);

// Pairwise nested family of minimal vertex cuts covering every
// positive-weight edge. Requires minimal weights.
std::vector<Cut> complete_nested_cuts(const MarkedGraph& g, const EdgeScalars& w,
                                      const std::vector<Cut>& seed);

// Weighted train track: a weight structure plus a partition of the
// half-edge germs at each vertex into gates. Zero-weight edges are
// carried along but ignored by the gate conditions.
struct TrainTrack {
  MarkedGraph graph;
  EdgeScalars weights;
  std::vector<std::vector<std::vector<int>>> gates;  // per vertex: groups of half-edges
};

ValidationReport validate_train_track(const TrainTrack& t);

// Saturating weighted multi-curve carried by the train track: n_c = w on
// every edge, turns cross gates, each component crosses each unoriented
// edge at most twice.
MultiCurve tt_to_multicurve(const TrainTrack& t);

struct StarTautResult {
  MarkedGraph star;                 // leaf i joined to the center by edge i
  std::vector<int> leg_of_mark;     // mark order used
  int center = -1;
  GraphMap map;                     // domain -> star, taut
  std::vector<Rat> leg_multiplicity;  // = mincut_i, per leg
  EdgeScalars minimal_weights;      // w0 <= w with the same mincuts
  std::vector<Cut> family;          // complete nested family on w0
  TrainTrack tt;                    // carried train track (weights w0)
};

// Taut map in the canonical homotopy class to Star_k, plus the carried
// train track built from a complete nested family of minimal cuts.
StarTautResult taut_to_star(const MarkedGraph& g, const EdgeScalars& w);

struct FlowDecomposition {
  std::vector<Cut> cuts;  // one per mark, canonical minimal
  std::map<std::pair<int, int>, MultiCurve> flows;  // (i,j) marked-vertex pairs, i<j
  Rat flow_weight(int i, int j) const;
};

// Cuts and pairwise flows satisfying the carrying constraint and the
// flow = cut-weight identity, exactly.
FlowDecomposition vertex_flows(const MarkedGraph& g, const EdgeScalars& w);

// Homotopes f to a taut representative: n equals the class minimum on
// every edge. Vertices map to vertices in the result.
GraphMap make_taut(const GraphMap& f, const EdgeScalars& w);

// Multiplicity of the taut representative, constant per codomain edge.
std::vector<Rat> taut_multiplicities(const GraphMap& f, const EdgeScalars& w);

// Homotopes f so every vertex maps to a vertex without increasing n
// anywhere ("spreading out segments of minimal multiplicity").
GraphMap spread_to_vertices(const GraphMap& f, const EdgeScalars& w);

struct StrongReducedResult {
  bool strongly_reduced = false;
  // Witness candidate per domain edge (empty for constant edges).
  std::vector<std::optional<CurveComponent>> witnesses;
  std::vector<int> unwitnessed_edges;
};

// Checks for a curve through each non-constant edge whose image stays
// reduced; equivalent to tautness for some positive weights.
StrongReducedResult is_strongly_reduced(const GraphMap& f);

}  // namespace elastigraph
