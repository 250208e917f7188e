#pragma once

#include <optional>
#include <string>
#include <vector>

#include "elastigraph/map.hpp"

namespace elastigraph {

// Weighted multi-curve: loops (cyclically reduced cyclic words) and arcs
// between marked vertices (reduced words).
struct CurveComponent {
  enum class Kind { Loop, Arc } kind = Kind::Loop;
  std::vector<int> word;  // oriented edges
  Rat weight = 1;

  bool operator==(const CurveComponent&) const = default;
};

struct MultiCurve {
  std::vector<CurveComponent> components;

  bool empty() const { return components.empty(); }
};

// Weighted edge-crossing counts n_c.
std::vector<Rat> curve_multiplicities(const MarkedGraph& g, const MultiCurve& c);

struct CurveReduction {
  MultiCurve curve;
  int dropped_trivial = 0;
};

// Cancels backtracks, cyclically reduces loops, drops components that
// become trivial.
CurveReduction reduce_curve(const MarkedGraph& g, const MultiCurve& c);

// Canonical form: loops are rotated/reflected to the lexicographically
// least word; arcs take min(word, reversed word).
CurveComponent canonical_component(const CurveComponent& c);

struct CurveEnergies {
  Rat extremal_length;  // sum alpha n^2
  Rat length;           // sum ell n
};

Rat curve_extremal_length(const MarkedGraph& g, const MultiCurve& c, const EdgeScalars& alpha);
Rat curve_length(const MarkedGraph& g, const MultiCurve& c, const EdgeScalars& ell);
// max n_c(e)/w(e) over edges with n_c > 0.
Rat curve_weight_ratio(const MarkedGraph& g, const MultiCurve& c, const EdgeScalars& w);

// Homotopy-class pushforward through f, followed by reduction.
MultiCurve push_curve(const MultiCurve& c, const GraphMap& f);

struct CandidateOptions {
  int max_crossings = 2;       // per unoriented edge
  size_t abort_above = 1000000;  // combinatorial explosion guard
};

// All reduced loops and marked arcs using each unoriented edge at most
// `max_crossings` times, deduplicated by rotation and reversal, weight 1.
std::vector<CurveComponent> enumerate_candidates(const MarkedGraph& g,
                                                 const CandidateOptions& opts = {});

struct StretchResult {
  Rat value = 0;
  std::optional<CurveComponent> witness;
};

// Minimal Lipschitz constant of the class = max over candidate curves of
// ell[f.c]/ell[c]. Exact.
StretchResult lipschitz_stretch(const GraphMap& f, const EdgeScalars& ell_dom,
                                const EdgeScalars& ell_cod);

struct ElStretchResult {
  double value = 0;
  Rat exact_ratio = 0;  // EL ratio of the returned witness (exact)
  MultiCurve witness;
};

// Lower bound for Emb[f]: max of EL[f.c]/EL[c] over single candidates and
// optimally-weighted candidate pairs (weights snapped to rationals, the
// reported ratio is exact for the returned witness).
ElStretchResult sf_el_lower_bound(const GraphMap& f, const EdgeScalars& alpha_dom,
                                  const EdgeScalars& alpha_cod);

// Pushforward of a single component's traced word (reduced); empty result
// means the image is null-homotopic.
std::vector<int> push_component_word(const CurveComponent& c, const GraphMap& f,
                                     bool* reduced_as_traced = nullptr);

}  // namespace elastigraph
