#pragma once

#include <optional>
#include <vector>

#include "elastigraph/curve.hpp"
#include "elastigraph/map.hpp"

namespace elastigraph {

struct HarmonicOptions {
  double qp_tol = 1e-12;       // per-coordinate move tolerance
  double cert_tol = 1e-8;      // certificate slack tolerance (relative)
  double snap_eps = 1e-9;      // final offset snap to vertices
  int max_transitions = 10000;
  int max_sweeps = 200000;
};

struct GateEntry {
  int vertex = -1;
  bool at_codomain_vertex = true;
  std::vector<std::vector<int>> gates;  // groups of domain half-edges
  std::vector<double> gate_tension;
  double slack = 0;  // min over gates of (total - 2*gate); >= -tol passes
};

struct GateReport {
  std::vector<GateEntry> entries;
  double worst_slack = 0;
  double scale = 0;  // max tension, for relative tolerance
  bool passed = true;
};

struct HarmonicResult {
  GraphMap map;
  StrandMap strands;  // constant-derivative parameterization w.r.t. the target lengths
  double dirichlet = 0;
  std::vector<double> tension;   // |f'| per domain edge
  std::vector<double> pullback;  // image length per domain edge
  GateReport certificate;
  int transitions = 0;
  int sweeps = 0;
};

// Dirichlet minimizer in the homotopy class of f0, from the elastic graph
// (domain, alpha) to the length graph (codomain, ell). Alternates exact
// per-cell quadratic minimization over vertex offsets with combinatorial
// cell transitions, which strictly decrease the energy.
HarmonicResult harmonic_solve(const GraphMap& f0, const EdgeScalars& alpha,
                              const std::vector<double>& ell, const HarmonicOptions& opts = {});

// Gate/triangle-inequality certificate of harmonicity for the positive-
// tension subgraph.
GateReport harmonic_certificate(const GraphMap& f, const EdgeScalars& alpha,
                                const std::vector<double>& ell, double tol);

struct WeakHarmonicResult {
  HarmonicResult collapsed;  // solution on the collapsed codomain
  MarkedGraph collapsed_codomain;
  std::vector<int> codomain_vertex_map;  // original -> collapsed
  std::vector<int> codomain_edge_map;    // original edge -> collapsed edge or -1
  std::vector<char> domain_edge_in_null;  // image lies inside a null component
  std::vector<std::vector<int>> lift_words;  // original-codomain words recording the lift class
};

// Harmonic map to a weak length graph (ell >= 0): solves on the collapsed
// target and records the lift data through the null subgraph.
WeakHarmonicResult harmonic_solve_weak(const GraphMap& f0, const EdgeScalars& alpha,
                                       const std::vector<double>& ell,
                                       const HarmonicOptions& opts = {});

struct DirHResult {
  double dir = 0;
  std::vector<double> H;  // per-edge image lengths of the minimizer
};

DirHResult dir_and_H_of_lengths(const GraphMap& f_class, const EdgeScalars& alpha,
                                const std::vector<double>& ell, const HarmonicOptions& opts = {});

struct RelaxedCheck {
  bool ok = true;
  double worst_violation = 0;
  std::optional<CurveComponent> violator;
};

// Verifies sum n_c(e) r(e) >= ell[f.c] over all candidate curves.
RelaxedCheck check_relaxed(const std::vector<double>& r, const GraphMap& f,
                           const std::vector<double>& ell, double tol = 1e-9);

}  // namespace elastigraph
