#pragma once

#include <optional>
#include <vector>

#include "elastigraph/harmonic.hpp"
#include "elastigraph/taut.hpp"

namespace elastigraph {

// Weights and lengths on one graph; compatible with elastic constants
// when ell = alpha * w edge-wise.
struct StripStructure {
  EdgeScalars weights;
  EdgeScalars lengths;
  Rat area() const;
};

// D(w)(e) = alpha(e) * w(e)^(1/(p-1)); the supporting-length map. Exact
// for p = 2; float otherwise. p must lie in (1, inf).
EdgeScalars duality(const EdgeScalars& w, const EdgeScalars& alpha, const Rat& p);
std::vector<double> duality(const std::vector<double>& w, const EdgeScalars& alpha, double p);
std::vector<double> duality_inverse(const std::vector<double>& ell, const EdgeScalars& alpha,
                                    double p);

struct IterOptions {
  double tol = 1e-9;
  int max_iters = 10000;
  unsigned seed = 0;  // 0 = all-ones initial lengths
  double boundary_eps = 1e-7;
  HarmonicOptions harmonic;
  bool cell_solve = true;  // exact fixed-ray solve on combinatorial cycling
};

struct IterStep {
  int index = 0;
  std::vector<double> lengths;      // ell_i, normalized
  std::vector<double> pullback;     // m_i
  std::vector<double> weights;      // w_i = D1^{-1}(m_i)
  std::vector<double> pushforward;  // v_i
  double lambda_dr = 0;             // DR(ell_i)
  double scale = 0;                 // sum of the un-normalized next lengths
  size_t cell = 0;                  // combinatorial type id of the harmonic map
};

struct IterationTrace {
  std::vector<IterStep> steps;
  bool converged = false;
  double lambda = 0;                 // DR at the fixed ray
  std::vector<double> ell_fixed;     // normalized
  std::vector<double> weights_fixed;  // tension weights on the domain
  std::vector<double> push_fixed;     // pushforward on the codomain
  GraphMap map;                      // harmonic representative at the fixed ray
  StrandMap strands;
};

struct IterStepResult {
  std::vector<double> next_lengths;  // un-normalized
  IterStep record;
  HarmonicResult harmonic;
  HarmonicResult id_harmonic;
};

// One loop of the duality iteration at lengths ell on the codomain.
IterStepResult iter_step(const std::vector<double>& ell, const GraphMap& phi,
                         const EdgeScalars& alpha1, const EdgeScalars& alpha2,
                         const IterOptions& opts = {}, const GraphMap* warm = nullptr,
                         const GraphMap* warm_id = nullptr);

IterationTrace iterate_to_fixed(std::vector<double> ell0, const GraphMap& phi,
                                const EdgeScalars& alpha1, const EdgeScalars& alpha2,
                                const IterOptions& opts = {});

struct BoundaryDecomposition {
  bool interior = true;
  std::vector<int> delta1, delta2;  // filling edges (original indices)
  std::vector<int> sigma1, sigma2;  // null edges
  MarkedGraph sigma1_graph, sigma2_graph;  // with the shared vertices marked
  std::vector<int> sigma1_edge_back, sigma2_edge_back;
  std::vector<int> sigma1_vertex_back, sigma2_vertex_back;
  GraphMap restricted;  // class on the sigma graphs
};

// Splits a boundary fixed point into the filling part and the null part;
// throws if a positive-tension edge maps into the null subgraph (the
// threshold was too coarse).
BoundaryDecomposition boundary_decompose(const IterationTrace& fixed, const EdgeScalars& alpha1,
                                         const EdgeScalars& alpha2, double eps_rel);

struct TightReport {
  bool checked = false;
  double el_c = 0, emb_psi = 0, dir_f = 0, len_composite = 0;
  double chain_residual = 0;     // sqrt(EL)*sqrt(Emb)*sqrt(Dir) - ell
  double pair_el_residual = 0;   // EL(psi.c) - EL(c)*Emb(psi)
  double pair_dir_residual = 0;  // Dir(f.psi) - Emb(psi)*Dir(f)
  bool harmonic_ok = false;
  bool pushforward_constant = false;
  bool passed = false;
};

struct EmbCertificate {
  double lambda = 0;
  bool converged = true;
  int iterations = 0;
  int restarts = 0;
  GraphMap psi;  // on the input graphs
  StrandMap psi_strands;
  double emb_psi = 0;
  MultiCurve witness;  // on the domain
  bool witness_exact = true;
  double el_ratio = 0;
  Rat el_ratio_exact = 0;
  std::vector<int> delta1, delta2;
  MarkedGraph k_graph;  // codomain with non-filling edges collapsed
  std::vector<double> k_lengths;
  GraphMap collapse_map;  // codomain -> K
  std::vector<double> ell_fixed;
  double lower_bound = 0, upper_bound = 0;  // sandwich (equal to lambda at convergence)
  TightReport report;
};

// Emb[phi] = SF_Dir[phi] = SF_EL[phi] via the duality iteration, with
// boundary decomposition, restarts, and a tight-sequence certificate.
EmbCertificate compute_emb(const GraphMap& phi, const EdgeScalars& alpha1,
                           const EdgeScalars& alpha2, const IterOptions& opts = {});

TightReport verify_tight(const EmbCertificate& cert, const EdgeScalars& alpha1,
                         const EdgeScalars& alpha2, double tol);

// Approximate peeling for train tracks with floating weights; used when
// the fixed-point tensions do not snap to an exactly balanced rational
// train track.
MultiCurve tt_to_multicurve_approx(const TrainTrack& t, double eps);

}  // namespace elastigraph
