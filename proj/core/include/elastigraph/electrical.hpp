#pragma once

#include <vector>

#include "elastigraph/graph.hpp"

namespace elastigraph {

// Symmetric node-voltage -> node-current map of a resistor network;
// rows sum to zero.
struct ResponseMatrix {
  int n = 0;
  std::vector<Rat> a;  // row-major n*n

  Rat& at(int i, int j) { return a[i * n + j]; }
  const Rat& at(int i, int j) const { return a[i * n + j]; }
};

// Schur complement of the conductance Laplacian (conductance 1/alpha)
// onto the marked vertices (nodes), in mark index order. Throws if some
// internal component has no path to a node.
ResponseMatrix response_matrix(const MarkedGraph& g, const EdgeScalars& alpha);

// Dissipated power for the given node voltages: V^T L V.
Rat electrical_energy(const ResponseMatrix& m, const std::vector<Rat>& volts);

struct YDelta {
  Rat a, b, c;
};
// Star resistances -> triangle resistances.
YDelta y_to_delta(const YDelta& r);
// Triangle -> star.
YDelta delta_to_y(const YDelta& R);

// Series/parallel/self-loop simplification; preserves the response
// matrix exactly.
struct ReduceResult {
  MarkedGraph graph;
  EdgeScalars alpha;
  int series_steps = 0;
  int parallel_steps = 0;
  int loops_dropped = 0;
};
ReduceResult reduce_network(const MarkedGraph& g, const EdgeScalars& alpha);

bool response_equal(const ResponseMatrix& a, const ResponseMatrix& b);
bool response_close(const ResponseMatrix& a, const ResponseMatrix& b, double rel_tol);

}  // namespace elastigraph
