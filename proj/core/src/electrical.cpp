#include "elastigraph/electrical.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace elastigraph {

ResponseMatrix response_matrix(const MarkedGraph& g, const EdgeScalars& alpha) {
  validate_scalars(g, alpha);
  auto nodes = g.marked_vertices();
  if (nodes.empty()) throw std::invalid_argument("response_matrix: no nodes (marked vertices)");
  int n = static_cast<int>(g.vertices.size());

  // Every internal component must reach a node.
  {
    std::vector<char> seen(n, 0);
    std::queue<int> q;
    for (int v : nodes) {
      seen[v] = 1;
      q.push(v);
    }
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int o : g.oedges_at(v)) {
        int u = g.head(o);
        if (!seen[u]) {
          seen[u] = 1;
          q.push(u);
        }
      }
    }
    for (int v = 0; v < n; ++v) {
      if (!seen[v]) throw std::invalid_argument("response_matrix: floating internal component at '" +
                                                g.vertices[v].id + "'");
    }
  }

  // Full weighted Laplacian.
  std::vector<Rat> L(static_cast<size_t>(n) * n, Rat(0));
  auto at = [&](int i, int j) -> Rat& { return L[static_cast<size_t>(i) * n + j]; };
  for (size_t e = 0; e < g.edges.size(); ++e) {
    int a = g.edges[e].ends[0], b = g.edges[e].ends[1];
    if (a == b) continue;  // self-loop carries no current
    Rat c = Rat(1) / alpha.values[e];
    at(a, a) += c;
    at(b, b) += c;
    at(a, b) -= c;
    at(b, a) -= c;
  }

  // Kron-eliminate internal vertices (exact).
  std::vector<char> is_node(n, 0);
  for (int v : nodes) is_node[v] = 1;
  std::vector<int> alive;
  for (int v = 0; v < n; ++v) alive.push_back(v);
  for (int v = 0; v < n; ++v) {
    if (is_node[v]) continue;
    Rat d = at(v, v);
    if (d == 0) {
      // Isolated internal vertex was caught by the connectivity check.
      continue;
    }
    for (int i : alive) {
      if (i == v || at(i, v) == 0) continue;
      for (int j : alive) {
        if (j == v) continue;
        at(i, j) -= at(i, v) * at(v, j) / d;
      }
    }
    for (int i : alive) {
      at(i, v) = 0;
      at(v, i) = 0;
    }
    alive.erase(std::remove(alive.begin(), alive.end(), v), alive.end());
  }

  ResponseMatrix m;
  m.n = static_cast<int>(nodes.size());
  m.a.assign(static_cast<size_t>(m.n) * m.n, Rat(0));
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) m.at(i, j) = at(nodes[i], nodes[j]);
  return m;
}

Rat electrical_energy(const ResponseMatrix& m, const std::vector<Rat>& volts) {
  if (static_cast<int>(volts.size()) != m.n)
    throw std::invalid_argument("electrical_energy: voltage vector size mismatch");
  Rat total = 0;
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) total += volts[i] * m.at(i, j) * volts[j];
  return total;
}

YDelta y_to_delta(const YDelta& r) {
  Rat s = r.a * r.b + r.b * r.c + r.a * r.c;
  return {s / r.a, s / r.b, s / r.c};
}

YDelta delta_to_y(const YDelta& R) {
  Rat s = R.a + R.b + R.c;
  return {R.b * R.c / s, R.a * R.c / s, R.a * R.b / s};
}

ReduceResult reduce_network(const MarkedGraph& g, const EdgeScalars& alpha) {
  ReduceResult r{g, alpha, 0, 0, 0};
  bool changed = true;
  while (changed) {
    changed = false;
    // Self-loops.
    for (size_t e = 0; e < r.graph.edges.size(); ++e) {
      if (r.graph.edges[e].ends[0] == r.graph.edges[e].ends[1]) {
        r.graph.edges.erase(r.graph.edges.begin() + e);
        r.alpha.values.erase(r.alpha.values.begin() + e);
        ++r.loops_dropped;
        changed = true;
        break;
      }
    }
    if (changed) continue;
    // Parallel pairs.
    for (size_t e = 0; e < r.graph.edges.size() && !changed; ++e) {
      for (size_t f = e + 1; f < r.graph.edges.size() && !changed; ++f) {
        int a0 = r.graph.edges[e].ends[0], a1 = r.graph.edges[e].ends[1];
        int b0 = r.graph.edges[f].ends[0], b1 = r.graph.edges[f].ends[1];
        if ((a0 == b0 && a1 == b1) || (a0 == b1 && a1 == b0)) {
          Rat merged = r.alpha.values[e] * r.alpha.values[f] /
                       (r.alpha.values[e] + r.alpha.values[f]);
          r.alpha.values[e] = merged;
          r.graph.edges.erase(r.graph.edges.begin() + f);
          r.alpha.values.erase(r.alpha.values.begin() + f);
          ++r.parallel_steps;
          changed = true;
        }
      }
    }
    if (changed) continue;
    // Series contraction at unmarked valence-2 vertices.
    for (size_t v = 0; v < r.graph.vertices.size() && !changed; ++v) {
      if (r.graph.vertices[v].marked) continue;
      auto hs = r.graph.half_edges_at(static_cast<int>(v));
      if (hs.size() != 2) continue;
      int e1 = hs[0] / 2, e2 = hs[1] / 2;
      if (e1 == e2) continue;
      int u = r.graph.edges[e1].ends[0] == static_cast<int>(v) ? r.graph.edges[e1].ends[1]
                                                               : r.graph.edges[e1].ends[0];
      int x = r.graph.edges[e2].ends[0] == static_cast<int>(v) ? r.graph.edges[e2].ends[1]
                                                               : r.graph.edges[e2].ends[0];
      r.graph.edges[e1].ends[0] = u;
      r.graph.edges[e1].ends[1] = x;
      r.alpha.values[e1] = r.alpha.values[e1] + r.alpha.values[e2];
      r.graph.edges.erase(r.graph.edges.begin() + e2);
      r.alpha.values.erase(r.alpha.values.begin() + e2);
      ++r.series_steps;
      changed = true;
    }
  }
  // Drop unmarked vertices left isolated by the contractions.
  std::vector<int> remap(r.graph.vertices.size(), -1);
  MarkedGraph compact;
  for (size_t v = 0; v < r.graph.vertices.size(); ++v) {
    bool used = r.graph.vertices[v].marked;
    for (const auto& e : r.graph.edges)
      if (e.ends[0] == static_cast<int>(v) || e.ends[1] == static_cast<int>(v)) used = true;
    if (used) remap[v] = compact.add_vertex(r.graph.vertices[v].id, r.graph.vertices[v].marked);
  }
  for (auto& e : r.graph.edges) {
    e.ends[0] = remap[e.ends[0]];
    e.ends[1] = remap[e.ends[1]];
  }
  compact.edges = r.graph.edges;
  r.graph = std::move(compact);
  return r;
}

bool response_equal(const ResponseMatrix& a, const ResponseMatrix& b) {
  return a.n == b.n && a.a == b.a;
}

bool response_close(const ResponseMatrix& a, const ResponseMatrix& b, double rel_tol) {
  if (a.n != b.n) return false;
  double scale = 0;
  for (const auto& x : a.a) scale = std::max(scale, std::fabs(to_double(x)));
  for (size_t i = 0; i < a.a.size(); ++i)
    if (std::fabs(to_double(a.a[i] - b.a[i])) > rel_tol * std::max(1.0, scale)) return false;
  return true;
}

}  // namespace elastigraph
