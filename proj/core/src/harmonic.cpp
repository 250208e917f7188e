#include "elastigraph/harmonic.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace elastigraph {

namespace {

// Solver state: vertex image locations plus edge words. Partial first and
// last offsets are implied by the locations; an edge with both endpoints
// inside the same codomain edge stores the single-element word [+e] with a
// signed image length.
struct VLoc {
  int tvertex = -1;
  int tedge = -1;
  double off = 0;  // codomain edge coordinate

  bool at_vertex() const { return tvertex >= 0; }
};

struct Solver {
  const MarkedGraph& dom;
  const MarkedGraph& cod;
  std::vector<double> alpha;
  std::vector<double> ell;
  std::vector<VLoc> loc;
  std::vector<std::vector<int>> words;
  int transitions = 0;
  int sweeps = 0;

  Solver(const GraphMap& f, const EdgeScalars& a, const std::vector<double>& lengths)
      : dom(f.domain), cod(f.codomain), ell(lengths) {
    alpha = scalars_to_double(a);
    loc.resize(dom.vertices.size());
    for (size_t v = 0; v < dom.vertices.size(); ++v) {
      const auto& p = f.vertex_images[v];
      if (p.is_vertex())
        loc[v] = {p.vertex, -1, 0};
      else
        loc[v] = {-1, p.edge, to_double(p.offset)};
    }
    words.resize(dom.edges.size());
    for (size_t e = 0; e < dom.edges.size(); ++e) {
      words[e] = f.edge_paths[e].word;
      canonicalize_edge(static_cast<int>(e));
    }
  }

  // Canonical form for both-ends-interior-same-edge paths: word [+e].
  void canonicalize_edge(int d) {
    int a = dom.edges[d].ends[0], b = dom.edges[d].ends[1];
    if (words[d].size() == 1 && !loc[a].at_vertex() && !loc[b].at_vertex() &&
        loc[a].tedge == loc[b].tedge && oedge_edge(words[d][0]) == loc[a].tedge) {
      words[d][0] = oedge(loc[a].tedge, 0);
    }
    if (words[d].empty() && a != b) {
      // Distinct endpoints with a constant path must sit at one point; if
      // inside an edge, switch to the signed single-element form.
      if (!loc[a].at_vertex()) words[d] = {oedge(loc[a].tedge, 0)};
    }
  }

  static double oriented_coord(const VLoc& l, int o) {
    return oedge_dir(o) == 0 ? l.off : 1 - l.off;
  }

  // Image length of edge d (signed only in the single-element
  // both-interior case).
  double image_length(int d) const {
    const auto& w = words[d];
    if (w.empty()) return 0;
    int a = dom.edges[d].ends[0], b = dom.edges[d].ends[1];
    double su = loc[a].at_vertex() ? 0.0 : oriented_coord(loc[a], w.front());
    double eu = loc[b].at_vertex() ? 1.0 : oriented_coord(loc[b], w.back());
    if (w.size() == 1) return ell[oedge_edge(w[0])] * (eu - su);
    double m = ell[oedge_edge(w.front())] * (1 - su) + ell[oedge_edge(w.back())] * eu;
    for (size_t i = 1; i + 1 < w.size(); ++i) m += ell[oedge_edge(w[i])];
    return m;
  }

  // d(image_length of d)/d(off of v).
  double dm_doff(int d, int v) const {
    const auto& w = words[d];
    if (w.empty()) return 0;
    double k = 0;
    int a = dom.edges[d].ends[0], b = dom.edges[d].ends[1];
    if (a == v && !loc[a].at_vertex()) {
      int o = w.front();
      double dudoff = oedge_dir(o) == 0 ? 1.0 : -1.0;
      k -= ell[oedge_edge(o)] * dudoff;  // contribution is -ell*su
    }
    if (b == v && !loc[b].at_vertex()) {
      int o = w.back();
      double dudoff = oedge_dir(o) == 0 ? 1.0 : -1.0;
      k += ell[oedge_edge(o)] * dudoff;
    }
    return k;
  }

  double dirichlet() const {
    double total = 0;
    for (size_t d = 0; d < words.size(); ++d) {
      double m = image_length(static_cast<int>(d));
      total += m * m / alpha[d];
    }
    return total;
  }

  std::vector<int> free_vertices() const {
    std::vector<int> out;
    for (size_t v = 0; v < loc.size(); ++v)
      if (!loc[v].at_vertex()) out.push_back(static_cast<int>(v));
    return out;
  }

  // One exact minimization of the energy in loc[v].off, clamped to [0,1].
  double descend_coordinate(int v) {
    double num = 0, den = 0;
    double cur = loc[v].off;
    for (size_t d = 0; d < words.size(); ++d) {
      int a = dom.edges[d].ends[0], b = dom.edges[d].ends[1];
      if (a != v && b != v) continue;
      double k = dm_doff(static_cast<int>(d), v);
      if (k == 0) continue;
      double m = image_length(static_cast<int>(d));
      double c0 = m - k * cur;
      num += c0 * k / alpha[d];
      den += k * k / alpha[d];
    }
    if (den == 0) return 0;
    double target = std::clamp(-num / den, 0.0, 1.0);
    double moved = std::fabs(target - cur);
    loc[v].off = target;
    return moved;
  }

  // Direct solve of the interior quadratic; returns false if the
  // unconstrained optimum leaves the box or the system is singular.
  bool try_direct_solve() {
    auto frees = free_vertices();
    if (frees.empty()) return true;
    size_t n = frees.size();
    std::map<int, int> idx;
    for (size_t i = 0; i < n; ++i) idx[frees[i]] = static_cast<int>(i);
    std::vector<double> A(n * n, 0.0), rhs(n, 0.0);
    for (size_t d = 0; d < words.size(); ++d) {
      int a = dom.edges[d].ends[0], b = dom.edges[d].ends[1];
      std::vector<std::pair<int, double>> ks;
      for (int v : {a, b}) {
        if (!idx.count(v)) continue;
        double k = dm_doff(static_cast<int>(d), v);
        if (k != 0) ks.push_back({idx[v], k});
        if (a == b) break;  // self-loop: dm_doff already sums both ends
      }
      if (ks.empty()) continue;
      double m = image_length(static_cast<int>(d));
      double c0 = m;
      for (auto [i, k] : ks) c0 -= k * loc[frees[i]].off;
      for (auto [i, ki] : ks) {
        rhs[i] -= c0 * ki / alpha[d];
        for (auto [j, kj] : ks) A[i * n + j] += ki * kj / alpha[d];
      }
    }
    // Gaussian elimination with partial pivoting.
    std::vector<double> M = A, x = rhs;
    std::vector<int> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = static_cast<int>(i);
    for (size_t col = 0; col < n; ++col) {
      size_t piv = col;
      for (size_t r = col + 1; r < n; ++r)
        if (std::fabs(M[r * n + col]) > std::fabs(M[piv * n + col])) piv = r;
      if (std::fabs(M[piv * n + col]) < 1e-14) return false;
      if (piv != col) {
        for (size_t c = 0; c < n; ++c) std::swap(M[piv * n + c], M[col * n + c]);
        std::swap(x[piv], x[col]);
      }
      for (size_t r = col + 1; r < n; ++r) {
        double f = M[r * n + col] / M[col * n + col];
        if (f == 0) continue;
        for (size_t c = col; c < n; ++c) M[r * n + c] -= f * M[col * n + c];
        x[r] -= f * x[col];
      }
    }
    for (size_t i = n; i-- > 0;) {
      double s = x[i];
      for (size_t j = i + 1; j < n; ++j) s -= M[i * n + j] * x[j];
      x[i] = s / M[i * n + i];
      if (!(x[i] >= -1e-12 && x[i] <= 1 + 1e-12)) return false;
    }
    for (size_t i = 0; i < n; ++i) loc[frees[i]].off = std::clamp(x[i], 0.0, 1.0);
    return true;
  }

  void run_qp(const HarmonicOptions& opts) {
    if (try_direct_solve()) return;
    auto frees = free_vertices();
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
      ++sweeps;
      double moved = 0;
      for (int v : frees) moved = std::max(moved, descend_coordinate(v));
      if (moved < opts.qp_tol) break;
    }
  }

  // --- transitions -------------------------------------------------------

  // Converts one interior vertex sitting at (or within eps of) an edge
  // endpoint into an at-vertex location, updating the incident words.
  // Returns true if a vertex was snapped; callers loop.
  bool snap_one(double eps) {
    for (size_t vz = 0; vz < loc.size(); ++vz) {
      int v = static_cast<int>(vz);
      if (loc[v].at_vertex()) continue;
      if (loc[v].off > eps && loc[v].off < 1 - eps) continue;
      int e = loc[v].tedge;
      int side = loc[v].off <= eps ? 0 : 1;
      int target = cod.edges[e].ends[side];
      for (size_t d = 0; d < words.size(); ++d) {
        int a = dom.edges[d].ends[0], b = dom.edges[d].ends[1];
        if (a != v && b != v) continue;
        auto& w = words[d];
        if (w.empty()) continue;
        bool signed_pair = w.size() == 1 && !loc[a].at_vertex() && !loc[b].at_vertex() &&
                           loc[a].tedge == loc[b].tedge;
        if (signed_pair) {
          // Re-derive the single-element word geometrically: path from the
          // snapped endpoint's new vertex to the other interior point.
          if (a == v && b == v) {
            w.clear();  // constant self-loop
          } else if (a == v) {
            w = {oedge(e, side == 0 ? 0 : 1)};
          } else {
            w = {oedge(e, side == 0 ? 1 : 0)};
          }
          continue;
        }
        if (a == v) {
          // After the snap, the first element starts at u in {0,1}; a start
          // at u=1 is degenerate and drops.
          double u = side == 0 ? (oedge_dir(w.front()) == 0 ? 0.0 : 1.0)
                               : (oedge_dir(w.front()) == 0 ? 1.0 : 0.0);
          if (u == 1.0) w.erase(w.begin());
        }
        if (!w.empty() && b == v) {
          double u = side == 0 ? (oedge_dir(w.back()) == 0 ? 0.0 : 1.0)
                               : (oedge_dir(w.back()) == 0 ? 1.0 : 0.0);
          if (u == 0.0) w.pop_back();
        }
      }
      loc[v] = {target, -1, 0};
      ++transitions;
      for (size_t d = 0; d < words.size(); ++d) canonicalize_edge(static_cast<int>(d));
      return true;
    }
    return false;
  }

  bool snap_boundary(double eps) {
    bool changed = false;
    while (snap_one(eps)) changed = true;
    return changed;
  }

  struct Germ {
    int edge;
    bool at_start;
    int direction;  // first oriented codomain edge of the outgoing path
    double tension;
  };

  std::vector<Germ> germs_at(int v, double zero_eps) const {
    std::vector<Germ> out;
    for (size_t d = 0; d < words.size(); ++d) {
      int a = dom.edges[d].ends[0], b = dom.edges[d].ends[1];
      if (a != v && b != v) continue;
      const auto& w = words[d];
      if (w.empty()) continue;
      double t = std::fabs(image_length(static_cast<int>(d))) / alpha[d];
      if (a == v) {
        int o = w.front();
        // Signed single-element case: the actual outgoing direction flips
        // when the image length is negative.
        if (w.size() == 1 && image_length(static_cast<int>(d)) < 0) o = oedge_reverse(o);
        if (t > zero_eps) out.push_back({static_cast<int>(d), true, o, t});
      }
      if (b == v) {
        int o = oedge_reverse(w.back());
        if (w.size() == 1 && image_length(static_cast<int>(d)) < 0) o = oedge_reverse(o);
        if (t > zero_eps) out.push_back({static_cast<int>(d), false, o, t});
      }
    }
    return out;
  }

  // Moves one at-vertex vertex into the edge of a strictly dominating
  // gate. Returns true if a move happened.
  bool gate_transition(double margin) {
    for (size_t v = 0; v < loc.size(); ++v) {
      if (!loc[v].at_vertex() || dom.vertices[v].marked) continue;
      double scale = 0;
      auto germs = germs_at(static_cast<int>(v), 0.0);
      for (const auto& g : germs) scale += g.tension;
      if (scale == 0) continue;
      std::map<int, double> gate_tension;
      for (const auto& g : germs) gate_tension[g.direction] += g.tension;
      int best_dir = -1;
      double best_excess = 0;
      for (const auto& [dir, t] : gate_tension) {
        double excess = t - (scale - t);
        if (excess > best_excess) {
          best_excess = excess;
          best_dir = dir;
        }
      }
      if (best_dir < 0 || best_excess <= margin * (scale + 1)) continue;
      move_into_edge(static_cast<int>(v), best_dir);
      return true;
    }
    return false;
  }

  void move_into_edge(int v, int o_star) {
    int e = oedge_edge(o_star);
    double off0 = oedge_dir(o_star) == 0 ? 0.0 : 1.0;
    for (size_t d = 0; d < words.size(); ++d) {
      int a = dom.edges[d].ends[0], b = dom.edges[d].ends[1];
      if (a != v && b != v) continue;
      auto& w = words[d];
      if (w.empty() && a == b) continue;  // constant self-loop travels with v
      if (a == v) {
        if (w.empty() || w.front() != o_star) w.insert(w.begin(), oedge_reverse(o_star));
      }
      if (b == v) {
        if (w.empty() || w.back() != oedge_reverse(o_star)) w.push_back(o_star);
      }
    }
    loc[v] = {-1, e, off0};
    ++transitions;
    for (size_t d = 0; d < words.size(); ++d) canonicalize_edge(static_cast<int>(d));
  }

  GraphMap to_map() const {
    GraphMap f;
    f.domain = dom;
    f.codomain = cod;
    f.vertex_images.resize(loc.size());
    for (size_t v = 0; v < loc.size(); ++v) {
      if (loc[v].at_vertex())
        f.vertex_images[v] = PointOnGraph::at_vertex(loc[v].tvertex);
      else
        f.vertex_images[v] = PointOnGraph::on_edge(loc[v].tedge, rat_from_double(loc[v].off));
    }
    f.edge_paths.resize(words.size());
    for (size_t d = 0; d < words.size(); ++d) {
      int a = dom.edges[d].ends[0], b = dom.edges[d].ends[1];
      std::vector<int> w = words[d];
      // Degenerate or reversed single-element paths are canonicalized.
      if (w.size() == 1 && !loc[a].at_vertex() && !loc[b].at_vertex() &&
          loc[a].tedge == loc[b].tedge) {
        if (loc[a].off == loc[b].off) {
          w.clear();
        } else if (image_length(static_cast<int>(d)) < 0) {
          w[0] = oedge_reverse(w[0]);
        }
      }
      EdgePath p;
      p.word = w;
      if (!w.empty()) {
        p.start_u = loc[a].at_vertex() ? Rat(0) : rat_from_double(oriented_u(loc[a], w.front()));
        p.end_u = loc[b].at_vertex() ? Rat(1) : rat_from_double(oriented_u(loc[b], w.back()));
      }
      f.edge_paths[d] = p;
    }
    return f;
  }

  static double oriented_u(const VLoc& l, int o) {
    return oedge_dir(o) == 0 ? l.off : 1 - l.off;
  }
};

}  // namespace

GateReport harmonic_certificate(const GraphMap& f, const EdgeScalars& alpha,
                                const std::vector<double>& ell, double tol) {
  GateReport rep;
  EdgeScalars ellr = scalars_from_double(ScalarKind::Length, ell);
  auto m = pullback_lengths(f, ellr);
  std::vector<double> tension(f.domain.edges.size());
  double max_t = 0;
  for (size_t e = 0; e < tension.size(); ++e) {
    tension[e] = to_double(m.values[e]) / to_double(alpha.values[e]);
    max_t = std::max(max_t, tension[e]);
  }
  rep.scale = max_t;
  double zero_eps = tol * std::max(1.0, max_t);

  rep.worst_slack = 0;
  bool any = false;
  for (size_t v = 0; v < f.domain.vertices.size(); ++v) {
    if (f.domain.vertices[v].marked) continue;
    // Germs with positive tension, grouped by image direction.
    std::map<int, std::pair<double, std::vector<int>>> gates;  // dir -> (tension, half-edges)
    for (size_t d = 0; d < f.domain.edges.size(); ++d) {
      const auto& path = f.edge_paths[d];
      if (path.constant() || tension[d] <= zero_eps) continue;
      if (f.domain.edges[d].ends[0] == static_cast<int>(v)) {
        auto& g = gates[path.word.front()];
        g.first += tension[d];
        g.second.push_back(2 * static_cast<int>(d) + 0);
      }
      if (f.domain.edges[d].ends[1] == static_cast<int>(v)) {
        auto& g = gates[oedge_reverse(path.word.back())];
        g.first += tension[d];
        g.second.push_back(2 * static_cast<int>(d) + 1);
      }
    }
    if (gates.empty()) continue;
    GateEntry entry;
    entry.vertex = static_cast<int>(v);
    entry.at_codomain_vertex = f.vertex_images[v].is_vertex();
    double total = 0;
    for (const auto& [dir, g] : gates) total += g.first;
    entry.slack = 1e300;
    for (const auto& [dir, g] : gates) {
      entry.gates.push_back(g.second);
      entry.gate_tension.push_back(g.first);
      entry.slack = std::min(entry.slack, total - 2 * g.first);
    }
    if (!entry.at_codomain_vertex && gates.size() != 2) {
      // An interior image needs exactly two balanced gates; a single gate
      // is an unbalanced vertex.
      entry.slack = std::min(entry.slack, -total);
    }
    if (!any || entry.slack < rep.worst_slack) rep.worst_slack = entry.slack;
    any = true;
    rep.entries.push_back(std::move(entry));
  }
  rep.passed = rep.worst_slack >= -tol * std::max(1.0, max_t);
  return rep;
}

HarmonicResult harmonic_solve(const GraphMap& f0, const EdgeScalars& alpha,
                              const std::vector<double>& ell, const HarmonicOptions& opts) {
  validate_scalars(f0.domain, alpha);
  if (ell.size() != f0.codomain.edges.size())
    throw std::invalid_argument("harmonic_solve: length table size mismatch");
  for (double l : ell)
    if (!(l > 0)) throw std::invalid_argument("harmonic_solve: lengths must be positive");
  {
    auto rep = validate_map(f0);
    if (!rep.ok()) throw std::invalid_argument("harmonic_solve: " + rep.errors.front());
  }

  Solver s(reduce_map(f0), alpha, ell);
  double margin = 1e-10;
  double last_energy = s.dirichlet();
  for (int round = 0; round < opts.max_transitions; ++round) {
    s.run_qp(opts);
    bool snapped = s.snap_boundary(0.0);
    if (snapped) continue;
    if (!s.gate_transition(margin)) break;
    double e = s.dirichlet();
    if (e > last_energy + 1e-9 * (1 + last_energy))
      throw std::logic_error("harmonic_solve: transition increased energy");
    last_energy = e;
  }
  s.snap_boundary(opts.snap_eps);
  s.run_qp(opts);
  s.snap_boundary(0.0);

  HarmonicResult res;
  res.map = s.to_map();
  res.transitions = s.transitions;
  res.sweeps = s.sweeps;
  res.dirichlet = s.dirichlet();
  res.tension.resize(s.words.size());
  res.pullback.resize(s.words.size());
  for (size_t d = 0; d < s.words.size(); ++d) {
    res.pullback[d] = std::fabs(s.image_length(static_cast<int>(d)));
    res.tension[d] = res.pullback[d] / s.alpha[d];
  }
  std::vector<Rat> lr;
  lr.reserve(ell.size());
  for (double l : ell) lr.push_back(rat_from_double(l));
  res.strands = canonical_strands(res.map, lr);
  res.certificate = harmonic_certificate(res.map, alpha, ell, opts.cert_tol);
  return res;
}

WeakHarmonicResult harmonic_solve_weak(const GraphMap& f0, const EdgeScalars& alpha,
                                       const std::vector<double>& ell,
                                       const HarmonicOptions& opts) {
  WeakHarmonicResult out;
  std::vector<int> null_edges;
  for (size_t e = 0; e < ell.size(); ++e)
    if (ell[e] == 0) null_edges.push_back(static_cast<int>(e));

  SubgraphRef null(f0.codomain, null_edges);
  auto col = collapse_subgraph(f0.codomain, null);
  out.collapsed_codomain = col.graph;
  out.codomain_vertex_map = col.vertex_map;
  out.codomain_edge_map = col.edge_map;

  // Vertices of the collapsed graph that absorbed a null component.
  std::vector<char> from_null(col.graph.vertices.size(), 0);
  for (int e : null_edges) {
    from_null[col.vertex_map[f0.codomain.edges[e].ends[0]]] = 1;
    from_null[col.vertex_map[f0.codomain.edges[e].ends[1]]] = 1;
  }

  // Push the class through the collapse.
  GraphMap g;
  g.domain = f0.domain;
  g.codomain = col.graph;
  g.vertex_images.resize(f0.vertex_images.size());
  for (size_t v = 0; v < f0.vertex_images.size(); ++v) {
    const auto& p = f0.vertex_images[v];
    if (p.is_vertex())
      g.vertex_images[v] = PointOnGraph::at_vertex(col.vertex_map[p.vertex]);
    else if (col.edge_map[p.edge] >= 0)
      g.vertex_images[v] = PointOnGraph::on_edge(col.edge_map[p.edge], p.offset);
    else
      g.vertex_images[v] =
          PointOnGraph::at_vertex(col.vertex_map[f0.codomain.edges[p.edge].ends[0]]);
  }
  g.edge_paths.resize(f0.edge_paths.size());
  out.domain_edge_in_null.assign(f0.edge_paths.size(), 0);
  out.lift_words.resize(f0.edge_paths.size());
  for (size_t d = 0; d < f0.edge_paths.size(); ++d) {
    const auto& p = f0.edge_paths[d];
    PathBuilder pb;
    for (size_t i = 0; i < p.word.size(); ++i) {
      int o = p.word[i];
      if (col.edge_map[oedge_edge(o)] < 0) continue;
      Rat u0 = (i == 0) ? p.start_u : Rat(0);
      Rat u1 = (i + 1 == p.word.size()) ? p.end_u : Rat(1);
      pb.push(oedge(col.edge_map[oedge_edge(o)], oedge_dir(o)), u0, u1);
    }
    g.edge_paths[d] = pb.to_edge_path();
    if (g.edge_paths[d].constant()) {
      const auto& img = g.vertex_images[f0.domain.edges[d].ends[0]];
      if (img.is_vertex() && from_null[img.vertex]) {
        out.domain_edge_in_null[d] = 1;
        out.lift_words[d] = p.word;  // lift class through the null subgraph
      }
    }
  }

  std::vector<double> live;
  for (size_t e = 0; e < ell.size(); ++e)
    if (col.edge_map[e] >= 0) live.push_back(ell[e]);
  if (live.empty()) {
    // Fully null target: any reduced representative, zero energy.
    HarmonicResult res;
    res.map = reduce_map(g);
    res.dirichlet = 0;
    res.tension.assign(f0.domain.edges.size(), 0.0);
    res.pullback.assign(f0.domain.edges.size(), 0.0);
    res.certificate.passed = true;
    out.collapsed = std::move(res);
    return out;
  }
  out.collapsed = harmonic_solve(g, alpha, live, opts);
  return out;
}

DirHResult dir_and_H_of_lengths(const GraphMap& f_class, const EdgeScalars& alpha,
                                const std::vector<double>& ell, const HarmonicOptions& opts) {
  auto res = harmonic_solve(f_class, alpha, ell, opts);
  return {res.dirichlet, res.pullback};
}

RelaxedCheck check_relaxed(const std::vector<double>& r, const GraphMap& f,
                           const std::vector<double>& ell, double tol) {
  RelaxedCheck out;
  auto candidates = enumerate_candidates(f.domain);
  EdgeScalars ellr = scalars_from_double(ScalarKind::Length, ell);
  double scale = 1;
  for (double x : ell) scale = std::max(scale, x);
  for (const auto& c : candidates) {
    double lhs = 0;
    for (int o : c.word) lhs += r[oedge_edge(o)];
    MultiCurve mc;
    mc.components.push_back(c);
    auto pushed = push_curve(mc, f);
    double rhs = pushed.empty() ? 0.0 : to_double(curve_length(f.codomain, pushed, ellr));
    double violation = rhs - lhs;
    if (violation > out.worst_violation) {
      out.worst_violation = violation;
      out.violator = c;
    }
  }
  out.ok = out.worst_violation <= tol * scale;
  return out;
}

}  // namespace elastigraph
