#include "elastigraph/taut.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <functional>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

namespace elastigraph {

namespace {

// Edmonds-Karp with exact rational capacities on an undirected graph.
class RatMaxflow {
 public:
  explicit RatMaxflow(int n) : adj_(n) {}

  void add_undirected(int u, int v, const Rat& cap) {
    if (u == v) return;
    adj_[u].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({v, cap});
    adj_[v].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({u, cap});
  }

  Rat run(int s, int t) {
    Rat total = 0;
    while (true) {
      std::vector<int> pred_arc(adj_.size(), -1);
      std::vector<char> seen(adj_.size(), 0);
      std::queue<int> q;
      q.push(s);
      seen[s] = 1;
      while (!q.empty() && !seen[t]) {
        int v = q.front();
        q.pop();
        for (int a : adj_[v]) {
          if (arcs_[a].cap == 0 || seen[arcs_[a].to]) continue;
          seen[arcs_[a].to] = 1;
          pred_arc[arcs_[a].to] = a;
          q.push(arcs_[a].to);
        }
      }
      if (!seen[t]) break;
      Rat bottleneck = arcs_[pred_arc[t]].cap;
      for (int v = t; v != s;) {
        int a = pred_arc[v];
        bottleneck = rat_min(bottleneck, arcs_[a].cap);
        v = arcs_[a ^ 1].to;
      }
      for (int v = t; v != s;) {
        int a = pred_arc[v];
        arcs_[a].cap -= bottleneck;
        arcs_[a ^ 1].cap += bottleneck;
        v = arcs_[a ^ 1].to;
      }
      total += bottleneck;
    }
    return total;
  }

  std::vector<char> reachable(int s) const {
    std::vector<char> seen(adj_.size(), 0);
    std::queue<int> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int a : adj_[v]) {
        if (arcs_[a].cap == 0 || seen[arcs_[a].to]) continue;
        seen[arcs_[a].to] = 1;
        q.push(arcs_[a].to);
      }
    }
    return seen;
  }

 private:
  struct Arc {
    int to;
    Rat cap;
  };
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adj_;
};

}  // namespace

Cut make_cut(const MarkedGraph& g, const EdgeScalars& w, int mark, std::vector<char> side) {
  Cut c;
  c.mark = mark;
  c.side = std::move(side);
  for (size_t e = 0; e < g.edges.size(); ++e) {
    if (c.side[g.edges[e].ends[0]] != c.side[g.edges[e].ends[1]]) {
      c.cut_edges.push_back(static_cast<int>(e));
      c.weight += w.values[e];
    }
  }
  return c;
}

bool cuts_nested(const Cut& a, const Cut& b) {
  bool a_sub_b = true, b_sub_a = true, disjoint = true;
  for (size_t v = 0; v < a.side.size(); ++v) {
    if (a.side[v] && b.side[v]) disjoint = false;
    if (a.side[v] && !b.side[v]) a_sub_b = false;
    if (b.side[v] && !a.side[v]) b_sub_a = false;
  }
  return disjoint || a_sub_b || b_sub_a;
}

MinCutResult min_cut_between(const MarkedGraph& g, const EdgeScalars& w,
                             const std::vector<int>& sources, const std::vector<int>& sinks) {
  int n = static_cast<int>(g.vertices.size());
  std::vector<int> node(n, -1);
  int src = 0, snk = 1;
  int next = 2;
  std::vector<char> is_src(n, 0), is_snk(n, 0);
  for (int v : sources) is_src[v] = 1;
  for (int v : sinks) is_snk[v] = 1;
  for (int v = 0; v < n; ++v) {
    if (is_src[v] && is_snk[v])
      throw std::invalid_argument("min_cut_between: vertex forced to both sides");
    node[v] = is_src[v] ? src : is_snk[v] ? snk : next++;
  }
  RatMaxflow net(next);
  for (size_t e = 0; e < g.edges.size(); ++e)
    net.add_undirected(node[g.edges[e].ends[0]], node[g.edges[e].ends[1]], w.values[e]);

  MinCutResult res;
  if (sinks.empty()) {
    auto seen = net.reachable(src);
    res.side.resize(n);
    for (int v = 0; v < n; ++v) res.side[v] = seen[node[v]];
    res.value = 0;
    return res;
  }
  res.value = net.run(src, snk);
  auto seen = net.reachable(src);
  res.side.resize(n);
  for (int v = 0; v < n; ++v) res.side[v] = seen[node[v]];
  return res;
}

Cut min_vertex_cut(const MarkedGraph& g, const EdgeScalars& w, int vi) {
  if (vi < 0 || vi >= static_cast<int>(g.vertices.size()) || !g.vertices[vi].marked)
    throw std::invalid_argument("min_vertex_cut: not a marked vertex");
  std::vector<int> sinks;
  for (int m : g.marked_vertices())
    if (m != vi) sinks.push_back(m);
  auto mc = min_cut_between(g, w, {vi}, sinks);
  return make_cut(g, w, vi, mc.side);
}

EdgeScalars minimize_weights(const MarkedGraph& g, const EdgeScalars& w) {
  auto marks = g.marked_vertices();
  std::vector<Rat> m;
  for (int vi : marks) m.push_back(min_vertex_cut(g, w, vi).weight);

  EdgeScalars cur = w;
  for (size_t e = 0; e < g.edges.size(); ++e) {
    if (cur.values[e] == 0) continue;
    EdgeScalars zeroed = cur;
    zeroed.values[e] = 0;
    Rat k0 = 0;
    for (size_t i = 0; i < marks.size(); ++i) {
      Rat z = min_vertex_cut(g, zeroed, marks[i]).weight;
      k0 = rat_max(k0, m[i] - z);
    }
    cur.values[e] = k0;
  }
  return cur;
}

namespace {

bool cut_crosses(const Cut& c, const Edge& e) { return c.side[e.ends[0]] != c.side[e.ends[1]]; }

std::vector<char> side_and(const std::vector<char>& a, const std::vector<char>& b) {
  std::vector<char> r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] && b[i];
  return r;
}
std::vector<char> side_or(const std::vector<char>& a, const std::vector<char>& b) {
  std::vector<char> r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] || b[i];
  return r;
}
std::vector<char> side_minus(const std::vector<char>& a, const std::vector<char>& b) {
  std::vector<char> r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] && !b[i];
  return r;
}

}  // namespace

std::vector<Cut> complete_nested_cuts(const MarkedGraph& g, const EdgeScalars& w,
                                      const std::vector<Cut>& seed) {
  auto marks = g.marked_vertices();
  std::map<int, Rat> mincut;
  for (int vi : marks) mincut[vi] = min_vertex_cut(g, w, vi).weight;

  std::vector<Cut> family = seed;
  for (size_t a = 0; a < family.size(); ++a) {
    if (family[a].weight != mincut.at(family[a].mark))
      throw std::invalid_argument("complete_nested_cuts: seed cut is not minimal");
    for (size_t b = 0; b < a; ++b)
      if (!cuts_nested(family[a], family[b]))
        throw std::invalid_argument("complete_nested_cuts: seed family not nested");
  }

  auto covered = [&](int e) {
    for (const auto& c : family)
      if (cut_crosses(c, g.edges[e])) return true;
    return false;
  };

  size_t guard = 0;
  while (true) {
    if (++guard > g.edges.size() + family.size() + 8)
      throw std::logic_error("complete_nested_cuts did not terminate");
    int target = -1;
    for (size_t e = 0; e < g.edges.size(); ++e) {
      if (w.values[e] > 0 && !covered(static_cast<int>(e))) {
        target = static_cast<int>(e);
        break;
      }
    }
    if (target < 0) break;
    int eu = g.edges[target].ends[0];
    int ev = g.edges[target].ends[1];

    // A minimal vertex cut crossing the target edge; exists by minimality
    // of the weights.
    Cut cand;
    bool found = false;
    for (int vi : marks) {
      for (int orient = 0; orient < 2 && !found; ++orient) {
        int x = orient == 0 ? eu : ev;
        int y = orient == 0 ? ev : eu;
        if (g.vertices[x].marked && x != vi) continue;
        if (y == vi) continue;
        std::vector<int> sources = {vi};
        if (x != vi) sources.push_back(x);
        std::vector<int> sinks;
        for (int m : marks)
          if (m != vi) sinks.push_back(m);
        if (!g.vertices[y].marked) sinks.push_back(y);
        auto mc = min_cut_between(g, w, sources, sinks);
        if (mc.value == mincut.at(vi)) {
          cand = make_cut(g, w, vi, mc.side);
          found = true;
        }
      }
      if (found) break;
    }
    if (!found) throw std::logic_error("complete_nested_cuts: weights are not minimal");

    // Uncross against the existing family, in insertion order. The moves
    // keep the candidate minimal, keep the target edge in its cut-set,
    // and preserve nestedness with already-processed members.
    for (const auto& T : family) {
      if (cuts_nested(cand, T)) continue;
      int us = cand.side[eu] ? eu : ev;  // endpoint on the candidate side
      int vs = us == eu ? ev : eu;
      std::vector<char> ns;
      int nmark = cand.mark;
      if (cand.mark == T.mark) {
        if (T.side[us] && T.side[vs])
          ns = side_and(cand.side, T.side);
        else if (!T.side[us] && !T.side[vs])
          ns = side_or(cand.side, T.side);
        else
          throw std::logic_error("complete_nested_cuts: edge already covered by family");
      } else {
        if (!T.side[us]) {
          ns = side_minus(cand.side, T.side);
        } else if (T.side[vs]) {
          ns = side_minus(T.side, cand.side);
          nmark = T.mark;
        } else {
          throw std::logic_error("complete_nested_cuts: edge already covered by family");
        }
      }
      cand = make_cut(g, w, nmark, std::move(ns));
      if (cand.weight != mincut.at(nmark))
        throw std::logic_error("complete_nested_cuts: uncrossing broke minimality");
      if (!cut_crosses(cand, g.edges[target]))
        throw std::logic_error("complete_nested_cuts: uncrossing lost the target edge");
    }
    family.push_back(std::move(cand));
  }
  return family;
}

ValidationReport validate_train_track(const TrainTrack& t) {
  ValidationReport rep;
  const auto& g = t.graph;
  for (size_t v = 0; v < g.vertices.size(); ++v) {
    std::vector<int> positive;
    for (int h : g.half_edges_at(static_cast<int>(v)))
      if (t.weights.values[h / 2] > 0) positive.push_back(h);
    if (positive.empty()) continue;
    // Gates must partition the positive half-edges.
    std::set<int> seen;
    std::vector<Rat> gate_w;
    for (const auto& gate : t.gates[v]) {
      Rat total = 0;
      bool nonempty = false;
      for (int h : gate) {
        if (t.weights.values[h / 2] == 0) continue;
        if (!seen.insert(h).second) rep.errors.push_back("half-edge in two gates");
        total += t.weights.values[h / 2];
        nonempty = true;
      }
      if (nonempty) gate_w.push_back(total);
    }
    for (int h : positive)
      if (!seen.count(h)) rep.errors.push_back("positive half-edge missing from gates");
    if (g.vertices[v].marked) continue;
    if (gate_w.size() < 2) {
      rep.errors.push_back("fewer than two gates at unmarked vertex '" + g.vertices[v].id + "'");
      continue;
    }
    Rat total = std::accumulate(gate_w.begin(), gate_w.end(), Rat(0));
    for (const Rat& x : gate_w)
      if (x > total - x)
        rep.errors.push_back("triangle inequality fails at vertex '" + g.vertices[v].id + "'");
  }
  return rep;
}

namespace {

int halfedge_in(const MarkedGraph& g, int o) {
  // Half-edge germ at head(o) pointing back along o.
  return 2 * oedge_edge(o) + (1 - oedge_dir(o));
}
int halfedge_out(int o) { return o; }

struct GateLookup {
  // gate_of[v][h] = gate index of half-edge h at vertex v (original gates).
  std::vector<std::map<int, int>> original;
  // smoothed group id per half-edge (dominating gate vs the rest).
  std::vector<std::map<int, int>> smoothed;
};

GateLookup build_gate_lookup(const TrainTrack& t, const EdgeScalars& w) {
  const auto& g = t.graph;
  GateLookup lk;
  lk.original.resize(g.vertices.size());
  lk.smoothed.resize(g.vertices.size());
  for (size_t v = 0; v < g.vertices.size(); ++v) {
    std::vector<Rat> gate_w(t.gates[v].size(), Rat(0));
    for (size_t gi = 0; gi < t.gates[v].size(); ++gi)
      for (int h : t.gates[v][gi]) {
        if (w.values[h / 2] == 0) continue;
        lk.original[v][h] = static_cast<int>(gi);
        gate_w[gi] += w.values[h / 2];
      }
    int live = 0;
    for (const Rat& x : gate_w)
      if (x > 0) ++live;
    int dominating = -1;
    if (!g.vertices[v].marked && live >= 3) {
      Rat total = std::accumulate(gate_w.begin(), gate_w.end(), Rat(0));
      for (size_t gi = 0; gi < gate_w.size(); ++gi)
        if (gate_w[gi] > 0 && gate_w[gi] == total - gate_w[gi]) dominating = static_cast<int>(gi);
    }
    for (const auto& [h, gi] : lk.original[v])
      lk.smoothed[v][h] = dominating < 0 ? gi : (gi == dominating ? 0 : 1);
  }
  return lk;
}

}  // namespace

MultiCurve tt_to_multicurve(const TrainTrack& t) {
  auto rep = validate_train_track(t);
  if (!rep.ok()) throw std::invalid_argument("tt_to_multicurve: " + rep.errors.front());
  const auto& g = t.graph;
  EdgeScalars w = t.weights;

  // Canonical components accumulate weight across peeling rounds.
  std::map<std::pair<int, std::vector<int>>, Rat> acc;

  size_t guard = 0;
  while (true) {
    if (++guard > 4 * (g.edges.size() + g.vertices.size()) + 16)
      throw std::logic_error("tt_to_multicurve did not terminate");
    int e0 = -1;
    for (size_t e = 0; e < g.edges.size(); ++e)
      if (w.values[e] > 0) {
        e0 = static_cast<int>(e);
        break;
      }
    if (e0 < 0) break;

    auto lk = build_gate_lookup(t, w);
    auto legal = [&](int a, int b) {
      int v = g.head(a);
      int hi = halfedge_in(g, a), ho = halfedge_out(b);
      return lk.smoothed[v].at(hi) != lk.smoothed[v].at(ho);
    };

    struct Walk {
      bool cyclic = false;
      std::vector<int> chain;
    };
    auto forward_walk = [&](int start) {
      Walk wk;
      wk.chain.push_back(start);
      std::set<int> seen{start};
      while (true) {
        int v = g.head(wk.chain.back());
        if (g.vertices[v].marked) return wk;
        int next = -1;
        for (int o : g.oedges_at(v)) {
          if (w.values[oedge_edge(o)] == 0) continue;
          if (!legal(wk.chain.back(), o)) continue;
          next = o;
          break;
        }
        if (next < 0) throw std::logic_error("tt_to_multicurve: no legal continuation");
        if (seen.count(next)) {
          auto it = std::find(wk.chain.begin(), wk.chain.end(), next);
          wk.chain.erase(wk.chain.begin(), it);
          wk.cyclic = true;
          return wk;
        }
        wk.chain.push_back(next);
        seen.insert(next);
      }
    };

    Walk walk = forward_walk(oedge(e0, 0));
    CurveComponent comp;
    if (walk.cyclic) {
      comp.kind = CurveComponent::Kind::Loop;
      comp.word = walk.chain;
    } else {
      Walk back = forward_walk(oedge(e0, 1));
      if (back.cyclic) {
        comp.kind = CurveComponent::Kind::Loop;
        comp.word = back.chain;
      } else {
        comp.kind = CurveComponent::Kind::Arc;
        for (auto it = back.chain.rbegin(); it != back.chain.rend(); ++it)
          comp.word.push_back(oedge_reverse(*it));
        comp.word.pop_back();  // drop the duplicated reverse of e0's start
        comp.word.insert(comp.word.end(), walk.chain.begin(), walk.chain.end());
      }
    }

    // Crossing counts per edge and per original gate.
    std::vector<Rat> n(g.edges.size(), Rat(0));
    for (int o : comp.word) n[oedge_edge(o)] += 1;
    std::vector<std::map<int, Rat>> gate_hits(g.vertices.size());
    auto hit = [&](int a, int b) {
      int v = g.head(a);
      gate_hits[v][lk.original[v].at(halfedge_in(g, a))] += 1;
      gate_hits[v][lk.original[v].at(halfedge_out(b))] += 1;
    };
    for (size_t i = 0; i + 1 < comp.word.size(); ++i) hit(comp.word[i], comp.word[i + 1]);
    if (comp.kind == CurveComponent::Kind::Loop && !comp.word.empty())
      hit(comp.word.back(), comp.word.front());

    // Largest peel keeping a weighted train track.
    Rat eps;
    bool has_eps = false;
    auto bound = [&](const Rat& b) {
      if (!has_eps || b < eps) eps = b;
      has_eps = true;
    };
    for (size_t e = 0; e < g.edges.size(); ++e)
      if (n[e] > 0) bound(w.values[e] / n[e]);
    for (size_t v = 0; v < g.vertices.size(); ++v) {
      if (g.vertices[v].marked) continue;
      std::vector<Rat> gate_w(t.gates[v].size(), Rat(0)), gate_b(t.gates[v].size(), Rat(0));
      for (const auto& [h, gi] : lk.original[v]) gate_w[gi] += w.values[h / 2];
      for (const auto& [gi, b] : gate_hits[v]) gate_b[gi] += b;
      Rat A = std::accumulate(gate_w.begin(), gate_w.end(), Rat(0));
      Rat B = std::accumulate(gate_b.begin(), gate_b.end(), Rat(0));
      for (size_t gi = 0; gi < gate_w.size(); ++gi) {
        Rat denom = B - 2 * gate_b[gi];
        Rat numer = A - 2 * gate_w[gi];
        if (denom > 0) bound(numer / denom);
      }
    }
    if (!has_eps || !(eps > 0)) throw std::logic_error("tt_to_multicurve: no positive peel");

    for (size_t e = 0; e < g.edges.size(); ++e) w.values[e] -= eps * n[e];
    auto canon = canonical_component(comp);
    acc[{static_cast<int>(canon.kind), canon.word}] += eps;
  }

  MultiCurve out;
  for (const auto& [key, weight] : acc) {
    CurveComponent c;
    c.kind = static_cast<CurveComponent::Kind>(key.first);
    c.word = key.second;
    c.weight = weight;
    out.components.push_back(std::move(c));
  }
  return out;
}

namespace {

// Reduced path in a star between two positions (leaf vertex, interior of
// a leg, or center), as segments pushed into a builder. Leg edges run
// leaf -> center with orientation 0.
struct StarPos {
  int leg = -1;    // -1 = center
  Rat off = 0;     // along oriented leg (0 = leaf, 1 = center); ignored for center
  bool at_leaf() const { return leg >= 0 && off == 0; }
};

void star_path(PathBuilder& pb, const StarPos& a, const StarPos& b) {
  if (a.leg == b.leg) {
    if (a.leg < 0) return;
    int o = oedge(a.leg, 0);
    if (a.off < b.off)
      pb.push(o, a.off, b.off);
    else if (b.off < a.off)
      pb.push(oedge_reverse(o), 1 - a.off, 1 - b.off);
    return;
  }
  if (a.leg >= 0) pb.push(oedge(a.leg, 0), a.off, 1);
  if (b.leg >= 0) pb.push(oedge(b.leg, 1), 0, 1 - b.off);
}

}  // namespace

StarTautResult taut_to_star(const MarkedGraph& g, const EdgeScalars& w) {
  validate_scalars(g, w);
  auto marks = g.marked_vertices();
  if (marks.empty()) throw std::invalid_argument("taut_to_star: graph has no marked vertices");
  int k = static_cast<int>(marks.size());

  StarTautResult res;
  res.leg_of_mark = marks;
  res.center = res.star.add_vertex("s*", false);
  for (int i = 0; i < k; ++i) {
    int leaf = res.star.add_vertex("s" + std::to_string(i + 1), true);
    res.star.add_edge("leg" + std::to_string(i + 1), leaf, res.center);
  }

  // Taut map from single canonical cuts S_i' = S_i \ union of others.
  std::vector<Cut> base;
  for (int vi : marks) base.push_back(min_vertex_cut(g, w, vi));
  std::vector<std::vector<char>> sprime(k);
  for (int i = 0; i < k; ++i) {
    sprime[i] = base[i].side;
    for (int j = 0; j < k; ++j)
      if (j != i) sprime[i] = side_minus(sprime[i], base[j].side);
  }
  res.map.domain = g;
  res.map.codomain = res.star;
  res.map.vertex_images.resize(g.vertices.size());
  auto star_pos_of = [&](int v) {
    for (int i = 0; i < k; ++i)
      if (sprime[i][v]) return StarPos{i, 0};
    return StarPos{-1, 0};
  };
  for (size_t v = 0; v < g.vertices.size(); ++v) {
    StarPos p = star_pos_of(static_cast<int>(v));
    res.map.vertex_images[v] =
        p.leg < 0 ? PointOnGraph::at_vertex(res.center)
                  : PointOnGraph::at_vertex(res.star.edges[p.leg].ends[0]);
  }
  res.map.edge_paths.resize(g.edges.size());
  for (size_t e = 0; e < g.edges.size(); ++e) {
    PathBuilder pb;
    star_path(pb, star_pos_of(g.edges[e].ends[0]), star_pos_of(g.edges[e].ends[1]));
    res.map.edge_paths[e] = pb.to_edge_path();
  }
  for (const auto& c : base) res.leg_multiplicity.push_back(c.weight);

  // Train track from a complete nested family on minimal weights.
  res.minimal_weights = minimize_weights(g, w);
  res.family = complete_nested_cuts(g, res.minimal_weights, {});

  // Chain position of each vertex: the smallest family cut containing it.
  std::vector<std::vector<const Cut*>> chains(k);
  for (const auto& c : res.family) {
    int i = static_cast<int>(std::find(marks.begin(), marks.end(), c.mark) - marks.begin());
    chains[i].push_back(&c);
  }
  for (auto& ch : chains)
    std::sort(ch.begin(), ch.end(), [](const Cut* a, const Cut* b) {
      return std::count(a->side.begin(), a->side.end(), 1) <
             std::count(b->side.begin(), b->side.end(), 1);
    });
  auto chain_pos = [&](int v) {
    for (int i = 0; i < k; ++i) {
      if (v == marks[i]) return StarPos{i, 0};
      for (size_t j = 0; j < chains[i].size(); ++j)
        if (chains[i][j]->side[v])
          return StarPos{i, Rat(static_cast<int>(j) + 1, static_cast<int>(chains[i].size()) + 1)};
    }
    return StarPos{-1, 0};
  };

  GraphMap tt_map;
  tt_map.domain = g;
  tt_map.codomain = res.star;
  tt_map.vertex_images.resize(g.vertices.size());
  for (size_t v = 0; v < g.vertices.size(); ++v) {
    StarPos p = chain_pos(static_cast<int>(v));
    if (p.leg < 0)
      tt_map.vertex_images[v] = PointOnGraph::at_vertex(res.center);
    else if (p.off == 0)
      tt_map.vertex_images[v] = PointOnGraph::at_vertex(res.star.edges[p.leg].ends[0]);
    else
      tt_map.vertex_images[v] = PointOnGraph::on_edge(p.leg, p.off);
  }
  tt_map.edge_paths.resize(g.edges.size());
  for (size_t e = 0; e < g.edges.size(); ++e) {
    PathBuilder pb;
    star_path(pb, chain_pos(g.edges[e].ends[0]), chain_pos(g.edges[e].ends[1]));
    tt_map.edge_paths[e] = pb.to_edge_path();
  }

  // Gates: group the half-edge germs at each vertex by image direction
  // under the chain map.
  res.tt.graph = g;
  res.tt.weights = res.minimal_weights;
  res.tt.gates.resize(g.vertices.size());
  for (size_t v = 0; v < g.vertices.size(); ++v) {
    std::map<int, std::vector<int>> by_dir;
    for (int h : g.half_edges_at(static_cast<int>(v))) {
      int e = h / 2;
      if (res.minimal_weights.values[e] == 0) continue;
      int o = h;  // departing oriented edge
      EdgePath p = tt_map.path_of(o);
      if (p.constant()) continue;
      by_dir[p.word.front()].push_back(h);
    }
    for (auto& [dir, hs] : by_dir) res.tt.gates[v].push_back(hs);
  }
  return res;
}

Rat FlowDecomposition::flow_weight(int i, int j) const {
  if (i > j) std::swap(i, j);
  auto it = flows.find({i, j});
  if (it == flows.end()) return 0;
  Rat total = 0;
  for (const auto& c : it->second.components) total += c.weight;
  return total;
}

FlowDecomposition vertex_flows(const MarkedGraph& g, const EdgeScalars& w) {
  auto star = taut_to_star(g, w);
  auto marks = g.marked_vertices();
  FlowDecomposition res;
  for (int vi : marks) res.cuts.push_back(min_vertex_cut(g, w, vi));

  MultiCurve curves = tt_to_multicurve(star.tt);
  for (const auto& comp : curves.components) {
    if (comp.kind != CurveComponent::Kind::Arc)
      throw std::logic_error("vertex_flows: train track produced a non-arc component");
    int a = g.tail(comp.word.front());
    int b = g.head(comp.word.back());
    int i = static_cast<int>(std::find(marks.begin(), marks.end(), a) - marks.begin());
    int j = static_cast<int>(std::find(marks.begin(), marks.end(), b) - marks.begin());
    if (i > j) std::swap(i, j);
    res.flows[{i, j}].components.push_back(comp);
  }
  return res;
}

namespace {

// Surgery on one codomain edge: collapse [0,s0] to the 0-end, [s1,1] to
// the 1-end, and stretch the middle over the whole edge.
GraphMap apply_spread(const GraphMap& f0, int t, const Rat& s0, const Rat& s1) {
  GraphMap f = f0;
  auto phi = [&](const Rat& x) -> Rat {
    if (x <= s0) return 0;
    if (x >= s1) return 1;
    return (x - s0) / (s1 - s0);
  };
  for (auto& p : f.vertex_images) {
    if (p.is_vertex() || p.edge != t) continue;
    Rat y = phi(p.offset);
    if (y == 0)
      p = PointOnGraph::at_vertex(f.codomain.edges[t].ends[0]);
    else if (y == 1)
      p = PointOnGraph::at_vertex(f.codomain.edges[t].ends[1]);
    else
      p = PointOnGraph::on_edge(t, y);
  }
  for (auto& path : f.edge_paths) {
    PathBuilder pb;
    EdgePath old = path;
    for (size_t i = 0; i < old.word.size(); ++i) {
      int o = old.word[i];
      Rat u0 = (i == 0) ? old.start_u : Rat(0);
      Rat u1 = (i + 1 == old.word.size()) ? old.end_u : Rat(1);
      if (!(u0 < u1)) continue;
      if (oedge_edge(o) != t) {
        pb.push(o, u0, u1);
        continue;
      }
      Rat a, b;
      if (oedge_dir(o) == 0) {
        a = phi(u0);
        b = phi(u1);
        pb.push(o, a, b);
      } else {
        a = phi(1 - u1);
        b = phi(1 - u0);
        pb.push(o, 1 - b, 1 - a);
      }
    }
    path = pb.to_edge_path();
  }
  return f;
}

}  // namespace

GraphMap spread_to_vertices(const GraphMap& f0, const EdgeScalars& w) {
  GraphMap f = reduce_map(f0);
  for (size_t t = 0; t < f.codomain.edges.size(); ++t) {
    auto n = multiplicity(f, w);
    const auto& segs = n.per_edge[t];
    if (segs.size() <= 1) {
      // Still collapse isolated interior vertex images (n has no
      // breakpoints only when none exist).
      continue;
    }
    size_t best = 0;
    for (size_t i = 1; i < segs.size(); ++i)
      if (segs[i].value < segs[best].value) best = i;
    f = apply_spread(f, static_cast<int>(t), segs[best].t0, segs[best].t1);
  }
  for (const auto& p : f.vertex_images)
    if (!p.is_vertex()) throw std::logic_error("spread_to_vertices left an interior image");
  return f;
}

namespace {

// Local model of a vertex-to-vertex map at a codomain vertex y.
struct LocalModel {
  MarkedGraph graph;                     // leg marks first, then clusters
  EdgeScalars weights;
  std::vector<int> legs;                 // half-edges of the codomain at y
  std::vector<int> leg_vertex;           // local vertex per leg
  std::map<int, int> cluster_vertex;     // domain vertex -> local vertex
  std::vector<int> pins;                 // local vertices of pinned (marked) domain vertices
  std::vector<Rat> leg_multiplicity;     // current n through each leg
};

LocalModel build_local_model(const GraphMap& f, const EdgeScalars& w, int y) {
  LocalModel lm;
  lm.legs = f.codomain.half_edges_at(y);
  std::map<int, int> leg_index;
  for (size_t i = 0; i < lm.legs.size(); ++i) {
    leg_index[lm.legs[i]] = static_cast<int>(i);
    lm.leg_vertex.push_back(lm.graph.add_vertex("leg" + std::to_string(i), true));
  }
  lm.leg_multiplicity.assign(lm.legs.size(), Rat(0));
  for (size_t v = 0; v < f.domain.vertices.size(); ++v) {
    if (!(f.vertex_images[v].is_vertex() && f.vertex_images[v].vertex == y)) continue;
    int lv = lm.graph.add_vertex("v" + f.domain.vertices[v].id, false);
    lm.cluster_vertex[static_cast<int>(v)] = lv;
    if (f.domain.vertices[v].marked) lm.pins.push_back(lv);
  }
  lm.weights.kind = ScalarKind::Weight;

  auto add = [&](int a, int b, const Rat& wt) {
    int e = lm.graph.add_edge("le" + std::to_string(lm.graph.edges.size()), a, b);
    (void)e;
    lm.weights.values.push_back(wt);
  };
  auto leg_of_out = [&](int o) { return leg_index.at(halfedge_out(o)); };
  auto leg_of_in = [&](int o) { return leg_index.at(halfedge_in(f.codomain, o)); };

  for (size_t e = 0; e < f.domain.edges.size(); ++e) {
    const auto& path = f.edge_paths[e];
    int a = f.domain.edges[e].ends[0];
    int b = f.domain.edges[e].ends[1];
    bool a_here = lm.cluster_vertex.count(a), b_here = lm.cluster_vertex.count(b);
    if (path.constant()) {
      if (a_here && b_here) add(lm.cluster_vertex[a], lm.cluster_vertex[b], w.values[e]);
      continue;
    }
    // Endpoint stubs.
    if (a_here) {
      int li = leg_of_out(path.word.front());
      add(lm.cluster_vertex[a], lm.leg_vertex[li], w.values[e]);
      lm.leg_multiplicity[li] += w.values[e];
    }
    if (b_here) {
      int li = leg_of_in(path.word.back());
      add(lm.cluster_vertex[b], lm.leg_vertex[li], w.values[e]);
      lm.leg_multiplicity[li] += w.values[e];
    }
    // Passes through y.
    for (size_t i = 0; i + 1 < path.word.size(); ++i) {
      if (f.codomain.head(path.word[i]) != y) continue;
      int li = leg_of_in(path.word[i]);
      int lo = leg_of_out(path.word[i + 1]);
      add(lm.leg_vertex[li], lm.leg_vertex[lo], w.values[e]);
      lm.leg_multiplicity[li] += w.values[e];
      lm.leg_multiplicity[lo] += w.values[e];
    }
  }
  return lm;
}

}  // namespace

GraphMap make_taut(const GraphMap& f0, const EdgeScalars& w) {
  validate_scalars(f0.domain, w);
  GraphMap f = spread_to_vertices(f0, w);

  size_t guard = 0;
  const size_t guard_max = 64 * (f.domain.edges.size() + 4) * (f.codomain.edges.size() + 4) + 256;
  while (true) {
    if (++guard > guard_max) throw std::logic_error("make_taut did not terminate");
    bool improved = false;
    for (size_t y = 0; y < f.codomain.vertices.size() && !improved; ++y) {
      LocalModel lm = build_local_model(f, w, static_cast<int>(y));
      if (lm.legs.empty()) continue;
      int k = static_cast<int>(lm.legs.size());

      std::vector<std::vector<char>> sides(k);
      bool better = false;
      for (int h = 0; h < k; ++h) {
        std::vector<int> sinks = lm.pins;
        for (int g2 = 0; g2 < k; ++g2)
          if (g2 != h) sinks.push_back(lm.leg_vertex[g2]);
        auto mc = min_cut_between(lm.graph, lm.weights, {lm.leg_vertex[h]}, sinks);
        sides[h] = mc.side;
        if (mc.value < lm.leg_multiplicity[h]) better = true;
      }
      if (!better) continue;

      // Nested assignment S_h' = S_h minus the other sides.
      for (int h = 0; h < k; ++h)
        for (int g2 = 0; g2 < k; ++g2)
          if (g2 != h) sides[h] = side_minus(sides[h], sides[g2]);

      // Move cluster vertices into their legs and rebuild incident paths.
      std::map<int, PointOnGraph> new_pos;
      for (const auto& [dv, lv] : lm.cluster_vertex) {
        int into = -1;
        for (int h = 0; h < k; ++h)
          if (sides[h][lv]) into = h;
        if (into < 0) continue;
        int o = lm.legs[into];  // departing oriented edge at y
        new_pos[dv] = PointOnGraph::on_edge(oedge_edge(o), Rat(1, 2));
      }
      if (new_pos.empty()) {
        // The improvement requires rerouting passes only; cannot happen
        // for reduced words (passes are fixed strands).
        throw std::logic_error("make_taut: improvement without movable vertices");
      }
      for (auto& [dv, pos] : new_pos) f.vertex_images[dv] = pos;
      for (size_t e = 0; e < f.domain.edges.size(); ++e) {
        int a = f.domain.edges[e].ends[0];
        int b = f.domain.edges[e].ends[1];
        bool ma = new_pos.count(a), mb = new_pos.count(b);
        if (!ma && !mb) continue;
        auto leg_of = [&](int dv) {
          for (int h = 0; h < k; ++h)
            if (sides[h][lm.cluster_vertex.at(dv)]) return h;
          return 0;
        };
        PathBuilder pb;
        if (ma) {
          int o = lm.legs[leg_of(a)];
          pb.push(oedge_reverse(o), Rat(1, 2), 1);
        }
        pb.push_path(f.codomain, f.edge_paths[e]);
        if (mb) {
          int o = lm.legs[leg_of(b)];
          pb.push(o, 0, Rat(1, 2));
        }
        f.edge_paths[e] = pb.to_edge_path();
      }
      f = spread_to_vertices(f, w);
      improved = true;
    }
    if (!improved) break;
  }
  return f;
}

std::vector<Rat> taut_multiplicities(const GraphMap& f, const EdgeScalars& w) {
  GraphMap g = make_taut(f, w);
  auto n = multiplicity(g, w);
  std::vector<Rat> out(g.codomain.edges.size(), Rat(0));
  for (size_t e = 0; e < n.per_edge.size(); ++e) {
    for (const auto& s : n.per_edge[e]) {
      if (s.t0 == 0)
        out[e] = s.value;
      else if (!(s.value == out[e]))
        throw std::logic_error("taut map multiplicity is not constant on an edge");
    }
  }
  return out;
}

StrongReducedResult is_strongly_reduced(const GraphMap& f) {
  StrongReducedResult res;
  res.witnesses.resize(f.domain.edges.size());
  auto candidates = enumerate_candidates(f.domain);
  res.strongly_reduced = true;
  for (size_t e = 0; e < f.domain.edges.size(); ++e) {
    if (f.edge_paths[e].constant()) continue;
    bool found = false;
    for (const auto& c : candidates) {
      bool through = false;
      for (int o : c.word)
        if (oedge_edge(o) == static_cast<int>(e)) through = true;
      if (!through) continue;
      bool reduced = false;
      auto word = push_component_word(c, f, &reduced);
      if (reduced && !word.empty()) {
        res.witnesses[e] = c;
        found = true;
        break;
      }
    }
    if (!found) {
      res.strongly_reduced = false;
      res.unwitnessed_edges.push_back(static_cast<int>(e));
    }
  }
  return res;
}

}  // namespace elastigraph
