#include "elastigraph/map.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

namespace elastigraph {

namespace {

struct PathSeg {
  int o;
  Rat u0, u1;
};

std::vector<PathSeg> path_segments(const EdgePath& p) {
  std::vector<PathSeg> segs;
  for (size_t i = 0; i < p.word.size(); ++i) {
    Rat u0 = (i == 0) ? p.start_u : Rat(0);
    Rat u1 = (i + 1 == p.word.size()) ? p.end_u : Rat(1);
    if (u0 < u1) segs.push_back({p.word[i], u0, u1});
  }
  return segs;
}

// Interval of the underlying edge covered by an oriented interval.
void edge_interval(int o, const Rat& u0, const Rat& u1, Rat& t0, Rat& t1) {
  if (oedge_dir(o) == 0) {
    t0 = u0;
    t1 = u1;
  } else {
    t0 = 1 - u1;
    t1 = 1 - u0;
  }
}

PointOnGraph point_at(const MarkedGraph& g, int o, const Rat& u) {
  if (u == 0) return PointOnGraph::at_vertex(g.tail(o));
  if (u == 1) return PointOnGraph::at_vertex(g.head(o));
  return PointOnGraph::on_edge(oedge_edge(o), oedge_dir(o) == 0 ? u : Rat(1 - u));
}

Rat offset_in_oriented(const PointOnGraph& p, int o) {
  // p must lie inside edge(o).
  return oedge_dir(o) == 0 ? p.offset : Rat(1 - p.offset);
}

}  // namespace

EdgePath reverse_path(const EdgePath& p) {
  EdgePath r;
  r.word.reserve(p.word.size());
  for (auto it = p.word.rbegin(); it != p.word.rend(); ++it) r.word.push_back(oedge_reverse(*it));
  r.start_u = 1 - p.end_u;
  r.end_u = 1 - p.start_u;
  if (p.word.empty()) {
    r.start_u = 0;
    r.end_u = 1;
  }
  return r;
}

GraphMap identity_map(const MarkedGraph& g) {
  GraphMap f;
  f.domain = g;
  f.codomain = g;
  f.vertex_images.reserve(g.vertices.size());
  for (size_t v = 0; v < g.vertices.size(); ++v)
    f.vertex_images.push_back(PointOnGraph::at_vertex(static_cast<int>(v)));
  f.edge_paths.reserve(g.edges.size());
  for (size_t e = 0; e < g.edges.size(); ++e) {
    EdgePath p;
    p.word = {oedge(static_cast<int>(e), 0)};
    f.edge_paths.push_back(p);
  }
  return f;
}

ValidationReport validate_map(const GraphMap& f) {
  ValidationReport rep;
  const auto& dom = f.domain;
  const auto& cod = f.codomain;
  if (f.vertex_images.size() != dom.vertices.size())
    rep.errors.push_back("vertex image table size mismatch");
  if (f.edge_paths.size() != dom.edges.size()) rep.errors.push_back("edge path table size mismatch");
  if (!rep.ok()) return rep;

  for (size_t v = 0; v < dom.vertices.size(); ++v) {
    const auto& p = f.vertex_images[v];
    if (p.is_vertex()) {
      if (p.vertex >= static_cast<int>(cod.vertices.size()))
        rep.errors.push_back("vertex image out of range");
      else if (dom.vertices[v].marked && !cod.vertices[p.vertex].marked)
        rep.errors.push_back("marked vertex '" + dom.vertices[v].id + "' maps to unmarked vertex");
    } else {
      if (p.edge < 0 || p.edge >= static_cast<int>(cod.edges.size()))
        rep.errors.push_back("vertex image edge out of range");
      else if (!(p.offset > 0 && p.offset < 1))
        rep.errors.push_back("vertex image offset not in (0,1)");
      if (dom.vertices[v].marked)
        rep.errors.push_back("marked vertex '" + dom.vertices[v].id + "' maps to edge interior");
    }
  }
  if (!rep.ok()) return rep;

  for (size_t e = 0; e < dom.edges.size(); ++e) {
    const auto& path = f.edge_paths[e];
    const auto& pa = f.vertex_images[dom.edges[e].ends[0]];
    const auto& pb = f.vertex_images[dom.edges[e].ends[1]];
    std::string tag = "path of edge '" + dom.edges[e].id + "': ";
    for (size_t i = 0; i + 1 < path.word.size(); ++i) {
      if (cod.head(path.word[i]) != cod.tail(path.word[i + 1]))
        rep.errors.push_back(tag + "word elements not incident head-to-tail");
      if (path.word[i + 1] == oedge_reverse(path.word[i]))
        rep.errors.push_back(tag + "word not reduced");
    }
    if (path.constant()) {
      if (!(pa == pb)) rep.errors.push_back(tag + "constant path with distinct endpoint images");
      continue;
    }
    if (path.word.size() == 1 && !(path.start_u < path.end_u))
      rep.errors.push_back(tag + "single-element path needs start_u < end_u");
    // Start consistency.
    int first = path.word.front(), last = path.word.back();
    if (pa.is_vertex()) {
      if (!(path.start_u == 0) || cod.tail(first) != pa.vertex)
        rep.errors.push_back(tag + "start does not match tail vertex image");
    } else {
      if (oedge_edge(first) != pa.edge || !(path.start_u == offset_in_oriented(pa, first)))
        rep.errors.push_back(tag + "start does not match tail interior image");
    }
    if (pb.is_vertex()) {
      if (!(path.end_u == 1) || cod.head(last) != pb.vertex)
        rep.errors.push_back(tag + "end does not match head vertex image");
    } else {
      if (oedge_edge(last) != pb.edge || !(path.end_u == offset_in_oriented(pb, last)))
        rep.errors.push_back(tag + "end does not match head interior image");
    }
  }
  return rep;
}

void PathBuilder::push(int o, Rat u0, Rat u1) {
  if (!(u0 < u1)) return;
  while (true) {
    if (segs_.empty()) {
      segs_.push_back({o, u0, u1});
      return;
    }
    Seg& top = segs_.back();
    if (o == top.o && u0 == top.u1) {
      top.u1 = u1;
      return;
    }
    if (o == oedge_reverse(top.o) && u0 == 1 - top.u1) {
      Rat len = u1 - u0;
      Rat toplen = top.u1 - top.u0;
      if (len < toplen) {
        top.u1 -= len;
        return;
      }
      segs_.pop_back();
      if (len == toplen) return;
      u0 += toplen;
      continue;
    }
    segs_.push_back({o, u0, u1});
    return;
  }
}

void PathBuilder::push_path(const MarkedGraph&, const EdgePath& p) {
  for (const auto& s : path_segments(p)) push(s.o, s.u0, s.u1);
}

EdgePath PathBuilder::to_edge_path() const {
  EdgePath p;
  if (segs_.empty()) return p;
  for (size_t i = 0; i < segs_.size(); ++i) {
    p.word.push_back(segs_[i].o);
    if (i > 0 && !(segs_[i].u0 == 0))
      throw std::logic_error("path assembly: interior segment does not start at 0");
    if (i + 1 < segs_.size() && !(segs_[i].u1 == 1))
      throw std::logic_error("path assembly: interior segment does not end at 1");
  }
  p.start_u = segs_.front().u0;
  p.end_u = segs_.back().u1;
  return p;
}

StrandMap canonical_strands(const GraphMap& f, const std::vector<Rat>& cod_lengths) {
  StrandMap sm;
  sm.domain = f.domain;
  sm.codomain = f.codomain;
  sm.vertex_images = f.vertex_images;
  sm.strands.resize(f.domain.edges.size());
  for (size_t e = 0; e < f.domain.edges.size(); ++e) {
    auto segs = path_segments(f.edge_paths[e]);
    Rat total = 0;
    for (const auto& s : segs) total += cod_lengths[oedge_edge(s.o)] * (s.u1 - s.u0);
    if (total == 0) continue;
    Rat acc = 0;
    for (const auto& s : segs) {
      Rat len = cod_lengths[oedge_edge(s.o)] * (s.u1 - s.u0);
      if (len == 0) continue;
      Rat a0 = acc / total;
      acc += len;
      Rat a1 = acc / total;
      sm.strands[e].push_back({a0, a1, s.o, s.u0, s.u1});
    }
  }
  return sm;
}

StrandMap unit_strands(const GraphMap& f) {
  std::vector<Rat> ones(f.codomain.edges.size(), Rat(1));
  return canonical_strands(f, ones);
}

PointOnGraph StrandMap::image_of_point(const PointOnGraph& p) const {
  if (p.is_vertex()) return vertex_images[p.vertex];
  const auto& list = strands[p.edge];
  if (list.empty()) return vertex_images[domain.edges[p.edge].ends[0]];
  const Rat& t = p.offset;
  for (const auto& s : list) {
    if (t >= s.a0 && t <= s.a1) {
      Rat u = s.u0 + (t - s.a0) / (s.a1 - s.a0) * (s.u1 - s.u0);
      return point_at(codomain, s.o, u);
    }
  }
  // In a constant gap: take the nearest strand boundary point.
  if (t < list.front().a0) return point_at(codomain, list.front().o, list.front().u0);
  for (size_t i = 0; i + 1 < list.size(); ++i) {
    if (t > list[i].a1 && t < list[i + 1].a0) return point_at(codomain, list[i].o, list[i].u1);
  }
  return point_at(codomain, list.back().o, list.back().u1);
}

StrandMap compose_strands(const StrandMap& f, const StrandMap& g) {
  if (!(f.codomain == g.domain))
    throw std::invalid_argument("compose_strands: middle graphs do not match");
  StrandMap out;
  out.domain = f.domain;
  out.codomain = g.codomain;
  out.vertex_images.reserve(f.vertex_images.size());
  for (const auto& p : f.vertex_images) out.vertex_images.push_back(g.image_of_point(p));
  out.strands.resize(f.domain.edges.size());

  for (size_t e = 0; e < f.strands.size(); ++e) {
    for (const auto& s : f.strands[e]) {
      int b = oedge_edge(s.o);
      bool fwd = oedge_dir(s.o) == 0;
      Rat B0, B1;  // image interval in b coordinates
      edge_interval(s.o, s.u0, s.u1, B0, B1);
      const auto& gs = g.strands[b];
      auto emit = [&](const Rat& q0, const Rat& q1, const Strand& gstrand) {
        if (!(q0 < q1)) return;
        // Image along g's strand, in o_c coordinates.
        Rat w0 = gstrand.u0 + (q0 - gstrand.a0) / (gstrand.a1 - gstrand.a0) * (gstrand.u1 - gstrand.u0);
        Rat w1 = gstrand.u0 + (q1 - gstrand.a0) / (gstrand.a1 - gstrand.a0) * (gstrand.u1 - gstrand.u0);
        Rat a_at_q0, a_at_q1;
        if (fwd) {
          a_at_q0 = s.a0 + (q0 - B0) / (B1 - B0) * (s.a1 - s.a0);
          a_at_q1 = s.a0 + (q1 - B0) / (B1 - B0) * (s.a1 - s.a0);
          out.strands[e].push_back({a_at_q0, a_at_q1, gstrand.o, w0, w1});
        } else {
          a_at_q0 = s.a0 + (B1 - q0) / (B1 - B0) * (s.a1 - s.a0);
          a_at_q1 = s.a0 + (B1 - q1) / (B1 - B0) * (s.a1 - s.a0);
          // Traversed backwards: domain [a(q1), a(q0)], image reversed.
          out.strands[e].push_back({a_at_q1, a_at_q0, oedge_reverse(gstrand.o), Rat(1 - w1), Rat(1 - w0)});
        }
      };
      if (fwd) {
        for (const auto& gstrand : gs) {
          Rat q0 = rat_max(B0, gstrand.a0);
          Rat q1 = rat_min(B1, gstrand.a1);
          emit(q0, q1, gstrand);
        }
      } else {
        for (auto it = gs.rbegin(); it != gs.rend(); ++it) {
          Rat q0 = rat_max(B0, it->a0);
          Rat q1 = rat_min(B1, it->a1);
          emit(q0, q1, *it);
        }
      }
    }
    std::sort(out.strands[e].begin(), out.strands[e].end(),
              [](const Strand& x, const Strand& y) { return x.a0 < y.a0; });
  }
  return out;
}

GraphMap combinatorial_map(const StrandMap& sm) {
  GraphMap f;
  f.domain = sm.domain;
  f.codomain = sm.codomain;
  f.vertex_images = sm.vertex_images;
  f.edge_paths.resize(sm.domain.edges.size());
  for (size_t e = 0; e < sm.strands.size(); ++e) {
    PathBuilder pb;
    for (const auto& s : sm.strands[e]) pb.push(s.o, s.u0, s.u1);
    f.edge_paths[e] = pb.to_edge_path();
  }
  return f;
}

GraphMap compose(const GraphMap& f, const GraphMap& g) {
  if (!(f.codomain == g.domain)) throw std::invalid_argument("compose: graphs do not match");
  return combinatorial_map(compose_strands(unit_strands(f), unit_strands(g)));
}

namespace {

// A maximal set of domain vertices sharing one image point and connected
// through constant edges.
struct Cluster {
  std::vector<int> verts;
  PointOnGraph pos;
  bool marked = false;
};

std::vector<Cluster> build_clusters(const GraphMap& f) {
  int n = static_cast<int>(f.domain.vertices.size());
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (size_t e = 0; e < f.domain.edges.size(); ++e) {
    if (!f.edge_paths[e].constant()) continue;
    int a = find(f.domain.edges[e].ends[0]);
    int b = find(f.domain.edges[e].ends[1]);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<int, Cluster> by_rep;
  for (int v = 0; v < n; ++v) {
    auto& c = by_rep[find(v)];
    c.verts.push_back(v);
    c.pos = f.vertex_images[v];
    if (f.domain.vertices[v].marked) c.marked = true;
  }
  std::vector<Cluster> out;
  for (auto& [rep, c] : by_rep) out.push_back(std::move(c));
  return out;
}

// One end of a non-constant path leaving a cluster.
struct Outgoing {
  int edge;
  bool at_start;  // true: advances edge_paths[edge] start; false: its end
};

}  // namespace

GraphMap reduce_map(const GraphMap& f0) {
  GraphMap f = f0;
  // Word-level reduction first (cancels backtracking subwords).
  for (size_t e = 0; e < f.edge_paths.size(); ++e) {
    PathBuilder pb;
    pb.push_path(f.codomain, f.edge_paths[e]);
    f.edge_paths[e] = pb.to_edge_path();
  }

  size_t guard = 0;
  const size_t guard_max = 16 * (f.domain.edges.size() + 2) * (f.codomain.edges.size() + 2) + 64;
  while (true) {
    if (++guard > guard_max) throw std::logic_error("reduce_map did not terminate");
    auto clusters = build_clusters(f);
    bool changed = false;
    for (const auto& c : clusters) {
      if (c.marked) continue;
      // Germs of non-constant paths leaving the cluster.
      std::set<int> germs;
      std::vector<Outgoing> outs;
      for (int v : c.verts) {
        for (size_t e = 0; e < f.domain.edges.size(); ++e) {
          if (f.edge_paths[e].constant()) continue;
          if (f.domain.edges[e].ends[0] == v) {
            germs.insert(f.edge_paths[e].word.front());
            outs.push_back({static_cast<int>(e), true});
          }
          if (f.domain.edges[e].ends[1] == v) {
            germs.insert(oedge_reverse(f.edge_paths[e].word.back()));
            outs.push_back({static_cast<int>(e), false});
          }
        }
      }
      if (germs.size() != 1) continue;

      int o = *germs.begin();
      Rat pos_u = c.pos.is_vertex() ? Rat(0) : offset_in_oriented(c.pos, o);
      // Slide distance: nearest end of a first segment in direction o.
      Rat delta = 1 - pos_u;
      for (const auto& og : outs) {
        const auto& p = f.edge_paths[og.edge];
        Rat u1 = og.at_start ? (p.word.size() == 1 ? p.end_u : Rat(1))
                             : (p.word.size() == 1 ? Rat(1 - p.start_u) : Rat(1));
        delta = rat_min(delta, u1 - pos_u);
      }
      if (!(delta > 0)) throw std::logic_error("reduce_map: non-positive slide");
      Rat new_u = pos_u + delta;
      PointOnGraph np = point_at(f.codomain, o, new_u);
      for (int v : c.verts) f.vertex_images[v] = np;
      for (const auto& og : outs) {
        auto& p = f.edge_paths[og.edge];
        if (og.at_start) {
          if (p.word.size() == 1 && new_u == p.end_u) {
            p = EdgePath{};
          } else if (new_u == 1) {
            p.word.erase(p.word.begin());
            p.start_u = 0;
            if (p.word.empty()) p = EdgePath{};
          } else {
            p.start_u = new_u;
          }
        } else {
          // The reversed view starts at pos_u on o; stored end_u is 1 - view_u.
          Rat stored_end = 1 - new_u;
          if (p.word.size() == 1 && new_u == 1 - p.start_u) {
            p = EdgePath{};
          } else if (new_u == 1) {
            p.word.pop_back();
            p.end_u = 1;
            if (p.word.empty()) p = EdgePath{};
          } else {
            p.end_u = stored_end;
          }
        }
      }
      changed = true;
      break;
    }
    if (!changed) break;
  }
  return f;
}

Rat SegmentFunction::max_value() const {
  Rat m = 0;
  bool any = false;
  for (const auto& edge : per_edge)
    for (const auto& s : edge) {
      if (!any || s.value > m) m = s.value;
      any = true;
    }
  return m;
}

Rat SegmentFunction::value_at(int edge, const Rat& t) const {
  for (const auto& s : per_edge[edge])
    if (t >= s.t0 && t <= s.t1) return s.value;
  return 0;
}

namespace {

// Cut points of each codomain edge induced by strand boundaries.
std::vector<std::vector<Rat>> edge_cuts(const StrandMap& f) {
  std::vector<std::vector<Rat>> cuts(f.codomain.edges.size());
  for (auto& c : cuts) {
    c.push_back(0);
    c.push_back(1);
  }
  for (const auto& list : f.strands)
    for (const auto& s : list) {
      Rat t0, t1;
      edge_interval(s.o, s.u0, s.u1, t0, t1);
      cuts[oedge_edge(s.o)].push_back(t0);
      cuts[oedge_edge(s.o)].push_back(t1);
    }
  for (auto& c : cuts) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }
  return cuts;
}

template <typename PerStrand>
SegmentFunction accumulate_segments(const StrandMap& f, PerStrand&& per_strand) {
  auto cuts = edge_cuts(f);
  SegmentFunction out;
  out.per_edge.resize(f.codomain.edges.size());
  for (size_t e = 0; e < cuts.size(); ++e) {
    for (size_t i = 0; i + 1 < cuts[e].size(); ++i) {
      Rat t0 = cuts[e][i], t1 = cuts[e][i + 1];
      Rat mid = (t0 + t1) / 2;
      Rat total = 0;
      for (size_t de = 0; de < f.strands.size(); ++de) {
        for (const auto& s : f.strands[de]) {
          if (oedge_edge(s.o) != static_cast<int>(e)) continue;
          Rat s0, s1;
          edge_interval(s.o, s.u0, s.u1, s0, s1);
          if (s0 <= mid && mid <= s1) total += per_strand(static_cast<int>(de), s);
        }
      }
      out.per_edge[e].push_back({t0, t1, total});
    }
  }
  return out;
}

}  // namespace

SegmentFunction multiplicity(const StrandMap& f, const EdgeScalars& w_dom) {
  return accumulate_segments(f, [&](int de, const Strand&) { return w_dom.values[de]; });
}

SegmentFunction multiplicity(const GraphMap& f, const EdgeScalars& w_dom) {
  return multiplicity(unit_strands(f), w_dom);
}

SegmentFunction fill_function(const StrandMap& f, const EdgeScalars& dom_len,
                              const EdgeScalars& cod_len) {
  return accumulate_segments(f, [&](int de, const Strand& s) {
    Rat image = cod_len.values[oedge_edge(s.o)] * (s.u1 - s.u0);
    Rat dlen = dom_len.values[de] * (s.a1 - s.a0);
    if (dlen == 0) throw std::invalid_argument("fill_function: zero-length strand in domain");
    return image / dlen;
  });
}

EnergyKind classify_energy(const Exponent& p, const Exponent& q) {
  if (p.is(1) && q.is(1)) return EnergyKind::WeightRatio;
  if (p.is(1) && q.is(2)) return EnergyKind::ExtremalLength;
  if (p.is(1) && q.inf) return EnergyKind::WeightedLength;
  if (p.is(2) && q.is(2)) return EnergyKind::Embedding;
  if (p.is(2) && q.inf) return EnergyKind::Dirichlet;
  if (p.inf && q.inf) return EnergyKind::Lipschitz;
  return EnergyKind::General;
}

Rat energy_exact(const StrandMap& f, const EdgeScalars& dom, const EdgeScalars& cod,
                 const Exponent& p, const Exponent& q) {
  EnergyKind kind = classify_energy(p, q);
  switch (kind) {
    case EnergyKind::WeightRatio: {
      auto n = multiplicity(f, dom);
      Rat best = 0;
      for (size_t e = 0; e < n.per_edge.size(); ++e) {
        for (const auto& s : n.per_edge[e]) {
          if (s.value == 0) continue;
          if (cod.values[e] == 0)
            throw std::invalid_argument("weight ratio: positive multiplicity over zero weight");
          best = rat_max(best, s.value / cod.values[e]);
        }
      }
      return best;
    }
    case EnergyKind::ExtremalLength: {
      auto n = multiplicity(f, dom);
      Rat total = 0;
      for (size_t e = 0; e < n.per_edge.size(); ++e)
        for (const auto& s : n.per_edge[e]) total += cod.values[e] * (s.t1 - s.t0) * s.value * s.value;
      return total;
    }
    case EnergyKind::WeightedLength: {
      auto n = multiplicity(f, dom);
      Rat total = 0;
      for (size_t e = 0; e < n.per_edge.size(); ++e)
        for (const auto& s : n.per_edge[e]) total += cod.values[e] * (s.t1 - s.t0) * s.value;
      return total;
    }
    case EnergyKind::Embedding: {
      auto fill = fill_function(f, dom, cod);
      return fill.max_value();
    }
    case EnergyKind::Dirichlet: {
      auto fill = fill_function(f, dom, cod);
      Rat total = 0;
      for (size_t e = 0; e < fill.per_edge.size(); ++e)
        for (const auto& s : fill.per_edge[e]) total += cod.values[e] * (s.t1 - s.t0) * s.value;
      return total;
    }
    case EnergyKind::Lipschitz: {
      Rat best = 0;
      for (size_t de = 0; de < f.strands.size(); ++de) {
        for (const auto& s : f.strands[de]) {
          Rat image = cod.values[oedge_edge(s.o)] * (s.u1 - s.u0);
          Rat dlen = dom.values[de] * (s.a1 - s.a0);
          if (dlen == 0) {
            if (image > 0) throw std::invalid_argument("Lipschitz: positive image over null domain");
            continue;
          }
          best = rat_max(best, image / dlen);
        }
      }
      return best;
    }
    case EnergyKind::General:
      throw std::invalid_argument("energy_exact: p,q must be in {1,2,inf}");
  }
  return 0;
}

double energy_E(const StrandMap& f, const EdgeScalars& dom, const EdgeScalars& cod,
                const Exponent& p, const Exponent& q) {
  EnergyKind kind = classify_energy(p, q);
  if (kind != EnergyKind::General) {
    double raw = to_double(energy_exact(f, dom, cod, p, q));
    switch (kind) {
      case EnergyKind::ExtremalLength:
      case EnergyKind::Embedding:
      case EnergyKind::Dirichlet:
        return std::sqrt(raw);
      default:
        return raw;
    }
  }
  if (p.inf) throw std::invalid_argument("energy: p = inf requires q = inf");
  double pd = to_double(p.value);
  if (pd < 1) throw std::invalid_argument("energy: p < 1");
  if (!q.inf && to_double(q.value) < pd) throw std::invalid_argument("energy: requires p <= q");

  // Fill^p(y) = sum over strands of |f'|^(p-1); then the L^{q/(q-p)}
  // norm w.r.t. the codomain measure, to the power 1/p.
  auto fillp = accumulate_segments(f, [&](int de, const Strand& s) {
    double image = to_double(cod.values[oedge_edge(s.o)] * (s.u1 - s.u0));
    double dlen = to_double(dom.values[de] * (s.a1 - s.a0));
    double speed = image / dlen;
    return rat_from_double(std::pow(speed, pd - 1.0));
  });
  if (q.inf) {
    double total = 0;
    for (size_t e = 0; e < fillp.per_edge.size(); ++e)
      for (const auto& s : fillp.per_edge[e])
        total += to_double(cod.values[e]) * to_double(s.t1 - s.t0) * to_double(s.value);
    return std::pow(total, 1.0 / pd);
  }
  double qd = to_double(q.value);
  if (qd == pd) {
    double best = 0;
    for (const auto& edge : fillp.per_edge)
      for (const auto& s : edge) best = std::max(best, to_double(s.value));
    return std::pow(best, 1.0 / pd);
  }
  double s_exp = qd / (qd - pd);
  double integral = 0;
  for (size_t e = 0; e < fillp.per_edge.size(); ++e)
    for (const auto& s : fillp.per_edge[e])
      integral += to_double(cod.values[e]) * to_double(s.t1 - s.t0) *
                  std::pow(to_double(s.value), s_exp);
  return std::pow(integral, (1.0 / s_exp) * (1.0 / pd));
}

namespace {

StrandMap strands_for_energy(const GraphMap& f, const EdgeScalars& cod) {
  if (cod.kind == ScalarKind::Weight) return unit_strands(f);
  std::vector<Rat> L(cod.values.begin(), cod.values.end());
  return canonical_strands(f, L);
}

}  // namespace

Rat energy_exact(const GraphMap& f, const EdgeScalars& dom, const EdgeScalars& cod,
                 const Exponent& p, const Exponent& q) {
  return energy_exact(strands_for_energy(f, cod), dom, cod, p, q);
}

double energy_E(const GraphMap& f, const EdgeScalars& dom, const EdgeScalars& cod,
                const Exponent& p, const Exponent& q) {
  return energy_E(strands_for_energy(f, cod), dom, cod, p, q);
}

EdgeScalars pullback_lengths(const GraphMap& f, const EdgeScalars& cod_lengths) {
  EdgeScalars out;
  out.kind = ScalarKind::Length;
  out.values.resize(f.domain.edges.size(), Rat(0));
  for (size_t e = 0; e < f.domain.edges.size(); ++e) {
    Rat total = 0;
    for (const auto& s : path_segments(f.edge_paths[e]))
      total += cod_lengths.values[oedge_edge(s.o)] * (s.u1 - s.u0);
    out.values[e] = total;
  }
  return out;
}

GraphMap map_subdivide_codomain(const GraphMap& f, int e, const Rat& t,
                                const SubdivideResult& sub) {
  GraphMap out;
  out.domain = f.domain;
  out.codomain = sub.graph;
  int e1 = sub.first_half, e2 = sub.second_half, mid = sub.new_vertex;

  auto convert_point = [&](const PointOnGraph& p) {
    if (p.is_vertex()) return p;
    if (p.edge != e) return p;
    if (p.offset < t) return PointOnGraph::on_edge(e1, p.offset / t);
    if (p.offset == t) return PointOnGraph::at_vertex(mid);
    return PointOnGraph::on_edge(e2, (p.offset - t) / (1 - t));
  };
  for (const auto& p : f.vertex_images) out.vertex_images.push_back(convert_point(p));

  out.edge_paths.resize(f.edge_paths.size());
  for (size_t de = 0; de < f.edge_paths.size(); ++de) {
    PathBuilder pb;
    for (const auto& s : path_segments(f.edge_paths[de])) {
      if (oedge_edge(s.o) != e) {
        pb.push(s.o, s.u0, s.u1);
        continue;
      }
      Rat t0, t1;
      edge_interval(s.o, s.u0, s.u1, t0, t1);
      // Pieces on [0,t] -> e1, on [t,1] -> e2, each rescaled.
      Rat lo1 = t0, hi1 = rat_min(t1, t);
      Rat lo2 = rat_max(t0, t), hi2 = t1;
      struct Piece {
        int edge;
        Rat p0, p1;
      };
      std::vector<Piece> pieces;
      if (lo1 < hi1) pieces.push_back({e1, lo1 / t, hi1 / t});
      if (lo2 < hi2) pieces.push_back({e2, (lo2 - t) / (1 - t), (hi2 - t) / (1 - t)});
      if (oedge_dir(s.o) == 1) std::reverse(pieces.begin(), pieces.end());
      for (const auto& piece : pieces) {
        int o = oedge(piece.edge, oedge_dir(s.o));
        if (oedge_dir(s.o) == 0)
          pb.push(o, piece.p0, piece.p1);
        else
          pb.push(o, 1 - piece.p1, 1 - piece.p0);
      }
    }
    out.edge_paths[de] = pb.to_edge_path();
  }
  return out;
}

GraphMap map_subdivide_domain(const GraphMap& f, int e, const Rat& t,
                              const SubdivideResult& sub, const std::vector<Rat>& cod_lengths) {
  GraphMap out;
  out.domain = sub.graph;
  out.codomain = f.codomain;
  out.vertex_images = f.vertex_images;

  auto sm = canonical_strands(f, cod_lengths);
  PointOnGraph split_image = sm.image_of_point(PointOnGraph::on_edge(e, t));
  out.vertex_images.push_back(split_image);

  out.edge_paths = f.edge_paths;
  // First half reuses slot e, second half is appended.
  EdgePath first, second;
  const auto& list = sm.strands[e];
  PathBuilder pb1, pb2;
  for (const auto& s : list) {
    if (s.a1 <= t) {
      pb1.push(s.o, s.u0, s.u1);
    } else if (s.a0 >= t) {
      pb2.push(s.o, s.u0, s.u1);
    } else {
      Rat um = s.u0 + (t - s.a0) / (s.a1 - s.a0) * (s.u1 - s.u0);
      pb1.push(s.o, s.u0, um);
      pb2.push(s.o, um, s.u1);
    }
  }
  out.edge_paths[e] = pb1.to_edge_path();
  out.edge_paths.push_back(pb2.to_edge_path());
  return out;
}

}  // namespace elastigraph
