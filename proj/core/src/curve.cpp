#include "elastigraph/curve.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <set>
#include <stdexcept>

namespace elastigraph {

namespace {

std::vector<int> reversed_word(const std::vector<int>& w) {
  std::vector<int> r;
  r.reserve(w.size());
  for (auto it = w.rbegin(); it != w.rend(); ++it) r.push_back(oedge_reverse(*it));
  return r;
}

std::vector<int> least_rotation(const std::vector<int>& w) {
  std::vector<int> best = w;
  std::vector<int> cur = w;
  for (size_t i = 1; i < w.size(); ++i) {
    std::rotate(cur.begin(), cur.begin() + 1, cur.end());
    if (cur < best) best = cur;
  }
  return best;
}

bool is_proper_power(const std::vector<int>& w) {
  size_t n = w.size();
  for (size_t d = 1; d < n; ++d) {
    if (n % d != 0) continue;
    bool ok = true;
    for (size_t i = 0; i < n && ok; ++i) ok = w[i] == w[(i + d) % n];
    if (ok) return true;
  }
  return false;
}

// Stack reduction of a linear word.
std::vector<int> reduce_word(const std::vector<int>& w) {
  std::vector<int> out;
  for (int o : w) {
    if (!out.empty() && out.back() == oedge_reverse(o))
      out.pop_back();
    else
      out.push_back(o);
  }
  return out;
}

std::vector<int> cyclic_reduce(std::vector<int> w) {
  w = reduce_word(w);
  while (w.size() >= 2 && w.front() == oedge_reverse(w.back())) {
    w.erase(w.begin());
    w.pop_back();
  }
  return w;
}

}  // namespace

std::vector<Rat> curve_multiplicities(const MarkedGraph& g, const MultiCurve& c) {
  std::vector<Rat> n(g.edges.size(), Rat(0));
  for (const auto& comp : c.components)
    for (int o : comp.word) n[oedge_edge(o)] += comp.weight;
  return n;
}

CurveReduction reduce_curve(const MarkedGraph& g, const MultiCurve& c) {
  CurveReduction res;
  for (const auto& comp : c.components) {
    CurveComponent r = comp;
    r.word = comp.kind == CurveComponent::Kind::Loop ? cyclic_reduce(comp.word)
                                                     : reduce_word(comp.word);
    if (r.word.empty()) {
      ++res.dropped_trivial;
      continue;
    }
    if (comp.kind == CurveComponent::Kind::Arc) {
      int a = g.tail(r.word.front());
      int b = g.head(r.word.back());
      if (!g.vertices[a].marked || !g.vertices[b].marked)
        throw std::invalid_argument("arc endpoints must be marked");
    }
    res.curve.components.push_back(std::move(r));
  }
  return res;
}

CurveComponent canonical_component(const CurveComponent& c) {
  CurveComponent out = c;
  if (c.kind == CurveComponent::Kind::Loop) {
    auto a = least_rotation(c.word);
    auto b = least_rotation(reversed_word(c.word));
    out.word = std::min(a, b);
  } else {
    auto r = reversed_word(c.word);
    out.word = std::min(c.word, r);
  }
  return out;
}

Rat curve_extremal_length(const MarkedGraph& g, const MultiCurve& c, const EdgeScalars& alpha) {
  auto n = curve_multiplicities(g, c);
  Rat total = 0;
  for (size_t e = 0; e < n.size(); ++e) total += alpha.values[e] * n[e] * n[e];
  return total;
}

Rat curve_length(const MarkedGraph& g, const MultiCurve& c, const EdgeScalars& ell) {
  auto n = curve_multiplicities(g, c);
  Rat total = 0;
  for (size_t e = 0; e < n.size(); ++e) total += ell.values[e] * n[e];
  return total;
}

Rat curve_weight_ratio(const MarkedGraph& g, const MultiCurve& c, const EdgeScalars& w) {
  auto n = curve_multiplicities(g, c);
  Rat best = 0;
  for (size_t e = 0; e < n.size(); ++e) {
    if (n[e] == 0) continue;
    if (w.values[e] == 0)
      throw std::invalid_argument("weight ratio: curve crosses zero-weight edge");
    best = rat_max(best, n[e] / w.values[e]);
  }
  return best;
}

namespace {

struct TracedSeg {
  int o;
  Rat u0, u1;
};

std::vector<TracedSeg> traced_segments(const CurveComponent& c, const GraphMap& f) {
  std::vector<TracedSeg> segs;
  for (int o : c.word) {
    EdgePath p = f.path_of(o);
    for (size_t i = 0; i < p.word.size(); ++i) {
      Rat u0 = (i == 0) ? p.start_u : Rat(0);
      Rat u1 = (i + 1 == p.word.size()) ? p.end_u : Rat(1);
      if (u0 < u1) segs.push_back({p.word[i], u0, u1});
    }
  }
  return segs;
}

};  // namespace

std::vector<int> push_component_word(const CurveComponent& c, const GraphMap& f,
                                     bool* reduced_as_traced) {
  auto segs = traced_segments(c, f);

  if (reduced_as_traced) {
    // The composite is reduced iff no junction backtracks (including the
    // wrap junction of a loop) and the image is non-degenerate.
    bool ok = !segs.empty();
    auto backtracks = [](const TracedSeg& s, const TracedSeg& t) {
      return t.o == oedge_reverse(s.o) && t.u0 == 1 - s.u1;
    };
    for (size_t i = 0; i + 1 < segs.size() && ok; ++i)
      if (backtracks(segs[i], segs[i + 1])) ok = false;
    if (ok && c.kind == CurveComponent::Kind::Loop && backtracks(segs.back(), segs.front()))
      ok = false;
    *reduced_as_traced = ok;
  }

  PathBuilder pb;
  for (const auto& s : segs) pb.push(s.o, s.u0, s.u1);
  std::deque<PathBuilder::Seg> out(pb.segments().begin(), pb.segments().end());

  bool wrap_changed = false;
  if (c.kind == CurveComponent::Kind::Loop) {
    // Wrap-around merging and cancellation at the (arbitrary) basepoint.
    while (out.size() >= 2) {
      auto& back = out.back();
      auto& front = out.front();
      if (back.o == front.o && front.u0 == back.u1) {
        front.u0 = back.u0;
        out.pop_back();
        wrap_changed = true;
        continue;
      }
      if (front.o == oedge_reverse(back.o) && front.u0 == 1 - back.u1) {
        Rat lf = front.u1 - front.u0, lb = back.u1 - back.u0;
        Rat m = rat_min(lf, lb);
        back.u1 -= m;
        front.u0 += m;
        wrap_changed = true;
        if (back.u1 == back.u0) out.pop_back();
        if (!out.empty() && out.front().u1 == out.front().u0) out.pop_front();
        continue;
      }
      break;
    }
    if (out.size() == 1 && !(out.front().u0 == 0 && out.front().u1 == 1)) {
      // A loop strictly inside one edge is null-homotopic.
      out.clear();
      wrap_changed = true;
    }
  }

  (void)wrap_changed;
  std::vector<int> word;
  for (const auto& s : out) {
    if (!(s.u0 == 0 && s.u1 == 1))
      throw std::logic_error("push_curve: partial segment survived reduction");
    word.push_back(s.o);
  }
  return word;
}

MultiCurve push_curve(const MultiCurve& c, const GraphMap& f) {
  MultiCurve out;
  for (const auto& comp : c.components) {
    auto word = push_component_word(comp, f, nullptr);
    if (word.empty()) continue;
    CurveComponent nc;
    nc.kind = comp.kind;
    nc.weight = comp.weight;
    nc.word = std::move(word);
    if (nc.kind == CurveComponent::Kind::Loop) nc.word = cyclic_reduce(nc.word);
    if (nc.word.empty()) continue;
    out.components.push_back(std::move(nc));
  }
  return out;
}

std::vector<CurveComponent> enumerate_candidates(const MarkedGraph& g,
                                                 const CandidateOptions& opts) {
  std::set<std::vector<int>> loop_set, arc_set;
  size_t visited = 0;
  auto guard = [&]() {
    if (++visited > opts.abort_above)
      throw std::runtime_error("enumerate_candidates: candidate budget exceeded");
  };

  std::vector<int> usage(g.edges.size(), 0);
  std::vector<int> word;

  // Loops: closed reduced walks, each unoriented edge <= max_crossings.
  std::function<void(int, int)> dfs_loop = [&](int start_vertex, int v) {
    if (!word.empty() && v == start_vertex) {
      bool cyclically_reduced = word.size() == 1 || word.back() != oedge_reverse(word.front());
      if (cyclically_reduced && !is_proper_power(word)) {
        CurveComponent c;
        c.kind = CurveComponent::Kind::Loop;
        c.word = word;
        loop_set.insert(canonical_component(c).word);
      }
    }
    for (int o : g.oedges_at(v)) {
      if (!word.empty() && o == oedge_reverse(word.back())) continue;
      if (usage[oedge_edge(o)] >= opts.max_crossings) continue;
      guard();
      word.push_back(o);
      usage[oedge_edge(o)]++;
      dfs_loop(start_vertex, g.head(o));
      usage[oedge_edge(o)]--;
      word.pop_back();
    }
  };
  for (size_t v = 0; v < g.vertices.size(); ++v) dfs_loop(static_cast<int>(v), static_cast<int>(v));

  // Arcs between marked vertices.
  std::function<void(int)> dfs_arc = [&](int v) {
    if (!word.empty() && g.vertices[v].marked) {
      CurveComponent c;
      c.kind = CurveComponent::Kind::Arc;
      c.word = word;
      arc_set.insert(canonical_component(c).word);
    }
    for (int o : g.oedges_at(v)) {
      if (!word.empty() && o == oedge_reverse(word.back())) continue;
      if (usage[oedge_edge(o)] >= opts.max_crossings) continue;
      guard();
      word.push_back(o);
      usage[oedge_edge(o)]++;
      dfs_arc(g.head(o));
      usage[oedge_edge(o)]--;
      word.pop_back();
    }
  };
  for (int m : g.marked_vertices()) dfs_arc(m);

  std::vector<CurveComponent> out;
  for (const auto& w : loop_set) {
    CurveComponent c;
    c.kind = CurveComponent::Kind::Loop;
    c.word = w;
    // A closed walk may fail to be cyclically reduced at the recorded
    // basepoint only if it backtracks; those were filtered above.
    out.push_back(std::move(c));
  }
  for (const auto& w : arc_set) {
    CurveComponent c;
    c.kind = CurveComponent::Kind::Arc;
    c.word = w;
    out.push_back(std::move(c));
  }
  return out;
}

StretchResult lipschitz_stretch(const GraphMap& f, const EdgeScalars& ell_dom,
                                const EdgeScalars& ell_cod) {
  auto candidates = enumerate_candidates(f.domain);
  StretchResult res;
  bool any = false;
  for (const auto& c : candidates) {
    Rat len_dom = 0;
    for (int o : c.word) len_dom += ell_dom.values[oedge_edge(o)];
    if (len_dom == 0) continue;  // null curves excluded
    MultiCurve mc;
    mc.components.push_back(c);
    auto pushed = push_curve(mc, f);
    Rat len_cod = 0;
    if (!pushed.empty()) len_cod = curve_length(f.codomain, pushed, ell_cod);
    Rat ratio = len_cod / len_dom;
    if (!any || ratio > res.value) {
      res.value = ratio;
      res.witness = c;
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("lipschitz_stretch: no candidate of positive length");
  return res;
}

namespace {

Rat rationalize(double x, long max_den) {
  // Continued-fraction approximation with bounded denominator.
  if (x <= 0) return Rat(0);
  long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double v = x;
  for (int it = 0; it < 64; ++it) {
    double fl = std::floor(v);
    long a = static_cast<long>(fl);
    long p2 = a * p1 + p0;
    long q2 = a * q1 + q0;
    if (q2 > max_den || p2 < 0 || q2 < 0) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    double rem = v - fl;
    if (rem < 1e-15) break;
    v = 1.0 / rem;
  }
  if (q1 == 0) return Rat(1);
  return Rat(p1, q1);
}

}  // namespace

ElStretchResult sf_el_lower_bound(const GraphMap& f, const EdgeScalars& alpha_dom,
                                  const EdgeScalars& alpha_cod) {
  auto candidates = enumerate_candidates(f.domain);
  ElStretchResult res;

  struct Entry {
    CurveComponent c;
    std::vector<Rat> n_dom, n_cod;
    Rat el_dom, el_cod;
  };
  std::vector<Entry> entries;
  for (const auto& c : candidates) {
    Entry e;
    e.c = c;
    MultiCurve mc;
    mc.components.push_back(c);
    e.n_dom = curve_multiplicities(f.domain, mc);
    auto pushed = push_curve(mc, f);
    e.n_cod = curve_multiplicities(f.codomain, pushed);
    e.el_dom = 0;
    e.el_cod = 0;
    for (size_t i = 0; i < e.n_dom.size(); ++i)
      e.el_dom += alpha_dom.values[i] * e.n_dom[i] * e.n_dom[i];
    for (size_t i = 0; i < e.n_cod.size(); ++i)
      e.el_cod += alpha_cod.values[i] * e.n_cod[i] * e.n_cod[i];
    if (e.el_dom > 0) entries.push_back(std::move(e));
  }

  auto consider = [&](const MultiCurve& witness, const Rat& el_dom, const Rat& el_cod) {
    if (el_dom == 0) return;
    Rat ratio = el_cod / el_dom;
    if (witness.components.empty()) return;
    if (res.witness.components.empty() || ratio > res.exact_ratio) {
      res.exact_ratio = ratio;
      res.value = to_double(ratio);
      res.witness = witness;
    }
  };

  for (const auto& e : entries) {
    MultiCurve mc;
    mc.components.push_back(e.c);
    consider(mc, e.el_dom, e.el_cod);
  }

  // Pairs with optimal weights: the largest generalized eigenvalue of the
  // 2x2 quadratic forms (target, domain); resulting weights are snapped to
  // rationals so the reported ratio stays exact.
  auto gram = [&](const std::vector<Rat>& a, const std::vector<Rat>& b, const EdgeScalars& al) {
    Rat total = 0;
    for (size_t i = 0; i < a.size(); ++i) total += al.values[i] * a[i] * b[i];
    return total;
  };
  for (size_t i = 0; i < entries.size(); ++i) {
    for (size_t j = i + 1; j < entries.size(); ++j) {
      const Entry& A = entries[i];
      const Entry& B = entries[j];
      double Q11 = to_double(A.el_dom), Q22 = to_double(B.el_dom);
      double Q12 = to_double(gram(A.n_dom, B.n_dom, alpha_dom));
      double P11 = to_double(A.el_cod), P22 = to_double(B.el_cod);
      double P12 = to_double(gram(A.n_cod, B.n_cod, alpha_cod));
      // det(P - t Q) = 0.
      double a = Q11 * Q22 - Q12 * Q12;
      double b = 2 * P12 * Q12 - P11 * Q22 - P22 * Q11;
      double cc = P11 * P22 - P12 * P12;
      if (std::abs(a) < 1e-18) continue;
      double disc = b * b - 4 * a * cc;
      if (disc < 0) continue;
      double t = (-b + std::sqrt(disc)) / (2 * a);
      // Eigenvector of (P - tQ).
      double m11 = P11 - t * Q11, m12 = P12 - t * Q12, m22 = P22 - t * Q22;
      double w1, w2;
      if (std::abs(m11) + std::abs(m12) > std::abs(m12) + std::abs(m22)) {
        w1 = -m12;
        w2 = m11;
      } else {
        w1 = m22;
        w2 = -m12;
      }
      if (w1 < 0) {
        w1 = -w1;
        w2 = -w2;
      }
      if (!(w1 > 0 && w2 > 0)) continue;  // boundary optimum = singles
      Rat r1 = rationalize(w1 / (w1 + w2), 4096);
      Rat r2 = 1 - r1;
      if (!(r1 > 0 && r2 > 0)) continue;
      MultiCurve mc;
      CurveComponent ca = A.c, cb = B.c;
      ca.weight = r1;
      cb.weight = r2;
      mc.components = {ca, cb};
      Rat el_dom = curve_extremal_length(f.domain, mc, alpha_dom);
      MultiCurve pushed = push_curve(mc, f);
      Rat el_cod = curve_extremal_length(f.codomain, pushed, alpha_cod);
      consider(mc, el_dom, el_cod);
    }
  }
  return res;
}

}  // namespace elastigraph
