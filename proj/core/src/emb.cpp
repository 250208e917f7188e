#include "elastigraph/emb.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace elastigraph {

Rat StripStructure::area() const {
  Rat total = 0;
  for (size_t e = 0; e < weights.values.size(); ++e) total += weights.values[e] * lengths.values[e];
  return total;
}

EdgeScalars duality(const EdgeScalars& w, const EdgeScalars& alpha, const Rat& p) {
  if (!(p > 1)) throw std::invalid_argument("duality: requires p > 1");
  EdgeScalars out;
  out.kind = ScalarKind::Length;
  out.values.resize(w.values.size());
  if (p == 2) {
    for (size_t e = 0; e < w.values.size(); ++e) out.values[e] = alpha.values[e] * w.values[e];
    return out;
  }
  double pe = 1.0 / (to_double(p) - 1.0);
  for (size_t e = 0; e < w.values.size(); ++e)
    out.values[e] =
        rat_from_double(to_double(alpha.values[e]) * std::pow(to_double(w.values[e]), pe));
  return out;
}

std::vector<double> duality(const std::vector<double>& w, const EdgeScalars& alpha, double p) {
  if (!(p > 1)) throw std::invalid_argument("duality: requires p > 1");
  std::vector<double> out(w.size());
  for (size_t e = 0; e < w.size(); ++e)
    out[e] = to_double(alpha.values[e]) * (p == 2 ? w[e] : std::pow(w[e], 1.0 / (p - 1.0)));
  return out;
}

std::vector<double> duality_inverse(const std::vector<double>& ell, const EdgeScalars& alpha,
                                    double p) {
  if (!(p > 1)) throw std::invalid_argument("duality: requires p > 1");
  std::vector<double> out(ell.size());
  for (size_t e = 0; e < ell.size(); ++e) {
    double ratio = ell[e] / to_double(alpha.values[e]);
    out[e] = p == 2 ? ratio : std::pow(ratio, p - 1.0);
  }
  return out;
}

namespace {

size_t cell_id(const GraphMap& f) {
  size_t h = 1469598103934665603ull;
  auto mix = [&](size_t x) {
    h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  };
  for (const auto& p : f.vertex_images) {
    if (p.is_vertex())
      mix(static_cast<size_t>(p.vertex) * 2 + 1);
    else
      mix(static_cast<size_t>(p.edge) * 2 + 0x10000);
  }
  for (const auto& path : f.edge_paths) {
    mix(path.word.size() + 0xabcdef);
    for (int o : path.word) mix(static_cast<size_t>(o) + 7);
  }
  return h;
}

std::vector<double> weighted_median_per_edge(const SegmentFunction& n, size_t edges) {
  std::vector<double> out(edges, 0.0);
  for (size_t e = 0; e < edges; ++e) {
    std::vector<std::pair<double, double>> vals;  // (value, measure)
    double total = 0;
    for (const auto& s : n.per_edge[e]) {
      vals.push_back({to_double(s.value), to_double(s.t1 - s.t0)});
      total += to_double(s.t1 - s.t0);
    }
    if (vals.empty()) continue;
    std::sort(vals.begin(), vals.end());
    double acc = 0;
    for (const auto& [v, m] : vals) {
      acc += m;
      if (acc >= total / 2) {
        out[e] = v;
        break;
      }
    }
  }
  return out;
}

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace

IterStepResult iter_step(const std::vector<double>& ell, const GraphMap& phi,
                         const EdgeScalars& alpha1, const EdgeScalars& alpha2,
                         const IterOptions& opts, const GraphMap* warm,
                         const GraphMap* warm_id) {
  IterStepResult res;
  res.harmonic = harmonic_solve(warm ? *warm : phi, alpha1, ell, opts.harmonic);

  // Pushforward of the tension weights; constant per edge by tautness of
  // the harmonic representative.
  EdgeScalars wr = scalars_from_double(ScalarKind::Weight, res.harmonic.tension);
  auto n = multiplicity(res.harmonic.strands, wr);
  auto v = weighted_median_per_edge(n, phi.codomain.edges.size());
  double scale_w = max_abs(v);
  for (size_t e = 0; e < v.size(); ++e) {
    for (const auto& s : n.per_edge[e]) {
      if (std::fabs(to_double(s.value) - v[e]) > 1e-5 * (scale_w + 1))
        throw std::logic_error("iter_step: pushforward is not constant on an edge");
    }
  }

  res.next_lengths.resize(v.size());
  for (size_t e = 0; e < v.size(); ++e)
    res.next_lengths[e] = to_double(alpha2.values[e]) * v[e];

  GraphMap id2 = identity_map(phi.codomain);
  res.id_harmonic = harmonic_solve(warm_id ? *warm_id : id2, alpha2, ell, opts.harmonic);
  double denom = res.id_harmonic.dirichlet;
  res.record.lambda_dr = denom > 0 ? res.harmonic.dirichlet / denom : 0;
  res.record.lengths = ell;
  res.record.pullback = res.harmonic.pullback;
  res.record.weights = res.harmonic.tension;
  res.record.pushforward = v;
  res.record.scale = std::accumulate(res.next_lengths.begin(), res.next_lengths.end(), 0.0);
  res.record.cell = cell_id(res.harmonic.map);
  return res;
}

namespace {

void normalize(std::vector<double>& v) {
  double s = std::accumulate(v.begin(), v.end(), 0.0);
  if (s > 0)
    for (double& x : v) x /= s;
}

}  // namespace

IterationTrace iterate_to_fixed(std::vector<double> ell0, const GraphMap& phi,
                                const EdgeScalars& alpha1, const EdgeScalars& alpha2,
                                const IterOptions& opts) {
  IterationTrace trace;
  std::vector<double> ell = ell0;
  normalize(ell);
  std::optional<GraphMap> warm, warm_id;
  std::deque<size_t> window;
  int last_cell_attempt = -1000;

  auto finalize = [&](const IterStepResult& st, bool converged) {
    trace.converged = converged;
    trace.lambda = st.record.lambda_dr;
    trace.ell_fixed = st.record.lengths;
    trace.weights_fixed = st.record.weights;
    trace.push_fixed = st.record.pushforward;
    trace.map = st.harmonic.map;
    trace.strands = st.harmonic.strands;
  };

  for (int i = 0; i < opts.max_iters; ++i) {
    IterStepResult st = iter_step(ell, phi, alpha1, alpha2, opts, warm ? &*warm : nullptr,
                                  warm_id ? &*warm_id : nullptr);
    st.record.index = i;
    trace.steps.push_back(st.record);
    warm = st.harmonic.map;
    warm_id = st.id_harmonic.map;

    if (st.record.scale <= 0) {
      finalize(st, true);
      trace.lambda = 0;
      return trace;
    }
    std::vector<double> next = st.next_lengths;
    normalize(next);
    double delta = 0;
    for (size_t e = 0; e < next.size(); ++e) delta = std::max(delta, std::fabs(next[e] - ell[e]));
    if (delta < opts.tol) {
      finalize(st, true);
      return trace;
    }

    // Combinatorial cycling: attempt the linear fixed-ray solve for the
    // current cell cycle.
    bool attempted = false;
    if (opts.cell_solve && i - last_cell_attempt >= 8) {
      int period = 0;
      for (size_t back = 0; back < window.size(); ++back) {
        if (window[window.size() - 1 - back] == st.record.cell) {
          period = static_cast<int>(back) + 1;
          break;
        }
      }
      if (period > 0 && period <= 4) {
        last_cell_attempt = i;
        attempted = true;
        size_t nn = next.size();
        auto apply_k = [&](std::vector<double> x) {
          for (int s = 0; s < period; ++s) {
            IterStepResult r = iter_step(x, phi, alpha1, alpha2, opts, &*warm, &*warm_id);
            x = r.next_lengths;
          }
          return x;
        };
        std::vector<double> base = apply_k(ell);
        std::vector<std::vector<double>> A(nn, std::vector<double>(nn, 0.0));
        double dstep = 1e-6;
        bool ok = true;
        for (size_t j = 0; j < nn && ok; ++j) {
          std::vector<double> pert = ell;
          pert[j] += dstep;
          std::vector<double> out;
          try {
            out = apply_k(pert);
          } catch (const std::exception&) {
            ok = false;
            break;
          }
          for (size_t r = 0; r < nn; ++r) A[r][j] = (out[r] - base[r]) / dstep;
        }
        if (ok) {
          std::vector<double> x = ell;
          for (int it = 0; it < 300; ++it) {
            std::vector<double> y(nn, 0.0);
            for (size_t r = 0; r < nn; ++r)
              for (size_t c = 0; c < nn; ++c) y[r] += A[r][c] * x[c];
            for (double& t : y) t = std::max(t, 0.0);
            normalize(y);
            x = y;
          }
          try {
            IterStepResult check =
                iter_step(x, phi, alpha1, alpha2, opts, &*warm, &*warm_id);
            std::vector<double> xn = check.next_lengths;
            normalize(xn);
            double d2 = 0;
            for (size_t e = 0; e < nn; ++e) d2 = std::max(d2, std::fabs(xn[e] - x[e]));
            if (d2 < opts.tol) {
              check.record.index = i + 1;
              trace.steps.push_back(check.record);
              finalize(check, true);
              return trace;
            }
          } catch (const std::exception&) {
          }
        }
      }
    }
    (void)attempted;
    window.push_back(st.record.cell);
    if (window.size() > 64) window.pop_front();
    ell = next;
  }
  // Budget exhausted: report the last step, flagged.
  IterStepResult st = iter_step(ell, phi, alpha1, alpha2, opts, warm ? &*warm : nullptr,
                                warm_id ? &*warm_id : nullptr);
  st.record.index = opts.max_iters;
  trace.steps.push_back(st.record);
  finalize(st, false);
  return trace;
}

BoundaryDecomposition boundary_decompose(const IterationTrace& fixed, const EdgeScalars& alpha1,
                                         const EdgeScalars& alpha2, double eps_rel) {
  (void)alpha1;
  (void)alpha2;
  const GraphMap& psi = fixed.map;
  BoundaryDecomposition dec;
  double lmax = max_abs(fixed.ell_fixed);
  for (size_t e = 0; e < fixed.ell_fixed.size(); ++e) {
    if (fixed.ell_fixed[e] <= eps_rel * lmax)
      dec.sigma2.push_back(static_cast<int>(e));
    else
      dec.delta2.push_back(static_cast<int>(e));
  }
  if (dec.sigma2.empty()) {
    dec.interior = true;
    dec.delta1.resize(psi.domain.edges.size());
    std::iota(dec.delta1.begin(), dec.delta1.end(), 0);
    return dec;
  }
  dec.interior = false;
  double wmax = max_abs(fixed.weights_fixed);
  for (size_t d = 0; d < fixed.weights_fixed.size(); ++d) {
    if (fixed.weights_fixed[d] <= eps_rel * wmax)
      dec.sigma1.push_back(static_cast<int>(d));
    else
      dec.delta1.push_back(static_cast<int>(d));
  }
  std::set<int> s2(dec.sigma2.begin(), dec.sigma2.end());
  std::set<int> d2(dec.delta2.begin(), dec.delta2.end());
  for (int d : dec.delta1)
    for (int o : psi.edge_paths[d].word)
      if (s2.count(oedge_edge(o)))
        throw std::runtime_error("boundary_decompose: positive-tension edge maps into the null part");
  for (int d : dec.sigma1)
    for (int o : psi.edge_paths[d].word)
      if (d2.count(oedge_edge(o)))
        throw std::runtime_error("boundary_decompose: null edge maps across the filling part");

  // Sigma graphs with the shared vertices marked.
  auto build = [&](const MarkedGraph& g, const std::vector<int>& sigma,
                   const std::vector<int>& delta, MarkedGraph& out, std::vector<int>& eback,
                   std::vector<int>& vback, std::vector<int>& vmap) {
    std::vector<char> in_sigma_v(g.vertices.size(), 0), in_delta_v(g.vertices.size(), 0);
    for (int e : sigma) {
      in_sigma_v[g.edges[e].ends[0]] = 1;
      in_sigma_v[g.edges[e].ends[1]] = 1;
    }
    for (int e : delta) {
      in_delta_v[g.edges[e].ends[0]] = 1;
      in_delta_v[g.edges[e].ends[1]] = 1;
    }
    vmap.assign(g.vertices.size(), -1);
    for (size_t v = 0; v < g.vertices.size(); ++v) {
      if (!in_sigma_v[v]) continue;
      bool marked = g.vertices[v].marked || in_delta_v[v];
      vmap[v] = out.add_vertex(g.vertices[v].id, marked);
      vback.push_back(static_cast<int>(v));
    }
    for (int e : sigma) {
      out.add_edge(g.edges[e].id, vmap[g.edges[e].ends[0]], vmap[g.edges[e].ends[1]]);
      eback.push_back(e);
    }
  };
  std::vector<int> vmap1, vmap2;
  build(psi.domain, dec.sigma1, dec.delta1, dec.sigma1_graph, dec.sigma1_edge_back,
        dec.sigma1_vertex_back, vmap1);
  build(psi.codomain, dec.sigma2, dec.delta2, dec.sigma2_graph, dec.sigma2_edge_back,
        dec.sigma2_vertex_back, vmap2);

  std::vector<int> emap2(psi.codomain.edges.size(), -1);
  for (size_t i = 0; i < dec.sigma2_edge_back.size(); ++i) emap2[dec.sigma2_edge_back[i]] =
      static_cast<int>(i);

  dec.restricted.domain = dec.sigma1_graph;
  dec.restricted.codomain = dec.sigma2_graph;
  dec.restricted.vertex_images.resize(dec.sigma1_graph.vertices.size());
  for (size_t nv = 0; nv < dec.sigma1_vertex_back.size(); ++nv) {
    const auto& p = psi.vertex_images[dec.sigma1_vertex_back[nv]];
    if (p.is_vertex()) {
      if (vmap2[p.vertex] < 0)
        throw std::runtime_error("boundary_decompose: null-part vertex maps outside the null part");
      dec.restricted.vertex_images[nv] = PointOnGraph::at_vertex(vmap2[p.vertex]);
    } else {
      if (emap2[p.edge] < 0)
        throw std::runtime_error("boundary_decompose: null-part vertex maps to a filling edge");
      dec.restricted.vertex_images[nv] = PointOnGraph::on_edge(emap2[p.edge], p.offset);
    }
  }
  dec.restricted.edge_paths.resize(dec.sigma1_graph.edges.size());
  for (size_t ne = 0; ne < dec.sigma1_edge_back.size(); ++ne) {
    const auto& old = psi.edge_paths[dec.sigma1_edge_back[ne]];
    EdgePath p = old;
    p.word.clear();
    for (int o : old.word) p.word.push_back(oedge(emap2[oedge_edge(o)], oedge_dir(o)));
    dec.restricted.edge_paths[ne] = p;
  }
  return dec;
}

namespace {

Rat rationalize_weight(double x, long max_den) {
  if (x <= 0) return Rat(0);
  long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double v = x;
  for (int it = 0; it < 64; ++it) {
    double fl = std::floor(v);
    long a = static_cast<long>(fl);
    long p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > max_den || p2 < 0 || q2 < 0) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    double rem = v - fl;
    if (rem < 1e-14) break;
    v = 1.0 / rem;
  }
  if (q1 == 0) return rat_from_double(x);
  return Rat(p1, q1);
}

// Gates of the map's train track: germs grouped by image direction.
std::vector<std::vector<std::vector<int>>> gates_from_map(const GraphMap& f,
                                                          const std::vector<char>& positive) {
  std::vector<std::vector<std::vector<int>>> gates(f.domain.vertices.size());
  for (size_t v = 0; v < f.domain.vertices.size(); ++v) {
    std::map<int, std::vector<int>> by_dir;
    for (size_t d = 0; d < f.domain.edges.size(); ++d) {
      if (!positive[d] || f.edge_paths[d].constant()) continue;
      if (f.domain.edges[d].ends[0] == static_cast<int>(v))
        by_dir[f.edge_paths[d].word.front()].push_back(2 * static_cast<int>(d));
      if (f.domain.edges[d].ends[1] == static_cast<int>(v))
        by_dir[oedge_reverse(f.edge_paths[d].word.back())].push_back(2 * static_cast<int>(d) + 1);
    }
    for (auto& [dir, hs] : by_dir) gates[v].push_back(hs);
  }
  return gates;
}

}  // namespace

MultiCurve tt_to_multicurve_approx(const TrainTrack& t, double eps) {
  const auto& g = t.graph;
  std::vector<double> w = scalars_to_double(t.weights);
  double w0max = max_abs(w);
  std::map<std::pair<int, std::vector<int>>, double> acc;

  size_t guard = 0;
  while (true) {
    if (++guard > 8 * (g.edges.size() + g.vertices.size()) + 32) break;
    int e0 = -1;
    double cur_max = 0;
    for (size_t e = 0; e < g.edges.size(); ++e) cur_max = std::max(cur_max, w[e]);
    if (cur_max <= eps * (w0max + 1)) break;
    for (size_t e = 0; e < g.edges.size(); ++e)
      if (w[e] > eps * (w0max + 1)) {
        e0 = static_cast<int>(e);
        break;
      }
    if (e0 < 0) break;

    // Gate bookkeeping with tolerances.
    auto gate_of = [&](int vtx, int h) {
      for (size_t gi = 0; gi < t.gates[vtx].size(); ++gi)
        for (int hh : t.gates[vtx][gi])
          if (hh == h) return static_cast<int>(gi);
      return -1;
    };
    auto smoothed = [&](int vtx, int h) {
      std::vector<double> gw(t.gates[vtx].size(), 0.0);
      for (size_t gi = 0; gi < t.gates[vtx].size(); ++gi)
        for (int hh : t.gates[vtx][gi]) gw[gi] += w[hh / 2];
      double total = std::accumulate(gw.begin(), gw.end(), 0.0);
      int live = 0;
      for (double x : gw)
        if (x > eps * (w0max + 1)) ++live;
      int dom = -1;
      if (!g.vertices[vtx].marked && live >= 3) {
        for (size_t gi = 0; gi < gw.size(); ++gi)
          if (gw[gi] > eps * (w0max + 1) && gw[gi] >= total - gw[gi] - eps * (w0max + 1))
            dom = static_cast<int>(gi);
      }
      int gi = gate_of(vtx, h);
      return dom < 0 ? gi : (gi == dom ? 0 : 1);
    };
    auto legal = [&](int a, int b) {
      int v = g.head(a);
      int hi = 2 * oedge_edge(a) + (1 - oedge_dir(a));
      int ho = b;
      return smoothed(v, hi) != smoothed(v, ho);
    };
    auto forward_walk = [&](int start, bool& cyclic) {
      std::vector<int> chain{start};
      std::set<int> seen{start};
      cyclic = false;
      while (true) {
        int v = g.head(chain.back());
        if (g.vertices[v].marked) return chain;
        int next = -1;
        for (int o : g.oedges_at(v)) {
          if (w[oedge_edge(o)] <= eps * (w0max + 1)) continue;
          if (!legal(chain.back(), o)) continue;
          next = o;
          break;
        }
        if (next < 0) return chain;  // tolerate dead stops in float mode
        if (seen.count(next)) {
          auto it = std::find(chain.begin(), chain.end(), next);
          chain.erase(chain.begin(), it);
          cyclic = true;
          return chain;
        }
        chain.push_back(next);
        seen.insert(next);
      }
    };

    bool cyc = false;
    auto chain = forward_walk(oedge(e0, 0), cyc);
    CurveComponent comp;
    if (cyc) {
      comp.kind = CurveComponent::Kind::Loop;
      comp.word = chain;
    } else {
      bool cyc2 = false;
      auto back = forward_walk(oedge(e0, 1), cyc2);
      if (cyc2) {
        comp.kind = CurveComponent::Kind::Loop;
        comp.word = back;
      } else {
        comp.kind = CurveComponent::Kind::Arc;
        for (auto it = back.rbegin(); it != back.rend(); ++it)
          comp.word.push_back(oedge_reverse(*it));
        comp.word.pop_back();
        comp.word.insert(comp.word.end(), chain.begin(), chain.end());
      }
    }
    std::vector<double> n(g.edges.size(), 0.0);
    for (int o : comp.word) n[oedge_edge(o)] += 1;
    double epsilon = 1e300;
    for (size_t e = 0; e < g.edges.size(); ++e)
      if (n[e] > 0) epsilon = std::min(epsilon, w[e] / n[e]);
    if (!(epsilon > 0) || epsilon == 1e300) break;
    for (size_t e = 0; e < g.edges.size(); ++e) w[e] = std::max(0.0, w[e] - epsilon * n[e]);
    auto canon = canonical_component(comp);
    acc[{static_cast<int>(canon.kind), canon.word}] += epsilon;
  }
  MultiCurve out;
  for (const auto& [key, weight] : acc) {
    CurveComponent c;
    c.kind = static_cast<CurveComponent::Kind>(key.first);
    c.word = key.second;
    c.weight = rationalize_weight(weight, 1 << 20);
    if (c.weight > 0) out.components.push_back(std::move(c));
  }
  return out;
}

namespace {

struct EssentialRestriction {
  bool restricted = false;
  MarkedGraph cod;
  std::vector<int> edge_back, vertex_back;
  std::vector<int> edge_map, vertex_map;
  GraphMap map;  // representative with image inside the essential image
};

EssentialRestriction restrict_to_essential(const GraphMap& phi) {
  EssentialRestriction out;
  EdgeScalars unit = EdgeScalars::uniform(ScalarKind::Weight, phi.domain.edges.size(), Rat(1));
  GraphMap taut = make_taut(phi, unit);
  auto n = multiplicity(taut, unit);
  std::vector<char> keep_edge(phi.codomain.edges.size(), 0);
  bool all = true;
  for (size_t e = 0; e < keep_edge.size(); ++e) {
    Rat value = n.per_edge[e].empty() ? Rat(0) : n.per_edge[e].front().value;
    keep_edge[e] = value > 0;
    if (!keep_edge[e]) all = false;
  }
  if (all) {
    out.map = phi;
    out.cod = phi.codomain;
    out.edge_back.resize(phi.codomain.edges.size());
    std::iota(out.edge_back.begin(), out.edge_back.end(), 0);
    out.vertex_back.resize(phi.codomain.vertices.size());
    std::iota(out.vertex_back.begin(), out.vertex_back.end(), 0);
    out.edge_map = out.edge_back;
    out.vertex_map = out.vertex_back;
    return out;
  }
  out.restricted = true;
  std::vector<char> keep_v(phi.codomain.vertices.size(), 0);
  for (size_t e = 0; e < keep_edge.size(); ++e) {
    if (!keep_edge[e]) continue;
    keep_v[phi.codomain.edges[e].ends[0]] = 1;
    keep_v[phi.codomain.edges[e].ends[1]] = 1;
  }
  for (const auto& p : taut.vertex_images)
    if (p.is_vertex()) keep_v[p.vertex] = 1;
  out.vertex_map.assign(phi.codomain.vertices.size(), -1);
  out.edge_map.assign(phi.codomain.edges.size(), -1);
  for (size_t v = 0; v < keep_v.size(); ++v) {
    if (!keep_v[v]) continue;
    out.vertex_map[v] = out.cod.add_vertex(phi.codomain.vertices[v].id,
                                           phi.codomain.vertices[v].marked);
    out.vertex_back.push_back(static_cast<int>(v));
  }
  for (size_t e = 0; e < keep_edge.size(); ++e) {
    if (!keep_edge[e]) continue;
    out.edge_map[e] = out.cod.add_edge(phi.codomain.edges[e].id,
                                       out.vertex_map[phi.codomain.edges[e].ends[0]],
                                       out.vertex_map[phi.codomain.edges[e].ends[1]]);
    out.edge_back.push_back(static_cast<int>(e));
  }
  out.map.domain = phi.domain;
  out.map.codomain = out.cod;
  for (const auto& p : taut.vertex_images)
    out.map.vertex_images.push_back(PointOnGraph::at_vertex(out.vertex_map[p.vertex]));
  for (const auto& path : taut.edge_paths) {
    EdgePath np = path;
    np.word.clear();
    for (int o : path.word) np.word.push_back(oedge(out.edge_map[oedge_edge(o)], oedge_dir(o)));
    out.map.edge_paths.push_back(np);
  }
  return out;
}

// compute_emb on an essentially surjective class; outputs reference the
// input graphs of `phi` directly.
EmbCertificate compute_emb_core(const GraphMap& phi, const EdgeScalars& alpha1,
                                const EdgeScalars& alpha2, const IterOptions& opts);

EmbCertificate compute_with_restriction(const GraphMap& phi, const EdgeScalars& alpha1,
                                        const EdgeScalars& alpha2, const IterOptions& opts) {
  EssentialRestriction ess = restrict_to_essential(phi);
  if (ess.cod.edges.empty()) {
    // Constant class: zero embedding energy, trivial certificate.
    EmbCertificate cert;
    cert.lambda = 0;
    cert.converged = true;
    cert.psi = reduce_map(phi);
    cert.psi_strands = unit_strands(cert.psi);
    cert.ell_fixed.assign(phi.codomain.edges.size(), 0.0);
    cert.k_graph = phi.codomain;
    cert.k_lengths.assign(phi.codomain.edges.size(), 0.0);
    cert.collapse_map = identity_map(phi.codomain);
    return cert;
  }
  EdgeScalars a2e;
  a2e.kind = ScalarKind::Elastic;
  for (int e : ess.edge_back) a2e.values.push_back(alpha2.values[e]);
  EmbCertificate cert = compute_emb_core(ess.map, alpha1, a2e, opts);
  if (!ess.restricted) return cert;

  // Lift back to the original codomain.
  auto lift_point = [&](const PointOnGraph& p) {
    if (p.is_vertex()) return PointOnGraph::at_vertex(ess.vertex_back[p.vertex]);
    return PointOnGraph::on_edge(ess.edge_back[p.edge], p.offset);
  };
  GraphMap lifted;
  lifted.domain = phi.domain;
  lifted.codomain = phi.codomain;
  for (const auto& p : cert.psi.vertex_images) lifted.vertex_images.push_back(lift_point(p));
  for (const auto& path : cert.psi.edge_paths) {
    EdgePath np = path;
    np.word.clear();
    for (int o : path.word) np.word.push_back(oedge(ess.edge_back[oedge_edge(o)], oedge_dir(o)));
    lifted.edge_paths.push_back(np);
  }
  StrandMap ls;
  ls.domain = phi.domain;
  ls.codomain = phi.codomain;
  ls.vertex_images = lifted.vertex_images;
  ls.strands.resize(phi.domain.edges.size());
  for (size_t d = 0; d < cert.psi_strands.strands.size(); ++d)
    for (const auto& s : cert.psi_strands.strands[d])
      ls.strands[d].push_back(
          {s.a0, s.a1, oedge(ess.edge_back[oedge_edge(s.o)], oedge_dir(s.o)), s.u0, s.u1});
  cert.psi = std::move(lifted);
  cert.psi_strands = std::move(ls);

  std::vector<int> delta2;
  for (int e : cert.delta2) delta2.push_back(ess.edge_back[e]);
  cert.delta2 = delta2;
  std::vector<double> ell(phi.codomain.edges.size(), 0.0);
  for (size_t e = 0; e < cert.ell_fixed.size(); ++e) ell[ess.edge_back[e]] = cert.ell_fixed[e];
  cert.ell_fixed = ell;

  // Rebuild K over the full codomain: collapse everything non-filling.
  std::set<int> fill(cert.delta2.begin(), cert.delta2.end());
  std::vector<int> null_edges;
  for (size_t e = 0; e < phi.codomain.edges.size(); ++e)
    if (!fill.count(static_cast<int>(e))) null_edges.push_back(static_cast<int>(e));
  auto col = collapse_subgraph(phi.codomain, SubgraphRef(phi.codomain, null_edges));
  cert.k_graph = col.graph;
  cert.k_lengths.assign(col.graph.edges.size(), 0.0);
  cert.collapse_map.domain = phi.codomain;
  cert.collapse_map.codomain = col.graph;
  for (size_t v = 0; v < phi.codomain.vertices.size(); ++v)
    cert.collapse_map.vertex_images.push_back(PointOnGraph::at_vertex(col.vertex_map[v]));
  for (size_t e = 0; e < phi.codomain.edges.size(); ++e) {
    EdgePath p;
    if (col.edge_map[e] >= 0) {
      p.word = {oedge(col.edge_map[e], 0)};
      cert.k_lengths[col.edge_map[e]] = cert.ell_fixed[e];
    }
    cert.collapse_map.edge_paths.push_back(p);
  }
  return cert;
}

EmbCertificate compute_emb_core(const GraphMap& phi, const EdgeScalars& alpha1,
                                const EdgeScalars& alpha2, const IterOptions& opts) {
  std::vector<double> ell0(phi.codomain.edges.size(), 1.0);
  if (opts.seed != 0) {
    std::mt19937 rng(opts.seed);
    std::uniform_real_distribution<double> uni(0.5, 1.5);
    for (double& x : ell0) x = uni(rng);
  }

  EmbCertificate cert;
  IterationTrace trace;
  BoundaryDecomposition dec;
  std::optional<EmbCertificate> sub;
  int restarts = 0;
  double prev_lambda = -1;

  while (true) {
    trace = iterate_to_fixed(ell0, phi, alpha1, alpha2, opts);
    cert.iterations += static_cast<int>(trace.steps.size());
    if (!trace.converged) {
      cert.converged = false;
      break;
    }
    if (restarts > 0 && trace.lambda <= prev_lambda + opts.tol) {
      // Restart failed to improve; report the best fixed point found.
      cert.converged = false;
      break;
    }
    prev_lambda = trace.lambda;

    double eps = opts.boundary_eps;
    bool decomposed = false;
    for (int tries = 0; tries < 7 && !decomposed; ++tries, eps /= 2) {
      try {
        dec = boundary_decompose(trace, alpha1, alpha2, eps);
        decomposed = true;
      } catch (const std::runtime_error&) {
      }
    }
    if (!decomposed) {
      cert.converged = false;
      break;
    }
    if (dec.interior) {
      sub.reset();
      break;
    }
    EdgeScalars sa1, sa2;
    sa1.kind = sa2.kind = ScalarKind::Elastic;
    for (int e : dec.sigma1_edge_back) sa1.values.push_back(alpha1.values[e]);
    for (int e : dec.sigma2_edge_back) sa2.values.push_back(alpha2.values[e]);
    IterOptions sub_opts = opts;
    EmbCertificate s = compute_with_restriction(dec.restricted, sa1, sa2, sub_opts);
    if (!s.converged) {
      cert.converged = false;
      break;
    }
    if (s.lambda <= trace.lambda + 100 * opts.tol) {
      sub = std::move(s);
      break;
    }
    // The null part is stiffer: restart from perturbed lengths.
    ++restarts;
    if (restarts > static_cast<int>(phi.domain.edges.size()) + 4) {
      cert.converged = false;
      break;
    }
    ell0 = trace.ell_fixed;
    double lmin = 1e300;
    for (double x : ell0)
      if (x > 0) lmin = std::min(lmin, x);
    for (size_t e = 0; e < dec.sigma2_edge_back.size(); ++e)
      ell0[dec.sigma2_edge_back[e]] += 1e-4 * lmin * s.ell_fixed[e];
  }
  cert.restarts = restarts;
  cert.lambda = trace.lambda;
  cert.ell_fixed = trace.ell_fixed;
  if (dec.interior) {
    cert.delta1.resize(phi.domain.edges.size());
    std::iota(cert.delta1.begin(), cert.delta1.end(), 0);
    cert.delta2.resize(phi.codomain.edges.size());
    std::iota(cert.delta2.begin(), cert.delta2.end(), 0);
  } else {
    cert.delta1 = dec.delta1;
    cert.delta2 = dec.delta2;
  }

  // Assemble psi: the fixed harmonic representative, with the null part
  // replaced by the recursive solution.
  cert.psi = trace.map;
  cert.psi_strands = trace.strands;
  if (sub) {
    for (size_t ne = 0; ne < dec.sigma1_edge_back.size(); ++ne) {
      int d = dec.sigma1_edge_back[ne];
      EdgePath lifted = sub->psi.edge_paths[ne];
      std::vector<int> w;
      for (int o : lifted.word)
        w.push_back(oedge(dec.sigma2_edge_back[oedge_edge(o)], oedge_dir(o)));
      lifted.word = w;
      cert.psi.edge_paths[d] = lifted;
      cert.psi_strands.strands[d].clear();
      for (const auto& s : sub->psi_strands.strands[ne])
        cert.psi_strands.strands[d].push_back(
            {s.a0, s.a1, oedge(dec.sigma2_edge_back[oedge_edge(s.o)], oedge_dir(s.o)), s.u0,
             s.u1});
    }
    for (size_t nv = 0; nv < dec.sigma1_vertex_back.size(); ++nv) {
      int v = dec.sigma1_vertex_back[nv];
      if (dec.sigma1_graph.vertices[nv].marked) continue;  // shared or marked: keep the top map
      const auto& p = sub->psi.vertex_images[nv];
      PointOnGraph lifted = p.is_vertex()
                                ? PointOnGraph::at_vertex(dec.sigma2_vertex_back[p.vertex])
                                : PointOnGraph::on_edge(dec.sigma2_edge_back[p.edge], p.offset);
      cert.psi.vertex_images[v] = lifted;
      cert.psi_strands.vertex_images[v] = lifted;
    }
  }

  // Emb of the assembled representative.
  {
    auto fill = fill_function(cert.psi_strands, alpha1, alpha2);
    cert.emb_psi = to_double(fill.max_value());
  }

  // Witness multi-curve saturating the positive-tension train track.
  {
    std::vector<char> positive(phi.domain.edges.size(), 0);
    for (int d : cert.delta1) positive[d] = 1;
    TrainTrack tt;
    tt.graph = phi.domain;
    tt.weights.kind = ScalarKind::Weight;
    tt.weights.values.assign(phi.domain.edges.size(), Rat(0));
    double wmax = max_abs(trace.weights_fixed);
    for (int d : cert.delta1)
      tt.weights.values[d] = rationalize_weight(trace.weights_fixed[d] / (wmax > 0 ? wmax : 1), 4096);
    tt.gates = gates_from_map(cert.psi, positive);
    cert.witness_exact = validate_train_track(tt).ok();
    try {
      cert.witness = cert.witness_exact ? tt_to_multicurve(tt)
                                        : tt_to_multicurve_approx(tt, 1e-9);
    } catch (const std::exception&) {
      cert.witness_exact = false;
      cert.witness = tt_to_multicurve_approx(tt, 1e-9);
    }
    if (!cert.witness.components.empty()) {
      Rat el_dom = curve_extremal_length(phi.domain, cert.witness, alpha1);
      MultiCurve pushed = push_curve(cert.witness, cert.psi);
      Rat el_cod = curve_extremal_length(phi.codomain, pushed, alpha2);
      if (el_dom > 0) {
        cert.el_ratio_exact = el_cod / el_dom;
        cert.el_ratio = to_double(cert.el_ratio_exact);
      }
    }
  }
  cert.lower_bound = cert.el_ratio;
  cert.upper_bound = cert.emb_psi;

  // K: codomain with the non-filling edges collapsed, carrying the fixed
  // lengths.
  {
    std::set<int> fill(cert.delta2.begin(), cert.delta2.end());
    std::vector<int> null_edges;
    for (size_t e = 0; e < phi.codomain.edges.size(); ++e)
      if (!fill.count(static_cast<int>(e))) null_edges.push_back(static_cast<int>(e));
    auto col = collapse_subgraph(phi.codomain, SubgraphRef(phi.codomain, null_edges));
    cert.k_graph = col.graph;
    cert.k_lengths.assign(col.graph.edges.size(), 0.0);
    cert.collapse_map.domain = phi.codomain;
    cert.collapse_map.codomain = col.graph;
    for (size_t v = 0; v < phi.codomain.vertices.size(); ++v)
      cert.collapse_map.vertex_images.push_back(PointOnGraph::at_vertex(col.vertex_map[v]));
    for (size_t e = 0; e < phi.codomain.edges.size(); ++e) {
      EdgePath p;
      if (col.edge_map[e] >= 0) {
        p.word = {oedge(col.edge_map[e], 0)};
        cert.k_lengths[col.edge_map[e]] = trace.ell_fixed[e];
      }
      cert.collapse_map.edge_paths.push_back(p);
    }
  }
  return cert;
}

}  // namespace

EmbCertificate compute_emb(const GraphMap& phi, const EdgeScalars& alpha1,
                           const EdgeScalars& alpha2, const IterOptions& opts) {
  validate_scalars(phi.domain, alpha1);
  validate_scalars(phi.codomain, alpha2);
  {
    auto rep = validate_map(phi);
    if (!rep.ok()) throw std::invalid_argument("compute_emb: " + rep.errors.front());
  }
  EmbCertificate cert = compute_with_restriction(phi, alpha1, alpha2, opts);
  cert.report = verify_tight(cert, alpha1, alpha2, std::max(1e-6, 100 * opts.tol));
  return cert;
}

TightReport verify_tight(const EmbCertificate& cert, const EdgeScalars& alpha1,
                         const EdgeScalars& alpha2, double tol) {
  TightReport rep;
  rep.checked = true;
  if (cert.witness.components.empty() || cert.k_graph.edges.empty()) {
    rep.passed = cert.lambda == 0;
    return rep;
  }
  const MarkedGraph& g1 = cert.psi.domain;
  const MarkedGraph& g2 = cert.psi.codomain;

  rep.el_c = to_double(curve_extremal_length(g1, cert.witness, alpha1));
  rep.emb_psi = cert.emb_psi;
  rep.dir_f = 0;
  for (size_t e = 0; e < cert.k_lengths.size(); ++e) {
    // Dir of the collapse map with the fixed lengths: each kept edge maps
    // isometrically onto its image edge.
    int pre = -1;
    for (size_t oe = 0; oe < g2.edges.size(); ++oe)
      if (!cert.collapse_map.edge_paths[oe].constant() &&
          oedge_edge(cert.collapse_map.edge_paths[oe].word[0]) == static_cast<int>(e))
        pre = static_cast<int>(oe);
    if (pre >= 0)
      rep.dir_f += cert.k_lengths[e] * cert.k_lengths[e] / to_double(alpha2.values[pre]);
  }

  MultiCurve on_g2 = push_curve(cert.witness, cert.psi);
  MultiCurve on_k = push_curve(on_g2, cert.collapse_map);
  EdgeScalars kl = scalars_from_double(ScalarKind::Length, cert.k_lengths);
  rep.len_composite = to_double(curve_length(cert.k_graph, on_k, kl));

  double chain = std::sqrt(rep.el_c) * std::sqrt(std::max(rep.emb_psi, 0.0)) *
                 std::sqrt(std::max(rep.dir_f, 0.0));
  double scale = std::max(1.0, std::fabs(chain));
  rep.chain_residual = chain - rep.len_composite;

  double el_pushed = to_double(curve_extremal_length(g2, on_g2, alpha2));
  rep.pair_el_residual = el_pushed - rep.el_c * rep.emb_psi;

  // Dir(f . psi) vs Emb(psi) * Dir(f).
  StrandMap fm = canonical_strands(cert.collapse_map, scalars_from_double(ScalarKind::Length,
                                                                          cert.k_lengths));
  StrandMap comp = compose_strands(cert.psi_strands, fm);
  double dir_comp = to_double(energy_exact(comp, alpha1,
                                           scalars_from_double(ScalarKind::Length, cert.k_lengths),
                                           Exponent::of(2), Exponent::infinity()));
  rep.pair_dir_residual = dir_comp - rep.emb_psi * rep.dir_f;

  // Harmonic sub-certificate of the composite map to K.
  GraphMap to_k = compose(cert.psi, cert.collapse_map);
  std::vector<double> kl_pos = cert.k_lengths;
  bool all_pos = true;
  for (double x : kl_pos)
    if (!(x > 0)) all_pos = false;
  if (all_pos && !cert.k_lengths.empty()) {
    auto gate = harmonic_certificate(to_k, alpha1, kl_pos, 1e-6);
    rep.harmonic_ok = gate.passed;
    EdgeScalars wt = scalars_from_double(ScalarKind::Weight, [&] {
      std::vector<double> t(g1.edges.size());
      EdgeScalars klr = scalars_from_double(ScalarKind::Length, kl_pos);
      auto pb = pullback_lengths(to_k, klr);
      for (size_t d = 0; d < t.size(); ++d)
        t[d] = to_double(pb.values[d]) / to_double(alpha1.values[d]);
      return t;
    }());
    auto n = multiplicity(to_k, wt);
    rep.pushforward_constant = true;
    for (size_t e = 0; e < n.per_edge.size(); ++e) {
      double lo = 1e300, hi = 0;
      for (const auto& s : n.per_edge[e]) {
        lo = std::min(lo, to_double(s.value));
        hi = std::max(hi, to_double(s.value));
      }
      if (!n.per_edge[e].empty() && hi - lo > 1e-6 * (hi + 1)) rep.pushforward_constant = false;
    }
  } else {
    rep.harmonic_ok = true;
    rep.pushforward_constant = true;
  }

  rep.passed = std::fabs(rep.chain_residual) <= tol * scale &&
               std::fabs(rep.pair_el_residual) <= tol * std::max(1.0, el_pushed) &&
               std::fabs(rep.pair_dir_residual) <= tol * std::max(1.0, dir_comp) &&
               rep.harmonic_ok && rep.pushforward_constant;
  return rep;
}

}  // namespace elastigraph
