#include <doctest.h>

#include <random>

#include "elastigraph/map.hpp"
#include "support/helpers.hpp"

using namespace elastigraph;
using namespace testsupport;

namespace {

// Tripod self-map with the center sent to offset t along e1 (from c).
GraphMap tripod_offset_map(const Rat& t) {
  GraphMap f = tripod_map();
  f.vertex_images[0] = PointOnGraph::on_edge(0, t);
  // e1: straight out to l1; e2, e3: back through c, then out.
  f.edge_paths[0].start_u = t;
  f.edge_paths[1].word = {oedge(0, 1), oedge(1, 0)};
  f.edge_paths[1].start_u = 1 - t;
  f.edge_paths[2].word = {oedge(0, 1), oedge(2, 0)};
  f.edge_paths[2].start_u = 1 - t;
  REQUIRE(validate_map(f).ok());
  return f;
}

// Two marked arcs; the paper's curve on the tripod.
GraphMap tripod_curve_map() {
  GraphMap c;
  c.domain = MarkedGraph{};
  c.domain.add_vertex("m1", true);
  c.domain.add_vertex("m2", true);
  c.domain.add_vertex("m3", true);
  c.domain.add_vertex("m4", true);
  c.domain.add_edge("arc1", 0, 1);
  c.domain.add_edge("arc2", 2, 3);
  c.codomain = tripod();
  // arc1: l2 -> c -> l1, arc2: l3 -> c -> l1.
  c.vertex_images = {PointOnGraph::at_vertex(2), PointOnGraph::at_vertex(1),
                     PointOnGraph::at_vertex(3), PointOnGraph::at_vertex(1)};
  EdgePath p1;
  p1.word = {oedge(1, 1), oedge(0, 0)};
  EdgePath p2;
  p2.word = {oedge(2, 1), oedge(0, 0)};
  c.edge_paths = {p1, p2};
  REQUIRE(validate_map(c).ok());
  return c;
}

// Test-side preimage counter: walks each edge path directly.
int coverage_count(const GraphMap& f, int cod_edge, const Rat& t) {
  int count = 0;
  for (size_t e = 0; e < f.edge_paths.size(); ++e) {
    const auto& p = f.edge_paths[e];
    for (size_t i = 0; i < p.word.size(); ++i) {
      Rat u0 = (i == 0) ? p.start_u : Rat(0);
      Rat u1 = (i + 1 == p.word.size()) ? p.end_u : Rat(1);
      if (oedge_edge(p.word[i]) != cod_edge || !(u0 < u1)) continue;
      Rat t0 = oedge_dir(p.word[i]) == 0 ? u0 : 1 - u1;
      Rat t1 = oedge_dir(p.word[i]) == 0 ? u1 : 1 - u0;
      if (t0 < t && t < t1) ++count;
    }
  }
  return count;
}

const Exponent one = Exponent::of(1);
const Exponent two = Exponent::of(2);
const Exponent inf = Exponent::infinity();

}  // namespace

TEST_CASE("compose with identity") {
  auto f = tripod_offset_map(Rat(2, 5));
  auto id = identity_map(f.codomain);
  auto fid = compose(f, id);
  CHECK(fid.vertex_images == f.vertex_images);
  for (size_t e = 0; e < f.edge_paths.size(); ++e) {
    CHECK(fid.edge_paths[e].word == f.edge_paths[e].word);
    CHECK(fid.edge_paths[e].start_u == f.edge_paths[e].start_u);
  }
}

TEST_CASE("compose: tripod curve realizes the extremal-length ratio 6/10") {
  auto c = tripod_curve_map();
  auto phi = tripod_offset_map(Rat(2, 5));
  auto comp = compose(c, phi);

  auto unit_w = EdgeScalars::uniform(ScalarKind::Weight, 2, Rat(1));
  auto alpha1 = scalars(ScalarKind::Elastic, {Rat(1), Rat(3), Rat(3)});
  auto alpha2 = scalars(ScalarKind::Elastic, {Rat(1), Rat(1), Rat(1)});
  Rat el_domain = energy_exact(c, unit_w, alpha1, one, two);
  Rat el_image = energy_exact(comp, unit_w, alpha2, one, two);
  CHECK(el_domain == Rat(10));
  CHECK(el_image == Rat(6));
}

TEST_CASE("compose: fold-back cancels") {
  MarkedGraph a = interval();
  MarkedGraph b;
  b.add_vertex("s", true);
  b.add_vertex("m", false);
  b.add_vertex("t", true);
  b.add_edge("b1", 0, 1);
  b.add_edge("b2", 1, 2);
  MarkedGraph cgraph = interval();

  GraphMap f;
  f.domain = a;
  f.codomain = b;
  f.vertex_images = {PointOnGraph::at_vertex(0), PointOnGraph::at_vertex(2)};
  EdgePath fp;
  fp.word = {oedge(0, 0), oedge(1, 0)};
  f.edge_paths = {fp};

  GraphMap g;
  g.domain = b;
  g.codomain = cgraph;
  g.vertex_images = {PointOnGraph::at_vertex(0), PointOnGraph::at_vertex(1),
                     PointOnGraph::at_vertex(0)};
  EdgePath g1, g2;
  g1.word = {oedge(0, 0)};
  g2.word = {oedge(0, 1)};
  g.edge_paths = {g1, g2};
  REQUIRE(validate_map(f).ok());
  REQUIRE(validate_map(g).ok());

  auto comp = compose(f, g);
  CHECK(comp.edge_paths[0].constant());
}

TEST_CASE("reduce: already reduced is unchanged") {
  auto f = tripod_offset_map(Rat(2, 5));
  auto r = reduce_map(f);
  CHECK(r.vertex_images == f.vertex_images);
  for (size_t e = 0; e < f.edge_paths.size(); ++e)
    CHECK(r.edge_paths[e].word == f.edge_paths[e].word);
}

TEST_CASE("reduce: out-and-back over a leg retracts to a constant map") {
  MarkedGraph dom;
  dom.add_vertex("m", true);
  dom.add_vertex("u", false);
  dom.add_edge("a", 0, 1);
  MarkedGraph cod = interval();
  GraphMap f;
  f.domain = dom;
  f.codomain = cod;
  f.vertex_images = {PointOnGraph::at_vertex(0), PointOnGraph::at_vertex(0)};
  EdgePath p;
  p.word = {oedge(0, 0), oedge(0, 1)};
  f.edge_paths = {p};

  auto r = reduce_map(f);
  CHECK(r.edge_paths[0].constant());
}

TEST_CASE("reduce: dead-end cluster slides home") {
  // u maps to the far end with a single strand: pulls back to s.
  MarkedGraph dom;
  dom.add_vertex("m", true);
  dom.add_vertex("u", false);
  dom.add_edge("a", 0, 1);
  MarkedGraph cod = interval();
  GraphMap f;
  f.domain = dom;
  f.codomain = cod;
  f.vertex_images = {PointOnGraph::at_vertex(0), PointOnGraph::at_vertex(1)};
  EdgePath p;
  p.word = {oedge(0, 0)};
  f.edge_paths = {p};
  auto r = reduce_map(f);
  CHECK(r.edge_paths[0].constant());
  CHECK(r.vertex_images[1] == PointOnGraph::at_vertex(0));
}

TEST_CASE("multiplicity: identity and double cover") {
  auto id = identity_map(tripod());
  auto unit = EdgeScalars::uniform(ScalarKind::Weight, 3, Rat(1));
  auto n = multiplicity(id, unit);
  for (int e = 0; e < 3; ++e) CHECK(n.value_at(e, Rat(1, 2)) == Rat(1));

  GraphMap dbl;
  dbl.domain = circle();
  dbl.codomain = circle();
  dbl.vertex_images = {PointOnGraph::at_vertex(0)};
  EdgePath p;
  p.word = {oedge(0, 0), oedge(0, 0)};
  dbl.edge_paths = {p};
  auto n2 = multiplicity(dbl, EdgeScalars::uniform(ScalarKind::Weight, 1, Rat(1)));
  CHECK(n2.value_at(0, Rat(1, 3)) == Rat(2));
}

TEST_CASE("multiplicity: tripod strand counts agree with direct coverage") {
  auto phi = tripod_offset_map(Rat(2, 5));
  auto unit = EdgeScalars::uniform(ScalarKind::Weight, 3, Rat(1));
  auto n = multiplicity(phi, unit);
  // Near-center segment of e1 and the far segment, plus the far legs.
  for (auto [edge, t] : std::vector<std::pair<int, Rat>>{
           {0, Rat(1, 5)}, {0, Rat(7, 10)}, {1, Rat(1, 2)}, {2, Rat(1, 2)}}) {
    CHECK(n.value_at(edge, t) == Rat(coverage_count(phi, edge, t)));
  }
  CHECK(n.value_at(0, Rat(1, 5)) == Rat(2));
  CHECK(n.value_at(0, Rat(7, 10)) == Rat(1));
}

TEST_CASE("fill: identity elastic graph") {
  auto id = identity_map(tripod());
  auto alpha = scalars(ScalarKind::Elastic, {Rat(1), Rat(3), Rat(3)});
  auto fill = fill_function(unit_strands(id), alpha, alpha);
  CHECK(fill.max_value() == Rat(1));
}

TEST_CASE("fill: tripod embedding minimizer has Fill = 3/5 everywhere") {
  auto phi = tripod_offset_map(Rat(2, 5));
  // Constant-derivative parameterization w.r.t. the fixed lengths (2,1,1).
  auto sm = canonical_strands(phi, std::vector<Rat>{Rat(2), Rat(1), Rat(1)});
  auto alpha1 = scalars(ScalarKind::Elastic, {Rat(1), Rat(3), Rat(3)});
  auto alpha2 = scalars(ScalarKind::Elastic, {Rat(1), Rat(1), Rat(1)});
  auto fill = fill_function(sm, alpha1, alpha2);
  for (const auto& edge : fill.per_edge)
    for (const auto& seg : edge) CHECK(seg.value == Rat(3, 5));
  CHECK(energy_exact(sm, alpha1, alpha2, two, two) == Rat(3, 5));
}

TEST_CASE("fill: figure-eight (2,2)->(1,4) has Fill 1/2 and 2") {
  auto f = figure_eight_identity_class();
  auto a1 = scalars(ScalarKind::Elastic, {Rat(2), Rat(2)});
  auto a2 = scalars(ScalarKind::Elastic, {Rat(1), Rat(4)});
  auto fill = fill_function(canonical_strands(f, a2), a1, a2);
  CHECK(fill.value_at(0, Rat(1, 2)) == Rat(1, 2));
  CHECK(fill.value_at(1, Rat(1, 2)) == Rat(2));
  CHECK(energy_exact(f, a1, a2, two, two) == Rat(2));
}

TEST_CASE("energy: tripod harmonic Dirichlet = 8/5") {
  auto f = tripod_offset_map(Rat(1, 5));
  auto alpha = scalars(ScalarKind::Elastic, {Rat(1), Rat(3), Rat(3)});
  auto ell = scalars(ScalarKind::Length, {Rat(1), Rat(1), Rat(1)});
  CHECK(energy_exact(f, alpha, ell, two, inf) == Rat(8, 5));
}

TEST_CASE("energy: Lipschitz of the identity is 1") {
  auto id = identity_map(theta(true));
  auto ell = scalars(ScalarKind::Length, {Rat(2), Rat(1), Rat(5)});
  CHECK(energy_exact(id, ell, ell, inf, inf) == Rat(1));
}

TEST_CASE("energy: general exponent E^3_3 of the double cover") {
  GraphMap dbl;
  dbl.domain = circle();
  dbl.codomain = circle();
  dbl.vertex_images = {PointOnGraph::at_vertex(0)};
  EdgePath p;
  p.word = {oedge(0, 0), oedge(0, 0)};
  dbl.edge_paths = {p};
  auto alpha = EdgeScalars::uniform(ScalarKind::Elastic, 1, Rat(1));
  // |f'| = 2, Fill^3 = 2*|f'|^2 = 8 constant, E = 8^(1/3) = 2; verified by
  // the direct integral of the explicit linear map.
  double direct = std::pow(2.0 * std::pow(2.0, 2.0), 1.0 / 3.0);
  CHECK(energy_E(dbl, alpha, alpha, Exponent::of(3), Exponent::of(3)) ==
        doctest::Approx(direct).epsilon(1e-12));
  CHECK(energy_E(dbl, alpha, alpha, Exponent::of(3), Exponent::of(3)) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("energy: E-notation squares to the raw convention") {
  auto f = tripod_offset_map(Rat(1, 5));
  auto alpha = scalars(ScalarKind::Elastic, {Rat(1), Rat(3), Rat(3)});
  auto ell = scalars(ScalarKind::Length, {Rat(1), Rat(1), Rat(1)});
  double e = energy_E(f, alpha, ell, two, inf);
  CHECK(e * e == doctest::Approx(8.0 / 5.0).epsilon(1e-12));
}

TEST_CASE("pullback lengths") {
  auto id = identity_map(theta(true));
  auto ell = scalars(ScalarKind::Length, {Rat(2), Rat(1), Rat(5)});
  auto pb = pullback_lengths(id, ell);
  CHECK(pb.values == ell.values);

  // Out-and-back: total variation 2.
  MarkedGraph dom;
  dom.add_vertex("m", true);
  dom.add_vertex("u", false);
  dom.add_edge("a", 0, 1);
  GraphMap f;
  f.domain = dom;
  f.codomain = interval();
  f.vertex_images = {PointOnGraph::at_vertex(0), PointOnGraph::at_vertex(0)};
  EdgePath p;
  p.word = {oedge(0, 0), oedge(0, 1)};
  f.edge_paths = {p};
  auto pb2 = pullback_lengths(f, EdgeScalars::uniform(ScalarKind::Length, 1, Rat(1)));
  CHECK(pb2.values[0] == Rat(2));

  auto harm = tripod_offset_map(Rat(1, 5));
  auto pb3 = pullback_lengths(harm, EdgeScalars::uniform(ScalarKind::Length, 3, Rat(1)));
  CHECK(pb3.values[0] == Rat(4, 5));
  CHECK(pb3.values[1] == Rat(6, 5));
  CHECK(pb3.values[2] == Rat(6, 5));
}

namespace {

EdgeScalars structure_of(std::mt19937& rng, const Exponent& p, size_t n) {
  if (p.inf) return random_scalars(rng, ScalarKind::Length, n);
  if (p.is(1)) return random_scalars(rng, ScalarKind::Weight, n);
  return random_scalars(rng, ScalarKind::Elastic, n);
}

}  // namespace

TEST_CASE("sub-multiplicativity: all ten cases on random composable maps") {
  std::vector<std::array<Exponent, 3>> cases = {
      {one, one, one}, {one, one, two},  {one, one, inf}, {one, two, two},
      {one, two, inf}, {one, inf, inf},  {two, two, two}, {two, two, inf},
      {two, inf, inf}, {inf, inf, inf},
  };
  std::mt19937 rng(20250810);
  for (const auto& pqr : cases) {
    for (int it = 0; it < 20; ++it) {
      auto g1 = random_graph(rng, 3, 5);
      auto g2 = random_graph(rng, 3, 5);
      auto g3 = random_graph(rng, 3, 5);
      auto f = random_map(rng, g1, g2);
      auto g = random_map(rng, g2, g3);
      auto s1 = structure_of(rng, pqr[0], g1.edges.size());
      auto s2 = structure_of(rng, pqr[1], g2.edges.size());
      auto s3 = structure_of(rng, pqr[2], g3.edges.size());

      double ef = energy_E(f, s1, s2, pqr[0], pqr[1]);
      double eg = energy_E(g, s2, s3, pqr[1], pqr[2]);
      StrandMap sf = pqr[1].inf || !pqr[1].is(1) ? canonical_strands(f, s2) : unit_strands(f);
      StrandMap sg = pqr[2].inf || !pqr[2].is(1) ? canonical_strands(g, s3) : unit_strands(g);
      auto comp = compose_strands(sf, sg);
      double ec = energy_E(comp, s1, s3, pqr[0], pqr[2]);
      CHECK(ec <= ef * eg + 1e-9);
    }
  }
}

TEST_CASE("energies invariant under codomain subdivision, exactly") {
  std::mt19937 rng(7);
  for (int it = 0; it < 12; ++it) {
    auto g1 = random_graph(rng, 3, 4);
    auto g2 = random_graph(rng, 3, 4);
    auto f = random_map(rng, g1, g2);
    auto a1 = random_scalars(rng, ScalarKind::Elastic, g1.edges.size());
    auto a2 = random_scalars(rng, ScalarKind::Elastic, g2.edges.size());
    Rat before_emb = energy_exact(f, a1, a2, two, two);
    Rat before_el = energy_exact(f, EdgeScalars::uniform(ScalarKind::Weight, g1.edges.size(), 1),
                                 a2, one, two);

    std::uniform_int_distribution<int> pick(0, static_cast<int>(g2.edges.size()) - 1);
    int e = pick(rng);
    auto sub = subdivide_edge(g2, e, Rat(1, 3), {a2});
    auto f2 = map_subdivide_codomain(f, e, Rat(1, 3), sub);
    REQUIRE(validate_map(f2).ok());
    CHECK(energy_exact(f2, a1, sub.scalars[0], two, two) == before_emb);
    CHECK(energy_exact(f2, EdgeScalars::uniform(ScalarKind::Weight, g1.edges.size(), 1),
                       sub.scalars[0], one, two) == before_el);
  }
}

TEST_CASE("energies invariant under domain subdivision, exactly") {
  std::mt19937 rng(8);
  for (int it = 0; it < 12; ++it) {
    auto g1 = random_graph(rng, 3, 4);
    auto g2 = random_graph(rng, 3, 4);
    auto f = random_map(rng, g1, g2);
    auto a1 = random_scalars(rng, ScalarKind::Elastic, g1.edges.size());
    auto a2 = random_scalars(rng, ScalarKind::Elastic, g2.edges.size());
    Rat before = energy_exact(f, a1, a2, two, two);
    Rat before_dir = energy_exact(f, a1, a2, two, inf);

    std::uniform_int_distribution<int> pick(0, static_cast<int>(g1.edges.size()) - 1);
    int e = pick(rng);
    auto sub = subdivide_edge(g1, e, Rat(2, 5), {a1});
    std::vector<Rat> cod_len(a2.values.begin(), a2.values.end());
    auto f2 = map_subdivide_domain(f, e, Rat(2, 5), sub, cod_len);
    REQUIRE(validate_map(f2).ok());
    CHECK(energy_exact(f2, sub.scalars[0], a2, two, two) == before);
    CHECK(energy_exact(f2, sub.scalars[0], a2, two, inf) == before_dir);
  }
}

TEST_CASE("reduction never increases energies") {
  std::mt19937 rng(9);
  for (int it = 0; it < 16; ++it) {
    auto g1 = random_graph(rng, 3, 4);
    auto g2 = random_graph(rng, 3, 4);
    auto f = random_map(rng, g1, g2);
    // Insert a backtracking detour into one word.
    std::uniform_int_distribution<int> pick(0, static_cast<int>(g1.edges.size()) - 1);
    int e = pick(rng);
    auto& path = f.edge_paths[e];
    int at = path.word.empty() ? f.vertex_images[g1.edges[e].ends[0]].vertex
                               : f.codomain.head(path.word.back());
    auto outs = f.codomain.oedges_at(at);
    if (outs.empty()) continue;
    path.word.push_back(outs[0]);
    path.word.push_back(oedge_reverse(outs[0]));
    path.end_u = 1;

    auto a1 = random_scalars(rng, ScalarKind::Elastic, g1.edges.size());
    auto a2 = random_scalars(rng, ScalarKind::Elastic, g2.edges.size());
    auto unit = EdgeScalars::uniform(ScalarKind::Weight, g1.edges.size(), Rat(1));
    auto r = reduce_map(f);
    CHECK(energy_exact(r, a1, a2, two, two) <= energy_exact(f, a1, a2, two, two));
    CHECK(energy_exact(r, a1, a2, two, inf) <= energy_exact(f, a1, a2, two, inf));
    CHECK(energy_exact(r, unit, a2, one, two) <= energy_exact(f, unit, a2, one, two));
  }
}
