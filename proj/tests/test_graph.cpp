#include <doctest.h>

#include "elastigraph/graph.hpp"
#include "elastigraph/io.hpp"
#include "support/helpers.hpp"

using namespace elastigraph;
using namespace testsupport;

TEST_CASE("rational literals") {
  CHECK(rat_from_string("3") == Rat(3));
  CHECK(rat_from_string("1/5") == Rat(1, 5));
  CHECK(rat_from_string("-7/2") == Rat(-7, 2));
  CHECK(rat_from_string("0.25") == Rat(1, 4));
  CHECK(rat_from_string("-3.5e2") == Rat(-350));
  CHECK(rat_from_string("2.5e-1") == Rat(1, 4));
  CHECK(rat_from_double(0.5) == Rat(1, 2));
  CHECK_THROWS(rat_from_string("1/0"));
}

TEST_CASE("validate: minimal valid graph") {
  MarkedGraph g;
  g.add_vertex("a", true);
  g.add_vertex("b", true);
  g.add_edge("e", 0, 1);
  CHECK(validate_graph(g).ok());
}

TEST_CASE("validate: dangling endpoint") {
  MarkedGraph g;
  g.add_vertex("a", true);
  g.add_edge("e", 0, 5);
  auto rep = validate_graph(g);
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.errors[0].find("dangling endpoint") != std::string::npos);
}

TEST_CASE("validate: tripod with marked ends") {
  CHECK(validate_graph(tripod()).ok());
  CHECK(tripod().marked_vertices().size() == 3);
}

TEST_CASE("validate: duplicate ids reported") {
  MarkedGraph g;
  g.add_vertex("a", false);
  g.add_vertex("a", false);
  g.add_edge("e", 0, 1);
  g.add_edge("e", 1, 0);
  auto rep = validate_graph(g);
  CHECK(rep.errors.size() == 2);
}

TEST_CASE("collapse: empty null set is the identity") {
  auto g = theta(true);
  auto res = collapse_subgraph(g, SubgraphRef(g, {}));
  CHECK(res.graph == g);
  for (size_t v = 0; v < g.vertices.size(); ++v) CHECK(res.vertex_map[v] == static_cast<int>(v));
}

TEST_CASE("collapse: one edge of a triangle gives two parallel edges") {
  MarkedGraph g;
  g.add_vertex("a", false);
  g.add_vertex("b", false);
  g.add_vertex("c", false);
  g.add_edge("ab", 0, 1);
  g.add_edge("bc", 1, 2);
  g.add_edge("ca", 2, 0);
  auto res = collapse_subgraph(g, SubgraphRef(g, {0}));
  CHECK(res.graph.vertices.size() == 2);
  CHECK(res.graph.edges.size() == 2);
  for (const auto& e : res.graph.edges) CHECK(e.ends[0] != e.ends[1]);
}

TEST_CASE("collapse: spanning tree of a subdivided figure-eight leaves two loops") {
  MarkedGraph g;
  g.add_vertex("v", true);
  g.add_vertex("m1", false);
  g.add_vertex("m2", false);
  g.add_edge("a1", 0, 1);
  g.add_edge("a2", 1, 0);
  g.add_edge("b1", 0, 2);
  g.add_edge("b2", 2, 0);
  auto res = collapse_subgraph(g, SubgraphRef(g, {0, 2}));
  CHECK(res.graph.vertices.size() == 1);
  CHECK(res.graph.edges.size() == 2);
  CHECK(res.graph.vertices[0].marked);
  for (const auto& e : res.graph.edges) CHECK(e.ends[0] == e.ends[1]);
}

TEST_CASE("collapse: marked component stays marked") {
  auto g = interval();
  auto res = collapse_subgraph(g, SubgraphRef(g, {0}));
  CHECK(res.graph.vertices.size() == 1);
  CHECK(res.graph.vertices[0].marked);
}

TEST_CASE("subdivide: elastic halves at t=1/2") {
  auto g = tripod();
  auto alpha = scalars(ScalarKind::Elastic, {Rat(4), Rat(3), Rat(3)});
  auto res = subdivide_edge(g, 0, Rat(1, 2), {alpha});
  CHECK(res.scalars[0].values[res.first_half] == Rat(2));
  CHECK(res.scalars[0].values[res.second_half] == Rat(2));
  CHECK(res.graph.edges.size() == 4);
  CHECK(validate_graph(res.graph).ok());
}

TEST_CASE("subdivide: length splits 1/5 vs 4/5") {
  auto g = interval();
  auto len = scalars(ScalarKind::Length, {Rat(1)});
  auto res = subdivide_edge(g, 0, Rat(1, 5), {len});
  CHECK(res.scalars[0].values[res.first_half] == Rat(1, 5));
  CHECK(res.scalars[0].values[res.second_half] == Rat(4, 5));
}

TEST_CASE("subdivide: weights are densities and copy") {
  auto g = interval();
  auto w = scalars(ScalarKind::Weight, {Rat(3)});
  auto res = subdivide_edge(g, 0, Rat(1, 3), {w});
  CHECK(res.scalars[0].values[res.first_half] == Rat(3));
  CHECK(res.scalars[0].values[res.second_half] == Rat(3));
}

TEST_CASE("subdivide: t out of range") {
  auto g = interval();
  CHECK_THROWS(subdivide_edge(g, 0, Rat(0), {}));
  CHECK_THROWS(subdivide_edge(g, 0, Rat(3, 2), {}));
}

TEST_CASE("graph JSON round trip") {
  GraphBundle b;
  b.graph = tripod();
  b.alpha = scalars(ScalarKind::Elastic, {Rat(1), Rat(3), Rat(3)});
  b.length = scalars(ScalarKind::Length, {Rat(1), Rat(1), Rat(1)});
  auto j = graph_to_json(b);
  auto back = parse_graph(j);
  CHECK(back.graph == b.graph);
  CHECK(back.alpha->values == b.alpha->values);
  CHECK(back.length->values == b.length->values);
}

TEST_CASE("scalar validation") {
  auto g = interval();
  auto alpha = scalars(ScalarKind::Elastic, {Rat(0)});
  CHECK_THROWS(validate_scalars(g, alpha));
  auto w = scalars(ScalarKind::Weight, {Rat(0)});
  CHECK_NOTHROW(validate_scalars(g, w));
}
