#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "elastigraph/curve.hpp"
#include "elastigraph/graph.hpp"
#include "elastigraph/map.hpp"

namespace elastigraph {

using Json = nlohmann::json;

struct GraphBundle {
  MarkedGraph graph;
  std::optional<EdgeScalars> alpha;
  std::optional<EdgeScalars> length;
  std::optional<EdgeScalars> weight;

  const EdgeScalars& require(ScalarKind kind) const;
};

// {"vertices":[{"id":"v1","marked":true}],
//  "edges":[{"id":"e1","ends":["v1","v2"],"alpha":"3","length":"1","weight":"2"}]}
GraphBundle parse_graph(const Json& j);
Json graph_to_json(const GraphBundle& b);

// {"vertex_images":{"v":"u" | {"edge":"e","offset":"2/5"}},
//  "edge_paths":{"e":{"word":["+e1","-e2"],"start_offset":"0","end_offset":"1/3"}}}
GraphMap parse_map(const Json& j, const MarkedGraph& domain, const MarkedGraph& codomain);
Json map_to_json(const GraphMap& f);

// {"components":[{"kind":"loop","word":["+e1","+e2"],"weight":"1"}]}
MultiCurve parse_curve(const Json& j, const MarkedGraph& g);
Json curve_to_json(const MultiCurve& c, const MarkedGraph& g);

// Number emission: decimal plus exact rational string.
Json number_json(const Rat& r);
Json number_json(double x);

Json read_json_file(const std::string& path);       // throws with line/column info
void write_json_file(const std::string& path, const Json& j);

std::string oedge_to_string(const MarkedGraph& g, int o);
int oedge_from_string(const MarkedGraph& g, const std::string& s);

}  // namespace elastigraph
