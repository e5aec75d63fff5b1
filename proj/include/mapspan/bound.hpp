#pragma once

#include <string>
#include <vector>

#include "mapspan/graph.hpp"

namespace mapspan {

// A ParameterSet bound into a graph: name-addressable leaf nodes.
struct Bound {
  const ParameterSet* set = nullptr;
  std::vector<NodeId> ids;

  static Bound bind(Graph& g, const ParameterSet& params, bool track_grad = true) {
    return Bound{&params, g.bind(params, track_grad)};
  }

  NodeId operator[](const std::string& name) const { return ids[set->index_of(name)]; }
};

}  // namespace mapspan
