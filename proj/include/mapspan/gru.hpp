#pragma once

#include <string>

#include "mapspan/bound.hpp"
#include "mapspan/graph.hpp"
#include "mapspan/rng.hpp"

namespace mapspan {

struct GruRefs {
  NodeId wz, uz, bz, wr, ur, br, wh, uh, bh;
};

void init_gru_cell(ParameterSet& params, const std::string& prefix, std::size_t hidden,
                   std::size_t input, Rng& rng);

GruRefs gru_refs(const Bound& b, const std::string& prefix);

// One gated-recurrent update; `ones` is a constant all-ones vector of the
// hidden width, shared across steps.
NodeId gru_step(Graph& g, const GruRefs& c, NodeId x, NodeId h_prev, NodeId ones);

}  // namespace mapspan
