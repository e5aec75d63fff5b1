#pragma once

#include <functional>
#include <string>

#include "mapspan/graph.hpp"

namespace mapspan {

// Builds a scalar loss in the given graph from parameter leaves bound in
// ParameterSet order. Must be deterministic: called once per perturbed
// evaluation during checking, each time with the set being evaluated.
using LossBuilder =
    std::function<NodeId(Graph&, const ParameterSet&, const std::vector<NodeId>&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst_parameter;  // "name[i]" of the worst coordinate
};

// Compares backward() against central finite differences, coordinate by
// coordinate, with relative error |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult grad_check(const LossBuilder& f, const ParameterSet& params, double step = 1e-5);

}  // namespace mapspan
