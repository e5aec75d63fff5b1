#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mapspan/grad_check.hpp"

namespace mapspan {

struct GradSuiteCase {
  std::string name;
  GradCheckResult result;
  bool pass = false;
};

struct GradSuiteReport {
  double tolerance = 1e-4;
  double step = 1e-5;
  double elapsed_ms = 0.0;
  std::vector<GradSuiteCase> cases;

  bool pass() const {
    for (const auto& c : cases)
      if (!c.pass) return false;
    return !cases.empty();
  }
};

// Checks analytic gradients of every head/loss configuration (ind, vcp, and
// map x {joint-flat, row-wise} x {forward, backward}) against central finite
// differences on a tiny random instance per configuration.
GradSuiteReport run_grad_suite(double tolerance = 1e-4, double step = 1e-5,
                               std::uint64_t seed = 1);

}  // namespace mapspan
