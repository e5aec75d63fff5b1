#include "mapspan/grad_check.hpp"

#include <cmath>

namespace mapspan {

namespace {

double evaluate(const LossBuilder& f, const ParameterSet& params) {
  Graph g;
  std::vector<NodeId> ids = g.bind(params, /*track_grad=*/false);
  NodeId root = f(g, params, ids);
  const Tensor& v = g.value(root);
  if (v.size() != 1)
    fail(ErrorCode::invalid_argument,
         "grad_check: loss must be a scalar, got shape " + shape_str(v.shape()));
  if (!std::isfinite(v[0])) fail(ErrorCode::numeric, "grad_check: loss is not finite");
  return v[0];
}

}  // namespace

GradCheckResult grad_check(const LossBuilder& f, const ParameterSet& params, double step) {
  if (!(step > 0)) fail(ErrorCode::invalid_argument, "grad_check: step must be positive");

  Graph g;
  std::vector<NodeId> ids = g.bind(params);
  NodeId root = f(g, params, ids);
  if (g.value(root).size() != 1)
    fail(ErrorCode::invalid_argument, "grad_check: loss must be a scalar, got shape " +
                                          shape_str(g.value(root).shape()));
  if (!std::isfinite(g.value(root)[0]))
    fail(ErrorCode::numeric, "grad_check: loss is not finite");
  g.backward(root);

  std::vector<Tensor> analytic;
  analytic.reserve(ids.size());
  for (NodeId id : ids) analytic.push_back(g.grad_tensor(id));

  GradCheckResult result;
  ParameterSet probe = params;
  for (std::size_t p = 0; p < probe.count(); ++p) {
    Tensor& t = probe.tensor(p);
    for (std::size_t c = 0; c < t.size(); ++c) {
      const double saved = t[c];
      t[c] = saved + step;
      const double hi = evaluate(f, probe);
      t[c] = saved - step;
      const double lo = evaluate(f, probe);
      t[c] = saved;

      const double numeric = (hi - lo) / (2.0 * step);
      const double a = analytic[p][c];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      ++result.coordinates;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = probe.name(p) + "[" + std::to_string(c) + "]";
      }
    }
  }
  return result;
}

}  // namespace mapspan
